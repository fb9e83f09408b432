#pragma once

#include <optional>
#include <string>
#include <vector>

#include "conservnet/dataset.hpp"
#include "conservnet/loss.hpp"
#include "conservnet/net.hpp"

namespace conservnet {

enum class Monitor { TrainLoss, TestLoss };

struct EarlyStopConfig {
    int patience = 50;        // snapshots without improvement before stopping
    double min_delta = 1e-6;  // improvement of exactly min_delta resets the counter
    std::optional<Monitor> monitored;  // default: test loss when test data exists
};

struct TrainConfig {
    int epochs = 50000;
    double lr = 5e-5;
    LossConfig loss;
    EarlyStopConfig early_stop;
    std::uint64_t seed = 0;
    int eval_every = 100;  // epochs between metric snapshots
};

struct Snapshot {
    int epoch = 0;
    double train_loss = 0.0;
    double test_loss = 0.0;  // NaN without test data
    bool has_rho = false;
    double rho = 0.0;        // against ground truth when available
    double sigma_bar_train = 0.0;
    double sigma_bar_test = 0.0;  // NaN without test data
};

struct TrainReport {
    std::vector<Snapshot> snapshots;
    std::string stop_reason;  // "epoch_limit" or "early_stop"
    int final_epoch = 0;
};

// stop when the monitored series has not improved by min_delta for `patience`
// consecutive entries
bool early_stop_check(const std::vector<double>& history, int patience, double min_delta);

// The training loop: one epoch visits every group once in a seeded
// shuffled order; each group is one full batch with freshly sampled spreading
// noise, one backprop through both the clean and noised forward passes, and one
// Adam step. (seed, cfg, data) fully determine the result.
std::pair<MlpParams, TrainReport> train(const GroupedDataset& train_data,
                                        const GroupedDataset* test_data, MlpParams model,
                                        const TrainConfig& cfg);

void save_report_csv(const TrainReport& report, const std::string& path);

}  // namespace conservnet
