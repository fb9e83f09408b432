#include "conservnet/trainer.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "conservnet/metrics.hpp"
#include "conservnet/rng.hpp"

namespace conservnet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// loss of one dataset under frozen parameters, with noise from `rng`
double dataset_loss(const MlpParams& model, const GroupedDataset& ds, const LossConfig& cfg,
                    Rng& rng) {
    double total = 0.0;
    for (const auto& g : ds.groups) {
        const Eigen::VectorXd clean = forward_only(model, g.states);
        Eigen::VectorXd noised;
        if (cfg.variant == LossVariant::NoiseVariance) {
            const Eigen::MatrixXd eps =
                sample_spreading_noise(g.states.rows(), g.states.cols(), cfg, rng);
            noised = forward_only(model, g.states + eps);
        } else {
            noised = clean;
        }
        total += group_loss(clean, noised, cfg);
    }
    return total;
}

std::vector<Eigen::VectorXd> grouped_outputs(const MlpParams& model, const GroupedDataset& ds) {
    std::vector<Eigen::VectorXd> outs;
    outs.reserve(ds.groups.size());
    for (const auto& g : ds.groups) outs.push_back(forward_only(model, g.states));
    return outs;
}

}  // namespace

bool early_stop_check(const std::vector<double>& history, int patience, double min_delta) {
    if (history.empty()) throw std::invalid_argument("early_stop_check: empty history");
    double best = history.front();
    int stale = 0;
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (best - history[i] >= min_delta) {
            best = history[i];
            stale = 0;
        } else {
            ++stale;
        }
    }
    return stale >= patience;
}

std::pair<MlpParams, TrainReport> train(const GroupedDataset& train_data,
                                        const GroupedDataset* test_data, MlpParams model,
                                        const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (cfg.lr <= 0.0) throw std::invalid_argument("learning rate must be positive");
    if (model.input_dim() != train_data.dim)
        throw std::invalid_argument("model input dimension does not match dataset");
    if (test_data && test_data->dim != train_data.dim)
        throw std::invalid_argument("test dataset dimension mismatch");

    const Monitor monitor = cfg.early_stop.monitored.value_or(
        test_data ? Monitor::TestLoss : Monitor::TrainLoss);
    if (monitor == Monitor::TestLoss && !test_data)
        throw std::invalid_argument("cannot monitor test loss without test data");

    Rng run_rng(cfg.seed);
    Rng noise_rng = run_rng.child(1);
    Rng shuffle_rng = run_rng.child(2);
    Rng eval_rng = run_rng.child(3);

    const auto n_groups = train_data.groups.size();
    std::vector<std::size_t> order(n_groups);
    for (std::size_t i = 0; i < n_groups; ++i) order[i] = i;

    TrainReport report;
    std::vector<double> monitored_history;

    auto snapshot = [&](int epoch, double train_loss) {
        Snapshot s;
        s.epoch = epoch;
        s.train_loss = train_loss;
        s.sigma_bar_train = sigma_bar(grouped_outputs(model, train_data));
        if (test_data) {
            Rng r = eval_rng.child(static_cast<std::uint64_t>(epoch));
            s.test_loss = dataset_loss(model, *test_data, cfg.loss, r);
            s.sigma_bar_test = sigma_bar(grouped_outputs(model, *test_data));
        } else {
            s.test_loss = kNaN;
            s.sigma_bar_test = kNaN;
        }
        const GroupedDataset& rho_ds =
            (test_data && test_data->has_truth()) ? *test_data : train_data;
        if (rho_ds.has_truth()) {
            const EvalReport er = evaluate(model, rho_ds);
            s.has_rho = er.has_rho;
            s.rho = er.rho;
        }
        report.snapshots.push_back(s);
        monitored_history.push_back(monitor == Monitor::TestLoss ? s.test_loss
                                                                 : s.train_loss);
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates reshuffle of the group order, seeded per epoch
        for (std::size_t i = n_groups; i > 1; --i) {
            const auto j = static_cast<std::size_t>(
                shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }

        double epoch_loss = 0.0;
        for (const std::size_t gi : order) {
            const Group& g = train_data.groups[gi];
            auto [clean_out, clean_tape] = forward(model, g.states);

            Eigen::VectorXd noised_out;
            ForwardTape noised_tape;
            if (cfg.loss.variant == LossVariant::NoiseVariance) {
                const Eigen::MatrixXd eps = sample_spreading_noise(
                    g.states.rows(), g.states.cols(), cfg.loss, noise_rng);
                std::tie(noised_out, noised_tape) = forward(model, g.states + eps);
            } else {
                noised_out = clean_out;
            }

            const double loss = group_loss(clean_out, noised_out, cfg.loss);
            if (!std::isfinite(loss))
                throw std::runtime_error("training diverged at epoch " +
                                         std::to_string(epoch));
            epoch_loss += loss;

            const GroupLossGrad lg = group_loss_grad(clean_out, noised_out, cfg.loss);
            // the noised branch is a second forward pass of the same parameters,
            // not detached: its gradient also flows into theta
            MlpGradients grads = backward(model, clean_tape, lg.d_clean);
            if (cfg.loss.variant == LossVariant::NoiseVariance)
                accumulate(grads, backward(model, noised_tape, lg.d_noised));
            adam_step(model, grads, cfg.lr);
        }

        const bool last = (epoch + 1 == cfg.epochs);
        if (epoch % cfg.eval_every == 0 || last) {
            snapshot(epoch, epoch_loss);
            if (early_stop_check(monitored_history, cfg.early_stop.patience,
                                 cfg.early_stop.min_delta)) {
                report.stop_reason = "early_stop";
                report.final_epoch = epoch;
                return {std::move(model), std::move(report)};
            }
        }
        report.final_epoch = epoch;
    }
    report.stop_reason = "epoch_limit";
    return {std::move(model), std::move(report)};
}

void save_report_csv(const TrainReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "epoch,train_loss,test_loss,rho,sigma_bar_train,sigma_bar_test\n";
    for (const auto& s : report.snapshots) {
        out << s.epoch << ',' << format_double(s.train_loss) << ','
            << format_double(s.test_loss) << ',';
        if (s.has_rho) out << format_double(s.rho);
        out << ',' << format_double(s.sigma_bar_train) << ','
            << format_double(s.sigma_bar_test) << '\n';
    }
}

}  // namespace conservnet
