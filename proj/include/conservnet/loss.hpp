#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "conservnet/rng.hpp"

namespace conservnet {

enum class LossVariant { NoiseVariance, Simple };
enum class Deviation { Std, Variance };
enum class SpreaderNorm { L1, L2, Linf };

struct LossConfig {
    LossVariant variant = LossVariant::NoiseVariance;
    Deviation deviation = Deviation::Std;
    double Q = 1.0;  // spreading constant
    double R = 1.0;  // max noise norm
    SpreaderNorm spreader = SpreaderNorm::L2;
    // true: every row independently uniform in the R-ball; false (default):
    // rows uniform on [-1,1]^d rescaled so the batch maximum norm equals R
    bool per_row_ball = false;
};

double row_norm(const Eigen::RowVectorXd& row, SpreaderNorm norm);

// Spreading noise for one batch. Batch-max mode rescales all rows by
// R / max_row_norm so the largest row norm is exactly R.
Eigen::MatrixXd sample_spreading_noise(Eigen::Index rows, Eigen::Index cols,
                                       const LossConfig& cfg, Rng& rng);

// population variance, or its square root for Deviation::Std
double deviation(const Eigen::VectorXd& values, Deviation measure);

// Per-group loss: dev(clean) + |Q - dev(noised)| for NoiseVariance,
// dev(clean) alone for Simple.
double group_loss(const Eigen::VectorXd& clean_out, const Eigen::VectorXd& noised_out,
                  const LossConfig& cfg);

struct GroupLossGrad {
    Eigen::VectorXd d_clean;
    Eigen::VectorXd d_noised;
};

GroupLossGrad group_loss_grad(const Eigen::VectorXd& clean_out,
                              const Eigen::VectorXd& noised_out, const LossConfig& cfg);

}  // namespace conservnet
