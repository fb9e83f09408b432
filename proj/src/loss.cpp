#include "conservnet/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace conservnet {

namespace {

constexpr double kStdGuard = 1e-12;

// d dev / d values, shared by both measures. For std the chain rule divides
// the variance gradient by 2*std, guarded near exactly-constant vectors.
Eigen::VectorXd deviation_grad(const Eigen::VectorXd& v, Deviation measure) {
    const double m = static_cast<double>(v.size());
    const double mu = v.mean();
    Eigen::VectorXd g = (2.0 / m) * (v.array() - mu).matrix();
    if (measure == Deviation::Std) {
        const double sd = std::sqrt((v.array() - mu).square().sum() / m);
        g /= 2.0 * std::max(sd, kStdGuard);
    }
    return g;
}

}  // namespace

double row_norm(const Eigen::RowVectorXd& row, SpreaderNorm norm) {
    switch (norm) {
        case SpreaderNorm::L1: return row.lpNorm<1>();
        case SpreaderNorm::L2: return row.norm();
        case SpreaderNorm::Linf: return row.lpNorm<Eigen::Infinity>();
    }
    throw std::logic_error("unreachable spreader norm");
}

Eigen::MatrixXd sample_spreading_noise(Eigen::Index rows, Eigen::Index cols,
                                       const LossConfig& cfg, Rng& rng) {
    Eigen::MatrixXd eps(rows, cols);
    if (cfg.per_row_ball) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            // rejection sample uniform in the R-ball of the configured norm
            while (true) {
                for (Eigen::Index j = 0; j < cols; ++j) eps(i, j) = rng.uniform(-cfg.R, cfg.R);
                if (row_norm(eps.row(i), cfg.spreader) <= cfg.R) break;
            }
        }
        return eps;
    }
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) eps(i, j) = rng.uniform(-1.0, 1.0);
    double max_norm = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i)
        max_norm = std::max(max_norm, row_norm(eps.row(i), cfg.spreader));
    if (max_norm > 0.0) eps *= cfg.R / max_norm;
    return eps;
}

double deviation(const Eigen::VectorXd& values, Deviation measure) {
    if (values.size() < 1) throw std::invalid_argument("deviation of empty vector");
    const double m = static_cast<double>(values.size());
    const double mu = values.mean();
    const double var = (values.array() - mu).square().sum() / m;
    return measure == Deviation::Variance ? var : std::sqrt(var);
}

double group_loss(const Eigen::VectorXd& clean_out, const Eigen::VectorXd& noised_out,
                  const LossConfig& cfg) {
    if (cfg.variant == LossVariant::Simple) return deviation(clean_out, cfg.deviation);
    if (clean_out.size() != noised_out.size())
        throw std::invalid_argument("clean/noised output length mismatch");
    return deviation(clean_out, cfg.deviation) +
           std::abs(cfg.Q - deviation(noised_out, cfg.deviation));
}

GroupLossGrad group_loss_grad(const Eigen::VectorXd& clean_out,
                              const Eigen::VectorXd& noised_out, const LossConfig& cfg) {
    GroupLossGrad g;
    g.d_clean = deviation_grad(clean_out, cfg.deviation);
    if (cfg.variant == LossVariant::Simple) {
        g.d_noised = Eigen::VectorXd::Zero(noised_out.size());
        return g;
    }
    if (clean_out.size() != noised_out.size())
        throw std::invalid_argument("clean/noised output length mismatch");
    const double b = cfg.Q - deviation(noised_out, cfg.deviation);
    const double sgn = (b > 0.0) ? 1.0 : (b < 0.0 ? -1.0 : 0.0);
    g.d_noised = -sgn * deviation_grad(noised_out, cfg.deviation);
    return g;
}

}  // namespace conservnet
