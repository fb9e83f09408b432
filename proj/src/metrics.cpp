#include "conservnet/metrics.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace conservnet {

double pearson(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    if (u.size() != v.size()) throw std::invalid_argument("pearson: length mismatch");
    if (u.size() < 2) throw std::invalid_argument("pearson: need at least 2 points");
    const Eigen::ArrayXd du = u.array() - u.mean();
    const Eigen::ArrayXd dv = v.array() - v.mean();
    const double su = std::sqrt(du.square().sum());
    const double sv = std::sqrt(dv.square().sum());
    if (su == 0.0 || sv == 0.0)
        throw std::domain_error("pearson undefined for constant input");
    return (du * dv).sum() / (su * sv);
}

double sigma_bar(const std::vector<Eigen::VectorXd>& grouped_outputs) {
    if (grouped_outputs.empty()) throw std::invalid_argument("sigma_bar: no groups");
    double acc = 0.0;
    for (const auto& out : grouped_outputs) {
        const double mu = out.mean();
        acc += std::sqrt((out.array() - mu).square().sum() / static_cast<double>(out.size()));
    }
    return acc / static_cast<double>(grouped_outputs.size());
}

CalibrationFit calibrate(const Eigen::VectorXd& model_out, const Eigen::VectorXd& truth) {
    if (model_out.size() != truth.size() || model_out.size() < 2)
        throw std::invalid_argument("calibrate: need matching vectors of length >= 2");
    const Eigen::ArrayXd dx = model_out.array() - model_out.mean();
    const double sxx = dx.square().sum();
    if (sxx == 0.0)
        throw std::domain_error("calibrate: constant model output (degenerate fit)");
    const Eigen::ArrayXd dy = truth.array() - truth.mean();
    CalibrationFit fit;
    fit.a = (dx * dy).sum() / sxx;
    fit.b = truth.mean() - fit.a * model_out.mean();
    const Eigen::ArrayXd resid = dy - fit.a * dx;
    const double syy = dy.square().sum();
    fit.r2 = (syy == 0.0) ? 1.0 : 1.0 - resid.square().sum() / syy;
    return fit;
}

EvalReport evaluate(const MlpParams& model, const GroupedDataset& ds) {
    EvalReport rep;
    std::vector<Eigen::VectorXd> grouped;
    std::vector<double> all_out, all_truth;
    for (const auto& g : ds.groups) {
        Eigen::VectorXd out = forward_only(model, g.states);
        GroupStats st;
        st.group_id = g.id;
        st.mean = out.mean();
        st.stddev = std::sqrt((out.array() - st.mean).square().sum() /
                              static_cast<double>(out.size()));
        rep.per_group.push_back(st);
        for (Eigen::Index j = 0; j < out.size(); ++j) {
            all_out.push_back(out[j]);
            if (g.true_invariant) all_truth.push_back(*g.true_invariant);
        }
        grouped.push_back(std::move(out));
    }
    rep.sigma_bar = sigma_bar(grouped);

    const Eigen::VectorXd out_vec =
        Eigen::Map<const Eigen::VectorXd>(all_out.data(), static_cast<Eigen::Index>(all_out.size()));
    rep.degenerate = (out_vec.size() > 1) &&
                     ((out_vec.array() - out_vec.mean()).abs().maxCoeff() == 0.0);
    if (all_truth.size() == all_out.size() && all_out.size() >= 2 && !rep.degenerate) {
        const Eigen::VectorXd truth_vec = Eigen::Map<const Eigen::VectorXd>(
            all_truth.data(), static_cast<Eigen::Index>(all_truth.size()));
        const double truth_spread = (truth_vec.array() - truth_vec.mean()).abs().maxCoeff();
        if (truth_spread > 0.0) {
            rep.rho = pearson(out_vec, truth_vec);
            rep.has_rho = true;
            rep.fit = calibrate(out_vec, truth_vec);
        }
    }
    return rep;
}

Eigen::MatrixXd cross_section(const MlpParams& model, const std::map<int, double>& fixed,
                              int free1, const Eigen::VectorXd& axis1, int free2,
                              const Eigen::VectorXd& axis2) {
    const int d = model.input_dim();
    if (static_cast<int>(fixed.size()) + 2 != d || fixed.count(free1) || fixed.count(free2))
        throw std::invalid_argument("fixed and free variables must cover all inputs exactly");

    Eigen::MatrixXd batch(axis1.size() * axis2.size(), d);
    Eigen::VectorXd point = Eigen::VectorXd::Zero(d);
    for (const auto& [idx, val] : fixed) point[idx] = val;
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < axis1.size(); ++i)
        for (Eigen::Index j = 0; j < axis2.size(); ++j) {
            point[free1] = axis1[i];
            point[free2] = axis2[j];
            batch.row(row++) = point.transpose();
        }
    const Eigen::VectorXd out = forward_only(model, batch);
    Eigen::MatrixXd grid(axis1.size(), axis2.size());
    row = 0;
    for (Eigen::Index i = 0; i < axis1.size(); ++i)
        for (Eigen::Index j = 0; j < axis2.size(); ++j) grid(i, j) = out[row++];
    return grid;
}

void save_matrix_csv(const Eigen::MatrixXd& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

}  // namespace conservnet
