#include "conservnet/symbolic.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace conservnet {

namespace {

void enumerate_monomials(int dim, int degree, int start, std::vector<int>& exps,
                         std::vector<std::vector<int>>& out) {
    if (degree == 0) {
        out.push_back(exps);
        return;
    }
    for (int v = start; v < dim; ++v) {
        ++exps[v];
        enumerate_monomials(dim, degree - 1, v, exps, out);
        --exps[v];
    }
}

std::string monomial_name(const std::vector<int>& exps) {
    std::ostringstream ss;
    bool first = true;
    for (std::size_t v = 0; v < exps.size(); ++v) {
        if (exps[v] == 0) continue;
        if (!first) ss << '*';
        ss << 'x' << (v + 1);
        if (exps[v] > 1) ss << '^' << exps[v];
        first = false;
    }
    return ss.str();
}

}  // namespace

std::pair<Eigen::MatrixXd, std::vector<std::string>> poly_features(
    const Eigen::MatrixXd& states, int degree) {
    if (degree < 1) throw std::invalid_argument("degree must be >= 1");
    const int d = static_cast<int>(states.cols());

    std::vector<std::vector<int>> monomials;
    std::vector<int> exps(d, 0);
    for (int deg = 1; deg <= degree; ++deg) enumerate_monomials(d, deg, 0, exps, monomials);

    Eigen::MatrixXd feats(states.rows(), static_cast<Eigen::Index>(monomials.size()));
    std::vector<std::string> names;
    names.reserve(monomials.size());
    for (std::size_t k = 0; k < monomials.size(); ++k) {
        Eigen::VectorXd col = Eigen::VectorXd::Ones(states.rows());
        for (int v = 0; v < d; ++v)
            for (int e = 0; e < monomials[k][v]; ++e)
                col = col.cwiseProduct(states.col(v));
        feats.col(static_cast<Eigen::Index>(k)) = col;
        names.push_back(monomial_name(monomials[k]));
    }
    return {std::move(feats), std::move(names)};
}

Eigen::VectorXd ridge_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                          double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
    if (features.rows() != targets.size())
        throw std::invalid_argument("feature/target row count mismatch");
    const Eigen::Index k = features.cols();

    const Eigen::RowVectorXd x_mean = features.colwise().mean();
    const double y_mean = targets.mean();
    Eigen::MatrixXd xc = features.rowwise() - x_mean;
    const Eigen::VectorXd yc = targets.array() - y_mean;

    Eigen::VectorXd x_scale(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double sd =
            std::sqrt(xc.col(j).squaredNorm() / static_cast<double>(xc.rows()));
        x_scale[j] = sd > 0.0 ? sd : 1.0;
        xc.col(j) /= x_scale[j];
    }

    Eigen::MatrixXd gram = xc.transpose() * xc;
    gram.diagonal().array() += lambda;
    if (lambda == 0.0) {
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
        if (!lu.isInvertible())
            throw std::runtime_error("ridge_fit: rank-deficient system at lambda=0");
    }
    const Eigen::VectorXd beta_std = gram.ldlt().solve(xc.transpose() * yc);

    Eigen::VectorXd coeffs(k + 1);
    for (Eigen::Index j = 0; j < k; ++j) coeffs[j + 1] = beta_std[j] / x_scale[j];
    coeffs[0] = y_mean - x_mean.dot(coeffs.tail(k));
    return coeffs;
}

SymbolicReport extract(const MlpParams& model, const GroupedDataset& ds, int degree,
                       double lambda, double threshold) {
    Eigen::Index rows = 0;
    for (const auto& g : ds.groups) rows += g.states.rows();
    Eigen::MatrixXd states(rows, ds.dim);
    Eigen::Index at = 0;
    for (const auto& g : ds.groups) {
        states.middleRows(at, g.states.rows()) = g.states;
        at += g.states.rows();
    }
    const Eigen::VectorXd targets = forward_only(model, states);

    auto [feats, names] = poly_features(states, degree);
    const Eigen::VectorXd coeffs = ridge_fit(feats, targets, lambda);

    SymbolicReport rep;
    rep.degree = degree;
    rep.lambda = lambda;
    rep.threshold = threshold;
    rep.intercept = coeffs[0];

    double max_abs = 0.0;
    for (Eigen::Index j = 1; j < coeffs.size(); ++j)
        max_abs = std::max(max_abs, std::abs(coeffs[j]));

    std::ostringstream formula;
    bool first = true;
    for (std::size_t j = 0; j < names.size(); ++j) {
        SymbolicTerm term;
        term.name = names[j];
        term.coefficient = coeffs[static_cast<Eigen::Index>(j) + 1];
        term.survives = max_abs > 0.0 && std::abs(term.coefficient) >= threshold * max_abs;
        if (term.survives) {
            if (!first) formula << (term.coefficient >= 0.0 ? " + " : " - ");
            else if (term.coefficient < 0.0) formula << '-';
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.4g", std::abs(term.coefficient));
            formula << buf << '*' << term.name;
            first = false;
        }
        rep.terms.push_back(std::move(term));
    }
    rep.formula = formula.str();

    const Eigen::VectorXd pred =
        (feats * coeffs.tail(coeffs.size() - 1)).array() + coeffs[0];
    const double ss_tot = (targets.array() - targets.mean()).square().sum();
    const double ss_res = (targets - pred).squaredNorm();
    rep.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return rep;
}

std::string SymbolicReport::to_json() const {
    nlohmann::json j;
    j["degree"] = degree;
    j["lambda"] = lambda;
    j["threshold"] = threshold;
    j["intercept"] = intercept;
    j["r2"] = r2;
    j["formula"] = formula;
    nlohmann::json table = nlohmann::json::array();
    for (const auto& t : terms)
        table.push_back({{"name", t.name}, {"coefficient", t.coefficient},
                         {"survives", t.survives}});
    j["terms"] = table;
    return j.dump(2);
}

}  // namespace conservnet
