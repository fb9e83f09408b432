#include "conservnet/systems.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "conservnet/rng.hpp"

namespace conservnet {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kMaxRejects = 100000;  // consecutive rejections before giving up

[[noreturn]] void infeasible(const std::string& what) {
    throw std::runtime_error("sampling stalled (rejection rate too high): " + what);
}

double s1_value(const Eigen::VectorXd& x, bool alt) {
    return alt ? x[0] - 2.0 * x[1] * x[2] + 3.0 * x[3] * x[3]
               : x[0] - 3.0 * x[1] * x[2] + 0.5 * x[3] * x[3];
}

double s2_value(const Eigen::VectorXd& x) {
    return 3.0 * x[0] + 2.0 * std::sin(x[1]) + std::sqrt(std::abs(x[0])) * x[2] * x[2] * x[2];
}

double s3_value(const Eigen::VectorXd& x) {
    if (x[2] == 0.0 || x[0] + x[2] == 0.0)
        throw std::domain_error("S3 invariant undefined at x3=0 or x1+x3=0");
    return 2.0 * x[0] * x[1] - (std::log(std::abs(x[0] + x[2])) - x[3]) / x[2];
}

double lv_value(const Eigen::VectorXd& x) {
    if (x[0] <= 0.0 || x[1] <= 0.0)
        throw std::domain_error("Lotka-Volterra invariant needs positive populations");
    return kLvAlpha * std::log(x[0]) + kLvDelta * std::log(x[1]) - kLvBeta * x[0] -
           kLvGamma * x[1];
}

std::string make_meta(System sys, std::uint64_t seed, const nlohmann::json& extra = {}) {
    nlohmann::json j;
    j["system"] = system_name(sys);
    j["seed"] = seed;
    for (auto& [k, v] : extra.items()) j[k] = v;
    return j.dump();
}

}  // namespace

System system_from_name(const std::string& name) {
    if (name == "s1") return System::S1;
    if (name == "s2") return System::S2;
    if (name == "s3") return System::S3;
    if (name == "lv" || name == "lotka-volterra") return System::LotkaVolterra;
    if (name == "kepler") return System::Kepler;
    throw std::invalid_argument("unknown system: " + name);
}

std::string system_name(System s) {
    switch (s) {
        case System::S1: return "s1";
        case System::S2: return "s2";
        case System::S3: return "s3";
        case System::LotkaVolterra: return "lv";
        case System::Kepler: return "kepler";
    }
    throw std::logic_error("unreachable system");
}

double kepler_angular_momentum(const Eigen::VectorXd& s) {
    return s[0] * s[3] - s[1] * s[2];
}

double kepler_energy(const Eigen::VectorXd& s) {
    const double r = std::hypot(s[0], s[1]);
    if (r <= 0.0) throw std::domain_error("Kepler energy undefined at r=0");
    return 0.5 * (s[2] * s[2] + s[3] * s[3]) - 1.0 / r;
}

double invariant_value(System system, const Eigen::VectorXd& state, bool use_alt_s1) {
    if (!state.allFinite()) throw std::domain_error("non-finite state");
    switch (system) {
        case System::S1: return s1_value(state, use_alt_s1);
        case System::S2: return s2_value(state);
        case System::S3: return s3_value(state);
        case System::LotkaVolterra: return lv_value(state);
        case System::Kepler: return kepler_angular_momentum(state);
    }
    throw std::logic_error("unreachable system");
}

namespace {

// one S1 row: x2..x4 ~ N(0,2), x1 solved, |x1| <= 5
Eigen::VectorXd draw_s1(double c, Rng& rng, bool alt) {
    for (int tries = 0; tries < kMaxRejects; ++tries) {
        Eigen::VectorXd x(4);
        x[1] = rng.normal(0.0, 2.0);
        x[2] = rng.normal(0.0, 2.0);
        x[3] = rng.normal(0.0, 2.0);
        x[0] = alt ? c + 2.0 * x[1] * x[2] - 3.0 * x[3] * x[3]
                   : c + 3.0 * x[1] * x[2] - 0.5 * x[3] * x[3];
        if (std::abs(x[0]) <= 5.0) return x;
    }
    infeasible("S1");
}

// one S2 row: x1, x3 ~ U(-3,3); x2 solved from sin(x2) with the branch index
// drawn so the populated x2 range covers [-3pi, 3pi]
Eigen::VectorXd draw_s2(double c, Rng& rng) {
    for (int tries = 0; tries < kMaxRejects; ++tries) {
        Eigen::VectorXd x(3);
        x[0] = rng.uniform(-3.0, 3.0);
        x[2] = rng.uniform(-3.0, 3.0);
        const double s =
            (c - 3.0 * x[0] - std::sqrt(std::abs(x[0])) * x[2] * x[2] * x[2]) / 2.0;
        if (s < -1.0 || s > 1.0) continue;
        const auto k = rng.uniform_int(-3, 3);
        const double base = std::asin(s);
        x[1] = ((k % 2 == 0) ? base : -base) + static_cast<double>(k) * kPi;
        if (std::abs(x[1]) > 3.0 * kPi) continue;
        return x;
    }
    infeasible("S2");
}

// one S3 row: x2~U(-10,10), x3~U(0.5,5), x4~U(-10,10); x1 root-found by a
// 200-subinterval sign scan over [-10,10] followed by bisection
Eigen::VectorXd draw_s3(double c, Rng& rng) {
    for (int tries = 0; tries < kMaxRejects; ++tries) {
        Eigen::VectorXd x(4);
        x[1] = rng.uniform(-10.0, 10.0);
        x[2] = rng.uniform(0.5, 5.0);
        x[3] = rng.uniform(-10.0, 10.0);

        auto g = [&](double x1) {
            return 2.0 * x1 * x[1] - (std::log(std::abs(x1 + x[2])) - x[3]) / x[2] - c;
        };

        constexpr int kScan = 200;
        std::vector<std::pair<double, double>> brackets;
        double prev_x = -10.0, prev_g = g(prev_x);
        for (int i = 1; i <= kScan; ++i) {
            const double cur_x = -10.0 + 20.0 * i / kScan;
            const double cur_g = g(cur_x);
            if (std::isfinite(prev_g) && std::isfinite(cur_g) && prev_g * cur_g <= 0.0)
                brackets.emplace_back(prev_x, cur_x);
            prev_x = cur_x;
            prev_g = cur_g;
        }
        if (brackets.empty()) continue;
        auto [lo, hi] = brackets[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(brackets.size()) - 1))];

        double glo = g(lo);
        for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double gm = g(mid);
            if (glo * gm <= 0.0) hi = mid;
            else { lo = mid; glo = gm; }
        }
        x[0] = 0.5 * (lo + hi);
        if (x[0] + x[2] == 0.0) continue;
        if (std::abs(s3_value(x) - c) > 1e-8) continue;  // scan straddled the singularity
        return x;
    }
    infeasible("S3");
}

}  // namespace

GroupedDataset generate_synthetic(System system, int n_groups, int group_size,
                                  std::uint64_t seed, bool use_alt_s1) {
    if (n_groups < 1 || group_size < 1)
        throw std::invalid_argument("need at least one group and one point");
    double c_lo, c_hi;
    int dim;
    switch (system) {
        case System::S1: c_lo = -4.5; c_hi = 5.0; dim = 4; break;
        case System::S2: c_lo = -5.0; c_hi = 0.0; dim = 3; break;
        case System::S3: c_lo = 1.0; c_hi = 3.85; dim = 4; break;
        default: throw std::invalid_argument("generate_synthetic handles S1/S2/S3 only");
    }

    GroupedDataset ds;
    ds.name = system_name(system);
    ds.dim = dim;
    ds.rescale_log.assign(dim, 1.0);
    Rng root(seed);
    for (int i = 0; i < n_groups; ++i) {
        Rng rng = root.child(static_cast<std::uint64_t>(i));
        const double c = rng.uniform(c_lo, c_hi);
        Group g;
        g.id = i;
        g.true_invariant = c;
        g.states.resize(group_size, dim);
        for (int j = 0; j < group_size; ++j) {
            Eigen::VectorXd row;
            switch (system) {
                case System::S1: row = draw_s1(c, rng, use_alt_s1); break;
                case System::S2: row = draw_s2(c, rng); break;
                default: row = draw_s3(c, rng); break;
            }
            g.states.row(j) = row;
        }
        ds.groups.push_back(std::move(g));
    }
    ds.metadata_json = make_meta(system, seed);
    return ds;
}

GroupedDataset simulate_lotka_volterra(int n_groups, int group_size, std::uint64_t seed) {
    if (n_groups < 1 || group_size < 1)
        throw std::invalid_argument("need at least one group and one point");
    constexpr double dt = 0.01;
    constexpr int stride = 100;

    GroupedDataset ds;
    ds.name = "lv";
    ds.dim = 2;
    ds.rescale_log = {0.1, 0.1};
    Rng root(seed);
    double max_drift = 0.0;
    for (int i = 0; i < n_groups; ++i) {
        Rng rng = root.child(static_cast<std::uint64_t>(i));
        Eigen::VectorXd s(2);
        s << rng.uniform(1.0, 10.0), rng.uniform(1.0, 10.0);
        Group g;
        g.id = i;
        g.true_invariant = lv_value(s);
        g.states.resize(group_size, 2);
        const double c0 = *g.true_invariant;
        for (int j = 0; j < group_size; ++j) {
            g.states(j, 0) = 0.1 * s[0];
            g.states(j, 1) = 0.1 * s[1];
            max_drift = std::max(max_drift, std::abs(lv_value(s) - c0) / std::abs(c0));
            if (j + 1 == group_size) break;
            for (int k = 0; k < stride; ++k) {
                const double dx = kLvAlpha * s[0] - kLvGamma * s[0] * s[1];
                const double dy = -kLvBeta * s[1] + kLvDelta * s[0] * s[1];
                s[0] += dt * dx;
                s[1] += dt * dy;
                if (!s.allFinite() || s[0] <= 0.0 || s[1] <= 0.0)
                    throw std::runtime_error("Lotka-Volterra integration blew up in group " +
                                             std::to_string(i));
            }
        }
        ds.groups.push_back(std::move(g));
    }
    ds.metadata_json =
        make_meta(System::LotkaVolterra, seed, {{"dt", dt}, {"max_rel_drift", max_drift}});
    return ds;
}

GroupedDataset simulate_kepler(int n_groups, int group_size, std::uint64_t seed,
                               const KeplerOptions& opts) {
    if (n_groups < 1 || group_size < 1)
        throw std::invalid_argument("need at least one group and one point");
    const double dt = opts.dt;

    GroupedDataset ds;
    ds.name = opts.fixed_angular_momentum ? "kepler-controlled" : "kepler";
    ds.dim = 4;
    ds.rescale_log = {0.1, 0.1, 1.0, 1.0};
    Rng root(seed);
    double max_c1_drift = 0.0, max_c2_drift = 0.0;

    for (int i = 0; i < n_groups; ++i) {
        Rng rng = root.child(static_cast<std::uint64_t>(i));

        Eigen::VectorXd s(4);
        double energy = 0.0;
        bool accepted = false;
        for (int tries = 0; tries < kMaxRejects; ++tries) {
            for (int k = 0; k < 4; ++k) s[k] = rng.uniform(-5.0, 5.0);
            const double r = std::hypot(s[0], s[1]);
            if (r < 0.1) continue;
            if (opts.fixed_angular_momentum) {
                const double cross = kepler_angular_momentum(s);
                if (std::abs(cross) < 1e-6) continue;
                // split v into radial and tangential parts; only the tangential
                // part carries angular momentum, so rescale it to pin C1
                const double rv = (s[0] * s[2] + s[1] * s[3]) / (r * r);
                const double vrx = rv * s[0], vry = rv * s[1];
                const double scale = *opts.fixed_angular_momentum / cross;
                s[2] = vrx + scale * (s[2] - vrx);
                s[3] = vry + scale * (s[3] - vry);
            }
            energy = kepler_energy(s);
            if (energy >= -1e-6) continue;  // unbound
            const double L = kepler_angular_momentum(s);
            const double ecc = std::sqrt(std::max(0.0, 1.0 + 2.0 * energy * L * L));
            if (ecc >= 0.99) continue;
            const double a = -1.0 / (2.0 * energy);
            if (a * (1.0 - ecc) < 0.1) continue;  // perihelion too close: Euler error explodes
            accepted = true;
            break;
        }
        if (!accepted) infeasible("Kepler initial conditions");

        const double c1_0 = kepler_angular_momentum(s);
        const double c2_0 = energy;
        const double a = -1.0 / (2.0 * energy);
        const double period = 2.0 * kPi * std::pow(a, 1.5);
        const auto stride =
            std::max<std::int64_t>(1, std::llround(period / (dt * group_size)));

        Group g;
        g.id = i;
        g.true_invariant = opts.fixed_angular_momentum ? c2_0 : c1_0;
        g.states.resize(group_size, 4);
        for (int j = 0; j < group_size; ++j) {
            g.states(j, 0) = 0.1 * s[0];
            g.states(j, 1) = 0.1 * s[1];
            g.states(j, 2) = s[2];
            g.states(j, 3) = s[3];
            max_c1_drift = std::max(
                max_c1_drift, std::abs(kepler_angular_momentum(s) - c1_0) / std::abs(c1_0));
            max_c2_drift =
                std::max(max_c2_drift, std::abs(kepler_energy(s) - c2_0) / std::abs(c2_0));
            if (j + 1 == group_size) break;
            for (std::int64_t k = 0; k < stride; ++k) {
                const double r = std::hypot(s[0], s[1]);
                const double inv_r3 = 1.0 / (r * r * r);
                const double ax = -s[0] * inv_r3, ay = -s[1] * inv_r3;
                s[0] += dt * s[2];
                s[1] += dt * s[3];
                s[2] += dt * ax;
                s[3] += dt * ay;
                if (!s.allFinite())
                    throw std::runtime_error("Kepler integration blew up in group " +
                                             std::to_string(i));
            }
        }
        ds.groups.push_back(std::move(g));
    }
    nlohmann::json extra = {{"dt", dt},
                            {"max_rel_drift_c1", max_c1_drift},
                            {"max_rel_drift_c2", max_c2_drift}};
    if (opts.fixed_angular_momentum) extra["fixed_L"] = *opts.fixed_angular_momentum;
    ds.metadata_json = make_meta(System::Kepler, seed, extra);
    return ds;
}

GroupedDataset to_polar(const GroupedDataset& kepler_ds) {
    if (kepler_ds.dim != 4) throw std::invalid_argument("polar transform expects d=4");
    GroupedDataset out;
    out.name = kepler_ds.name + "+polar";
    out.dim = 4;
    out.groups = kepler_ds.groups;
    out.metadata_json = kepler_ds.metadata_json;

    Eigen::Vector4d col_max = Eigen::Vector4d::Zero();
    for (auto& g : out.groups) {
        for (Eigen::Index j = 0; j < g.states.rows(); ++j) {
            const Eigen::VectorXd u = kepler_ds.unscale(g.states.row(j).transpose());
            const double r = std::hypot(u[0], u[1]);
            if (r == 0.0) throw std::domain_error("polar transform undefined at r=0");
            Eigen::Vector4d p;
            p[0] = r;
            p[1] = (u[0] * u[2] + u[1] * u[3]) / r;
            p[2] = std::atan2(u[1], u[0]);
            p[3] = (u[0] * u[3] - u[1] * u[2]) / (r * r);
            g.states.row(j) = p.transpose();
            col_max = col_max.cwiseMax(p.cwiseAbs());
        }
    }
    out.rescale_log.assign(4, 1.0);
    for (int k = 0; k < 4; ++k) {
        if (col_max[k] > 10.0) {
            out.rescale_log[k] = 0.1;
            for (auto& g : out.groups) g.states.col(k) *= 0.1;
        }
    }
    return out;
}

GroupedDataset add_nuisance(const GroupedDataset& ds, std::uint64_t seed) {
    GroupedDataset out;
    out.name = ds.name + "+";
    out.dim = ds.dim + 1;
    out.rescale_log = ds.rescale_log;
    out.rescale_log.push_back(1.0);
    out.metadata_json = ds.metadata_json;
    Rng root(seed);
    for (std::size_t i = 0; i < ds.groups.size(); ++i) {
        Rng rng = root.child(i);
        Group g;
        g.id = ds.groups[i].id;
        g.true_invariant = ds.groups[i].true_invariant;
        g.states.resize(ds.groups[i].states.rows(), out.dim);
        g.states.leftCols(ds.dim) = ds.groups[i].states;
        for (Eigen::Index j = 0; j < g.states.rows(); ++j)
            g.states(j, ds.dim) = rng.normal();
        out.groups.push_back(std::move(g));
    }
    return out;
}

GroupedDataset add_observation_noise(const GroupedDataset& ds, double s, std::uint64_t seed) {
    if (s < 0.0) throw std::invalid_argument("noise strength must be non-negative");
    GroupedDataset out = ds;
    if (s == 0.0) return out;
    Rng root(seed);
    for (std::size_t i = 0; i < out.groups.size(); ++i) {
        Rng rng = root.child(i);
        auto& m = out.groups[i].states;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) += rng.normal(0.0, s);
    }
    return out;
}

GroupedDataset generate_null(int n_groups, int group_size, std::uint64_t seed) {
    if (n_groups < 1 || group_size < 1)
        throw std::invalid_argument("need at least one group and one point");
    GroupedDataset ds;
    ds.name = "null";
    ds.dim = 5;
    ds.rescale_log.assign(5, 1.0);
    Rng root(seed);
    for (int i = 0; i < n_groups; ++i) {
        Rng rng = root.child(static_cast<std::uint64_t>(i));
        Eigen::VectorXd mu(5);
        for (int k = 0; k < 5; ++k) mu[k] = rng.uniform(-1.0, 1.0);
        Group g;
        g.id = i;
        g.states.resize(group_size, 5);
        for (int j = 0; j < group_size; ++j)
            for (int k = 0; k < 5; ++k) g.states(j, k) = mu[k] + rng.normal();
        ds.groups.push_back(std::move(g));
    }
    nlohmann::json extra;
    extra["seed"] = seed;
    extra["system"] = "null";
    ds.metadata_json = extra.dump();
    return ds;
}

}  // namespace conservnet
