#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "conservnet/dataset.hpp"

namespace conservnet {

enum class System { S1, S2, S3, LotkaVolterra, Kepler };

System system_from_name(const std::string& name);
std::string system_name(System s);

// Lotka-Volterra parameters and Kepler units used throughout
inline constexpr double kLvAlpha = 1.1, kLvBeta = 0.4, kLvDelta = 0.1, kLvGamma = 0.4;

// S1 appears with two coefficient sets in the sources; the x1 - 3*x2*x3 + x4^2/2
// form is canonical here, the alternative selectable via use_alt_s1.
double invariant_value(System system, const Eigen::VectorXd& state, bool use_alt_s1 = false);

// Kepler invariants on the unscaled (x, y, vx, vy) state
double kepler_angular_momentum(const Eigen::VectorXd& state);
double kepler_energy(const Eigen::VectorXd& state);

// Synthetic systems: draw the free variables, solve the starred one, reject
// rows whose solved variable leaves its admissible range.
GroupedDataset generate_synthetic(System system, int n_groups, int group_size,
                                  std::uint64_t seed, bool use_alt_s1 = false);

// Explicit Euler, dt=0.01 for 100*M steps, subsampled every 100 steps; states
// stored rescaled by 0.1, invariant labels computed on the unscaled dynamics.
GroupedDataset simulate_lotka_volterra(int n_groups, int group_size, std::uint64_t seed);

struct KeplerOptions {
    std::optional<double> fixed_angular_momentum;  // pin C1 across groups
    double dt = 1e-4;
};

// Bound orbits only (energy < 0, eccentricity < 0.99); subsample stride chosen
// so the stored points span at least one orbital period. Positions rescaled by
// 0.1. Labels: angular momentum C1, or total energy C2 when C1 is pinned.
GroupedDataset simulate_kepler(int n_groups, int group_size, std::uint64_t seed,
                               const KeplerOptions& opts = {});

// Cartesian (x, y, vx, vy) -> polar (r, rdot, theta, thetadot), with the
// max-|value|>10 rescale rule re-applied per column.
GroupedDataset to_polar(const GroupedDataset& kepler_ds);

// appends one standard-normal column (nuisance variable); labels unchanged
GroupedDataset add_nuisance(const GroupedDataset& ds, std::uint64_t seed);

// i.i.d. N(0, s) added to every stored entry; labels retained
GroupedDataset add_observation_noise(const GroupedDataset& ds, double s, std::uint64_t seed);

// 5-dimensional Gaussian null data: per-group mean U(-1,1)^5, unit covariance,
// no ground-truth invariant
GroupedDataset generate_null(int n_groups, int group_size, std::uint64_t seed);

}  // namespace conservnet
