#pragma once

#include <string>
#include <utility>

#include "conservnet/dataset.hpp"

namespace conservnet {

// Double pendulum trajectory CSV: rows of (theta1, theta2, omega1, omega2) at
// 0.01 s spacing, optional header. The first 80% of rows (654 for the canonical
// 818-row file) become the single-group training set, the remainder the test
// set. omega1, omega2 are scaled by 0.1; no ground-truth invariant is attached.
std::pair<GroupedDataset, GroupedDataset> load_double_pendulum(const std::string& path);

enum class DpCrossSection { OmegaPlane, ThetaPlane };

// Parametrized cross-section family of the ideal double-pendulum Hamiltonian.
// OmegaPlane slices at theta = (0, 0): c4 + c1*w1^2 + c2*w2^2 + c3*w1*w2 over
// the (omega1, omega2) grid. ThetaPlane slices at (omega1, omega2) = (5, 10):
// c1 + c2*cos(t1) + c3*cos(t2) + c4*cos(t1 - t2) over the (theta1, theta2) grid.
Eigen::MatrixXd ideal_dp_crosssection(DpCrossSection kind,
                                      const Eigen::VectorXd& axis1,
                                      const Eigen::VectorXd& axis2,
                                      const Eigen::Vector4d& constants);

}  // namespace conservnet
