#pragma once

#include <map>
#include <string>
#include <vector>

#include "conservnet/dataset.hpp"
#include "conservnet/net.hpp"

namespace conservnet {

// standard sample Pearson correlation; throws on constant input instead of
// silently reporting 0 (the null-data experiment must tell "no correlation"
// apart from "no variation")
double pearson(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

// mean over groups of the within-group population std of the model outputs
double sigma_bar(const std::vector<Eigen::VectorXd>& grouped_outputs);

struct CalibrationFit {
    double a = 0.0;   // truth ~ a * model_out + b
    double b = 0.0;
    double r2 = 0.0;
};

CalibrationFit calibrate(const Eigen::VectorXd& model_out, const Eigen::VectorXd& truth);

struct GroupStats {
    int group_id = 0;
    double mean = 0.0;
    double stddev = 0.0;
};

struct EvalReport {
    bool has_rho = false;       // false when no ground truth or degenerate output
    bool degenerate = false;    // constant model output
    double rho = 0.0;
    double sigma_bar = 0.0;
    CalibrationFit fit;
    std::vector<GroupStats> per_group;
};

// Model outputs against ground truth over all points of all groups (pointwise,
// not per-group means).
EvalReport evaluate(const MlpParams& model, const GroupedDataset& ds);

// grid evaluation of the model over two free input variables at a fixed slice
Eigen::MatrixXd cross_section(const MlpParams& model,
                              const std::map<int, double>& fixed,
                              int free1, const Eigen::VectorXd& axis1,
                              int free2, const Eigen::VectorXd& axis2);

void save_matrix_csv(const Eigen::MatrixXd& m, const std::string& path);

}  // namespace conservnet
