#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace conservnet {

struct Group {
    int id = 0;
    Eigen::MatrixXd states;  // M x d
    std::optional<double> true_invariant;
};

// N groups of M points each, all sharing dimension d. A group collects the
// states of one trial; when a ground-truth invariant exists its value is
// attached per group. rescale_log records the factor applied to each stored
// column (1.0 when untouched), enough to undo all scaling.
struct GroupedDataset {
    std::string name;
    int dim = 0;
    std::vector<Group> groups;
    std::vector<double> rescale_log;  // size dim
    std::string metadata_json;        // generator-specific extras (seed, drift, ...)

    int total_points() const {
        int n = 0;
        for (const auto& g : groups) n += static_cast<int>(g.states.rows());
        return n;
    }
    bool has_truth() const {
        return !groups.empty() && groups.front().true_invariant.has_value();
    }
    // undo rescale_log on one stored row
    Eigen::VectorXd unscale(const Eigen::VectorXd& row) const;
};

// CSV with header `group_id,x1..xd,C` (C empty when no ground truth), decimal
// serialization chosen to round-trip doubles exactly. A sidecar `<path>.meta.json`
// holds name, rescale_log and the generator metadata.
void save_dataset(const GroupedDataset& ds, const std::string& path);
GroupedDataset load_dataset(const std::string& path);

// exact decimal round-trip formatting for doubles
std::string format_double(double v);

}  // namespace conservnet
