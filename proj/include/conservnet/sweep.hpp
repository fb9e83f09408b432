#pragma once

#include <functional>
#include <string>
#include <vector>

namespace conservnet {

struct SweepCell {
    std::string value;  // axis value as printed
    bool ok = false;
    std::string error;  // populated when the cell failed
    double rho = 0.0;
    bool has_rho = false;
    double sigma_bar = 0.0;
    double runtime_seconds = 0.0;
};

struct SweepResult {
    std::string axis;
    std::vector<SweepCell> cells;
};

// One full train+eval per axis value via `run_cell`; per-cell failures are
// captured and the sweep continues. run_cell fills rho/sigma_bar of the cell.
SweepResult run_sweep(const std::string& axis, const std::vector<std::string>& values,
                      const std::function<void(const std::string&, SweepCell&)>& run_cell);

// paper grid of (N, M) with the total fixed at 2000
std::vector<std::pair<int, int>> data_condition_grid();

void save_sweep_csv(const SweepResult& result, const std::string& path);

}  // namespace conservnet
