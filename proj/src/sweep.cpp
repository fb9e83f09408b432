#include "conservnet/sweep.hpp"

#include <chrono>
#include <fstream>
#include <stdexcept>

#include "conservnet/dataset.hpp"

namespace conservnet {

SweepResult run_sweep(const std::string& axis, const std::vector<std::string>& values,
                      const std::function<void(const std::string&, SweepCell&)>& run_cell) {
    SweepResult result;
    result.axis = axis;
    for (const auto& value : values) {
        SweepCell cell;
        cell.value = value;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            run_cell(value, cell);
            cell.ok = true;
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
        cell.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.cells.push_back(std::move(cell));
    }
    return result;
}

std::vector<std::pair<int, int>> data_condition_grid() {
    return {{2, 1000}, {4, 500}, {10, 200}, {20, 100}, {40, 50}, {100, 20}};
}

void save_sweep_csv(const SweepResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << result.axis << ",rho,sigma_bar,runtime_seconds,error\n";
    for (const auto& c : result.cells) {
        out << c.value << ',';
        if (c.ok && c.has_rho) out << format_double(c.rho);
        out << ',';
        if (c.ok) out << format_double(c.sigma_bar);
        out << ',' << format_double(c.runtime_seconds) << ',' << c.error << '\n';
    }
}

}  // namespace conservnet
