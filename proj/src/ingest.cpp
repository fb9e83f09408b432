#include "conservnet/ingest.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace conservnet {

namespace {

bool parse_row(const std::string& line, Eigen::Vector4d& out) {
    std::stringstream ss(line);
    std::string tok;
    for (int k = 0; k < 4; ++k) {
        if (!std::getline(ss, tok, ',')) return false;
        std::size_t pos = 0;
        try {
            out[k] = std::stod(tok, &pos);
        } catch (const std::exception&) {
            return false;
        }
        // tolerate trailing whitespace, nothing else
        while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
        if (pos != tok.size()) return false;
    }
    std::string rest;
    if (std::getline(ss, rest, ',')) return false;  // extra column
    return true;
}

GroupedDataset make_split(const std::vector<Eigen::Vector4d>& rows, std::size_t begin,
                          std::size_t end, const std::string& name) {
    GroupedDataset ds;
    ds.name = name;
    ds.dim = 4;
    ds.rescale_log = {1.0, 1.0, 0.1, 0.1};
    Group g;
    g.id = 0;
    g.states.resize(static_cast<Eigen::Index>(end - begin), 4);
    for (std::size_t j = begin; j < end; ++j) {
        g.states(static_cast<Eigen::Index>(j - begin), 0) = rows[j][0];
        g.states(static_cast<Eigen::Index>(j - begin), 1) = rows[j][1];
        g.states(static_cast<Eigen::Index>(j - begin), 2) = 0.1 * rows[j][2];
        g.states(static_cast<Eigen::Index>(j - begin), 3) = 0.1 * rows[j][3];
    }
    ds.groups.push_back(std::move(g));
    return ds;
}

}  // namespace

std::pair<GroupedDataset, GroupedDataset> load_double_pendulum(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);

    std::vector<Eigen::Vector4d> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip trailing carriage return / whitespace
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
            line.pop_back();
        if (line.empty()) continue;
        Eigen::Vector4d row;
        if (!parse_row(line, row)) {
            if (lineno == 1) continue;  // header line
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed row");
        }
        if (!row.allFinite())
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": non-finite value");
        rows.push_back(row);
    }
    if (rows.size() < 2) throw std::runtime_error("double pendulum file too short: " + path);

    const auto split = static_cast<std::size_t>(
        std::llround(0.8 * static_cast<double>(rows.size())));
    auto train = make_split(rows, 0, split, "double-pendulum-train");
    auto test = make_split(rows, split, rows.size(), "double-pendulum-test");
    return {std::move(train), std::move(test)};
}

Eigen::MatrixXd ideal_dp_crosssection(DpCrossSection kind, const Eigen::VectorXd& axis1,
                                      const Eigen::VectorXd& axis2,
                                      const Eigen::Vector4d& c) {
    Eigen::MatrixXd out(axis1.size(), axis2.size());
    for (Eigen::Index i = 0; i < axis1.size(); ++i) {
        for (Eigen::Index j = 0; j < axis2.size(); ++j) {
            const double u = axis1[i], v = axis2[j];
            if (kind == DpCrossSection::OmegaPlane)
                out(i, j) = c[3] + c[0] * u * u + c[1] * v * v + c[2] * u * v;
            else
                out(i, j) = c[0] + c[1] * std::cos(u) + c[2] * std::cos(v) +
                            c[3] * std::cos(u - v);
        }
    }
    return out;
}

}  // namespace conservnet
