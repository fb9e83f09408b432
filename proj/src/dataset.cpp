#include "conservnet/dataset.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace conservnet {

Eigen::VectorXd GroupedDataset::unscale(const Eigen::VectorXd& row) const {
    Eigen::VectorXd out = row;
    for (int k = 0; k < dim; ++k) out[k] /= rescale_log[k];
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void save_dataset(const GroupedDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "group_id";
    for (int k = 1; k <= ds.dim; ++k) out << ",x" << k;
    out << ",C\n";
    for (const auto& g : ds.groups) {
        for (Eigen::Index j = 0; j < g.states.rows(); ++j) {
            out << g.id;
            for (int k = 0; k < ds.dim; ++k) out << ',' << format_double(g.states(j, k));
            out << ',';
            if (g.true_invariant) out << format_double(*g.true_invariant);
            out << '\n';
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);

    nlohmann::json meta;
    meta["name"] = ds.name;
    meta["dim"] = ds.dim;
    meta["n_groups"] = ds.groups.size();
    meta["rescale_log"] = ds.rescale_log;
    if (!ds.metadata_json.empty()) meta["generator"] = nlohmann::json::parse(ds.metadata_json);
    std::ofstream mout(path + ".meta.json");
    mout << meta.dump(2) << '\n';
}

GroupedDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty dataset file: " + path);

    int dim = 0;
    {
        std::stringstream ss(line);
        std::string tok;
        int cols = 0;
        while (std::getline(ss, tok, ',')) ++cols;
        dim = cols - 2;  // group_id and C
        if (dim < 1) throw std::runtime_error("bad dataset header in " + path);
    }

    GroupedDataset ds;
    ds.dim = dim;
    ds.rescale_log.assign(dim, 1.0);

    struct Raw {
        std::vector<Eigen::VectorXd> rows;
        std::optional<double> c;
    };
    std::vector<int> order;
    std::vector<Raw> raws;
    std::vector<int> ids;

    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        if (!std::getline(ss, tok, ','))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": missing group id");
        const int gid = std::stoi(tok);
        Eigen::VectorXd row(dim);
        for (int k = 0; k < dim; ++k) {
            if (!std::getline(ss, tok, ','))
                throw std::runtime_error(path + ":" + std::to_string(lineno) + ": short row");
            row[k] = std::stod(tok);
        }
        std::optional<double> c;
        if (std::getline(ss, tok, ',') && !tok.empty()) c = std::stod(tok);

        int idx = -1;
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (ids[i] == gid) { idx = static_cast<int>(i); break; }
        if (idx < 0) {
            ids.push_back(gid);
            raws.emplace_back();
            idx = static_cast<int>(ids.size()) - 1;
        }
        raws[idx].rows.push_back(row);
        raws[idx].c = c;
    }

    for (std::size_t i = 0; i < ids.size(); ++i) {
        Group g;
        g.id = ids[i];
        g.true_invariant = raws[i].c;
        g.states.resize(static_cast<Eigen::Index>(raws[i].rows.size()), dim);
        for (std::size_t j = 0; j < raws[i].rows.size(); ++j)
            g.states.row(static_cast<Eigen::Index>(j)) = raws[i].rows[j];
        ds.groups.push_back(std::move(g));
    }

    std::ifstream min(path + ".meta.json");
    if (min) {
        nlohmann::json meta = nlohmann::json::parse(min, nullptr, false);
        if (!meta.is_discarded()) {
            if (meta.contains("name")) ds.name = meta["name"].get<std::string>();
            if (meta.contains("rescale_log"))
                ds.rescale_log = meta["rescale_log"].get<std::vector<double>>();
            if (meta.contains("generator")) ds.metadata_json = meta["generator"].dump();
        }
    }
    return ds;
}

}  // namespace conservnet
