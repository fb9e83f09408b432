// Experiment driver: dataset generation, training, evaluation, heatmap export,
// robustness sweeps and symbolic extraction as reproducible subcommands.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "conservnet/dataset.hpp"
#include "conservnet/ingest.hpp"
#include "conservnet/metrics.hpp"
#include "conservnet/net.hpp"
#include "conservnet/sweep.hpp"
#include "conservnet/symbolic.hpp"
#include "conservnet/systems.hpp"
#include "conservnet/trainer.hpp"

namespace fs = std::filesystem;
using namespace conservnet;

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string output_root() {
    if (const char* env = std::getenv("CONSERVNET_OUT")) return env;
    return "runs";
}

// resolved config echoed into the output directory; its hash names the run
fs::path prepare_out_dir(std::string out, const std::string& cmd,
                         const std::string& resolved_config) {
    if (out.empty()) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a(cmd + "\n" + resolved_config)));
        out = output_root() + "/" + cmd + "-" + buf;
    }
    fs::create_directories(out);
    std::ofstream cfg(fs::path(out) / "config.txt");
    cfg << "command = " << cmd << "\n" << resolved_config;
    return out;
}

struct LossFlags {
    std::string variant = "nv";
    std::string deviation = "std";
    double Q = 1.0;
    double R = 1.0;
    std::string spreader = "l2";
    bool per_row_ball = false;

    void attach(CLI::App* app) {
        app->add_option("--loss", variant, "loss variant: nv | simple")
            ->check(CLI::IsMember({"nv", "simple"}));
        app->add_option("--deviation", deviation, "deviation measure: std | variance")
            ->check(CLI::IsMember({"std", "variance"}));
        app->add_option("--Q", Q, "spreading constant")->check(CLI::PositiveNumber);
        app->add_option("--R", R, "max spreading-noise norm")->check(CLI::PositiveNumber);
        app->add_option("--spreader", spreader, "spreader norm: l1 | l2 | linf")
            ->check(CLI::IsMember({"l1", "l2", "linf"}));
        app->add_flag("--per-row-ball", per_row_ball,
                      "sample each noise row independently in the R-ball");
    }

    LossConfig build() const {
        LossConfig cfg;
        cfg.variant = variant == "simple" ? LossVariant::Simple : LossVariant::NoiseVariance;
        cfg.deviation = deviation == "variance" ? Deviation::Variance : Deviation::Std;
        cfg.Q = Q;
        cfg.R = R;
        cfg.spreader = spreader == "l1" ? SpreaderNorm::L1
                       : spreader == "linf" ? SpreaderNorm::Linf
                                            : SpreaderNorm::L2;
        cfg.per_row_ball = per_row_ball;
        return cfg;
    }

    std::string describe() const {
        std::ostringstream ss;
        ss << "loss = " << variant << "\ndeviation = " << deviation << "\nQ = " << Q
           << "\nR = " << R << "\nspreader = " << spreader
           << "\nper_row_ball = " << per_row_ball << "\n";
        return ss.str();
    }
};

struct TrainFlags {
    int epochs = 50000;
    double lr = 5e-5;
    std::uint64_t seed = 0;
    int eval_every = 100;
    int patience = 50;
    double min_delta = 1e-6;
    int hidden_layers = 4;
    int width = 320;
    LossFlags loss;

    void attach(CLI::App* app) {
        app->add_option("--epochs", epochs)->check(CLI::PositiveNumber);
        app->add_option("--lr", lr)->check(CLI::PositiveNumber);
        app->add_option("--seed", seed);
        app->add_option("--eval-every", eval_every)->check(CLI::PositiveNumber);
        app->add_option("--patience", patience, "early-stop patience (snapshots)");
        app->add_option("--min-delta", min_delta, "early-stop improvement threshold");
        app->add_option("--hidden-layers", hidden_layers)->check(CLI::PositiveNumber);
        app->add_option("--width", width)->check(CLI::PositiveNumber);
        loss.attach(app);
    }

    TrainConfig build() const {
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.lr = lr;
        cfg.seed = seed;
        cfg.eval_every = eval_every;
        cfg.early_stop.patience = patience;
        cfg.early_stop.min_delta = min_delta;
        cfg.loss = loss.build();
        return cfg;
    }

    std::vector<int> dims(int input_dim) const {
        std::vector<int> d{input_dim};
        for (int l = 0; l < hidden_layers; ++l) d.push_back(width);
        d.push_back(1);
        return d;
    }

    std::string describe() const {
        std::ostringstream ss;
        ss << "epochs = " << epochs << "\nlr = " << lr << "\nseed = " << seed
           << "\neval_every = " << eval_every << "\npatience = " << patience
           << "\nmin_delta = " << min_delta << "\nhidden_layers = " << hidden_layers
           << "\nwidth = " << width << "\n" << loss.describe();
        return ss.str();
    }
};

GroupedDataset generate_one(const std::string& system, int n, int m, std::uint64_t seed,
                            double noise, bool nuisance, bool polar, bool alt_s1,
                            double fixed_l, bool has_fixed_l) {
    GroupedDataset ds;
    if (system == "null") {
        ds = generate_null(n, m, seed);
    } else if (system == "lv") {
        ds = simulate_lotka_volterra(n, m, seed);
    } else if (system == "kepler") {
        KeplerOptions opts;
        if (has_fixed_l) opts.fixed_angular_momentum = fixed_l;
        ds = simulate_kepler(n, m, seed, opts);
    } else {
        ds = generate_synthetic(system_from_name(system), n, m, seed, alt_s1);
    }
    if (polar) ds = to_polar(ds);
    if (nuisance) ds = add_nuisance(ds, seed ^ 0x6e75ULL);
    if (noise > 0.0) ds = add_observation_noise(ds, noise, seed ^ 0x4f62ULL);
    return ds;
}

struct TrainOutcome {
    MlpParams model;
    TrainReport report;
    EvalReport train_eval, test_eval;
};

TrainOutcome run_training(const GroupedDataset& train_ds, const GroupedDataset* test_ds,
                          const TrainFlags& flags) {
    MlpParams model = init_params(flags.dims(train_ds.dim), flags.seed);
    auto [trained, report] = train(train_ds, test_ds, std::move(model), flags.build());
    TrainOutcome out{std::move(trained), std::move(report), {}, {}};
    out.train_eval = evaluate(out.model, train_ds);
    if (test_ds) out.test_eval = evaluate(out.model, *test_ds);
    return out;
}

nlohmann::json eval_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["sigma_bar"] = r.sigma_bar;
    j["degenerate"] = r.degenerate;
    if (r.has_rho) {
        j["rho"] = r.rho;
        j["fit_a"] = r.fit.a;
        j["fit_b"] = r.fit.b;
        j["r2"] = r.fit.r2;
    }
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : r.per_group)
        groups.push_back({{"group_id", g.group_id}, {"mean", g.mean}, {"std", g.stddev}});
    j["per_group"] = groups;
    return j;
}

void write_summary(const fs::path& dir, const TrainOutcome& out, bool has_test,
                   const std::string& checkpoint) {
    nlohmann::json j;
    j["stop_reason"] = out.report.stop_reason;
    j["final_epoch"] = out.report.final_epoch;
    j["checkpoint"] = checkpoint;
    j["train"] = eval_to_json(out.train_eval);
    if (has_test) j["test"] = eval_to_json(out.test_eval);
    if (!out.report.snapshots.empty()) {
        j["final_train_loss"] = out.report.snapshots.back().train_loss;
        if (has_test) j["final_test_loss"] = out.report.snapshots.back().test_loss;
    }
    std::ofstream f(dir / "summary.json");
    f << j.dump(2) << '\n';
}

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> vals;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    return vals;
}

int cmd_generate(const std::string& system, int n, int m, std::uint64_t seed, double noise,
                 bool nuisance, bool polar, bool alt_s1, double fixed_l, bool has_fixed_l,
                 std::string out) {
    std::ostringstream cfg;
    cfg << "system = " << system << "\nn = " << n << "\nm = " << m << "\nseed = " << seed
        << "\nnoise = " << noise << "\nnuisance = " << nuisance << "\npolar = " << polar
        << "\n";
    const fs::path dir = prepare_out_dir(std::move(out), "generate", cfg.str());
    const GroupedDataset train_ds =
        generate_one(system, n, m, seed, noise, nuisance, polar, alt_s1, fixed_l, has_fixed_l);
    const GroupedDataset test_ds = generate_one(system, n, m, seed + 1, noise, nuisance,
                                                polar, alt_s1, fixed_l, has_fixed_l);
    save_dataset(train_ds, (dir / "train.csv").string());
    save_dataset(test_ds, (dir / "test.csv").string());
    std::cout << dir.string() << '\n';
    return 0;
}

int cmd_train(const std::string& train_path, const std::string& test_path,
              const TrainFlags& flags, std::string out) {
    const GroupedDataset train_ds = load_dataset(train_path);
    GroupedDataset test_ds;
    const bool has_test = !test_path.empty();
    if (has_test) test_ds = load_dataset(test_path);

    std::ostringstream cfg;
    cfg << "train = " << train_path << "\ntest = " << test_path << "\n" << flags.describe();
    const fs::path dir = prepare_out_dir(std::move(out), "train", cfg.str());

    const TrainOutcome outcome = run_training(train_ds, has_test ? &test_ds : nullptr, flags);
    const std::string ckpt = (dir / "checkpoint.txt").string();
    save_checkpoint(outcome.model, ckpt);
    save_report_csv(outcome.report, (dir / "metrics.csv").string());
    write_summary(dir, outcome, has_test, ckpt);
    std::cout << dir.string() << '\n';
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data, std::string out) {
    const MlpParams model = load_checkpoint(ckpt);
    const GroupedDataset ds = load_dataset(data);
    const fs::path dir =
        prepare_out_dir(std::move(out), "eval", "checkpoint = " + ckpt + "\ndata = " + data + "\n");
    std::ofstream f(dir / "eval.json");
    f << eval_to_json(evaluate(model, ds)).dump(2) << '\n';
    std::cout << dir.string() << '\n';
    return 0;
}

int cmd_heatmap(const std::string& ckpt, const std::string& fix, const std::string& free_vars,
                const std::string& range, int res, std::string out) {
    const MlpParams model = load_checkpoint(ckpt);

    std::map<int, double> fixed;
    {
        std::stringstream ss(fix);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos)
                throw CLI::ValidationError("--fix expects name=value pairs");
            const std::string name = item.substr(0, eq);
            if (name.size() < 2 || name[0] != 'x')
                throw CLI::ValidationError("--fix variables are named x1..xd");
            fixed[std::stoi(name.substr(1)) - 1] = std::stod(item.substr(eq + 1));
        }
    }
    int free1 = -1, free2 = -1;
    {
        std::stringstream ss(free_vars);
        std::string item;
        std::vector<int> idx;
        while (std::getline(ss, item, ',')) idx.push_back(std::stoi(item.substr(1)) - 1);
        if (idx.size() != 2) throw CLI::ValidationError("--free expects exactly two variables");
        free1 = idx[0];
        free2 = idx[1];
    }
    const std::vector<double> bounds = parse_doubles(range);
    if (bounds.size() != 4)
        throw CLI::ValidationError("--range expects lo1,hi1,lo2,hi2");
    const Eigen::VectorXd ax1 = Eigen::VectorXd::LinSpaced(res, bounds[0], bounds[1]);
    const Eigen::VectorXd ax2 = Eigen::VectorXd::LinSpaced(res, bounds[2], bounds[3]);

    std::ostringstream cfg;
    cfg << "checkpoint = " << ckpt << "\nfix = " << fix << "\nfree = " << free_vars
        << "\nrange = " << range << "\nres = " << res << "\n";
    const fs::path dir = prepare_out_dir(std::move(out), "heatmap", cfg.str());

    save_matrix_csv(cross_section(model, fixed, free1, ax1, free2, ax2),
                    (dir / "heatmap.csv").string());
    nlohmann::json axes;
    axes["rows"] = {{"variable", free1 + 1}, {"lo", bounds[0]}, {"hi", bounds[1]}, {"n", res}};
    axes["cols"] = {{"variable", free2 + 1}, {"lo", bounds[2]}, {"hi", bounds[3]}, {"n", res}};
    axes["fixed"] = fix;
    std::ofstream f(dir / "heatmap.axes.json");
    f << axes.dump(2) << '\n';
    std::cout << dir.string() << '\n';
    return 0;
}

int cmd_sweep(const std::string& axis, const std::string& values_csv,
              const std::string& system, int n, int m, std::uint64_t seed,
              const TrainFlags& flags, std::string out) {
    std::ostringstream cfg;
    cfg << "axis = " << axis << "\nvalues = " << values_csv << "\nsystem = " << system
        << "\nn = " << n << "\nm = " << m << "\nseed = " << seed << "\n" << flags.describe();
    const fs::path dir = prepare_out_dir(std::move(out), "sweep", cfg.str());

    std::vector<std::string> values;
    if (axis == "data_condition") {
        for (const auto& [gn, gm] : data_condition_grid())
            values.push_back(std::to_string(gn) + "x" + std::to_string(gm));
    } else if (!values_csv.empty()) {
        std::stringstream ss(values_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) values.push_back(tok);
    } else if (axis == "noise_strength") {
        values = {"0.01", "0.05", "0.1", "0.2"};
    } else if (axis == "Q" || axis == "R") {
        values = {"0.5", "1", "2", "5"};
    } else if (axis == "spreader_norm") {
        values = {"l1", "l2", "linf"};
    }

    std::uint64_t cell_index = 0;
    const SweepResult result = run_sweep(
        axis, values, [&](const std::string& value, SweepCell& cell) {
            TrainFlags cell_flags = flags;
            cell_flags.seed = seed + 1000 * (++cell_index);  // derived per-cell seeds
            int cn = n, cm = m;
            double noise = 0.0;
            if (axis == "noise_strength") noise = std::stod(value);
            else if (axis == "Q") cell_flags.loss.Q = std::stod(value);
            else if (axis == "R") cell_flags.loss.R = std::stod(value);
            else if (axis == "spreader_norm") cell_flags.loss.spreader = value;
            else if (axis == "data_condition") {
                const auto x = value.find('x');
                cn = std::stoi(value.substr(0, x));
                cm = std::stoi(value.substr(x + 1));
            }
            const GroupedDataset train_ds = generate_one(system, cn, cm, cell_flags.seed,
                                                         noise, false, false, false, 0, false);
            const GroupedDataset test_ds = generate_one(system, cn, cm, cell_flags.seed + 1,
                                                        noise, false, false, false, 0, false);
            const TrainOutcome o = run_training(train_ds, &test_ds, cell_flags);
            cell.has_rho = o.test_eval.has_rho;
            cell.rho = o.test_eval.rho;
            cell.sigma_bar = o.test_eval.sigma_bar;
        });
    save_sweep_csv(result, (dir / "sweep.csv").string());
    std::cout << dir.string() << '\n';
    return 0;
}

int cmd_extract(const std::string& ckpt, const std::string& data, int degree, double lambda,
                double threshold, std::string out) {
    const MlpParams model = load_checkpoint(ckpt);
    const GroupedDataset ds = load_dataset(data);
    std::ostringstream cfg;
    cfg << "checkpoint = " << ckpt << "\ndata = " << data << "\ndegree = " << degree
        << "\nlambda = " << lambda << "\nthreshold = " << threshold << "\n";
    const fs::path dir = prepare_out_dir(std::move(out), "extract", cfg.str());
    const SymbolicReport rep = extract(model, ds, degree, lambda, threshold);
    std::ofstream f(dir / "symbolic.json");
    f << rep.to_json() << '\n';
    std::cout << rep.formula << '\n' << dir.string() << '\n';
    return 0;
}

int cmd_ingest_dp(const std::string& file, std::string out) {
    const fs::path dir = prepare_out_dir(std::move(out), "ingest-dp", "file = " + file + "\n");
    auto [train_ds, test_ds] = load_double_pendulum(file);
    save_dataset(train_ds, (dir / "train.csv").string());
    save_dataset(test_ds, (dir / "test.csv").string());
    std::cout << dir.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ConservNet: conserved-quantity discovery from grouped trajectory data"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file; flags override");

    // generate
    auto* gen = app.add_subcommand("generate", "generate train/test datasets");
    std::string gen_system;
    int gen_n = 20, gen_m = 100;
    std::uint64_t gen_seed = 0;
    double gen_noise = 0.0, gen_fixed_l = 0.0;
    bool gen_nuisance = false, gen_polar = false, gen_alt_s1 = false;
    std::string gen_out;
    gen->add_option("system", gen_system, "s1 | s2 | s3 | lv | kepler | null")->required();
    gen->add_option("--n", gen_n, "number of groups")->check(CLI::PositiveNumber);
    gen->add_option("--m", gen_m, "points per group")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed);
    gen->add_option("--noise", gen_noise, "observation noise strength");
    gen->add_flag("--nuisance", gen_nuisance, "append a standard-normal nuisance column");
    gen->add_flag("--polar", gen_polar, "transform Kepler data to polar coordinates");
    gen->add_flag("--alt-s1", gen_alt_s1, "use the alternative S1 coefficient set");
    auto* fixed_l_opt =
        gen->add_option("--fixed-L", gen_fixed_l, "pin the Kepler angular momentum");
    gen->add_option("--out", gen_out, "output directory");

    // ingest-dp
    auto* ingest = app.add_subcommand("ingest-dp", "load a double pendulum trajectory CSV");
    std::string dp_file, dp_out;
    ingest->add_option("file", dp_file)->required()->check(CLI::ExistingFile);
    ingest->add_option("--out", dp_out);

    // train
    auto* tr = app.add_subcommand("train", "train a model on a dataset");
    std::string tr_train, tr_test, tr_out;
    TrainFlags tr_flags;
    tr->add_option("--train", tr_train)->required()->check(CLI::ExistingFile);
    tr->add_option("--test", tr_test)->check(CLI::ExistingFile);
    tr->add_option("--out", tr_out);
    tr_flags.attach(tr);

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    std::string ev_ckpt, ev_data, ev_out;
    ev->add_option("--checkpoint", ev_ckpt)->required()->check(CLI::ExistingFile);
    ev->add_option("--data", ev_data)->required()->check(CLI::ExistingFile);
    ev->add_option("--out", ev_out);

    // heatmap
    auto* hm = app.add_subcommand("heatmap", "export a 2D cross-section of the model output");
    std::string hm_ckpt, hm_fix, hm_free, hm_range, hm_out;
    int hm_res = 50;
    hm->add_option("--checkpoint", hm_ckpt)->required()->check(CLI::ExistingFile);
    hm->add_option("--fix", hm_fix, "fixed variables, e.g. x1=0,x2=0")->required();
    hm->add_option("--free", hm_free, "two free variables, e.g. x3,x4")->required();
    hm->add_option("--range", hm_range, "lo1,hi1,lo2,hi2")->required();
    hm->add_option("--res", hm_res)->check(CLI::PositiveNumber);
    hm->add_option("--out", hm_out);

    // sweep
    auto* sw = app.add_subcommand("sweep", "train+eval across one axis");
    std::string sw_axis, sw_values, sw_system = "s2", sw_out;
    int sw_n = 20, sw_m = 100;
    TrainFlags sw_flags;  // sw_flags.seed doubles as the data-generation base seed
    sw->add_option("--axis", sw_axis)
        ->required()
        ->check(CLI::IsMember({"noise_strength", "data_condition", "Q", "R", "spreader_norm"}));
    sw->add_option("--values", sw_values, "comma-separated axis values (default: paper grid)");
    sw->add_option("--system", sw_system);
    sw->add_option("--n", sw_n)->check(CLI::PositiveNumber);
    sw->add_option("--m", sw_m)->check(CLI::PositiveNumber);
    sw->add_option("--out", sw_out);
    sw_flags.attach(sw);

    // extract
    auto* ex = app.add_subcommand("extract", "symbolic extraction from a trained model");
    std::string ex_ckpt, ex_data, ex_out;
    int ex_degree = 2;
    double ex_lambda = 1e-4, ex_threshold = 0.05;
    ex->add_option("--checkpoint", ex_ckpt)->required()->check(CLI::ExistingFile);
    ex->add_option("--data", ex_data)->required()->check(CLI::ExistingFile);
    ex->add_option("--degree", ex_degree)->check(CLI::PositiveNumber);
    ex->add_option("--lambda", ex_lambda);
    ex->add_option("--threshold", ex_threshold);
    ex->add_option("--out", ex_out);

    try {
        app.parse(argc, argv);
        if (*gen)
            return cmd_generate(gen_system, gen_n, gen_m, gen_seed, gen_noise, gen_nuisance,
                                gen_polar, gen_alt_s1, gen_fixed_l, fixed_l_opt->count() > 0,
                                gen_out);
        if (*ingest) return cmd_ingest_dp(dp_file, dp_out);
        if (*tr) return cmd_train(tr_train, tr_test, tr_flags, tr_out);
        if (*ev) return cmd_eval(ev_ckpt, ev_data, ev_out);
        if (*hm) return cmd_heatmap(hm_ckpt, hm_fix, hm_free, hm_range, hm_res, hm_out);
        if (*sw)
            return cmd_sweep(sw_axis, sw_values, sw_system, sw_n, sw_m, sw_flags.seed, sw_flags,
                             sw_out);
        if (*ex) return cmd_extract(ex_ckpt, ex_data, ex_degree, ex_lambda, ex_threshold,
                                    ex_out);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
