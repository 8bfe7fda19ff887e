// fimsindy command-line front end. Exit codes: 0 success, 2 usage or
// configuration error, 3 numeric failure (divergence, singular system,
// missing oscillation), 1 anything else.

#include "fimsindy/dynamics.hpp"
#include "fimsindy/entropy.hpp"
#include "fimsindy/errors.hpp"
#include "fimsindy/experiments.hpp"
#include "fimsindy/features.hpp"
#include "fimsindy/fim.hpp"
#include "fimsindy/io.hpp"
#include "fimsindy/parallel.hpp"
#include "fimsindy/regression.hpp"
#include "fimsindy/sampling.hpp"
#include "fimsindy/svg.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifndef FIMSINDY_VERSION
#define FIMSINDY_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace fimsindy;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------- config

/// Typed access to a JSON object. Every key read is echoed (with its
/// effective value) for the manifest; finish() rejects keys never read.
class ConfigReader {
public:
    ConfigReader() : j_(json::object()) {}
    explicit ConfigReader(json j) : j_(std::move(j)) {
        if (!j_.is_object()) throw ConfigError("config must be a JSON object");
    }

    template <class T>
    T get(const std::string& key, const T& fallback) {
        used_.insert(key);
        T value = fallback;
        if (j_.contains(key)) {
            try {
                value = j_.at(key).get<T>();
            } catch (const json::exception& e) {
                throw ConfigError("config key '" + key + "': " + e.what());
            }
        }
        echo_[key] = value;
        return value;
    }

    /// Number that may also be given as "inf" / "-inf" (JSON has no infinities).
    double get_extended(const std::string& key, double fallback) {
        used_.insert(key);
        double value = fallback;
        if (j_.contains(key)) {
            const auto& v = j_.at(key);
            if (v.is_number()) value = v.get<double>();
            else if (v == "inf") value = std::numeric_limits<double>::infinity();
            else if (v == "-inf") value = -std::numeric_limits<double>::infinity();
            else throw ConfigError("config key '" + key + "' must be a number or \"inf\"");
        }
        echo_[key] = std::isinf(value) ? json(value > 0 ? "inf" : "-inf") : json(value);
        return value;
    }

    void set_echo(const std::string& key, const json& v) { echo_[key] = v; }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!used_.count(k)) throw ConfigError("unknown config key '" + k + "'");
    }

    const json& echo() const { return echo_; }

private:
    json j_;
    json echo_ = json::object();
    std::set<std::string> used_;
};

ConfigReader load_config(const std::string& path) {
    if (path.empty()) return ConfigReader();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        return ConfigReader(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

SystemSpec make_system(const std::string& name, const std::map<std::string, double>& params) {
    SystemSpec spec = system_from_name(name);
    const auto allowed = required_params(spec.kind);
    for (const auto& [k, v] : params) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw ConfigError("parameter '" + k + "' does not belong to system " + name);
        spec.params[k] = v;
    }
    spec.validate();
    return spec;
}

SystemSpec read_system(ConfigReader& cfg) {
    const auto name = cfg.get<std::string>("system", "lorenz");
    const auto params = cfg.get<std::map<std::string, double>>("params", {});
    return make_system(name, params);
}

double default_dt(const SystemSpec& spec) { return spec.kind == SystemKind::VanDerPol ? 0.01 : 0.002; }

FitConfig read_fit(ConfigReader& cfg) {
    FitConfig f;
    f.threshold = cfg.get("threshold", f.threshold);
    f.alpha = cfg.get("alpha", f.alpha);
    f.max_iter = cfg.get("max_iter", f.max_iter);
    return f;
}

LibraryConfig read_library(ConfigReader& cfg) {
    LibraryConfig l;
    l.degree = cfg.get("degree", l.degree);
    l.include_constant = cfg.get("include_constant", l.include_constant);
    return l;
}

// ---------------------------------------------------------------- output

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

fs::path prepare_out_dir(const std::string& dir) {
    if (dir.empty()) throw ConfigError("--out-dir is required");
    fs::create_directories(dir);
    return dir;
}

void write_manifest(const fs::path& dir, const std::string& command, const json& config, unsigned long long seed,
                    Clock::time_point start, const json& extra = json::object()) {
    json m;
    m["command"] = command;
    m["version"] = FIMSINDY_VERSION;
    m["config"] = config;
    m["seed"] = seed;
    m["wall_time_s"] = std::chrono::duration<double>(Clock::now() - start).count();
    for (const auto& [k, v] : extra.items()) m[k] = v;
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& values, const AxisRange& xs,
                      const AxisRange& ys) {
    std::ostringstream s;
    s << std::setprecision(17) << "y\\x";
    for (int c = 0; c < xs.count; ++c) s << ',' << xs.at(c);
    s << '\n';
    for (int r = 0; r < ys.count; ++r) {
        s << ys.at(r);
        for (int c = 0; c < xs.count; ++c) s << ',' << values(r, c);
        s << '\n';
    }
    write_text(path, s.str());
}

std::optional<double> truth_loss(const std::optional<SystemSpec>& spec, const SparseModel& model, LossNorm norm) {
    if (!spec || static_cast<Eigen::Index>(spec->dim()) != model.coefficients.cols()) return std::nullopt;
    return coefficient_loss(model, ground_truth(*spec, model.terms), norm);
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// ---------------------------------------------------------------- trajectory source

/// Flags shared by simulate, fit and scan.
struct TrajectoryFlags {
    std::string input;
    std::string system = "lorenz";
    std::vector<std::string> params;
    std::vector<double> ic;
    double t_end = 10.0;
    std::optional<double> dt;
    double noise = 0.0;
    long long seed = 0;

    void add_to(CLI::App* app, bool allow_input) {
        if (allow_input) app->add_option("--input", input, "Trajectory CSV (t,x0,x1,...) instead of simulating");
        app->add_option("--system", system, "lorenz | rossler | vanderpol")->capture_default_str();
        app->add_option("--param", params, "System parameter override name=value (repeatable)");
        app->add_option("--ic", ic, "Initial state, comma separated")->delimiter(',');
        app->add_option("--t-end", t_end, "Final time")->capture_default_str();
        app->add_option("--dt", dt, "Step size (default 0.002, 0.01 for vanderpol)");
        app->add_option("--noise", noise, "Noise level as a fraction of each column's std")->capture_default_str();
        app->add_option("--seed", seed, "Noise seed")->capture_default_str();
    }

    SystemSpec spec() const {
        std::map<std::string, double> p;
        for (const auto& kv : params) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError("--param expects name=value, got '" + kv + "'");
            try {
                p[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
            } catch (const std::exception&) {
                throw ConfigError("--param value is not a number: '" + kv + "'");
            }
        }
        return make_system(system, p);
    }

    Trajectory load() const {
        if (!input.empty()) {
            std::ifstream in(input);
            if (!in) throw ConfigError("cannot open " + input);
            return read_trajectory_csv(in);
        }
        if (ic.empty()) throw ConfigError("--ic is required when no --input is given");
        const SystemSpec s = spec();
        Trajectory tr = integrate(s, to_vector(ic), t_end, dt.value_or(default_dt(s)));
        if (noise > 0.0) tr = add_noise(tr, noise, seed);
        return tr;
    }
};

// ---------------------------------------------------------------- simulate

int cmd_simulate(const TrajectoryFlags& flags, const std::string& out) {
    const Trajectory tr = flags.load();
    std::ofstream f(out, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + out);
    write_trajectory_csv(f, tr);
    const double dt = tr.times.size() > 1 ? tr.times[1] - tr.times[0] : flags.dt.value_or(default_dt(flags.spec()));
    std::cout << json{{"m", tr.states.rows()}, {"dt", dt}, {"noise", flags.noise}, {"output", out}}.dump() << '\n';
    return 0;
}

// ---------------------------------------------------------------- fit

struct FitFlags {
    int degree = 2;
    bool no_constant = false;
    FitConfig fit;
    std::string out;
};

int cmd_fit(const TrajectoryFlags& flags, bool system_given, const FitFlags& ff) {
    const Trajectory tr = flags.load();
    const DesignMatrix lib = build_library(tr, {ff.degree, !ff.no_constant});
    const SparseModel model = fit_system(lib, central_diff(tr).values, ff.fit);
    for (const auto& eq : model_equations(model)) std::cout << eq << '\n';
    std::cout << "nonzero terms: " << model.active_count() << '\n';
    if (model.empty_warning)
        std::cout << "warning: every term of at least one equation fell below the threshold\n";
    std::optional<SystemSpec> spec;
    if (flags.input.empty() || system_given) spec = flags.spec();
    const auto l1 = truth_loss(spec, model, LossNorm::L1);
    const auto l2 = truth_loss(spec, model, LossNorm::L2);
    if (l1) std::cout << std::setprecision(6) << "L1 loss vs ground truth: " << *l1 << "\nL2 loss vs ground truth: " << *l2
                      << '\n';
    if (!ff.out.empty()) {
        json j = model_to_json(model);
        j["loss_l1"] = optional_json(l1);
        j["loss_l2"] = optional_json(l2);
        write_text(ff.out, j.dump(2) + "\n");
    }
    return 0;
}

// ---------------------------------------------------------------- scan

struct ScanFlags {
    int block_size = 20;
    int stride = 1;
    double sigma = 1.0;
    int degree = 2;
    std::string out_dir;
};

int cmd_scan(const TrajectoryFlags& flags, const ScanFlags& sf) {
    const auto start = Clock::now();
    const Trajectory tr = flags.load();
    const fs::path dir = prepare_out_dir(sf.out_dir);
    const DesignMatrix lib = build_library(tr, {sf.degree, true});
    const BlockScan scan = block_scan(lib.values, tr.times, sf.sigma, sf.block_size, sf.stride);
    {
        std::ofstream f(dir / "scan.csv", std::ios::binary);
        write_block_scan_csv(f, scan);
    }

    Panel states{{"state", "t", "x", false, 640, 200}, {}};
    for (Eigen::Index c = 0; c < tr.states.cols(); ++c)
        states.series.push_back({"x" + std::to_string(c), to_std(tr.times), to_std(tr.states.col(c))});
    Panel lam{{"lambda_1 per block", "block start time", "lambda_1", true, 640, 200}, {}};
    Panel score{{"information score per block", "block start time", "score", false, 640, 200}, {}};
    Series sl{"lambda_1", scan.block_start_times, {}}, ss{"score", scan.block_start_times, {}};
    for (const auto& m : scan.scores) {
        sl.y.push_back(m.lambda_max);
        ss.y.push_back(information_score(m, ScoreMode::Combined, 1.0));
    }
    lam.series.push_back(sl);
    score.series.push_back(ss);
    write_text(dir / "scan.svg", line_plot_svg({states, lam, score}));

    const auto peak = std::max_element(sl.y.begin(), sl.y.end()) - sl.y.begin();
    const json summary{{"blocks", scan.scores.size()},
                       {"peak_block", peak},
                       {"peak_block_start_time", scan.block_start_times[static_cast<std::size_t>(peak)]},
                       {"peak_lambda_1", sl.y[static_cast<std::size_t>(peak)]}};
    const json config{{"input", flags.input},   {"system", flags.system}, {"params", flags.params},
                      {"ic", flags.ic},         {"t_end", flags.t_end},   {"dt", optional_json(flags.dt)},
                      {"noise", flags.noise},   {"block_size", sf.block_size}, {"stride", sf.stride},
                      {"sigma", sf.sigma},      {"degree", sf.degree}};
    write_manifest(dir, "scan", config, static_cast<unsigned long long>(flags.seed), start, {{"summary", summary}});
    std::cout << summary.dump() << '\n';
    return 0;
}

// ---------------------------------------------------------------- entropy

struct EntropyFlags {
    std::string input;
    int column = 0;
    std::vector<double> values;
    int m = 2;
    double r = 0.2;
    bool absolute_r = false;
};

int cmd_entropy(const EntropyFlags& ef) {
    Eigen::VectorXd series;
    if (!ef.input.empty()) {
        std::ifstream in(ef.input);
        if (!in) throw ConfigError("cannot open " + ef.input);
        const Trajectory tr = read_trajectory_csv(in);
        if (ef.column < 0 || ef.column >= tr.states.cols()) throw ConfigError("--column out of range");
        series = tr.states.col(ef.column);
    } else if (!ef.values.empty()) {
        series = to_vector(ef.values);
    } else {
        throw ConfigError("give --input or --values");
    }
    const EntropyConfig cfg{ef.m, ef.r, ef.absolute_r};
    const auto s = sampen(series, cfg);
    std::cout << json{{"n", series.size()},
                      {"m", ef.m},
                      {"r", entropy_tolerance(series, cfg)},
                      {"apen", apen(series, cfg)},
                      {"sampen", s.defined ? json(s.value) : json(nullptr)},
                      {"sampen_defined", s.defined}}
                     .dump()
              << '\n';
    return 0;
}

// ---------------------------------------------------------------- experiment commands

struct ExperimentFlags {
    std::string config;
    std::string out_dir;
    std::optional<long long> seed;

    void add_to(CLI::App* app) {
        app->add_option("--config", config, "JSON config file (defaults are used for absent keys)");
        app->add_option("--out-dir", out_dir, "Output directory")->required();
        app->add_option("--seed", seed, "Overrides the config seed");
    }

    template <class T>
    T seed_or(ConfigReader& cfg, T fallback) const {
        T s = cfg.get("seed", fallback);
        if (seed) {
            s = static_cast<T>(*seed);
            cfg.set_echo("seed", s);
        }
        return s;
    }
};

int cmd_grid(const ExperimentFlags& ef) {
    const auto start = Clock::now();
    ConfigReader cfg = load_config(ef.config);
    GridSpec g;
    g.system = read_system(cfg);
    g.x_range = {cfg.get("x_min", -10.0), cfg.get("x_max", 10.0), cfg.get("x_count", 21)};
    g.y_range = {cfg.get("y_min", -10.0), cfg.get("y_max", 10.0), cfg.get("y_count", 21)};
    g.z_value = cfg.get("z", g.z_value);
    g.train_length = cfg.get("train_length", g.train_length);
    g.dt = cfg.get("dt", g.dt);
    g.noise_level = cfg.get("noise", g.noise_level);
    g.extreme_window = cfg.get("extreme_window", g.extreme_window);
    g.small_tol = cfg.get("small_tol", g.small_tol);
    g.large_tol = cfg.get("large_tol", g.large_tol);
    g.score_weight = cfg.get("score_weight", g.score_weight);
    g.seed = ef.seed_or(cfg, g.seed);
    const FitConfig fit = read_fit(cfg);
    const LibraryConfig lib = read_library(cfg);
    cfg.finish();
    g.validate();
    const fs::path dir = prepare_out_dir(ef.out_dir);

    const GridResult r = run_grid(g, fit, lib);
    HeatmapOptions o;
    o.x_min = g.x_range.min;
    o.x_max = g.x_range.max;
    o.y_min = g.y_range.min;
    o.y_max = g.y_range.max;
    const std::vector<std::tuple<std::string, const Eigen::MatrixXd*, std::string, bool>> maps{
        {"grid_loss", &r.loss, "L2 coefficient loss", true},
        {"grid_extremes", &r.extremes, "extreme derivative count", false},
        {"grid_score", &r.info_score, "information score", false},
    };
    for (const auto& [name, values, title, log_scale] : maps) {
        write_matrix_csv(dir / (name + ".csv"), *values, g.x_range, g.y_range);
        o.title = title;
        o.log_scale = log_scale;
        write_text(dir / (name + ".svg"), heatmap_svg(*values, o));
    }
    json tagged = json::array();
    for (int i = 0; i < g.y_range.count; ++i)
        for (int j = 0; j < g.x_range.count; ++j)
            if (r.cell(i, j) != CellStatus::Ok)
                tagged.push_back({{"x", g.x_range.at(j)},
                                  {"y", g.y_range.at(i)},
                                  {"status", r.cell(i, j) == CellStatus::Diverged ? "diverged" : "degenerate"}});
    write_manifest(dir, "grid", cfg.echo(), static_cast<unsigned long long>(g.seed), start, {{"tagged_cells", tagged}});
    std::cout << json{{"cells", g.x_range.count * g.y_range.count}, {"tagged_cells", tagged.size()}}.dump() << '\n';
    return 0;
}

int cmd_stability(const ExperimentFlags& ef) {
    const auto start = Clock::now();
    ConfigReader cfg = load_config(ef.config);
    StabilityConfig s;
    s.system = read_system(cfg);
    s.n_ics = cfg.get("n_ics", s.n_ics);
    s.window_long = cfg.get("window_long", s.window_long);
    s.window_short = cfg.get("window_short", s.window_short);
    s.dt = cfg.get("dt", s.dt);
    s.noise_level = cfg.get("noise", s.noise_level);
    s.box_lo = to_vector(cfg.get("box_lo", to_std(s.box_lo)));
    s.box_hi = to_vector(cfg.get("box_hi", to_std(s.box_hi)));
    s.score_weight = cfg.get("score_weight", s.score_weight);
    s.seed = ef.seed_or(cfg, s.seed);
    const FitConfig fit = read_fit(cfg);
    const LibraryConfig lib = read_library(cfg);
    cfg.finish();
    const fs::path dir = prepare_out_dir(ef.out_dir);

    const StabilityResult r = window_stability(s, fit, lib);
    std::ostringstream csv;
    csv << std::setprecision(17);
    for (Eigen::Index d = 0; d < s.box_lo.size(); ++d) csv << "ic" << d << ',';
    csv << "score_long,loss_long,score_short,loss_short\n";
    Series lg{"window " + std::to_string(s.window_long), {}, {}}, sh{"window " + std::to_string(s.window_short), {}, {}};
    lg.markers = sh.markers = true;
    for (const auto& p : r.points) {
        for (Eigen::Index d = 0; d < p.initial_condition.size(); ++d) csv << p.initial_condition[d] << ',';
        csv << p.score_long << ',' << p.loss_long << ',' << p.score_short << ',' << p.loss_short << '\n';
        lg.x.push_back(p.score_long);
        lg.y.push_back(p.loss_long);
        sh.x.push_back(p.score_short);
        sh.y.push_back(p.loss_short);
    }
    write_text(dir / "stability.csv", csv.str());
    write_text(dir / "stability.svg",
               line_plot_svg({{{"long window", "information score", "L1 loss", true, 640, 240}, {lg}},
                              {{"short window", "information score", "L1 loss", true, 640, 240}, {sh}}}));
    const json summary{{"spearman_long", optional_json(r.spearman_long)},
                       {"spearman_short", optional_json(r.spearman_short)},
                       {"resampled", r.resampled}};
    write_manifest(dir, "stability", cfg.echo(), s.seed, start, {{"summary", summary}});
    std::cout << summary.dump() << '\n';
    return 0;
}

SplitKind split_from_name(const std::string& name) {
    for (auto k : {SplitKind::UpToFirstOsc, SplitKind::InclFirstOsc, SplitKind::RandomSubset})
        if (split_name(k) == name) return k;
    throw ConfigError("unknown split '" + name + "'");
}

int cmd_noise(const ExperimentFlags& ef) {
    const auto start = Clock::now();
    ConfigReader cfg = load_config(ef.config);
    NoiseSweepConfig n;
    n.system = read_system(cfg);
    n.x0 = to_vector(cfg.get("x0", to_std(n.x0)));
    n.t_end = cfg.get("t_end", n.t_end);
    n.dt = cfg.get("dt", n.dt);
    n.noise_levels = cfg.get("levels", n.noise_levels);
    n.n_seeds = cfg.get("n_seeds", n.n_seeds);
    n.outlier_factor = cfg.get("outlier_factor", n.outlier_factor);
    n.seed = ef.seed_or(cfg, n.seed);
    std::vector<std::string> all_splits;
    for (auto k : {SplitKind::UpToFirstOsc, SplitKind::InclFirstOsc, SplitKind::RandomSubset})
        all_splits.push_back(split_name(k));
    const auto splits = cfg.get("splits", all_splits);
    const FitConfig fit = read_fit(cfg);
    const LibraryConfig lib = read_library(cfg);
    cfg.finish();
    std::vector<SplitKind> kinds;
    for (const auto& s : splits) kinds.push_back(split_from_name(s));
    const fs::path dir = prepare_out_dir(ef.out_dir);

    std::ostringstream runs, summary_csv;
    runs << std::setprecision(17) << "split,level,seed_index,loss,outlier\n";
    summary_csv << std::setprecision(17) << "split,level,mean,variance,outlier_fraction\n";
    Panel mean_panel{{"mean L1 loss (outliers excluded)", "noise level", "L1 loss", true, 640, 240}, {}};
    Panel out_panel{{"outlier fraction", "noise level", "fraction", false, 640, 240}, {}};
    json summary = json::object();
    for (auto kind : kinds) {
        const auto stats = noise_sweep(n, kind, fit, lib);
        Series sm{split_name(kind), {}, {}}, so{split_name(kind), {}, {}};
        for (const auto& st : stats) {
            for (std::size_t i = 0; i < st.losses.size(); ++i)
                runs << split_name(kind) << ',' << st.level << ',' << i << ',' << st.losses[i] << ','
                     << (st.outlier[i] ? 1 : 0) << '\n';
            summary_csv << split_name(kind) << ',' << st.level << ',' << st.mean << ',' << st.variance << ','
                        << st.outlier_fraction << '\n';
            sm.x.push_back(st.level);
            sm.y.push_back(st.mean);
            so.x.push_back(st.level);
            so.y.push_back(st.outlier_fraction);
            summary[split_name(kind)].push_back(
                {{"level", st.level}, {"mean", st.mean}, {"outlier_fraction", st.outlier_fraction}});
        }
        mean_panel.series.push_back(sm);
        out_panel.series.push_back(so);
    }
    write_text(dir / "noise_runs.csv", runs.str());
    write_text(dir / "noise_summary.csv", summary_csv.str());
    write_text(dir / "noise.svg", line_plot_svg({mean_panel, out_panel}));
    write_manifest(dir, "noise", cfg.echo(), n.seed, start, {{"summary", summary}});
    std::cout << summary.dump() << '\n';
    return 0;
}

int cmd_bag(const ExperimentFlags& ef) {
    const auto start = Clock::now();
    ConfigReader cfg = load_config(ef.config);
    const SystemSpec sys = read_system(cfg);
    const auto x0 = to_vector(cfg.get("x0", std::vector<double>{-8.0, 7.0, 27.0}));
    const int window = cfg.get("window", 625);
    const double dt = cfg.get("dt", default_dt(sys));
    const double noise = cfg.get("noise", 0.0);
    const double sigma = cfg.get("sigma", 1.0);
    const int n_boot = cfg.get("n_boot", 50);
    const double cut = cfg.get("inclusion_cut", 0.6);
    const auto seed = ef.seed_or(cfg, 1ULL);
    const FitConfig fit = read_fit(cfg);
    const LibraryConfig lib_cfg = read_library(cfg);
    cfg.finish();
    if (window < 3) throw ConfigError("window must be at least 3");
    const fs::path dir = prepare_out_dir(ef.out_dir);

    Trajectory tr = integrate(sys, x0, (window - 1) * dt, dt);
    if (noise > 0.0) tr = add_noise(tr, noise, static_cast<long long>(derive_seed(seed, 0)));
    const DesignMatrix lib = build_library(tr, lib_cfg);
    const BaggingReport rep = bagging_spectrum_study(lib.values, sigma, n_boot, derive_seed(seed, 1));
    EnsembleModel ens = ensemble_fit(lib.values, central_diff(tr).values, n_boot, derive_seed(seed, 2), fit, cut);
    ens.aggregate.terms = lib.terms;

    std::ostringstream csv;
    csv << std::setprecision(17) << "member,d_eff,kappa,leading_angle";
    const Eigen::Index q = lib.values.cols();
    for (Eigen::Index k = 0; k < q; ++k) csv << ",lambda_" << k + 1;
    csv << '\n';
    Panel spec_panel{{"FIM spectra", "eigenvalue index", "eigenvalue", true, 640, 240}, {}};
    for (std::size_t b = 0; b < rep.member_eigenvalues.size(); ++b) {
        csv << b << ',' << rep.member_effective_dim[b] << ',' << rep.member_condition[b] << ','
            << (b < rep.leading_angles.size() ? rep.leading_angles[b] : std::nan(""));
        for (Eigen::Index k = 0; k < q; ++k) csv << ',' << rep.member_eigenvalues[b][k];
        csv << '\n';
    }
    Series mean_s{"mean FIM", {}, {}};
    for (Eigen::Index k = 0; k < q; ++k) {
        mean_s.x.push_back(static_cast<double>(k + 1));
        mean_s.y.push_back(rep.mean_spectrum.eigenvalues[k]);
    }
    if (!rep.member_eigenvalues.empty()) {
        Series first{"member 0", mean_s.x, to_std(rep.member_eigenvalues.front())};
        spec_panel.series.push_back(first);
    }
    spec_panel.series.push_back(mean_s);
    Series deff{"member d_eff", {}, rep.member_effective_dim, true};
    for (std::size_t b = 0; b < rep.member_effective_dim.size(); ++b) deff.x.push_back(static_cast<double>(b));
    write_text(dir / "bag_members.csv", csv.str());
    write_text(dir / "bag.svg",
               line_plot_svg({spec_panel, {{"member effective dimension", "member", "d_eff", false, 640, 240}, {deff}}}));

    json model = model_to_json(ens.aggregate);
    model["inclusion_probability"] = json::array();
    for (Eigen::Index e = 0; e < ens.inclusion_probability.cols(); ++e)
        model["inclusion_probability"].push_back(to_std(ens.inclusion_probability.col(e)));
    write_text(dir / "ensemble_model.json", model.dump(2) + "\n");

    const json report{{"mean_fim_effective_dim", rep.mean_fim_effective_dim},
                      {"mean_member_effective_dim", rep.mean_member_effective_dim},
                      {"effective_dim_check", rep.mean_fim_effective_dim >= rep.mean_member_effective_dim - 1e-9},
                      {"mean_fim_condition", rep.mean_fim_condition},
                      {"median_member_condition", rep.median_member_condition},
                      {"aggregate_loss_l2", optional_json(truth_loss(sys, ens.aggregate, LossNorm::L2))}};
    write_text(dir / "bag_report.json", report.dump(2) + "\n");
    write_manifest(dir, "bag", cfg.echo(), seed, start, {{"summary", report}});
    std::cout << report.dump() << '\n';
    return 0;
}

ScoreMode score_mode_from_name(const std::string& s) {
    if (s == "lambda_max") return ScoreMode::LambdaMax;
    if (s == "skew") return ScoreMode::Skew;
    if (s == "combined") return ScoreMode::Combined;
    throw ConfigError("unknown metric '" + s + "' (lambda_max | skew | combined)");
}

std::string stop_name(StopReason r) {
    switch (r) {
        case StopReason::Budget:
            return "budget";
        case StopReason::Quality:
            return "quality";
        case StopReason::Diverged:
            return "diverged";
    }
    return "?";
}

int cmd_sample(const ExperimentFlags& ef) {
    const auto start = Clock::now();
    ConfigReader cfg = load_config(ef.config);
    const SystemSpec sys = read_system(cfg);
    const auto x0 = to_vector(cfg.get("x0", std::vector<double>{1.0, 3.0, 5.0}));
    SamplingConfig s;
    s.dt_base = cfg.get("dt_base", s.dt_base);
    s.beta = cfg.get("beta", s.beta);
    s.gamma_up = cfg.get_extended("gamma_up", s.gamma_up);
    s.gamma_down = cfg.get("gamma_down", s.gamma_down);
    s.n_min = cfg.get("n_min", s.n_min);
    s.n_max = cfg.get("n_max", s.n_max);
    s.metric_mode = score_mode_from_name(cfg.get<std::string>("metric", "lambda_max"));
    s.metric_weight = cfg.get("metric_weight", s.metric_weight);
    s.quality_window = cfg.get("quality_window", s.quality_window);
    s.quality_tol = cfg.get("quality_tol", s.quality_tol);
    s.noise_level = cfg.get("noise", s.noise_level);
    s.seed = ef.seed_or(cfg, s.seed);
    const double sigma = cfg.get("sigma", 0.0);
    const FitConfig fit = read_fit(cfg);
    s.library = read_library(cfg);
    cfg.finish();
    s.validate();
    const fs::path dir = prepare_out_dir(ef.out_dir);

    const AdaptiveResult r = adaptive_sample(sys, x0, s, fit, sigma);
    {
        std::ofstream f(dir / "sampling_trace.csv", std::ios::binary);
        write_sampling_trace_csv(f, r.trace);
    }
    Panel states{{"dense trajectory and samples", "t", "x", false, 640, 240}, {}};
    for (Eigen::Index c = 0; c < r.dense.states.cols(); ++c)
        states.series.push_back({"x" + std::to_string(c), to_std(r.dense.times), to_std(r.dense.states.col(c))});
    Series picked{"sampled x0", r.trace.sampled_times, {}, true};
    for (auto idx : r.trace.sampled_indices) picked.y.push_back(r.dense.states(idx, 0));
    states.series.push_back(picked);
    Series metric{"metric", {r.trace.sampled_times.begin() + 1, r.trace.sampled_times.end()}, r.trace.metric_history};
    metric.x.resize(std::min(metric.x.size(), metric.y.size()));
    write_text(dir / "sampling.svg",
               line_plot_svg({states, {{"information metric", "t", "metric", true, 640, 240}, {metric}}}));
    json model = model_to_json(r.model);
    write_text(dir / "model.json", model.dump(2) + "\n");

    std::size_t fine = 0;
    for (auto m : r.trace.modes) fine += m == SampleMode::Fine;
    const json summary{{"samples", r.trace.sampled_indices.size()},
                       {"fine_steps", fine},
                       {"final_time", r.trace.sampled_times.back()},
                       {"stop_reason", stop_name(r.trace.stop_reason)},
                       {"loss_l1", optional_json(truth_loss(sys, r.model, LossNorm::L1))}};
    write_manifest(dir, "sample", cfg.echo(), static_cast<unsigned long long>(s.seed), start, {{"summary", summary}});
    std::cout << summary.dump() << '\n';
    return r.trace.stop_reason == StopReason::Diverged ? 3 : 0;
}

FimMetric fim_metric_from_name(const std::string& s) {
    static const std::map<std::string, FimMetric> names{
        {"lambda_min", FimMetric::LambdaMin},          {"lambda_max", FimMetric::LambdaMax},
        {"trace", FimMetric::Trace},                   {"log_det", FimMetric::LogDet},
        {"effective_dim", FimMetric::EffectiveDim},    {"neg_condition", FimMetric::NegCondition},
    };
    const auto it = names.find(s);
    if (it == names.end()) throw ConfigError("unknown fim_metric '" + s + "'");
    return it->second;
}

int cmd_search(const ExperimentFlags& ef) {
    const auto start = Clock::now();
    ConfigReader cfg = load_config(ef.config);
    const SystemSpec sys = read_system(cfg);
    Domain domain{to_vector(cfg.get("domain_lo", std::vector<double>{-10.0, -10.0, 9.0})),
                  to_vector(cfg.get("domain_hi", std::vector<double>{10.0, 10.0, 9.0}))};
    const int M = cfg.get("M", 3);
    const int N = cfg.get("N", 60);
    SearchConfig s;
    s.dt = cfg.get("dt", s.dt);
    s.noise_level = cfg.get("noise", s.noise_level);
    s.n_candidates = cfg.get("n_candidates", s.n_candidates);
    s.n_boot = cfg.get("n_boot", s.n_boot);
    s.inclusion_cut = cfg.get("inclusion_cut", s.inclusion_cut);
    s.acquisition.horizon = cfg.get("horizon", s.acquisition.horizon);
    s.acquisition.fim_metric = fim_metric_from_name(cfg.get<std::string>("fim_metric", "lambda_min"));
    s.acquisition.gp_length_scale = cfg.get("gp_length_scale", 2.0 * s.acquisition.horizon / std::max(N, 1));
    s.acquisition.gp_signal_var = cfg.get("gp_signal_var", s.acquisition.gp_signal_var);
    s.acquisition.gp_noise_var = cfg.get("gp_noise_var", s.acquisition.gp_noise_var);
    for (const auto& c : cfg.get("candidates", std::vector<std::vector<double>>{}))
        s.acquisition.candidate_grid.push_back(to_vector(c));
    const auto strategy = cfg.get<std::string>("strategy", "entropy");
    const auto seed = ef.seed_or(cfg, 0ULL);
    s.fit = read_fit(cfg);
    s.library = read_library(cfg);
    cfg.finish();
    if (strategy != "entropy" && strategy != "random") throw ConfigError("strategy must be entropy or random");
    const fs::path dir = prepare_out_dir(ef.out_dir);

    const SearchResult r = strategy == "entropy" ? entropy_search_sindy(sys, domain, M, N, s, seed)
                                                 : random_search_sindy(sys, domain, M, N, s, seed);
    json rounds = json::array();
    Series lam{"aggregate lambda_min", {}, {}};
    bool monotone = true;
    for (std::size_t k = 0; k < r.rounds.size(); ++k) {
        const auto& rd = r.rounds[k];
        rounds.push_back({{"round", k},
                          {"initial_condition", to_std(rd.initial_condition)},
                          {"gain", rd.gain},
                          {"aggregate_lambda_min", rd.aggregate_lambda_min},
                          {"selected_times", rd.selected_times}});
        lam.x.push_back(static_cast<double>(k));
        lam.y.push_back(rd.aggregate_lambda_min);
        if (k > 0 && rd.aggregate_lambda_min < r.rounds[k - 1].aggregate_lambda_min) monotone = false;
    }
    const auto loss = truth_loss(sys, r.model.aggregate, LossNorm::L2);
    const json report{{"strategy", strategy},
                      {"rounds", rounds},
                      {"lambda_min_nondecreasing", monotone},
                      {"aggregate_loss_l2", optional_json(loss)},
                      {"warnings", r.warnings}};
    write_text(dir / "rounds.json", report.dump(2) + "\n");
    write_text(dir / "model.json", model_to_json(r.model.aggregate).dump(2) + "\n");
    write_text(dir / "search.svg",
               line_plot_svg({{{"aggregate lambda_min per round", "round", "lambda_min", true, 640, 240}, {lam}}}));
    write_manifest(dir, "search", cfg.echo(), seed, start,
                   {{"summary", {{"lambda_min_nondecreasing", monotone}, {"aggregate_loss_l2", optional_json(loss)}}}});
    std::cout << json{{"rounds", r.rounds.size()}, {"lambda_min_nondecreasing", monotone},
                      {"aggregate_loss_l2", optional_json(loss)}}
                     .dump()
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fisher-information diagnostics and sampling strategies for sparse system identification"};
    app.set_version_flag("--version", FIMSINDY_VERSION);
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = all logical cores)")->capture_default_str();

    TrajectoryFlags sim_flags, fit_flags, scan_flags;
    std::string sim_out;
    auto* sim = app.add_subcommand("simulate", "Integrate a system and write its trajectory CSV");
    sim_flags.add_to(sim, false);
    sim->get_option("--ic")->required();
    sim->add_option("--out", sim_out, "Trajectory CSV to write")->required();

    FitFlags ff;
    auto* fit = app.add_subcommand("fit", "Fit a sparse model to a trajectory CSV or a fresh simulation");
    fit_flags.add_to(fit, true);
    fit->add_option("--degree", ff.degree, "Polynomial library degree")->capture_default_str();
    fit->add_flag("--no-constant", ff.no_constant, "Drop the constant term");
    fit->add_option("--threshold", ff.fit.threshold, "STRidge threshold")->capture_default_str();
    fit->add_option("--alpha", ff.fit.alpha, "Ridge penalty")->capture_default_str();
    fit->add_option("--max-iter", ff.fit.max_iter, "STRidge iterations")->capture_default_str();
    fit->add_option("--out", ff.out, "Model JSON to write");

    ScanFlags sf;
    auto* scan = app.add_subcommand("scan", "Sliding-block FIM metrics along one trajectory");
    scan_flags.add_to(scan, true);
    scan->add_option("--block-size", sf.block_size, "Rows per block")->capture_default_str();
    scan->add_option("--stride", sf.stride, "Rows between block starts")->capture_default_str();
    scan->add_option("--sigma", sf.sigma, "Noise scale of the FIM")->capture_default_str();
    scan->add_option("--degree", sf.degree, "Polynomial library degree")->capture_default_str();
    scan->add_option("--out-dir", sf.out_dir, "Output directory")->required();

    EntropyFlags enf;
    auto* ent = app.add_subcommand("entropy", "Approximate and sample entropy of a series");
    ent->add_option("--input", enf.input, "Trajectory CSV");
    ent->add_option("--column", enf.column, "State column of --input")->capture_default_str();
    ent->add_option("--values", enf.values, "Series given inline, comma separated")->delimiter(',');
    ent->add_option("--m", enf.m, "Template length")->capture_default_str();
    ent->add_option("--r", enf.r, "Tolerance (multiple of the series std)")->capture_default_str();
    ent->add_flag("--absolute-r", enf.absolute_r, "Use --r as an absolute tolerance");

    std::map<std::string, ExperimentFlags> exp_flags;
    const std::vector<std::pair<std::string, std::string>> experiments{
        {"grid", "Initial-condition landscape over an x-y grid"},
        {"stability", "Score/loss correlation for long and short windows"},
        {"noise", "Loss versus noise level for three training-set splits"},
        {"bag", "Bootstrap FIM spectra and ensemble fit"},
        {"sample", "Adaptive predictive sampling along one trajectory"},
        {"search", "Entropy-search identification over several trajectories"},
    };
    std::map<std::string, CLI::App*> exp_apps;
    for (const auto& [name, help] : experiments) {
        exp_apps[name] = app.add_subcommand(name, help);
        exp_flags[name].add_to(exp_apps[name]);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        if (code == 0) return 0;
        const auto chosen = app.get_subcommands();
        std::cerr << '\n' << (chosen.empty() ? app.help() : chosen.front()->help());
        return 2;
    }
    set_thread_count(threads);

    try {
        if (sim->parsed()) return cmd_simulate(sim_flags, sim_out);
        if (fit->parsed()) return cmd_fit(fit_flags, fit->count("--system") > 0, ff);
        if (scan->parsed()) return cmd_scan(scan_flags, sf);
        if (ent->parsed()) return cmd_entropy(enf);
        if (exp_apps["grid"]->parsed()) return cmd_grid(exp_flags["grid"]);
        if (exp_apps["stability"]->parsed()) return cmd_stability(exp_flags["stability"]);
        if (exp_apps["noise"]->parsed()) return cmd_noise(exp_flags["noise"]);
        if (exp_apps["bag"]->parsed()) return cmd_bag(exp_flags["bag"]);
        if (exp_apps["sample"]->parsed()) return cmd_sample(exp_flags["sample"]);
        if (exp_apps["search"]->parsed()) return cmd_search(exp_flags["search"]);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const IntegrationDiverged& e) {
        std::cerr << "error: " << e.what() << " (last finite time " << e.last_valid_time << ")\n";
        return 3;
    } catch (const SingularSystemError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const DetectionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
