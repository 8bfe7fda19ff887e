#include "fimsindy/experiments.hpp"

#include "fimsindy/errors.hpp"
#include "fimsindy/parallel.hpp"
#include "fimsindy/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace fimsindy {

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ArgumentError("spearman: length mismatch");
    if (a.size() < 3) return std::nullopt;
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

double median(std::vector<double> v) {
    if (v.empty()) throw ArgumentError("median of empty set");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double AxisRange::at(int i) const {
    return count == 1 ? min : min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
}

void GridSpec::validate() const {
    system.validate();
    if (system.dim() != 3) throw ArgumentError("grid: needs a three-dimensional system");
    if (x_range.count < 2 || y_range.count < 2) throw ArgumentError("grid: axis counts must be at least 2");
    if (train_length < 3) throw ArgumentError("grid: train_length must be at least 3");
    if (!(dt > 0.0)) throw ArgumentError("grid: dt must be positive");
    if (!(noise_level >= 0.0)) throw ArgumentError("grid: noise_level must be nonnegative");
    if (extreme_window < 3) throw ArgumentError("grid: extreme_window must be at least 3");
    if (!(small_tol > 0.0 && small_tol < large_tol)) throw ArgumentError("grid: need 0 < small_tol < large_tol");
}

GridResult run_grid(const GridSpec& spec, const FitConfig& fit_cfg, const LibraryConfig& lib_cfg) {
    spec.validate();
    const int rows = spec.y_range.count, cols = spec.x_range.count;
    GridResult res;
    res.meta = spec;
    res.loss = Eigen::MatrixXd::Constant(rows, cols, std::nan(""));
    res.extremes = Eigen::MatrixXd::Constant(rows, cols, std::nan(""));
    res.info_score = Eigen::MatrixXd::Constant(rows, cols, std::nan(""));
    res.status.assign(static_cast<std::size_t>(rows * cols), CellStatus::Ok);
    const auto terms = polynomial_terms(3, lib_cfg);
    const Eigen::MatrixXd truth = ground_truth(spec.system, terms);
    const int sim_len = std::max(spec.train_length, spec.extreme_window);

    parallel_for(static_cast<std::size_t>(rows * cols), [&](std::size_t cell) {
        const int r = static_cast<int>(cell) / cols, c = static_cast<int>(cell) % cols;
        Eigen::Vector3d ic(spec.x_range.at(c), spec.y_range.at(r), spec.z_value);
        Trajectory traj;
        try {
            traj = integrate(spec.system, ic, (sim_len - 1) * spec.dt, spec.dt);
        } catch (const IntegrationDiverged&) {
            res.status[cell] = CellStatus::Diverged;
            return;
        }
        if (spec.noise_level > 0.0)
            traj = add_noise(traj, spec.noise_level, static_cast<long long>(derive_seed(spec.seed, cell)));
        const Eigen::VectorXd sd = column_std(traj.states.topRows(spec.train_length));
        if ((sd.array() == 0.0).any()) res.status[cell] = CellStatus::Degenerate;

        const Eigen::MatrixXd X = traj.states.topRows(spec.train_length);
        const Eigen::MatrixXd A = evaluate_terms(terms, X);
        const Eigen::MatrixXd D = central_diff(X, spec.dt);
        const SparseModel model = fit_system(A, D, fit_cfg);
        res.loss(r, c) = coefficient_loss(model, truth, LossNorm::L2);

        const Eigen::MatrixXd De = central_diff(traj.states.topRows(spec.extreme_window), spec.dt);
        res.extremes(r, c) =
            static_cast<double>(count_extremes(De, 0, De.rows(), spec.small_tol, spec.large_tol));
        res.info_score(r, c) =
            information_score(metrics(spectrum(compute_fim(A, 1.0))), ScoreMode::Combined, spec.score_weight);
    });
    return res;
}

StabilityResult window_stability(const StabilityConfig& cfg, const FitConfig& fit_cfg, const LibraryConfig& lib_cfg) {
    cfg.system.validate();
    if (cfg.n_ics < 1) throw ArgumentError("window_stability: n_ics must be positive");
    if (cfg.window_short < 3 || cfg.window_short > cfg.window_long)
        throw ArgumentError("window_stability: need 3 <= window_short <= window_long");
    if (cfg.box_lo.size() != cfg.system.dim() || cfg.box_hi.size() != cfg.system.dim())
        throw ArgumentError("window_stability: box dimension does not match system");

    StabilityResult res;
    const auto terms = polynomial_terms(cfg.system.dim(), lib_cfg);
    const Eigen::MatrixXd truth = ground_truth(cfg.system, terms);

    // draw ICs serially so the set does not depend on the thread count
    std::mt19937_64 rng(cfg.seed);
    std::vector<Trajectory> trajs;
    std::vector<Eigen::VectorXd> ics;
    while (static_cast<int>(trajs.size()) < cfg.n_ics) {
        Eigen::VectorXd ic(cfg.system.dim());
        for (Eigen::Index k = 0; k < ic.size(); ++k) {
            std::uniform_real_distribution<double> u(cfg.box_lo[k], cfg.box_hi[k]);
            ic[k] = u(rng);
        }
        try {
            trajs.push_back(integrate(cfg.system, ic, (cfg.window_long - 1) * cfg.dt, cfg.dt));
            ics.push_back(ic);
        } catch (const IntegrationDiverged&) {
            ++res.resampled;
        }
    }

    res.points.resize(static_cast<std::size_t>(cfg.n_ics));
    parallel_for(res.points.size(), [&](std::size_t k) {
        StabilityPoint& p = res.points[k];
        p.initial_condition = ics[k];
        auto evaluate = [&](int window, unsigned long long stream, double& score, double& loss) {
            Trajectory w = trajs[k].slice(0, window);
            w = add_noise(w, cfg.noise_level, static_cast<long long>(derive_seed(derive_seed(cfg.seed, k), stream)));
            const Eigen::MatrixXd A = evaluate_terms(terms, w.states);
            const SparseModel model = fit_system(A, central_diff(w.states, cfg.dt), fit_cfg);
            loss = coefficient_loss(model, truth, LossNorm::L1);
            score = information_score(metrics(spectrum(compute_fim(A, 1.0))), ScoreMode::Combined, cfg.score_weight);
        };
        evaluate(cfg.window_long, 0, p.score_long, p.loss_long);
        evaluate(cfg.window_short, 1, p.score_short, p.loss_short);
    });

    std::vector<double> sl, ll, ss, ls;
    for (const auto& p : res.points) {
        sl.push_back(p.score_long);
        ll.push_back(p.loss_long);
        ss.push_back(p.score_short);
        ls.push_back(p.loss_short);
    }
    res.spearman_long = spearman(sl, ll);
    res.spearman_short = spearman(ss, ls);
    return res;
}

std::string split_name(SplitKind kind) {
    switch (kind) {
        case SplitKind::UpToFirstOsc:
            return "up_to_first_osc";
        case SplitKind::InclFirstOsc:
            return "incl_first_osc";
        case SplitKind::RandomSubset:
            return "random_subset";
    }
    return "";
}

std::vector<NoiseLevelStats> noise_sweep(const NoiseSweepConfig& cfg, SplitKind split, const FitConfig& fit_cfg,
                                         const LibraryConfig& lib_cfg) {
    if (cfg.n_seeds < 1) throw ArgumentError("noise_sweep: n_seeds must be positive");
    for (double l : cfg.noise_levels)
        if (!(l >= 0.0)) throw ArgumentError("noise_sweep: noise levels must be nonnegative");
    const Trajectory clean = integrate(cfg.system, cfg.x0, cfg.t_end, cfg.dt);
    const OscillationSplit osc = first_oscillation_split(clean);
    const Eigen::Index tail = clean.size() - osc.end - 1;
    if (split == SplitKind::RandomSubset && tail < osc.end + 1)
        throw ArgumentError("noise_sweep: trajectory too short for a random subset after the first oscillation");
    const auto terms = polynomial_terms(cfg.system.dim(), lib_cfg);
    const Eigen::MatrixXd truth = ground_truth(cfg.system, terms);

    std::vector<NoiseLevelStats> out;
    for (std::size_t li = 0; li < cfg.noise_levels.size(); ++li) {
        NoiseLevelStats st;
        st.level = cfg.noise_levels[li];
        st.losses.resize(static_cast<std::size_t>(cfg.n_seeds));
        parallel_for(st.losses.size(), [&](std::size_t s) {
            const unsigned long long run_seed = derive_seed(cfg.seed, li * 100003ULL + s);
            const Trajectory noisy = add_noise(clean, st.level, static_cast<long long>(run_seed));
            const Eigen::MatrixXd A = evaluate_terms(terms, noisy.states);
            const Eigen::MatrixXd D = central_diff(noisy.states, cfg.dt);
            std::vector<Eigen::Index> rows;
            if (split == SplitKind::UpToFirstOsc) {
                for (Eigen::Index i = 0; i <= osc.first_extremum; ++i) rows.push_back(i);
            } else if (split == SplitKind::InclFirstOsc) {
                for (Eigen::Index i = 0; i <= osc.end; ++i) rows.push_back(i);
            } else {
                std::vector<Eigen::Index> pool(static_cast<std::size_t>(tail));
                std::iota(pool.begin(), pool.end(), osc.end + 1);
                std::mt19937_64 rng(derive_seed(run_seed, 1));
                std::shuffle(pool.begin(), pool.end(), rng);
                rows.assign(pool.begin(), pool.begin() + (osc.end + 1));
                std::sort(rows.begin(), rows.end());
            }
            const SparseModel model = fit_system(A(rows, Eigen::all), D(rows, Eigen::all), fit_cfg);
            st.losses[s] = coefficient_loss(model, truth, LossNorm::L1);
        });
        const double med = median(st.losses);
        st.outlier.resize(st.losses.size());
        double sum = 0.0, sq = 0.0;
        int kept = 0;
        for (std::size_t s = 0; s < st.losses.size(); ++s) {
            st.outlier[s] = st.losses[s] > cfg.outlier_factor * med;
            if (st.outlier[s]) continue;
            sum += st.losses[s];
            sq += st.losses[s] * st.losses[s];
            ++kept;
        }
        st.outlier_fraction = 1.0 - static_cast<double>(kept) / static_cast<double>(st.losses.size());
        st.mean = kept ? sum / kept : std::nan("");
        st.variance = kept ? sq / kept - st.mean * st.mean : std::nan("");
        out.push_back(std::move(st));
    }
    return out;
}

}  // namespace fimsindy
