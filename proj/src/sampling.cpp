#include "fimsindy/sampling.hpp"

#include "fimsindy/errors.hpp"
#include "fimsindy/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

namespace fimsindy {

namespace {

// Learned-model predictions beyond this magnitude are treated as divergent.
constexpr double kPredictionBound = 1e6;

Eigen::Index coarse_stride(double beta) { return static_cast<Eigen::Index>(std::llround(beta)); }

bool same_support_and_close(const std::vector<SparseModel>& recent, double tol) {
    const SparseModel& last = recent.back();
    if (!last.active.any()) return false;
    double worst = 0.0;
    for (const auto& m : recent) {
        if (!(m.active == last.active).all()) return false;
        for (Eigen::Index i = 0; i < last.coefficients.rows(); ++i) {
            for (Eigen::Index j = 0; j < last.coefficients.cols(); ++j) {
                if (!last.active(i, j)) continue;
                const double ref = last.coefficients(i, j);
                worst = std::max(worst, std::abs(m.coefficients(i, j) - ref) / std::abs(ref));
            }
        }
    }
    return worst < tol;
}

SparseModel zero_model(Eigen::Index q, Eigen::Index n, const FitConfig& fit_cfg,
                       const std::vector<TermDescriptor>& terms) {
    SparseModel m;
    m.coefficients = Eigen::MatrixXd::Zero(q, n);
    m.active = BoolMatrix::Constant(q, n, false);
    m.threshold = fit_cfg.threshold;
    m.ridge_alpha = fit_cfg.alpha;
    m.empty_warning = true;
    m.terms = terms;
    return m;
}

Eigen::VectorXd uniform_in(const Domain& d, std::mt19937_64& rng) {
    Eigen::VectorXd x(d.lo.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        std::uniform_real_distribution<double> u(d.lo[k], d.hi[k]);
        x[k] = d.lo[k] == d.hi[k] ? d.lo[k] : u(rng);
    }
    return x;
}

}  // namespace

void SamplingConfig::validate() const {
    if (!(dt_base > 0.0)) throw ArgumentError("sampling: dt_base must be positive");
    if (!(beta > 1.0)) throw ArgumentError("sampling: beta must exceed 1");
    if (std::abs(beta - std::round(beta)) > 1e-9)
        throw ArgumentError("sampling: beta must be a whole number so samples stay on the dt_base grid");
    if (!(gamma_up > 1.0)) throw ArgumentError("sampling: gamma_up must exceed 1");
    if (!(gamma_down > 0.0 && gamma_down < 1.0)) throw ArgumentError("sampling: gamma_down must be in (0,1)");
    if (n_min < 1 || n_max < 1 || n_min > n_max) throw ArgumentError("sampling: need 1 <= n_min <= n_max");
    if (quality_window < 1) throw ArgumentError("sampling: quality_window must be positive");
    if (!(noise_level >= 0.0)) throw ArgumentError("sampling: noise_level must be nonnegative");
}

SampleMode next_mode(SampleMode mode, double metric, double previous, const SamplingConfig& cfg) {
    if (mode == SampleMode::Coarse) {
        if (std::isinf(cfg.gamma_up)) return mode;
        return metric > cfg.gamma_up * previous ? SampleMode::Fine : mode;
    }
    return metric < cfg.gamma_down * previous ? SampleMode::Coarse : mode;
}

double linear_information_metric(const InfoMetrics& m, ScoreMode mode, double weight) {
    const double s = information_score(m, mode, weight);
    return std::isinf(s) && s < 0 ? 0.0 : std::pow(10.0, s);
}

AdaptiveResult adaptive_sample(const SystemSpec& system, const Eigen::VectorXd& x0, const SamplingConfig& cfg,
                               const FitConfig& fit_cfg, double sigma, const MetricHook& hook) {
    cfg.validate();
    const double t_total = (cfg.n_max * cfg.beta + 1.0) * cfg.dt_base;
    AdaptiveResult out;
    try {
        out.dense = integrate(system, x0, t_total, cfg.dt_base);
    } catch (const IntegrationDiverged& e) {
        out.dense = integrate(system, x0, e.last_valid_time, cfg.dt_base);
    }
    out.dense = add_noise(out.dense, cfg.noise_level, cfg.seed);

    const auto terms = polynomial_terms(system.dim(), cfg.library);
    const Eigen::Index q = static_cast<Eigen::Index>(terms.size()), n = system.dim();
    SamplingTrace& tr = out.trace;
    tr.sampled_indices.push_back(0);
    tr.sampled_times.push_back(out.dense.times[0]);

    SparseModel model = zero_model(q, n, fit_cfg, terms);
    tr.initial_metric = hook ? hook(0, evaluate_terms(terms, out.dense.states.topRows(1)), model) : 0.0;
    double prev = tr.initial_metric;
    SampleMode mode = SampleMode::Coarse;
    std::vector<SparseModel> recent;
    const Eigen::Index stride = coarse_stride(cfg.beta);

    while (static_cast<int>(tr.sampled_indices.size()) < cfg.n_max) {
        const Eigen::Index k = tr.sampled_indices.back() + (mode == SampleMode::Coarse ? stride : 1);
        if (k >= out.dense.size()) {
            tr.stop_reason = StopReason::Diverged;
            break;
        }
        tr.sampled_indices.push_back(k);
        tr.sampled_times.push_back(out.dense.times[k]);
        tr.modes.push_back(mode);

        const Eigen::MatrixXd X = out.dense.states(tr.sampled_indices, Eigen::all);
        const Eigen::MatrixXd A = evaluate_terms(terms, X);
        double metric = 0.0;
        if (X.rows() >= 3) {
            const Eigen::VectorXd t = out.dense.times(tr.sampled_indices);
            const Eigen::MatrixXd D = central_diff_nonuniform(t, X);
            model = fit_system(A, D, fit_cfg);
            model.terms = terms;
            double s2 = sigma > 0.0 ? sigma * sigma : residual_variance(A, D, model.coefficients);
            s2 = std::max(s2, 1e-300);
            metric = linear_information_metric(metrics(spectrum(compute_fim(A, std::sqrt(s2)))), cfg.metric_mode,
                                               cfg.metric_weight);
            recent.push_back(model);
            if (static_cast<int>(recent.size()) > cfg.quality_window) recent.erase(recent.begin());
        }
        if (hook) metric = hook(tr.modes.size(), A, model);

        mode = next_mode(mode, metric, prev, cfg);
        prev = metric;
        tr.metric_history.push_back(metric);

        if (static_cast<int>(tr.sampled_indices.size()) >= cfg.n_min &&
            static_cast<int>(recent.size()) == cfg.quality_window && same_support_and_close(recent, cfg.quality_tol)) {
            tr.stop_reason = StopReason::Quality;
            break;
        }
    }
    out.model = model;
    return out;
}

void write_sampling_trace_csv(std::ostream& out, const SamplingTrace& trace) {
    out << "step,t,mode,metric,n_observed\n" << std::setprecision(17);
    out << 0 << ',' << trace.sampled_times[0] << ",INIT," << trace.initial_metric << ",1\n";
    for (std::size_t s = 0; s < trace.modes.size(); ++s) {
        out << s + 1 << ',' << trace.sampled_times[s + 1] << ','
            << (trace.modes[s] == SampleMode::Coarse ? "COARSE" : "FINE") << ',' << trace.metric_history[s] << ','
            << s + 2 << '\n';
    }
}

OscillationSplit first_oscillation_split(const Trajectory& traj) {
    const Eigen::VectorXd d = central_diff(traj).values.col(0);
    auto sign = [](double v) { return (v > 0.0) - (v < 0.0); };
    std::vector<Eigen::Index> crossings;
    for (Eigen::Index i = 1; i < d.size() && crossings.size() < 2; ++i) {
        if (sign(d[i]) != sign(d[i - 1])) crossings.push_back(i);
    }
    if (crossings.size() < 2) throw DetectionError("no full oscillation found in x0");
    return {crossings[0], crossings[1]};
}

double fim_metric_value(const InfoMetrics& m, FimMetric which) {
    switch (which) {
        case FimMetric::LambdaMin:
            return m.lambda_min;
        case FimMetric::LambdaMax:
            return m.lambda_max;
        case FimMetric::Trace:
            return m.trace;
        case FimMetric::LogDet:
            return m.log_det;
        case FimMetric::EffectiveDim:
            return m.effective_dim;
        case FimMetric::NegCondition:
            return -m.condition_number;
    }
    return 0.0;
}

void AcquisitionConfig::validate() const {
    if (!(horizon > 0.0)) throw ArgumentError("acquisition: horizon must be positive");
    if (!(gp_length_scale > 0.0 && gp_signal_var > 0.0 && gp_noise_var > 0.0))
        throw ArgumentError("acquisition: GP hyperparameters must be positive");
}

GpPosterior gp_posterior(const Eigen::VectorXd& train_t, const Eigen::VectorXd& train_y, const Eigen::VectorXd& query_t,
                         const AcquisitionConfig& cfg) {
    if (train_t.size() != train_y.size()) throw ArgumentError("gp_posterior: training sizes differ");
    if (!(cfg.gp_length_scale > 0.0 && cfg.gp_signal_var > 0.0 && cfg.gp_noise_var > 0.0))
        throw ArgumentError("gp_posterior: hyperparameters must be positive");
    const double l2 = 2.0 * cfg.gp_length_scale * cfg.gp_length_scale;
    auto kern = [&](double a, double b) { return cfg.gp_signal_var * std::exp(-(a - b) * (a - b) / l2); };
    GpPosterior post;
    const Eigen::Index n = train_t.size(), m = query_t.size();
    if (n == 0) {
        post.mean = Eigen::VectorXd::Zero(m);
        post.variance = Eigen::VectorXd::Constant(m, cfg.gp_signal_var);
        return post;
    }
    Eigen::MatrixXd K(n, n), Ks(m, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) K(i, j) = kern(train_t[i], train_t[j]);
    K.diagonal().array() += cfg.gp_noise_var;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j) Ks(i, j) = kern(query_t[i], train_t[j]);
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    post.mean = Ks * llt.solve(train_y);
    const Eigen::MatrixXd V = llt.matrixL().solve(Ks.transpose());
    post.variance = (cfg.gp_signal_var - V.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
    return post;
}

Eigen::Index phase1_acquisition(const Eigen::VectorXd& candidates_t, const Eigen::MatrixXd& posterior_var,
                                double noise_var) {
    if (candidates_t.size() == 0) throw ArgumentError("phase1_acquisition: no candidates");
    if (posterior_var.rows() != candidates_t.size()) throw ArgumentError("phase1_acquisition: variance rows differ");
    constexpr double kTwoPiE = 2.0 * 3.14159265358979323846 * 2.71828182845904523536;
    Eigen::Index best = 0;
    double best_h = -kInfinity;
    for (Eigen::Index i = 0; i < candidates_t.size(); ++i) {
        double h = 0.0;
        for (Eigen::Index d = 0; d < posterior_var.cols(); ++d)
            h += 0.5 * std::log(kTwoPiE * (posterior_var(i, d) + noise_var));
        if (h > best_h) {
            best_h = h;
            best = i;
        }
    }
    return best;
}

Phase2Result phase2_acquisition(const Fim& aggregate_fim, const std::vector<Eigen::VectorXd>& candidates,
                                const SparseModel& model, const AcquisitionConfig& cfg, double dt,
                                const std::vector<Eigen::Index>& sample_rows) {
    if (candidates.empty()) throw ArgumentError("phase2_acquisition: no candidates");
    cfg.validate();
    const double base = fim_metric_value(metrics(spectrum(aggregate_fim)), cfg.fim_metric);
    const RhsFn f = model_rhs(model);
    const double s2 = aggregate_fim.sigma * aggregate_fim.sigma;
    Phase2Result res;
    res.gains.assign(candidates.size(), -kInfinity);
    parallel_for(candidates.size(), [&](std::size_t c) {
        Trajectory pred;
        try {
            pred = integrate(f, candidates[c], cfg.horizon, dt);
        } catch (const IntegrationDiverged&) {
            return;
        }
        if (pred.states.cwiseAbs().maxCoeff() > kPredictionBound) return;
        Eigen::MatrixXd X = sample_rows.empty() ? pred.states : Eigen::MatrixXd(pred.states(sample_rows, Eigen::all));
        const Eigen::MatrixXd Ap = evaluate_terms(model.terms, X);
        const Eigen::MatrixXd total = aggregate_fim.matrix + Ap.transpose() * Ap / s2;
        res.gains[c] = fim_metric_value(metrics(spectrum(total)), cfg.fim_metric) - base;
    });
    double best = -kInfinity;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (res.gains[c] > best) {
            best = res.gains[c];
            res.chosen = static_cast<Eigen::Index>(c);
        }
    }
    return res;
}

std::vector<Eigen::Index> phase1_select(const Eigen::VectorXd& times, const Eigen::MatrixXd& states, int N,
                                        const AcquisitionConfig& cfg) {
    if (N < 1 || N > times.size()) throw ArgumentError("phase1_select: N must be in [1, samples]");
    std::vector<Eigen::Index> chosen;
    std::vector<bool> taken(static_cast<std::size_t>(times.size()), false);
    for (int k = 0; k < N; ++k) {
        std::vector<Eigen::Index> open;
        for (Eigen::Index i = 0; i < times.size(); ++i)
            if (!taken[static_cast<std::size_t>(i)]) open.push_back(i);
        const Eigen::VectorXd cand_t = times(open);
        const Eigen::VectorXd train_t = times(chosen);
        Eigen::MatrixXd var(cand_t.size(), states.cols());
        for (Eigen::Index d = 0; d < states.cols(); ++d) {
            const Eigen::VectorXd train_y = states(chosen, d);
            var.col(d) = gp_posterior(train_t, train_y, cand_t, cfg).variance;
        }
        const Eigen::Index pick = open[static_cast<std::size_t>(phase1_acquisition(cand_t, var, cfg.gp_noise_var))];
        chosen.push_back(pick);
        taken[static_cast<std::size_t>(pick)] = true;
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

namespace {

SearchResult run_search(const SystemSpec& system, const Domain& domain, int M, int N, const SearchConfig& cfg,
                        unsigned long long seed, bool guided) {
    if (M < 1 || N < 1) throw ArgumentError("search: M and N must be positive");
    if (domain.lo.size() != system.dim() || domain.hi.size() != system.dim())
        throw ArgumentError("search: domain dimension does not match system");
    if ((domain.hi.array() < domain.lo.array()).any()) throw ArgumentError("search: domain has hi < lo");
    cfg.acquisition.validate();

    SearchResult res;
    const auto terms = polynomial_terms(system.dim(), cfg.library);
    const auto q = static_cast<int>(terms.size());
    if (N * M < 2 * q)
        res.warnings.push_back("total budget N*M = " + std::to_string(N * M) + " is below twice the library size " +
                               std::to_string(2 * q));

    std::mt19937_64 rng(seed);
    std::vector<Eigen::MatrixXd> xs, ds;
    std::vector<Eigen::Index> last_rows;

    auto observe = [&](const Eigen::VectorXd& ic, int round) {
        Trajectory traj = integrate(system, ic, cfg.acquisition.horizon, cfg.dt);
        traj = add_noise(traj, cfg.noise_level, static_cast<long long>(derive_seed(seed, 7919 + round)));
        const Eigen::MatrixXd D = central_diff(traj.states, cfg.dt);
        last_rows = phase1_select(traj.times, traj.states, N, cfg.acquisition);
        xs.push_back(traj.states(last_rows, Eigen::all));
        ds.push_back(D(last_rows, Eigen::all));
        SearchRound r;
        r.initial_condition = ic;
        for (auto i : last_rows) r.selected_times.push_back(traj.times[i]);
        return r;
    };
    auto stacked = [](const std::vector<Eigen::MatrixXd>& parts) {
        Eigen::Index rows = 0;
        for (const auto& p : parts) rows += p.rows();
        Eigen::MatrixXd out(rows, parts.front().cols());
        Eigen::Index at = 0;
        for (const auto& p : parts) {
            out.middleRows(at, p.rows()) = p;
            at += p.rows();
        }
        return out;
    };
    auto lambda_min_now = [&] {
        return metrics(spectrum(compute_fim(evaluate_terms(terms, stacked(xs)), 1.0))).lambda_min;
    };

    res.rounds.push_back(observe(uniform_in(domain, rng), 0));
    res.rounds.back().aggregate_lambda_min = lambda_min_now();

    for (int round = 1; round < M; ++round) {
        Eigen::VectorXd next;
        double gain = 0.0;
        if (guided) {
            const Eigen::MatrixXd X = stacked(xs), D = stacked(ds);
            const Eigen::MatrixXd A = evaluate_terms(terms, X);
            SparseModel model = fit_system(A, D, cfg.fit);
            model.terms = terms;
            std::vector<Eigen::VectorXd> cands = cfg.acquisition.candidate_grid;
            if (cands.empty())
                for (int c = 0; c < cfg.n_candidates; ++c) cands.push_back(uniform_in(domain, rng));
            const Phase2Result p2 = phase2_acquisition(compute_fim(A, 1.0), cands, model, cfg.acquisition, cfg.dt, last_rows);
            next = cands[static_cast<std::size_t>(p2.chosen)];
            gain = p2.gains[static_cast<std::size_t>(p2.chosen)];
        } else {
            next = uniform_in(domain, rng);
        }
        res.rounds.push_back(observe(next, round));
        res.rounds.back().gain = gain;
        res.rounds.back().aggregate_lambda_min = lambda_min_now();
    }

    res.states = stacked(xs);
    res.derivatives = stacked(ds);
    res.model = ensemble_fit(evaluate_terms(terms, res.states), res.derivatives, cfg.n_boot, derive_seed(seed, 104729),
                             cfg.fit, cfg.inclusion_cut);
    res.model.aggregate.terms = terms;
    for (auto& m : res.model.members) m.terms = terms;
    return res;
}

}  // namespace

SearchResult entropy_search_sindy(const SystemSpec& system, const Domain& domain, int M, int N, const SearchConfig& cfg,
                                  unsigned long long seed) {
    return run_search(system, domain, M, N, cfg, seed, true);
}

SearchResult random_search_sindy(const SystemSpec& system, const Domain& domain, int M, int N, const SearchConfig& cfg,
                                 unsigned long long seed) {
    return run_search(system, domain, M, N, cfg, seed, false);
}

}  // namespace fimsindy
