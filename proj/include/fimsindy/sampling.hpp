#pragma once

#include "fimsindy/dynamics.hpp"
#include "fimsindy/features.hpp"
#include "fimsindy/fim.hpp"
#include "fimsindy/regression.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace fimsindy {

enum class SampleMode { Coarse, Fine };
enum class StopReason { Budget, Quality, Diverged };

struct SamplingConfig {
    double dt_base = 0.002;
    double beta = 5.0;
    double gamma_up = 2.0;  // +inf: never switch to FINE
    double gamma_down = 0.5;
    int n_min = 20;
    int n_max = 400;
    ScoreMode metric_mode = ScoreMode::LambdaMax;
    double metric_weight = 1.0;
    int quality_window = 5;
    double quality_tol = 0.01;
    double noise_level = 0.0;
    long long seed = 0;
    LibraryConfig library;

    void validate() const;
};

struct SamplingTrace {
    std::vector<double> sampled_times;
    std::vector<Eigen::Index> sampled_indices;  // rows of the dense dt_base grid
    std::vector<SampleMode> modes;              // mode used to take each step
    std::vector<double> metric_history;         // metric after each step
    double initial_metric = 0.0;                // metric of the one-point starting set
    StopReason stop_reason = StopReason::Budget;
};

/// One transition of the coarse/fine machine.
SampleMode next_mode(SampleMode mode, double metric, double previous, const SamplingConfig& cfg);

/// Metric on the linear scale: 10^information_score, i.e. lambda_1 for
/// LambdaMax and lambda_1 * 10^(-w S) for Combined.
double linear_information_metric(const InfoMetrics& m, ScoreMode mode, double weight);

/// Replaces the computed metric; called with the step number (0 for the
/// starting set), the accumulated design matrix and the current model.
using MetricHook = std::function<double(std::size_t, const Eigen::MatrixXd&, const SparseModel&)>;

struct AdaptiveResult {
    SamplingTrace trace;
    SparseModel model;
    Trajectory dense;  // noisy dense trajectory the samples were read from
};

/// Adaptive predictive sampling along one trajectory. sigma > 0 fixes the
/// noise scale of the FIM; sigma <= 0 uses the residual variance of the
/// current model, so the metric depends on both the data and the fit.
AdaptiveResult adaptive_sample(const SystemSpec& system, const Eigen::VectorXd& x0, const SamplingConfig& cfg,
                               const FitConfig& fit_cfg, double sigma = 0.0, const MetricHook& hook = {});

/// CSV with columns step,t,mode,metric,n_observed.
void write_sampling_trace_csv(std::ostream& out, const SamplingTrace& trace);

struct OscillationSplit {
    Eigen::Index first_extremum;  // first zero crossing of dx0/dt
    Eigen::Index end;             // next crossing: end of the first full oscillation
};

/// Locates the first oscillation from sign changes of the central-difference
/// derivative of x0. Throws DetectionError if there are fewer than two.
OscillationSplit first_oscillation_split(const Trajectory& traj);

enum class FimMetric { LambdaMin, LambdaMax, Trace, LogDet, EffectiveDim, NegCondition };

double fim_metric_value(const InfoMetrics& m, FimMetric which);

struct AcquisitionConfig {
    std::vector<Eigen::VectorXd> candidate_grid;
    FimMetric fim_metric = FimMetric::LambdaMin;
    double horizon = 0.25;
    double gp_length_scale = 0.01;
    double gp_signal_var = 1.0;
    double gp_noise_var = 1e-4;

    void validate() const;
};

struct GpPosterior {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};

/// Exact GP regression with k(t,t') = s^2 exp(-(t-t')^2 / (2 l^2)).
GpPosterior gp_posterior(const Eigen::VectorXd& train_t, const Eigen::VectorXd& train_y, const Eigen::VectorXd& query_t,
                         const AcquisitionConfig& cfg);

/// Index of the candidate with the largest summed predictive entropy
/// sum_d 0.5 log(2 pi e (var_d + noise_var)); earliest wins ties. One column
/// of posterior_var per state dimension.
Eigen::Index phase1_acquisition(const Eigen::VectorXd& candidates_t, const Eigen::MatrixXd& posterior_var,
                                double noise_var);

struct Phase2Result {
    Eigen::Index chosen = 0;
    std::vector<double> gains;  // -inf where the model prediction diverged
};

/// Gain M(I_sum + I_x0) - M(I_sum) of each candidate, where I_x0 comes from
/// simulating the model for cfg.horizon and reading the rows listed in
/// sample_rows (all rows when empty).
Phase2Result phase2_acquisition(const Fim& aggregate_fim, const std::vector<Eigen::VectorXd>& candidates,
                                const SparseModel& model, const AcquisitionConfig& cfg, double dt,
                                const std::vector<Eigen::Index>& sample_rows = {});

struct SearchConfig {
    double dt = 0.002;
    double noise_level = 0.0;
    int n_candidates = 30;  // random candidates per round when candidate_grid is empty
    int n_boot = 10;
    double inclusion_cut = 0.6;
    FitConfig fit;
    LibraryConfig library;
    AcquisitionConfig acquisition;
};

struct Domain {
    Eigen::VectorXd lo, hi;  // lo == hi pins a coordinate
};

struct SearchRound {
    Eigen::VectorXd initial_condition;
    double gain = 0.0;  // Phase 2 gain of the chosen candidate (0 in round 0)
    double aggregate_lambda_min = 0.0;
    std::vector<double> selected_times;
};

struct SearchResult {
    Eigen::MatrixXd states;       // aggregate observed states
    Eigen::MatrixXd derivatives;  // matching derivative rows
    EnsembleModel model;
    std::vector<SearchRound> rounds;
    std::vector<std::string> warnings;
};

/// Two-phase entropy-search identification over M trajectories with N
/// observed time points each. The first initial condition is uniform in the
/// domain, later ones come from Phase 2.
SearchResult entropy_search_sindy(const SystemSpec& system, const Domain& domain, int M, int N,
                                  const SearchConfig& cfg, unsigned long long seed);

/// Same budget and Phase 1 selection, but every initial condition uniform in
/// the domain.
SearchResult random_search_sindy(const SystemSpec& system, const Domain& domain, int M, int N, const SearchConfig& cfg,
                                 unsigned long long seed);

/// Times chosen by sequential Phase 1 acquisition on a grid of m samples.
std::vector<Eigen::Index> phase1_select(const Eigen::VectorXd& times, const Eigen::MatrixXd& states, int N,
                                        const AcquisitionConfig& cfg);

}  // namespace fimsindy
