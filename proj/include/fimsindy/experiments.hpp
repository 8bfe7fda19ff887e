#pragma once

#include "fimsindy/dynamics.hpp"
#include "fimsindy/features.hpp"
#include "fimsindy/fim.hpp"
#include "fimsindy/regression.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace fimsindy {

/// Spearman rank correlation (average ranks for ties). Empty when fewer than
/// three points or a constant input.
std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b);

double median(std::vector<double> v);

struct AxisRange {
    double min = -10.0;
    double max = 10.0;
    int count = 21;

    double at(int i) const;
};

struct GridSpec {
    AxisRange x_range;
    AxisRange y_range;
    double z_value = 9.0;
    SystemSpec system = lorenz_system();
    int train_length = 125;
    double dt = 0.002;
    double noise_level = 0.0;
    long long seed = 0;
    int extreme_window = 200;
    double small_tol = 1e-3;
    double large_tol = 1e3;
    double score_weight = 1.0;

    void validate() const;
};

enum class CellStatus { Ok, Diverged, Degenerate };

/// Matrices are indexed (row = y index, column = x index).
struct GridResult {
    Eigen::MatrixXd loss;
    Eigen::MatrixXd extremes;
    Eigen::MatrixXd info_score;
    std::vector<CellStatus> status;  // row-major, same layout
    GridSpec meta;

    CellStatus cell(int row, int col) const { return status[static_cast<std::size_t>(row * loss.cols() + col)]; }
};

/// Per cell: simulate from (x, y, z_value), optionally add noise, fit on the
/// first train_length samples, and record the L2 loss, the extreme-value
/// count of the first extreme_window derivative rows, and the Combined
/// information score of the training-window FIM.
GridResult run_grid(const GridSpec& spec, const FitConfig& fit_cfg = {}, const LibraryConfig& lib_cfg = {});

struct StabilityConfig {
    SystemSpec system = lorenz_system();
    int n_ics = 100;
    int window_long = 5000;
    int window_short = 625;
    double dt = 0.002;
    double noise_level = 0.01;
    Eigen::VectorXd box_lo = (Eigen::VectorXd(3) << -15.0, -15.0, 5.0).finished();
    Eigen::VectorXd box_hi = (Eigen::VectorXd(3) << 15.0, 15.0, 30.0).finished();
    double score_weight = 1.0;
    unsigned long long seed = 1;
};

struct StabilityPoint {
    Eigen::VectorXd initial_condition;
    double score_long, loss_long, score_short, loss_short;
};

struct StabilityResult {
    std::vector<StabilityPoint> points;
    std::optional<double> spearman_long, spearman_short;
    int resampled = 0;
};

/// Random initial conditions in the box; per window length, fit on the
/// window and record (Combined score, L1 loss). Divergent draws are redrawn.
StabilityResult window_stability(const StabilityConfig& cfg, const FitConfig& fit_cfg = {},
                                 const LibraryConfig& lib_cfg = {});

enum class SplitKind { UpToFirstOsc, InclFirstOsc, RandomSubset };

std::string split_name(SplitKind kind);

struct NoiseSweepConfig {
    SystemSpec system = lorenz_system();
    Eigen::VectorXd x0 = (Eigen::VectorXd(3) << 1.0, 3.0, 5.0).finished();
    double t_end = 5.0;
    double dt = 0.002;
    std::vector<double> noise_levels{0.0, 0.01, 0.02, 0.05};
    int n_seeds = 20;
    unsigned long long seed = 1000;
    double outlier_factor = 10.0;
};

struct NoiseLevelStats {
    double level;
    std::vector<double> losses;  // one per seed
    std::vector<bool> outlier;
    double mean = 0.0;           // outliers excluded
    double variance = 0.0;       // outliers excluded
    double outlier_fraction = 0.0;
};

/// Training rows per split: UpToFirstOsc = [0, first extremum], InclFirstOsc
/// = [0, end of first oscillation], RandomSubset = as many rows as
/// InclFirstOsc drawn without replacement from after the oscillation. Noise
/// is added to the whole trajectory before differencing. L1 loss; a loss is
/// an outlier when it exceeds outlier_factor times the median of its level.
std::vector<NoiseLevelStats> noise_sweep(const NoiseSweepConfig& cfg, SplitKind split, const FitConfig& fit_cfg = {},
                                         const LibraryConfig& lib_cfg = {});

}  // namespace fimsindy
