#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <limits>
#include <vector>

namespace fimsindy {

/// Condition number / score value used when lambda_min = 0 or lambda_max = 0.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Fim {
    Eigen::MatrixXd matrix;  // A^T A / sigma^2
    double sigma = 1.0;
    Eigen::Index rows_used = 0;
};

Fim compute_fim(const Eigen::MatrixXd& A, double sigma = 1.0);

/// Max |I + H| where H is a central-difference Hessian of the Gaussian
/// log-likelihood at a random coefficient vector.
double fim_vs_loglik_hessian(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double sigma,
                             unsigned long long seed = 0);

struct FimSpectrum {
    Eigen::VectorXd eigenvalues;   // descending
    Eigen::MatrixXd eigenvectors;  // column k pairs with eigenvalues[k]
};

/// Symmetric eigendecomposition. Round-off negatives above -1e-10 lambda_max
/// are clamped to zero; each eigenvector has its first nonzero entry positive.
FimSpectrum spectrum(const Eigen::MatrixXd& matrix);
FimSpectrum spectrum(const Fim& fim);

struct InfoMetrics {
    double lambda_max = 0.0;
    double trace = 0.0;
    double log_det = 0.0;
    double lambda_min = 0.0;
    double condition_number = 0.0;
    double spectral_skewness = 0.0;
    double effective_rank = 1.0;
    double effective_dim = 1.0;
    double spectral_gap = 0.0;
};

InfoMetrics metrics(const Eigen::VectorXd& eigenvalues);
InfoMetrics metrics(const FimSpectrum& spec);

/// u^T I u for a unit vector u.
double directional_information(const Fim& fim, const Eigen::VectorXd& u);

/// Entrywise sum; all inputs must share q and sigma.
Fim aggregate(const std::vector<Fim>& fims);

enum class ScoreMode { LambdaMax, Skew, Combined };

/// LambdaMax: log10 lambda_1. Skew: -S. Combined: log10 lambda_1 - weight * S.
double information_score(const InfoMetrics& m, ScoreMode mode, double weight = 1.0);

struct BlockScan {
    int block_size = 0;
    int stride = 0;
    std::vector<InfoMetrics> scores;
    std::vector<double> block_start_times;
};

/// Metrics of A[i, i + block_size) for i = 0, stride, 2 stride, ...
BlockScan block_scan(const Eigen::MatrixXd& A, const Eigen::VectorXd& times, double sigma, int block_size,
                     int stride = 1);

/// Columns block_start_time, lambda_max, ..., gap, score (Combined, weight 1).
void write_block_scan_csv(std::ostream& out, const BlockScan& scan);

struct BaggingReport {
    std::vector<Eigen::VectorXd> member_eigenvalues;
    std::vector<double> member_effective_dim;
    std::vector<double> member_condition;
    FimSpectrum mean_spectrum;
    double mean_fim_effective_dim = 0.0;
    double mean_member_effective_dim = 0.0;
    double mean_fim_condition = 0.0;
    double median_member_condition = 0.0;
    std::vector<double> leading_angles;  // radians, against the full-data v1
};

/// Bootstrap FIMs from row resamples of A, their mean, and spectral summaries.
BaggingReport bagging_spectrum_study(const Eigen::MatrixXd& A, double sigma, int n_boot, unsigned long long seed);

/// Semi-axis sqrt(chi2_crit / lambda_k) along v_k, so lengths ascend and the
/// last axis is the weakest direction.
Eigen::VectorXd confidence_ellipsoid_axes(const FimSpectrum& spec, double chi2_crit);

/// Monte Carlo Var(v_k^T xi_hat) * lambda_k for OLS on y = A xi* + noise;
/// entries follow the descending eigenvalue order.
Eigen::VectorXd cramer_rao_check(const Eigen::MatrixXd& A, double sigma, int n_reps, unsigned long long seed);

/// |Y - A Xi|_F^2 / (n * max(m - q, 1)).
double residual_variance(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& Xi);

}  // namespace fimsindy
