#pragma once

#include "fimsindy/dynamics.hpp"
#include "fimsindy/features.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace fimsindy {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using BoolVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

struct FitConfig {
    double threshold = 0.1;
    double alpha = 1e-5;
    int max_iter = 20;
};

/// argmin |A xi - y|^2 + alpha |xi|^2 through a Cholesky factorization of the
/// regularized normal equations. Throws SingularSystemError if alpha == 0 and
/// A is rank deficient.
Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double alpha);

struct StridgeResult {
    Eigen::VectorXd coefficients;
    BoolVector active;
    int iterations = 0;
    bool empty_support = false;
    std::vector<BoolVector> support_history;  // support entering each iteration
};

/// Sequential thresholded ridge regression with a final unregularized refit on
/// the surviving support.
StridgeResult stridge(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double threshold, double alpha, int max_iter);

struct SparseModel {
    Eigen::MatrixXd coefficients;  // q x n
    BoolMatrix active;
    double threshold = 0.0;
    double ridge_alpha = 0.0;
    int iterations = 0;          // max over equations
    bool empty_warning = false;  // some equation lost every term
    std::vector<TermDescriptor> terms;

    Eigen::Index active_count() const { return active.count(); }
};

/// STRidge applied to each derivative column.
SparseModel fit_system(const DesignMatrix& A, const Eigen::MatrixXd& ydot, const FitConfig& cfg = {});
SparseModel fit_system(const Eigen::MatrixXd& A, const Eigen::MatrixXd& ydot, const FitConfig& cfg = {});

/// True coefficients of spec in the given library layout. Throws if the
/// library cannot represent the system.
Eigen::MatrixXd ground_truth(const SystemSpec& spec, const std::vector<TermDescriptor>& terms);

enum class LossNorm { L1, L2 };

double coefficient_loss(const Eigen::MatrixXd& coefficients, const Eigen::MatrixXd& truth, LossNorm p);
double coefficient_loss(const SparseModel& model, const Eigen::MatrixXd& truth, LossNorm p);

struct EnsembleModel {
    std::vector<SparseModel> members;
    Eigen::MatrixXd inclusion_probability;
    SparseModel aggregate;
};

/// Row-level bootstrap. The aggregate keeps the entrywise median of all
/// members where inclusion >= inclusion_cut, zero elsewhere.
EnsembleModel ensemble_fit(const Eigen::MatrixXd& A, const Eigen::MatrixXd& ydot, int n_boot, unsigned long long seed,
                           const FitConfig& cfg = {}, double inclusion_cut = 0.6);

/// Indices of a full-size resample with replacement.
std::vector<Eigen::Index> bootstrap_rows(Eigen::Index m, unsigned long long seed);

/// xdot = Theta(x) * Xi as an ODE right-hand side.
RhsFn model_rhs(const SparseModel& model);

/// "x0' = -10 x0 + 10 x1" style strings, one per equation.
std::vector<std::string> model_equations(const SparseModel& model, int precision = 6);

}  // namespace fimsindy
