#pragma once

#include <Eigen/Dense>

namespace fimsindy {

struct EntropyConfig {
    int m = 2;
    double r = 0.2;           // multiple of the population std of the series
    bool absolute_r = false;  // use r as given
};

struct EntropyValue {
    double value;
    bool defined;  // false when no template matches were found (value is NaN)
};

/// Approximate entropy, phi^m - phi^{m+1}, self-matches counted.
double apen(const Eigen::VectorXd& series, const EntropyConfig& cfg = {});

/// Sample entropy -log(A/B) over the first N - m templates at both lengths,
/// self-matches excluded.
EntropyValue sampen(const Eigen::VectorXd& series, const EntropyConfig& cfg = {});

/// Tolerance actually used for a series under cfg.
double entropy_tolerance(const Eigen::VectorXd& series, const EntropyConfig& cfg);

}  // namespace fimsindy
