#include "fimsindy/entropy.hpp"

#include "fimsindy/errors.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace fimsindy {

namespace {

void check(const Eigen::VectorXd& x, const EntropyConfig& cfg) {
    if (cfg.m < 1) throw ArgumentError("entropy: template length must be at least 1");
    if (!(cfg.r > 0.0)) throw ArgumentError("entropy: r must be positive");
    if (x.size() < cfg.m + 2) throw ArgumentError("entropy: series too short for template length");
}

bool is_constant(const Eigen::VectorXd& x) { return (x.array() == x[0]).all(); }

// l-infinity distance between templates of length len starting at i and j
inline bool close(const Eigen::VectorXd& x, Eigen::Index i, Eigen::Index j, int len, double r) {
    for (int k = 0; k < len; ++k) {
        if (std::abs(x[i + k] - x[j + k]) > r) return false;
    }
    return true;
}

double phi(const Eigen::VectorXd& x, int len, double r) {
    const Eigen::Index count = x.size() - len + 1;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < count; ++i) {
        Eigen::Index c = 0;
        for (Eigen::Index j = 0; j < count; ++j) c += close(x, i, j, len, r);
        sum += std::log(static_cast<double>(c) / static_cast<double>(count));
    }
    return sum / static_cast<double>(count);
}

}  // namespace

double entropy_tolerance(const Eigen::VectorXd& x, const EntropyConfig& cfg) {
    if (cfg.absolute_r) return cfg.r;
    const double mean = x.mean();
    return cfg.r * std::sqrt((x.array() - mean).square().mean());
}

double apen(const Eigen::VectorXd& x, const EntropyConfig& cfg) {
    check(x, cfg);
    if (is_constant(x)) return 0.0;
    const double r = entropy_tolerance(x, cfg);
    return phi(x, cfg.m, r) - phi(x, cfg.m + 1, r);
}

EntropyValue sampen(const Eigen::VectorXd& x, const EntropyConfig& cfg) {
    check(x, cfg);
    if (is_constant(x)) return {0.0, true};
    const double r = entropy_tolerance(x, cfg);
    const Eigen::Index templates = x.size() - cfg.m;
    long long b = 0, a = 0;
    for (Eigen::Index i = 0; i < templates; ++i) {
        for (Eigen::Index j = i + 1; j < templates; ++j) {
            if (!close(x, i, j, cfg.m, r)) continue;
            ++b;
            if (std::abs(x[i + cfg.m] - x[j + cfg.m]) <= r) ++a;
        }
    }
    if (a == 0 || b == 0) return {std::numeric_limits<double>::quiet_NaN(), false};
    return {std::log(static_cast<double>(b) / static_cast<double>(a)), true};
}

}  // namespace fimsindy
