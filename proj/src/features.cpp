#include "fimsindy/features.hpp"

#include "fimsindy/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace fimsindy {

int TermDescriptor::degree() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }

std::string term_label(const std::vector<int>& exponents) {
    std::string label;
    for (std::size_t i = 0; i < exponents.size(); ++i) {
        if (exponents[i] == 0) continue;
        if (!label.empty()) label += '*';
        label += "x" + std::to_string(i);
        if (exponents[i] > 1) label += "^" + std::to_string(exponents[i]);
    }
    return label.empty() ? "1" : label;
}

TermDescriptor parse_term_label(const std::string& label, int n) {
    std::vector<int> e(static_cast<std::size_t>(n), 0);
    if (label != "1") {
        std::size_t pos = 0;
        while (pos <= label.size()) {
            const std::size_t end = std::min(label.find('*', pos), label.size());
            const std::string factor = label.substr(pos, end - pos);
            std::size_t used = 0;
            int var = -1, power = 1;
            try {
                if (factor.size() < 2 || factor[0] != 'x') throw ArgumentError("");
                const std::size_t caret = factor.find('^');
                var = std::stoi(factor.substr(1, caret == std::string::npos ? std::string::npos : caret - 1), &used);
                if (caret != std::string::npos) power = std::stoi(factor.substr(caret + 1));
            } catch (const std::exception&) {
                throw ArgumentError("malformed term label '" + label + "'");
            }
            if (var < 0 || var >= n || power < 1) throw ArgumentError("malformed term label '" + label + "'");
            e[static_cast<std::size_t>(var)] += power;
            pos = end + 1;
        }
    }
    if (term_label(e) != label) throw ArgumentError("malformed term label '" + label + "'");
    return {e, label};
}

std::vector<TermDescriptor> polynomial_terms(int n, const LibraryConfig& cfg) {
    if (n < 1) throw ArgumentError("state dimension must be positive");
    if (cfg.degree < 1) throw ArgumentError("library degree must be at least 1");
    std::vector<TermDescriptor> terms;
    for (int d = cfg.include_constant ? 0 : 1; d <= cfg.degree; ++d) {
        // exponent vectors of total degree d, lexicographically descending
        std::vector<int> e(n, 0);
        std::function<void(int, int)> fill = [&](int pos, int left) {
            if (pos == n - 1) {
                e[pos] = left;
                terms.push_back({e, term_label(e)});
                return;
            }
            for (int k = left; k >= 0; --k) {
                e[pos] = k;
                fill(pos + 1, left - k);
            }
        };
        fill(0, d);
    }
    return terms;
}

Eigen::MatrixXd evaluate_terms(const std::vector<TermDescriptor>& terms, const Eigen::MatrixXd& states) {
    const Eigen::Index m = states.rows();
    Eigen::MatrixXd out(m, static_cast<Eigen::Index>(terms.size()));
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const auto& e = terms[k].exponents;
        if (static_cast<Eigen::Index>(e.size()) != states.cols()) throw ArgumentError("term arity does not match state dimension");
        for (Eigen::Index i = 0; i < m; ++i) {
            double v = 1.0;
            for (std::size_t j = 0; j < e.size(); ++j) {
                for (int p = 0; p < e[j]; ++p) v *= states(i, static_cast<Eigen::Index>(j));
            }
            out(i, static_cast<Eigen::Index>(k)) = v;
        }
    }
    return out;
}

DesignMatrix build_library(const Eigen::MatrixXd& states, const LibraryConfig& cfg) {
    if (states.rows() == 0) throw ArgumentError("cannot build a library from an empty trajectory");
    DesignMatrix dm;
    dm.terms = polynomial_terms(static_cast<int>(states.cols()), cfg);
    dm.values = evaluate_terms(dm.terms, states);
    dm.row_begin = 0;
    dm.row_end = states.rows();
    return dm;
}

DesignMatrix build_library(const Trajectory& traj, const LibraryConfig& cfg) { return build_library(traj.states, cfg); }

Eigen::MatrixXd central_diff(const Eigen::MatrixXd& x, double dt) {
    const Eigen::Index m = x.rows();
    if (m < 3) throw ArgumentError("central differences need at least 3 samples");
    if (!(dt > 0.0)) throw ArgumentError("dt must be positive");
    Eigen::MatrixXd d(m, x.cols());
    d.middleRows(1, m - 2) = (x.bottomRows(m - 2) - x.topRows(m - 2)) / (2.0 * dt);
    d.row(0) = (-3.0 * x.row(0) + 4.0 * x.row(1) - x.row(2)) / (2.0 * dt);
    d.row(m - 1) = (3.0 * x.row(m - 1) - 4.0 * x.row(m - 2) + x.row(m - 3)) / (2.0 * dt);
    return d;
}

DerivativeMatrix central_diff(const Trajectory& traj) {
    const Eigen::Index m = traj.size();
    if (m < 3) throw ArgumentError("central differences need at least 3 samples");
    const double dt = traj.dt();
    for (Eigen::Index i = 1; i < m; ++i) {
        const double step = traj.times[i] - traj.times[i - 1];
        if (std::abs(step - dt) > 1e-12 * std::max(1.0, std::abs(traj.times[i]))) {
            throw ArgumentError("central_diff needs a constant time step");
        }
    }
    return {central_diff(traj.states, dt), DiffMethod::CentralDifference};
}

Eigen::MatrixXd central_diff_nonuniform(const Eigen::VectorXd& t, const Eigen::MatrixXd& x) {
    const Eigen::Index m = x.rows();
    if (m < 3) throw ArgumentError("central differences need at least 3 samples");
    if (t.size() != m) throw ArgumentError("time vector length does not match states");
    Eigen::MatrixXd d(m, x.cols());
    for (Eigen::Index i = 1; i + 1 < m; ++i) d.row(i) = (x.row(i + 1) - x.row(i - 1)) / (t[i + 1] - t[i - 1]);
    // 3-point one-sided stencil through (t0, t1, t2), exact on quadratics
    auto edge = [&](Eigen::Index i0, Eigen::Index i1, Eigen::Index i2) {
        const double h1 = t[i1] - t[i0], h2 = t[i2] - t[i0];
        return (-(h1 + h2) / (h1 * h2)) * x.row(i0) + (h2 / (h1 * (h2 - h1))) * x.row(i1) -
               (h1 / (h2 * (h2 - h1))) * x.row(i2);
    };
    d.row(0) = edge(0, 1, 2);
    d.row(m - 1) = edge(m - 1, m - 2, m - 3);
    return d;
}

std::size_t count_extremes(const Eigen::MatrixXd& deriv, Eigen::Index begin, Eigen::Index end, double small_tol,
                           double large_tol) {
    if (begin < 0 || end > deriv.rows() || begin > end) throw ArgumentError("extreme-value window out of bounds");
    if (!(small_tol > 0.0 && small_tol < large_tol)) throw ArgumentError("need 0 < small_tol < large_tol");
    std::size_t count = 0;
    for (Eigen::Index i = begin; i < end; ++i) {
        for (Eigen::Index j = 0; j < deriv.cols(); ++j) {
            const double a = std::abs(deriv(i, j));
            if (a <= small_tol || a >= large_tol) ++count;
        }
    }
    return count;
}

void write_design_csv(std::ostream& out, const DesignMatrix& design) {
    for (std::size_t k = 0; k < design.terms.size(); ++k) out << (k ? "," : "") << design.terms[k].label;
    out << '\n' << std::setprecision(17);
    for (Eigen::Index i = 0; i < design.values.rows(); ++i) {
        for (Eigen::Index k = 0; k < design.values.cols(); ++k) out << (k ? "," : "") << design.values(i, k);
        out << '\n';
    }
}

}  // namespace fimsindy
