#include "fimsindy/regression.hpp"

#include "fimsindy/errors.hpp"
#include "fimsindy/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace fimsindy {

Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double alpha) {
    if (A.rows() != y.size()) throw ArgumentError("ridge_solve: row count mismatch");
    if (!(alpha >= 0.0)) throw ArgumentError("ridge_solve: alpha must be nonnegative");
    const Eigen::Index q = A.cols();
    if (q == 0) return Eigen::VectorXd(0);
    Eigen::MatrixXd G = A.transpose() * A;
    G.diagonal().array() += alpha;
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) throw SingularSystemError("ridge_solve: normal equations are not positive definite");
    if (alpha == 0.0) {
        const Eigen::VectorXd l = llt.matrixL().toDenseMatrix().diagonal();
        const double scale = std::max(G.diagonal().maxCoeff(), 1e-300);
        if ((l.array().square() <= 1e-13 * scale).any()) throw SingularSystemError("ridge_solve: design is rank deficient");
    }
    return llt.solve(A.transpose() * y);
}

StridgeResult stridge(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double threshold, double alpha, int max_iter) {
    if (!(threshold > 0.0)) throw ArgumentError("stridge: threshold must be positive");
    if (max_iter < 1) throw ArgumentError("stridge: max_iter must be at least 1");
    if (A.rows() != y.size()) throw ArgumentError("stridge: row count mismatch");
    const Eigen::Index q = A.cols();
    StridgeResult res;
    res.coefficients = Eigen::VectorXd::Zero(q);
    BoolVector support = BoolVector::Constant(q, true);

    auto columns = [&](const BoolVector& s) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index k = 0; k < q; ++k)
            if (s[k]) idx.push_back(k);
        return idx;
    };

    for (int it = 0; it < max_iter; ++it) {
        res.support_history.push_back(support);
        const auto idx = columns(support);
        const Eigen::VectorXd c = ridge_solve(A(Eigen::all, idx), y, alpha);
        ++res.iterations;
        BoolVector next = support;
        for (std::size_t k = 0; k < idx.size(); ++k) next[idx[k]] = std::abs(c[static_cast<Eigen::Index>(k)]) >= threshold;
        if ((next == support).all()) break;
        support = next;
        if (!support.any()) break;
    }

    res.active = support;
    if (!support.any()) {
        res.empty_support = true;
        return res;
    }
    const auto idx = columns(support);
    const Eigen::MatrixXd As = A(Eigen::all, idx);
    // minimum-norm least squares so short or degenerate windows still refit
    const Eigen::VectorXd c = As.completeOrthogonalDecomposition().solve(y);
    for (std::size_t k = 0; k < idx.size(); ++k) res.coefficients[idx[k]] = c[static_cast<Eigen::Index>(k)];
    return res;
}

SparseModel fit_system(const Eigen::MatrixXd& A, const Eigen::MatrixXd& ydot, const FitConfig& cfg) {
    if (A.rows() != ydot.rows()) throw ArgumentError("fit_system: design and derivative row counts differ");
    SparseModel model;
    model.coefficients = Eigen::MatrixXd::Zero(A.cols(), ydot.cols());
    model.active = BoolMatrix::Constant(A.cols(), ydot.cols(), false);
    model.threshold = cfg.threshold;
    model.ridge_alpha = cfg.alpha;
    for (Eigen::Index j = 0; j < ydot.cols(); ++j) {
        const StridgeResult r = stridge(A, ydot.col(j), cfg.threshold, cfg.alpha, cfg.max_iter);
        model.coefficients.col(j) = r.coefficients;
        model.active.col(j) = r.active;
        model.iterations = std::max(model.iterations, r.iterations);
        model.empty_warning = model.empty_warning || r.empty_support;
    }
    return model;
}

SparseModel fit_system(const DesignMatrix& A, const Eigen::MatrixXd& ydot, const FitConfig& cfg) {
    SparseModel model = fit_system(A.values, ydot, cfg);
    model.terms = A.terms;
    return model;
}

Eigen::MatrixXd ground_truth(const SystemSpec& spec, const std::vector<TermDescriptor>& terms) {
    const auto poly = rhs_polynomial(spec);
    Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(terms.size()), spec.dim());
    for (std::size_t eq = 0; eq < poly.size(); ++eq) {
        for (const auto& mono : poly[eq]) {
            auto it = std::find_if(terms.begin(), terms.end(),
                                   [&](const TermDescriptor& t) { return t.exponents == mono.exponents; });
            if (it == terms.end()) throw ArgumentError("library lacks term " + term_label(mono.exponents));
            truth(it - terms.begin(), static_cast<Eigen::Index>(eq)) += mono.coefficient;
        }
    }
    return truth;
}

double coefficient_loss(const Eigen::MatrixXd& coefficients, const Eigen::MatrixXd& truth, LossNorm p) {
    if (coefficients.rows() != truth.rows() || coefficients.cols() != truth.cols())
        throw ArgumentError("coefficient_loss: shape mismatch");
    const Eigen::ArrayXXd d = (coefficients - truth).array();
    return p == LossNorm::L1 ? d.abs().sum() : std::sqrt(d.square().sum());
}

double coefficient_loss(const SparseModel& model, const Eigen::MatrixXd& truth, LossNorm p) {
    return coefficient_loss(model.coefficients, truth, p);
}

std::vector<Eigen::Index> bootstrap_rows(Eigen::Index m, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, m - 1);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(m));
    for (auto& r : rows) r = pick(rng);
    return rows;
}

EnsembleModel ensemble_fit(const Eigen::MatrixXd& A, const Eigen::MatrixXd& ydot, int n_boot, unsigned long long seed,
                           const FitConfig& cfg, double inclusion_cut) {
    if (n_boot < 2) throw ArgumentError("ensemble_fit: n_boot must be at least 2");
    if (!(inclusion_cut > 0.0 && inclusion_cut <= 1.0)) throw ArgumentError("ensemble_fit: inclusion_cut must be in (0,1]");
    if (A.rows() != ydot.rows()) throw ArgumentError("ensemble_fit: row count mismatch");
    EnsembleModel ens;
    ens.members.resize(static_cast<std::size_t>(n_boot));
    parallel_for(ens.members.size(), [&](std::size_t b) {
        const auto rows = bootstrap_rows(A.rows(), derive_seed(seed, b));
        ens.members[b] = fit_system(A(rows, Eigen::all), ydot(rows, Eigen::all), cfg);
    });

    const Eigen::Index q = A.cols(), n = ydot.cols();
    ens.inclusion_probability = Eigen::MatrixXd::Zero(q, n);
    for (const auto& mem : ens.members) ens.inclusion_probability += mem.active.cast<double>().matrix();
    ens.inclusion_probability /= static_cast<double>(n_boot);

    SparseModel& agg = ens.aggregate;
    agg.coefficients = Eigen::MatrixXd::Zero(q, n);
    agg.active = BoolMatrix::Constant(q, n, false);
    agg.threshold = cfg.threshold;
    agg.ridge_alpha = cfg.alpha;
    std::vector<double> vals(static_cast<std::size_t>(n_boot));
    for (Eigen::Index i = 0; i < q; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (ens.inclusion_probability(i, j) < inclusion_cut) continue;
            for (int b = 0; b < n_boot; ++b) vals[b] = ens.members[b].coefficients(i, j);
            std::sort(vals.begin(), vals.end());
            const double med = n_boot % 2 ? vals[n_boot / 2] : 0.5 * (vals[n_boot / 2 - 1] + vals[n_boot / 2]);
            agg.coefficients(i, j) = med;
            agg.active(i, j) = true;
        }
    }
    for (const auto& mem : ens.members) agg.iterations = std::max(agg.iterations, mem.iterations);
    for (Eigen::Index j = 0; j < n; ++j) agg.empty_warning = agg.empty_warning || !agg.active.col(j).any();
    return ens;
}

RhsFn model_rhs(const SparseModel& model) {
    if (model.terms.empty()) throw ArgumentError("model_rhs: model carries no term descriptors");
    return [terms = model.terms, xi = model.coefficients](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        const Eigen::MatrixXd row = evaluate_terms(terms, x.transpose());
        return (row * xi).transpose();
    };
}

std::vector<std::string> model_equations(const SparseModel& model, int precision) {
    std::vector<std::string> out;
    for (Eigen::Index j = 0; j < model.coefficients.cols(); ++j) {
        std::ostringstream s;
        s.precision(precision);
        s << "x" << j << "' =";
        bool any = false;
        for (Eigen::Index k = 0; k < model.coefficients.rows(); ++k) {
            if (!model.active(k, j)) continue;
            const double c = model.coefficients(k, j);
            const std::string label = k < static_cast<Eigen::Index>(model.terms.size()) ? model.terms[k].label : "t" + std::to_string(k);
            s << (any ? (c < 0 ? " - " : " + ") : (c < 0 ? " -" : " ")) << std::abs(c);
            if (label != "1") s << " " << label;
            any = true;
        }
        if (!any) s << " 0";
        out.push_back(s.str());
    }
    return out;
}

}  // namespace fimsindy
