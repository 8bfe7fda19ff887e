#include "fimsindy/fim.hpp"

#include "fimsindy/errors.hpp"
#include "fimsindy/parallel.hpp"
#include "fimsindy/regression.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

namespace fimsindy {

Fim compute_fim(const Eigen::MatrixXd& A, double sigma) {
    if (!(sigma > 0.0)) throw ArgumentError("compute_fim: sigma must be positive");
    Fim f;
    Eigen::MatrixXd M = A.transpose() * A / (sigma * sigma);
    f.matrix = 0.5 * (M + M.transpose());
    f.sigma = sigma;
    f.rows_used = A.rows();
    return f;
}

double fim_vs_loglik_hessian(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, double sigma, unsigned long long seed) {
    if (A.rows() != y.size()) throw ArgumentError("fim_vs_loglik_hessian: row count mismatch");
    const Fim fim = compute_fim(A, sigma);
    const Eigen::Index q = A.cols();
    if (q == 0) return 0.0;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd xi(q);
    for (Eigen::Index k = 0; k < q; ++k) xi[k] = normal(rng);
    const Eigen::VectorXd r0 = y - A * xi;
    auto loglik = [&](const Eigen::VectorXd& delta) { return -(r0 - A * delta).squaredNorm() / (2.0 * sigma * sigma); };

    Eigen::VectorXd h(q);
    for (Eigen::Index k = 0; k < q; ++k) h[k] = 1e-4 * std::max(1.0, std::abs(xi[k]));
    double worst = 0.0;
    for (Eigen::Index i = 0; i < q; ++i) {
        for (Eigen::Index j = i; j < q; ++j) {
            Eigen::VectorXd ei = Eigen::VectorXd::Zero(q), ej = Eigen::VectorXd::Zero(q);
            ei[i] = h[i];
            ej[j] = h[j];
            const double hess =
                (loglik(ei + ej) - loglik(ei - ej) - loglik(-ei + ej) + loglik(-ei - ej)) / (4.0 * h[i] * h[j]);
            worst = std::max(worst, std::abs(fim.matrix(i, j) + hess));
        }
    }
    return worst;
}

FimSpectrum spectrum(const Eigen::MatrixXd& matrix) {
    if (matrix.rows() != matrix.cols()) throw ArgumentError("spectrum: matrix must be square");
    const Eigen::Index q = matrix.rows();
    FimSpectrum s;
    if (q == 0) return s;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix);
    if (es.info() != Eigen::Success) throw std::runtime_error("spectrum: eigensolver did not converge");
    s.eigenvalues = es.eigenvalues().reverse();
    s.eigenvectors = es.eigenvectors().rowwise().reverse();
    const double lmax = std::max(s.eigenvalues[0], 0.0);
    for (Eigen::Index k = 0; k < q; ++k) {
        if (s.eigenvalues[k] < 0.0 && s.eigenvalues[k] >= -1e-10 * lmax) s.eigenvalues[k] = 0.0;
        for (Eigen::Index i = 0; i < q; ++i) {
            const double v = s.eigenvectors(i, k);
            if (std::abs(v) > 1e-14) {
                if (v < 0.0) s.eigenvectors.col(k) *= -1.0;
                break;
            }
        }
    }
    return s;
}

FimSpectrum spectrum(const Fim& fim) { return spectrum(fim.matrix); }

InfoMetrics metrics(const Eigen::VectorXd& lam) {
    InfoMetrics m;
    const Eigen::Index q = lam.size();
    if (q == 0) throw ArgumentError("metrics: empty spectrum");
    m.lambda_max = lam[0];
    m.lambda_min = lam[q - 1];
    m.trace = lam.sum();
    m.spectral_gap = m.lambda_max - m.lambda_min;

    m.log_det = 0.0;
    for (Eigen::Index k = 0; k < q; ++k) {
        if (lam[k] <= 0.0) {
            m.log_det = -kInfinity;
            break;
        }
        m.log_det += std::log(lam[k]);
    }
    m.condition_number = m.lambda_min > 0.0 ? m.lambda_max / m.lambda_min : kInfinity;

    const double mean = m.trace / static_cast<double>(q);
    const Eigen::ArrayXd c = lam.array() - mean;
    const double m2 = c.square().mean();
    const double m3 = c.cube().mean();
    m.spectral_skewness = (m2 > 1e-24 * mean * mean && m2 > 0.0) ? m3 / std::pow(m2, 1.5) : 0.0;

    if (m.trace > 0.0) {
        double h = 0.0;
        for (Eigen::Index k = 0; k < q; ++k) {
            const double p = lam[k] / m.trace;
            if (p > 0.0) h -= p * std::log(p);
        }
        m.effective_rank = std::exp(h);
        m.effective_dim = m.trace * m.trace / lam.squaredNorm();
    } else {
        m.effective_rank = 1.0;
        m.effective_dim = 1.0;
    }
    return m;
}

InfoMetrics metrics(const FimSpectrum& spec) { return metrics(spec.eigenvalues); }

double directional_information(const Fim& fim, const Eigen::VectorXd& u) {
    if (u.size() != fim.matrix.rows()) throw ArgumentError("directional_information: dimension mismatch");
    if (std::abs(u.norm() - 1.0) > 1e-8) throw ArgumentError("directional_information: u must be a unit vector");
    return u.dot(fim.matrix * u);
}

Fim aggregate(const std::vector<Fim>& fims) {
    if (fims.empty()) throw ArgumentError("aggregate: no matrices");
    Fim out = fims.front();
    for (std::size_t k = 1; k < fims.size(); ++k) {
        if (fims[k].matrix.rows() != out.matrix.rows()) throw ArgumentError("aggregate: dimension mismatch");
        if (fims[k].sigma != out.sigma) throw ArgumentError("aggregate: sigma mismatch");
        out.matrix += fims[k].matrix;
        out.rows_used += fims[k].rows_used;
    }
    return out;
}

double information_score(const InfoMetrics& m, ScoreMode mode, double weight) {
    if (mode == ScoreMode::Skew) return -m.spectral_skewness;
    if (!(m.lambda_max > 0.0)) return -kInfinity;
    const double l = std::log10(m.lambda_max);
    return mode == ScoreMode::LambdaMax ? l : l - weight * m.spectral_skewness;
}

BlockScan block_scan(const Eigen::MatrixXd& A, const Eigen::VectorXd& times, double sigma, int block_size, int stride) {
    if (block_size < 1 || block_size > A.rows()) throw ArgumentError("block_scan: block_size must be in [1, m]");
    if (stride < 1) throw ArgumentError("block_scan: stride must be positive");
    if (times.size() != A.rows()) throw ArgumentError("block_scan: times length does not match design rows");
    if (!(sigma > 0.0)) throw ArgumentError("block_scan: sigma must be positive");
    BlockScan scan;
    scan.block_size = block_size;
    scan.stride = stride;
    const Eigen::Index blocks = (A.rows() - block_size) / stride + 1;
    scan.scores.resize(static_cast<std::size_t>(blocks));
    scan.block_start_times.resize(static_cast<std::size_t>(blocks));
    parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
        const Eigen::Index start = static_cast<Eigen::Index>(b) * stride;
        scan.scores[b] = metrics(spectrum(compute_fim(A.middleRows(start, block_size), sigma)));
        scan.block_start_times[b] = times[start];
    });
    return scan;
}

void write_block_scan_csv(std::ostream& out, const BlockScan& scan) {
    out << "block_start_time,lambda_max,trace,log_det,lambda_min,kappa,skewness,r_eff,d_eff,gap,score\n";
    out << std::setprecision(17);
    for (std::size_t b = 0; b < scan.scores.size(); ++b) {
        const InfoMetrics& m = scan.scores[b];
        out << scan.block_start_times[b] << ',' << m.lambda_max << ',' << m.trace << ',' << m.log_det << ','
            << m.lambda_min << ',' << m.condition_number << ',' << m.spectral_skewness << ',' << m.effective_rank
            << ',' << m.effective_dim << ',' << m.spectral_gap << ','
            << information_score(m, ScoreMode::Combined, 1.0) << '\n';
    }
}

BaggingReport bagging_spectrum_study(const Eigen::MatrixXd& A, double sigma, int n_boot, unsigned long long seed) {
    if (n_boot < 2) throw ArgumentError("bagging_spectrum_study: n_boot must be at least 2");
    BaggingReport rep;
    const Eigen::Index q = A.cols();
    std::vector<Fim> fims(static_cast<std::size_t>(n_boot));
    std::vector<FimSpectrum> specs(static_cast<std::size_t>(n_boot));
    parallel_for(fims.size(), [&](std::size_t b) {
        const auto rows = bootstrap_rows(A.rows(), derive_seed(seed, b));
        fims[b] = compute_fim(A(rows, Eigen::all), sigma);
        specs[b] = spectrum(fims[b]);
    });

    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(q, q);
    for (const auto& f : fims) mean += f.matrix;
    mean /= static_cast<double>(n_boot);
    rep.mean_spectrum = spectrum(mean);
    const InfoMetrics mean_metrics = metrics(rep.mean_spectrum);
    rep.mean_fim_effective_dim = mean_metrics.effective_dim;
    rep.mean_fim_condition = mean_metrics.condition_number;

    const FimSpectrum full = spectrum(compute_fim(A, sigma));
    const Eigen::VectorXd v1 = full.eigenvectors.col(0);
    for (const auto& s : specs) {
        const InfoMetrics m = metrics(s);
        rep.member_eigenvalues.push_back(s.eigenvalues);
        rep.member_effective_dim.push_back(m.effective_dim);
        rep.member_condition.push_back(m.condition_number);
        const double c = std::min(1.0, std::abs(s.eigenvectors.col(0).dot(v1)));
        rep.leading_angles.push_back(std::acos(c));
    }
    double sum = 0.0;
    for (double d : rep.member_effective_dim) sum += d;
    rep.mean_member_effective_dim = sum / static_cast<double>(n_boot);
    std::vector<double> k = rep.member_condition;
    std::sort(k.begin(), k.end());
    rep.median_member_condition = n_boot % 2 ? k[n_boot / 2] : 0.5 * (k[n_boot / 2 - 1] + k[n_boot / 2]);
    return rep;
}

Eigen::VectorXd confidence_ellipsoid_axes(const FimSpectrum& spec, double chi2_crit) {
    if (!(chi2_crit > 0.0)) throw ArgumentError("confidence_ellipsoid_axes: chi2_crit must be positive");
    const Eigen::Index q = spec.eigenvalues.size();
    Eigen::VectorXd axes(q);
    for (Eigen::Index k = 0; k < q; ++k) {
        if (!(spec.eigenvalues[k] > 0.0)) throw ArgumentError("confidence_ellipsoid_axes: unbounded axis (zero eigenvalue)");
        axes[k] = std::sqrt(chi2_crit / spec.eigenvalues[k]);
    }
    return axes;
}

Eigen::VectorXd cramer_rao_check(const Eigen::MatrixXd& A, double sigma, int n_reps, unsigned long long seed) {
    if (!(sigma > 0.0)) throw ArgumentError("cramer_rao_check: sigma must be positive");
    if (n_reps < 500) throw ArgumentError("cramer_rao_check: need at least 500 replicates");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < A.cols()) throw SingularSystemError("cramer_rao_check: design is rank deficient");
    const FimSpectrum spec = spectrum(compute_fim(A, sigma));
    const Eigen::Index q = A.cols(), m = A.rows();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd xi_true(q);
    for (Eigen::Index k = 0; k < q; ++k) xi_true[k] = normal(rng);
    const Eigen::VectorXd clean = A * xi_true;

    Eigen::MatrixXd proj(n_reps, q);
    Eigen::VectorXd y(m);
    for (int r = 0; r < n_reps; ++r) {
        for (Eigen::Index i = 0; i < m; ++i) y[i] = clean[i] + sigma * normal(rng);
        const Eigen::VectorXd xi = qr.solve(y);
        proj.row(r) = (spec.eigenvectors.transpose() * xi).transpose();
    }
    Eigen::VectorXd ratio(q);
    for (Eigen::Index k = 0; k < q; ++k) {
        const double mean = proj.col(k).mean();
        const double var = (proj.col(k).array() - mean).square().sum() / static_cast<double>(n_reps - 1);
        ratio[k] = var * spec.eigenvalues[k];
    }
    return ratio;
}

double residual_variance(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Y, const Eigen::MatrixXd& Xi) {
    const double dof = static_cast<double>(std::max<Eigen::Index>(A.rows() - A.cols(), 1));
    return (Y - A * Xi).squaredNorm() / (dof * static_cast<double>(Y.cols()));
}

}  // namespace fimsindy
