#pragma once

#include "fimsindy/dynamics.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace fimsindy {

struct TermDescriptor {
    std::vector<int> exponents;
    std::string label;

    int degree() const;
};

struct LibraryConfig {
    int degree = 2;
    bool include_constant = true;
};

/// Monomials of total degree <= cfg.degree in graded-lex order, constant
/// first. Within one degree, exponent vectors run lexicographically
/// descending (x0^2, x0*x1, x0*x2, x1^2, ...).
std::vector<TermDescriptor> polynomial_terms(int n, const LibraryConfig& cfg = {});

/// e.g. {2,1,0} -> "x0^2*x1", all zeros -> "1".
std::string term_label(const std::vector<int>& exponents);

/// Inverse of term_label for an n-variable state. Throws ArgumentError on
/// malformed labels.
TermDescriptor parse_term_label(const std::string& label, int n);

/// Evaluates every term on every row of states.
Eigen::MatrixXd evaluate_terms(const std::vector<TermDescriptor>& terms, const Eigen::MatrixXd& states);

struct DesignMatrix {
    std::vector<TermDescriptor> terms;
    Eigen::MatrixXd values;  // m x q
    Eigen::Index row_begin = 0;
    Eigen::Index row_end = 0;

    Eigen::Index q() const { return values.cols(); }
};

DesignMatrix build_library(const Trajectory& traj, const LibraryConfig& cfg = {});
DesignMatrix build_library(const Eigen::MatrixXd& states, const LibraryConfig& cfg = {});

enum class DiffMethod { CentralDifference };

struct DerivativeMatrix {
    Eigen::MatrixXd values;  // m x n
    DiffMethod method = DiffMethod::CentralDifference;
};

/// Second-order central differences with one-sided 3-point endpoint stencils.
DerivativeMatrix central_diff(const Trajectory& traj);
Eigen::MatrixXd central_diff(const Eigen::MatrixXd& states, double dt);

/// Same stencils on an irregular time grid.
Eigen::MatrixXd central_diff_nonuniform(const Eigen::VectorXd& times, const Eigen::MatrixXd& states);

/// Entries of rows [begin, end) with |e| <= small_tol or |e| >= large_tol.
std::size_t count_extremes(const Eigen::MatrixXd& deriv, Eigen::Index begin, Eigen::Index end, double small_tol,
                           double large_tol);

/// Header of term labels, then one row per sample.
void write_design_csv(std::ostream& out, const DesignMatrix& design);

}  // namespace fimsindy
