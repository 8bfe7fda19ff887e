#include "fimsindy/errors.hpp"
#include "fimsindy/features.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

using namespace fimsindy;

TEST(Library, TwoVariableDegreeTwoOrder) {
    const auto t = polynomial_terms(2, {2, true});
    ASSERT_EQ(t.size(), 6u);
    const std::vector<std::string> expect{"1", "x0", "x1", "x0^2", "x0*x1", "x1^2"};
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i].label, expect[i]);
}

TEST(Library, TermCounts) {
    EXPECT_EQ(polynomial_terms(3, {2, true}).size(), 10u);
    EXPECT_EQ(polynomial_terms(2, {3, true}).size(), 10u);
    EXPECT_EQ(polynomial_terms(3, {2, false}).size(), 9u);
    EXPECT_THROW(polynomial_terms(3, {0, true}), ArgumentError);
}

TEST(Library, SingleSampleRow) {
    Eigen::MatrixXd s(1, 2);
    s << 1, 2;
    const auto d = build_library(s);
    Eigen::RowVectorXd expect(6);
    expect << 1, 1, 2, 1, 2, 4;
    EXPECT_EQ((d.values.row(0) - expect).norm(), 0.0);
    EXPECT_TRUE((d.values.col(0).array() == 1.0).all());
}

TEST(Library, LabelsUniqueAndParseBack) {
    const auto t = polynomial_terms(3, {3, true});
    std::set<std::string> seen;
    for (const auto& term : t) {
        EXPECT_TRUE(seen.insert(term.label).second);
        EXPECT_LE(term.degree(), 3);
        EXPECT_EQ(parse_term_label(term.label, 3).exponents, term.exponents);
    }
    EXPECT_THROW(parse_term_label("x5", 3), ArgumentError);
    EXPECT_THROW(parse_term_label("y1", 3), ArgumentError);
}

TEST(Library, RowsMatchBruteForceMonomials) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3, 3);
    const auto terms = polynomial_terms(3, {3, true});
    Eigen::MatrixXd s(25, 3);
    for (auto& v : s.reshaped()) v = u(rng);
    const auto A = evaluate_terms(terms, s);
    for (int i = 0; i < s.rows(); ++i)
        for (std::size_t k = 0; k < terms.size(); ++k) {
            double v = 1.0;
            for (int j = 0; j < 3; ++j)
                for (int p = 0; p < terms[k].exponents[static_cast<std::size_t>(j)]; ++p) v *= s(i, j);
            EXPECT_NEAR(A(i, static_cast<Eigen::Index>(k)), v, 1e-12 * (1 + std::abs(v)));
        }
}

TEST(Library, EmptyTrajectoryRejected) {
    EXPECT_THROW(build_library(Eigen::MatrixXd(0, 3)), ArgumentError);
}

TEST(CentralDiff, LinearRampExact) {
    const double dt = 0.37;
    Trajectory tr;
    tr.times = Eigen::VectorXd::LinSpaced(9, 0.0, 8 * dt);
    tr.states = tr.times;
    const auto d = central_diff(tr);
    EXPECT_LT((d.values.array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(CentralDiff, QuadraticExact) {
    const double dt = 0.05;
    const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(40, 1.0, 1.0 + 39 * dt);
    Eigen::MatrixXd x(40, 2);
    x.col(0) = t.array().square();
    x.col(1) = 3.0 - 2.0 * t.array() + 0.5 * t.array().square();
    const auto d = central_diff(x, dt);
    EXPECT_LT((d.col(0) - 2.0 * t).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((d.col(1).array() - (-2.0 + t.array())).abs().maxCoeff(), 1e-10);
}

TEST(CentralDiff, SineTruncationBound) {
    const double dt = 0.01;
    const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(700, 0.0, 699 * dt);
    const Eigen::MatrixXd x = t.array().sin().matrix();
    const auto d = central_diff(x, dt);
    const Eigen::ArrayXd err = (d.col(0).array() - t.array().cos()).abs();
    // interior: (dt^2/6) max|f'''|; one-sided ends carry twice that constant
    EXPECT_LE(err.segment(1, 698).maxCoeff(), 2e-5);
    EXPECT_LE(std::max(err[0], err[699]), dt * dt / 3.0 + 1e-9);
}

TEST(CentralDiff, TooShortOrIrregularRejected) {
    EXPECT_THROW(central_diff(Eigen::MatrixXd::Zero(2, 1), 0.1), ArgumentError);
    Trajectory tr;
    tr.times.resize(4);
    tr.times << 0, 0.1, 0.2, 0.35;
    tr.states = Eigen::MatrixXd::Zero(4, 1);
    EXPECT_THROW(central_diff(tr), ArgumentError);
}

TEST(CentralDiff, NonuniformExactOnQuadratics) {
    Eigen::VectorXd t(6);
    t << 0.0, 0.01, 0.06, 0.07, 0.12, 0.2;
    Eigen::MatrixXd x(6, 1);
    x.col(0) = 1.0 + 2.0 * t.array() + 0.0 * t.array().square();
    const auto d = central_diff_nonuniform(t, x);
    EXPECT_LT((d.array() - 2.0).abs().maxCoeff(), 1e-10);
    Eigen::MatrixXd q(6, 1);
    q.col(0) = t.array().square();
    const auto dq = central_diff_nonuniform(t, q);
    EXPECT_NEAR(dq(0, 0), 0.0, 1e-10);
    EXPECT_NEAR(dq(5, 0), 0.4, 1e-10);
}

TEST(Extremes, AllZeroWindow) {
    EXPECT_EQ(count_extremes(Eigen::MatrixXd::Zero(10, 3), 0, 10, 1e-6, 1e3), 30u);
}

TEST(Extremes, MidBandCountsNothing) {
    EXPECT_EQ(count_extremes(Eigen::MatrixXd::Constant(5, 3, 25.005), 0, 5, 0.01, 50), 0u);
}

TEST(Extremes, HandWindow) {
    Eigen::MatrixXd d(4, 1);
    d << 0, 1, 100, 0.5;
    EXPECT_EQ(count_extremes(d, 0, 4, 0.01, 50), 2u);
    EXPECT_THROW(count_extremes(d, 0, 5, 0.01, 50), ArgumentError);
    EXPECT_THROW(count_extremes(d, 0, 4, 50, 0.01), ArgumentError);
}

TEST(Extremes, MonotoneInTolerances) {
    std::mt19937_64 rng(5);
    std::lognormal_distribution<double> ln(0.0, 3.0);
    Eigen::MatrixXd d(50, 3);
    for (auto& v : d.reshaped()) v = ln(rng);
    std::size_t prev = 0;
    for (double small : {1e-4, 1e-3, 1e-2, 1e-1}) {
        const auto c = count_extremes(d, 0, 50, small, 1e3);
        EXPECT_GE(c, prev);
        prev = c;
    }
    prev = 0;
    for (double large : {1e4, 1e3, 1e2, 1e1}) {
        const auto c = count_extremes(d, 0, 50, 1e-3, large);
        EXPECT_GE(c, prev);
        prev = c;
    }
}

TEST(DesignCsv, HeaderIsLabels) {
    Eigen::MatrixXd s(2, 2);
    s << 1, 2, 3, 4;
    std::stringstream ss;
    write_design_csv(ss, build_library(s));
    std::string header;
    std::getline(ss, header);
    EXPECT_EQ(header, "1,x0,x1,x0^2,x0*x1,x1^2");
}
