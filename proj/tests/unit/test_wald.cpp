#include "commonload/errors.hpp"
#include "commonload/factor_pca.hpp"
#include "commonload/rng.hpp"
#include "commonload/simulation.hpp"
#include "commonload/wald.hpp"

#include "../support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace commonload;

namespace {

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            m(i, j) = standard_normal(rng);
        }
    }
    return m;
}

// PCA factors of a simulated panel, so F'F/T = I_r.
Matrix pca_factors(Eigen::Index t, Eigen::Index d, Eigen::Index r, Rng& rng) {
    const Matrix x = normal_matrix(t, r, rng) * normal_matrix(d, r, rng).transpose() + normal_matrix(t, d, rng);
    return estimate_pca(x, r).factors;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Bandwidth, CubeRootFloor) {
    EXPECT_EQ(default_bandwidth(200), 5);
    EXPECT_EQ(default_bandwidth(216), 6);
    EXPECT_EQ(default_bandwidth(215), 5);
    EXPECT_EQ(default_bandwidth(2000), 12);
    EXPECT_EQ(default_bandwidth(1), 1);
}

TEST(Bartlett, Weights) {
    EXPECT_EQ(bartlett(0.0), 1.0);
    EXPECT_EQ(bartlett(-0.25), 0.75);
    EXPECT_EQ(bartlett(1.0), 0.0);
    EXPECT_EQ(bartlett(1.5), 0.0);
}

TEST(VStatistic, ConstantOuterProductsCancel) {
    Matrix f(6, 2);
    f << 1, 2, -1, -2, 1, 2, -1, -2, 1, 2, -1, -2;
    EXPECT_LT(max_abs(v_statistic(f)), 1e-15);
}

TEST(VStatistic, TwoPeriodsHandComputed) {
    Matrix f(2, 1);
    f << 3.0, 1.5;
    EXPECT_NEAR(v_statistic(f)(0), (9.0 - 2.25) / std::sqrt(2.0), 1e-14);
}

TEST(VStatistic, MatchesLoopOracle) {
    Rng rng(1);
    const Matrix f = normal_matrix(6, 2, rng);
    EXPECT_LT(max_abs(v_statistic(f) - oracle::v_statistic(f)), 1e-12);
    const Matrix g = normal_matrix(7, 3, rng);  // odd T splits at floor(T/2)
    EXPECT_LT(max_abs(v_statistic(g) - oracle::v_statistic(g)), 1e-12);
}

TEST(GammaJ, VanishesWhenOuterProductsEqualIdentity) {
    Matrix f(8, 1);
    f << 1, -1, 1, 1, -1, -1, 1, -1;
    for (Eigen::Index j = 0; j < 8; ++j) {
        EXPECT_LT(max_abs(gamma_j(f, j)), 1e-15);
    }
    EXPECT_THROW(gamma_j(f, 8), InvalidArgument);
    EXPECT_THROW(gamma_j(f, -1), InvalidArgument);
}

TEST(GammaJ, MatchesLoopOracle) {
    Rng rng(2);
    const Matrix f = normal_matrix(8, 2, rng);
    EXPECT_LT(max_abs(gamma_j(f, 1) - oracle::gamma_j(f, 1, oracle::identity_center(f))), 1e-12);
    EXPECT_LT(max_abs(gamma_j(f, 1, Centering::sample_moment) - oracle::gamma_j(f, 1, oracle::sample_center(f))),
              1e-12);
}

TEST(LongRunVariance, UnitBandwidthIsGammaZero) {
    Rng rng(3);
    const Matrix f = normal_matrix(30, 2, rng);
    EXPECT_EQ(long_run_variance(f, 1), gamma_j(f, 0));
}

TEST(LongRunVariance, MatchesWeightedSumOracle) {
    Rng rng(4);
    const Matrix f = normal_matrix(12, 2, rng);
    EXPECT_LT(max_abs(long_run_variance(f, 3) - oracle::long_run_variance(f, 3, oracle::identity_center(f))), 1e-12);
}

TEST(LongRunVariance, IidChiSquaredVariance) {
    Rng rng(5);
    const Eigen::Index t = 10000;
    const Matrix f = normal_matrix(t, 1, rng);
    EXPECT_NEAR(long_run_variance(f, default_bandwidth(t))(0, 0), 2.0, 0.15);
}

TEST(LongRunVariance, PositiveSemidefinite) {
    Rng rng(6);
    for (int rep = 0; rep < 50; ++rep) {
        const Eigen::Index t = 5 + rep;
        const Matrix f = normal_matrix(t, 3, rng);
        for (Eigen::Index b : {1, 2, 4, 9}) {
            const Matrix omega = long_run_variance(f, b, Centering::sample_moment);
            const double lo = Eigen::SelfAdjointEigenSolver<Matrix>(omega).eigenvalues().minCoeff();
            EXPECT_GE(lo, -1e-8 * omega.norm());
        }
    }
}

TEST(Wald, DegreesOfFreedomAndCriticalValue) {
    Rng rng(7);
    const WaldReport rep = wald(pca_factors(60, 20, 3, rng), 3);
    EXPECT_EQ(rep.df, 6);
    EXPECT_EQ(rep.v.size(), 6);
    EXPECT_GE(rep.statistic, 0.0);
    EXPECT_NEAR(chi_squared_quantile(6, 0.95), 12.592, 1e-3);
    EXPECT_NEAR(chi_squared_survival(6, chi_squared_quantile(6, 0.95)), 0.05, 1e-12);
    EXPECT_EQ(rep.reject, rep.p_value < 0.05);
}

TEST(Wald, TimeReversalFlipsVOnly) {
    Rng rng(8);
    const Matrix f = pca_factors(80, 20, 2, rng);
    const Matrix reversed = f.colwise().reverse();
    const WaldReport a = wald(f, 4);
    const WaldReport b = wald(reversed, 4);
    EXPECT_LT(max_abs(a.v + b.v), 1e-12);
    EXPECT_NEAR(a.statistic, b.statistic, 1e-10 * std::max(1.0, a.statistic));
}

TEST(Wald, InvariantUnderInvertibleRecombination) {
    Rng rng(9);
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix f = pca_factors(100, 30, 3, rng);
        const Matrix a = random_nonsingular_phi(3, 3, 0.5, 2.0, PhiMode::singular_values, rng);
        const double w = wald(f, 4).statistic;
        const double wa = wald(Matrix(f * a.transpose()), 4).statistic;
        EXPECT_NEAR(w, wa, 1e-8 * std::max(1.0, w));
    }
}

TEST(Wald, SingularOmegaIsReportedAndRidgeRecovers) {
    Rng rng(10);
    Matrix f(40, 2);
    f.col(0) = normal_matrix(40, 1, rng);
    f.col(1) = f.col(0);
    EXPECT_THROW(wald(f, 3), SingularLongRunVariance);
    WaldOptions opts;
    opts.ridge = 1e-3;
    EXPECT_NO_THROW(wald(f, 3, opts));
}

TEST(SupWald, HalfTrimmingIsExactlyWald) {
    Rng rng(11);
    const Matrix f = pca_factors(120, 25, 3, rng);
    const WaldReport w = wald(f, 4);
    const SupWaldReport s = sup_wald(f, 0.5, 4);
    ASSERT_EQ(s.trajectory.size(), 1u);
    EXPECT_EQ(s.sup_statistic, w.statistic);
    EXPECT_EQ(s.argmax_pi, 0.5);
}

TEST(SupWald, TrajectoryCoversTheWindow) {
    Rng rng(12);
    const Matrix f = pca_factors(200, 25, 2, rng);
    const SupWaldReport s = sup_wald(f, 0.45, 5, {}, 99.0);
    ASSERT_EQ(s.trajectory.size(), 21u);
    EXPECT_DOUBLE_EQ(s.trajectory.front().first, 0.45);
    EXPECT_DOUBLE_EQ(s.trajectory.back().first, 0.55);
    double best = 0.0;
    for (const auto& [pi, w] : s.trajectory) {
        best = std::max(best, w);
        if (w == s.sup_statistic) {
            EXPECT_EQ(pi, s.argmax_pi);
        }
    }
    EXPECT_EQ(best, s.sup_statistic);
    EXPECT_GE(s.sup_statistic, wald(f, 5).statistic);
    EXPECT_EQ(s.critical_value, 99.0);
    EXPECT_FALSE(s.reject);
}

TEST(SupWald, RejectsBadTrimming) {
    Rng rng(13);
    const Matrix f = normal_matrix(20, 1, rng);
    EXPECT_THROW(sup_wald(f, 0.0, 2), InvalidArgument);
    EXPECT_THROW(sup_wald(f, 0.6, 2), InvalidArgument);
}

TEST(SupWaldCriticalValue, HalfTrimmingIsChiSquared) {
    EXPECT_NEAR(sup_wald_critical_value(6, 0.5, 0.05), 12.592, 0.2);
}

TEST(SupWaldCriticalValue, NondecreasingAsWindowWidens) {
    const double a = sup_wald_critical_value(6, 0.5, 0.05);
    const double b = sup_wald_critical_value(6, 0.45, 0.05);
    const double c = sup_wald_critical_value(6, 0.3, 0.05);
    EXPECT_LE(a, b);
    EXPECT_LE(b, c);
    // Memoized: a second call returns the identical value.
    EXPECT_EQ(b, sup_wald_critical_value(6, 0.45, 0.05));
}

TEST(SupWaldCriticalValue, MatchesTabulatedFifteenPercentTrimming) {
    // Widely tabulated 5% values with 15% trimming: 8.68 for one restriction,
    // 6 x 3.37 for six.
    EXPECT_NEAR(sup_wald_critical_value(1, 0.15, 0.05), 8.68, 0.3);
    EXPECT_NEAR(sup_wald_critical_value(6, 0.15, 0.05), 6 * 3.37, 0.3);
}

TEST(Baseline, RepeatedHalvesGiveZeroStatistic) {
    Rng rng(14);
    const Matrix half = normal_matrix(30, 2, rng) * normal_matrix(12, 2, rng).transpose();
    Matrix x(60, 12);
    x << half, half;
    const WaldReport rep = baseline_changepoint_wald(TimeSeriesPanel(x), 2, 3);
    EXPECT_LT(rep.statistic, 1e-8);
    EXPECT_FALSE(rep.reject);
    EXPECT_EQ(rep.df, 3);
}

TEST(Baseline, BreakIndexRange) {
    Rng rng(15);
    const TimeSeriesPanel x(normal_matrix(20, 6, rng));
    EXPECT_THROW(baseline_changepoint_wald(x, 1, 2, {}, 1), InvalidArgument);
    EXPECT_THROW(baseline_changepoint_wald(x, 1, 2, {}, 19), InvalidArgument);
    EXPECT_NO_THROW(baseline_changepoint_wald(x, 1, 2, {}, 8));
}
