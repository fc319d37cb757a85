#include "commonload/errors.hpp"
#include "commonload/factor_pca.hpp"
#include "commonload/rng.hpp"

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

Matrix direct_projection(const Matrix& l) {
    return l * (l.transpose() * l).inverse() * l.transpose();
}

double spectral_norm(const Matrix& m) {
    return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

}  // namespace

TEST(EstimatePca, NormalizationHoldsOnBothGramBranches) {
    Rng rng(1);
    for (auto [t, d] : {std::pair<Eigen::Index, Eigen::Index>{40, 15}, {15, 40}}) {
        const Matrix x = normal_matrix(t, 3, rng) * normal_matrix(d, 3, rng).transpose() + normal_matrix(t, d, rng);
        const FactorEstimate est = estimate_pca(x, 3);
        const double td = static_cast<double>(t);
        EXPECT_LT((est.factors.transpose() * est.factors / td - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LT((est.loadings - x.transpose() * est.factors / td).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_EQ(est.r, 3);
        EXPECT_GE(est.eigenvalues(0), est.eigenvalues(1));
    }
}

TEST(EstimatePca, BothGramBranchesMatchSvd) {
    Rng rng(2);
    for (auto [t, d] : {std::pair<Eigen::Index, Eigen::Index>{30, 12}, {12, 30}}) {
        const Matrix x = normal_matrix(t, 2, rng) * normal_matrix(d, 2, rng).transpose() + 0.3 * normal_matrix(t, d, rng);
        const Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinV);
        const Matrix v = svd.matrixV().leftCols(2);
        EXPECT_LT((projection(estimate_pca(x, 2)).matrix() - v * v.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(EstimatePca, NoiselessRankOneRecoversLoadingSpan) {
    Rng rng(3);
    const Matrix f = normal_matrix(20, 1, rng);
    const Matrix l = normal_matrix(8, 1, rng);
    const FactorEstimate est = estimate_pca(Matrix(f * l.transpose()), 1);
    EXPECT_LT((projection(est).matrix() - direct_projection(l)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(EstimatePca, SimulatedPanelProjectorIsClose) {
    Rng rng(4);
    const Matrix l = normal_matrix(200, 3, rng);
    const Matrix x = normal_matrix(200, 3, rng) * l.transpose() + normal_matrix(200, 200, rng);
    const Matrix diff = projection(estimate_pca(x, 3)).matrix() - direct_projection(l);
    EXPECT_LT(spectral_norm(diff), 0.2);
}

TEST(EstimatePca, ScalingMovesOnlyTheLoadings) {
    Rng rng(5);
    const Matrix x = normal_matrix(25, 10, rng);
    const FactorEstimate a = estimate_pca(x, 2);
    const FactorEstimate b = estimate_pca(Matrix(3.0 * x), 2);
    EXPECT_LT((a.factors - b.factors).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((3.0 * a.loadings - b.loadings).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(EstimatePca, Preconditions) {
    Rng rng(6);
    const Matrix x = normal_matrix(10, 5, rng);
    EXPECT_THROW(estimate_pca(x, 0), InvalidArgument);
    EXPECT_THROW(estimate_pca(x, 5), InvalidArgument);
    const Matrix rank2 = normal_matrix(10, 2, rng) * normal_matrix(5, 2, rng).transpose();
    EXPECT_THROW(estimate_pca(rank2, 3), RankDeficient);
}

TEST(Projection, CoordinateLoadings) {
    const ProjectionOperator p = projection(Matrix(Matrix::Identity(5, 2)));
    Matrix expected = Matrix::Zero(5, 5);
    expected(0, 0) = expected(1, 1) = 1.0;
    EXPECT_LT((p.matrix() - expected).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(p.rank(), 2);
    EXPECT_EQ(p.dimension(), 5);
}

TEST(Projection, InvariantUnderNonsingularRecombination) {
    Rng rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        const Matrix l = normal_matrix(12, 3, rng);
        const Matrix phi = normal_matrix(3, 3, rng);
        EXPECT_LT((projection(l).matrix() - projection(Matrix(l * phi)).matrix()).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Projection, MatchesDirectFormula) {
    Rng rng(8);
    const Matrix l = normal_matrix(10, 3, rng);
    EXPECT_LT((projection(l).matrix() - direct_projection(l)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Projection, ProjectorInvariants) {
    Rng rng(9);
    const ProjectionOperator p = projection(normal_matrix(15, 4, rng));
    const Matrix& m = p.matrix();
    EXPECT_LT((m * m - m).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(m.trace(), 4.0, 1e-6);
    EXPECT_NEAR(spectral_norm(m), 1.0, 1e-10);
}

TEST(Projection, NestedSpacesCompose) {
    Rng rng(10);
    const Matrix l1 = normal_matrix(20, 4, rng);
    const Matrix phi2 = normal_matrix(4, 3, rng);
    const Matrix p1 = projection(l1).matrix();
    const Matrix p2 = projection(Matrix(l1 * phi2)).matrix();
    EXPECT_LT((p2 * p1 - p2).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Projection, RejectsDeficientLoadings) {
    Matrix l(6, 2);
    l.col(0).setLinSpaced(6, 1.0, 6.0);
    l.col(1) = 2.0 * l.col(0);
    EXPECT_THROW(projection(l), RankDeficient);
}

TEST(NumFactors, NoiselessRankThree) {
    Rng rng(11);
    const Matrix x = normal_matrix(60, 3, rng) * normal_matrix(40, 3, rng).transpose();
    EXPECT_EQ(estimate_num_factors(TimeSeriesPanel(x), 8), 3);
}

TEST(NumFactors, PureNoiseSelectsZero) {
    Rng rng(12);
    EXPECT_EQ(estimate_num_factors(TimeSeriesPanel(normal_matrix(200, 200, rng)), 8), 0);
}

TEST(NumFactors, CriterionVectorCoversZeroToRmax) {
    Rng rng(13);
    const Vector ic = information_criterion(TimeSeriesPanel(normal_matrix(30, 20, rng)), 5);
    EXPECT_EQ(ic.size(), 6);
    EXPECT_THROW(information_criterion(TimeSeriesPanel(normal_matrix(30, 20, rng)), 20), InvalidArgument);
}

TEST(NumFactors, RecoversThreeOnSimulatedPanels) {
    int hits = 0;
    const int reps = 200;
    for (int i = 0; i < reps; ++i) {
        Rng rng = substream(99, static_cast<std::uint64_t>(i));
        const Matrix x = normal_matrix(200, 3, rng) * normal_matrix(200, 3, rng).transpose() +
                         normal_matrix(200, 200, rng);
        hits += estimate_num_factors(standardize(TimeSeriesPanel(x)), 8) == 3 ? 1 : 0;
    }
    EXPECT_GE(hits, 190);
}
