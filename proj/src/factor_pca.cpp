#include "commonload/factor_pca.hpp"

#include "commonload/errors.hpp"

#include <cmath>
#include <string>

namespace commonload {

namespace {

constexpr double kRankTolerance = 1e-12;
constexpr double kLoadingRankTolerance = 1e-10;

void check_factor_count(Eigen::Index r, Eigen::Index t, Eigen::Index d, const char* what) {
    if (r < 1 || r >= std::min(t, d)) {
        throw InvalidArgument(std::string(what) + " must satisfy 1 <= r < min(d,T); got r=" + std::to_string(r) +
                              " for T=" + std::to_string(t) + ", d=" + std::to_string(d));
    }
}

/// Eigenvalues of the smaller Gram matrix, descending. The nonzero spectrum of
/// XX' and X'X coincide.
Vector gram_spectrum(const Matrix& x) {
    const Matrix gram = x.rows() <= x.cols() ? Matrix(x * x.transpose()) : Matrix(x.transpose() * x);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(gram, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw EigenFailure("Gram matrix eigenvalues did not converge");
    }
    return solver.eigenvalues().reverse();
}

}  // namespace

ProjectionOperator::ProjectionOperator(Matrix orthonormal_basis)
    : basis_(std::move(orthonormal_basis)), matrix_(basis_ * basis_.transpose()) {}

FactorEstimate estimate_pca(const TimeSeriesPanel& x, Eigen::Index r) {
    return estimate_pca(x.data(), r);
}

FactorEstimate estimate_pca(const Matrix& x, Eigen::Index r) {
    const Eigen::Index t = x.rows();
    const Eigen::Index d = x.cols();
    check_factor_count(r, t, d, "factor count");

    Matrix q;  // T x r orthonormal eigenvectors of XX'
    Vector mu;
    double trace = 0.0;
    if (t <= d) {
        const Matrix gram = x * x.transpose();
        trace = gram.trace();
        SymmetricEigenResult eig = sym_eig_top(gram, r);
        q = std::move(eig.eigenvectors);
        mu = std::move(eig.eigenvalues);
    } else {
        // Eigenvectors u of X'X map to eigenvectors Xu / sqrt(mu) of XX'.
        const Matrix gram = x.transpose() * x;
        trace = gram.trace();
        SymmetricEigenResult eig = sym_eig_top(gram, r);
        mu = std::move(eig.eigenvalues);
        if (mu(r - 1) > kRankTolerance * trace) {
            q = x * eig.eigenvectors * mu.cwiseSqrt().cwiseInverse().asDiagonal();
            normalize_signs(q);
        }
    }
    if (!(mu(r - 1) > kRankTolerance * trace)) {
        throw RankDeficient("eigenvalue " + std::to_string(r) + " of XX' is below " +
                            std::to_string(kRankTolerance) + " x trace");
    }

    const double td = static_cast<double>(t);
    FactorEstimate est;
    est.r = r;
    est.factors = std::sqrt(td) * q;
    est.loadings = x.transpose() * est.factors / td;
    est.eigenvalues = mu / (td * static_cast<double>(d));
    return est;
}

ProjectionOperator projection(const Matrix& loadings) {
    const Eigen::Index r = loadings.cols();
    if (r < 1 || r > loadings.rows()) {
        throw InvalidArgument("loadings must be d x r with 1 <= r <= d");
    }
    Eigen::JacobiSVD<Matrix> svd(loadings, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    if (!(sv(r - 1) > kLoadingRankTolerance * sv(0))) {
        throw RankDeficient("loading matrix does not have full column rank");
    }
    return ProjectionOperator(svd.matrixU().leftCols(r));
}

ProjectionOperator projection(const FactorEstimate& estimate) { return projection(estimate.loadings); }

Vector information_criterion(const TimeSeriesPanel& x, Eigen::Index r_max) {
    const Eigen::Index t = x.periods();
    const Eigen::Index d = x.dimension();
    check_factor_count(r_max, t, d, "r_max");

    const Vector spectrum = gram_spectrum(x.data());
    const double total = spectrum.sum();
    const double floor = kRankTolerance * total;
    const double dt = static_cast<double>(d) * static_cast<double>(t);
    const double penalty = (static_cast<double>(d + t) / dt) * std::log(static_cast<double>(std::min(d, t)));

    Vector ic(r_max + 1);
    double ssr = total;
    for (Eigen::Index k = 0; k <= r_max; ++k) {
        if (k > 0) {
            ssr = spectrum.tail(spectrum.size() - k).cwiseMax(0.0).sum();
        }
        ic(k) = std::log(std::max(ssr, floor) / dt) + static_cast<double>(k) * penalty;
    }
    return ic;
}

Eigen::Index estimate_num_factors(const TimeSeriesPanel& x, Eigen::Index r_max) {
    const Vector ic = information_criterion(x, r_max);
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < ic.size(); ++k) {
        if (ic(k) < ic(best)) {
            best = k;
        }
    }
    return best;
}

}  // namespace commonload
