#pragma once

#include "commonload/panel.hpp"

namespace commonload {

/// Principal-component estimate of an approximate factor model X = F L' + e.
///
/// Normalization is F'F / T = I_r and L = X'F / T, so F carries the
/// (sign-fixed) leading eigenvectors of XX' scaled by sqrt(T).
struct FactorEstimate {
    Matrix factors;      // T x r
    Matrix loadings;     // d x r
    Vector eigenvalues;  // top-r eigenvalues of XX' / (T d), descending
    Eigen::Index r = 0;
};

/// Orthogonal projector onto the column space of a loading matrix.
class ProjectionOperator {
public:
    /// Builds the projector from an orthonormal d x r basis.
    explicit ProjectionOperator(Matrix orthonormal_basis);

    const Matrix& matrix() const noexcept { return matrix_; }
    const Matrix& basis() const noexcept { return basis_; }
    Eigen::Index rank() const noexcept { return basis_.cols(); }
    Eigen::Index dimension() const noexcept { return basis_.rows(); }

private:
    Matrix basis_;
    Matrix matrix_;
};

/// PCA with r factors. Works on whichever Gram matrix (T x T or d x d) is
/// smaller. Requires 1 <= r < min(d, T); throws RankDeficient when the r-th
/// eigenvalue of XX' is below 1e-12 of its trace.
FactorEstimate estimate_pca(const TimeSeriesPanel& x, Eigen::Index r);
FactorEstimate estimate_pca(const Matrix& x, Eigen::Index r);

/// P = L (L'L)^{-1} L' computed from the left singular vectors of L.
/// Throws RankDeficient if the r-th singular value is below 1e-10 of the largest.
ProjectionOperator projection(const Matrix& loadings);
ProjectionOperator projection(const FactorEstimate& estimate);

/// Information-criterion choice of the number of factors in {0, ..., r_max}:
///
///   IC(k) = log(SSR(k) / (dT)) + k (d+T)/(dT) log(min(d,T))
///
/// with SSR(0) the total sum of squares. Residual sums below 1e-12 of the
/// total are floored there so exact low-rank panels do not chase roundoff.
Eigen::Index estimate_num_factors(const TimeSeriesPanel& x, Eigen::Index r_max);

/// Information criterion values IC(0..r_max), as minimized by estimate_num_factors.
Vector information_criterion(const TimeSeriesPanel& x, Eigen::Index r_max);

}  // namespace commonload
