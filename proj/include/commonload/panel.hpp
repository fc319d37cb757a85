#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace commonload {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// T x d observation matrix, time along rows. Construction validates the
/// shape (T >= 4, d >= 2) and that every entry is finite, so any panel that
/// exists is usable by the estimators downstream.
class TimeSeriesPanel {
public:
    explicit TimeSeriesPanel(Matrix data, std::vector<std::string> series_names = {});

    const Matrix& data() const noexcept { return data_; }
    const std::vector<std::string>& series_names() const noexcept { return names_; }

    Eigen::Index periods() const noexcept { return data_.rows(); }
    Eigen::Index dimension() const noexcept { return data_.cols(); }

    /// Rows [begin, end) as a new panel; names are carried over.
    TimeSeriesPanel slice(Eigen::Index begin, Eigen::Index end) const;

private:
    Matrix data_;
    std::vector<std::string> names_;
};

struct SymmetricEigenResult {
    Vector eigenvalues;   // descending
    Matrix eigenvectors;  // columns aligned with eigenvalues, sign-normalized
};

/// Column-wise centering and scaling to unit sample variance (T-1 denominator).
/// Throws ConstantColumn on a zero-variance column.
TimeSeriesPanel standardize(const TimeSeriesPanel& panel);

/// Half-vectorization: lower triangle including the diagonal, column-major.
/// The input is symmetrized first; throws AsymmetryExceedsTolerance when
/// max|M - M'| > 1e-6.
Vector vech(const Matrix& m);

/// Inverse of vech: rebuilds the symmetric n x n matrix with n(n+1)/2 == v.size().
Matrix unvech(const Vector& v);

/// Length of vech for an n x n matrix.
constexpr Eigen::Index vech_size(Eigen::Index n) noexcept { return n * (n + 1) / 2; }

/// Flip each column so its largest-magnitude entry is positive (first index wins ties).
void normalize_signs(Matrix& vectors);

/// Top-k eigenpairs of (M + M')/2, eigenvalues descending, signs normalized.
SymmetricEigenResult sym_eig_top(const Matrix& m, Eigen::Index k);

}  // namespace commonload
