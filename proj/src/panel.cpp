#include "commonload/panel.hpp"

#include "commonload/errors.hpp"

#include <cmath>
#include <string>

namespace commonload {

TimeSeriesPanel::TimeSeriesPanel(Matrix data, std::vector<std::string> series_names)
    : data_(std::move(data)), names_(std::move(series_names)) {
    if (data_.rows() < 4 || data_.cols() < 2) {
        throw InvalidArgument("panel must have at least 4 periods and 2 series, got " +
                              std::to_string(data_.rows()) + "x" + std::to_string(data_.cols()));
    }
    if (!data_.allFinite()) {
        throw InvalidArgument("panel contains non-finite entries");
    }
    if (!names_.empty() && static_cast<Eigen::Index>(names_.size()) != data_.cols()) {
        throw DimensionMismatch("got " + std::to_string(names_.size()) + " series names for " +
                                std::to_string(data_.cols()) + " columns");
    }
}

TimeSeriesPanel TimeSeriesPanel::slice(Eigen::Index begin, Eigen::Index end) const {
    if (begin < 0 || end > data_.rows() || begin >= end) {
        throw InvalidArgument("invalid row slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                              ")");
    }
    return TimeSeriesPanel(data_.middleRows(begin, end - begin), names_);
}

TimeSeriesPanel standardize(const TimeSeriesPanel& panel) {
    const Matrix& x = panel.data();
    const auto t = static_cast<double>(x.rows());
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).mean();
        const Vector centered = x.col(j).array() - mean;
        const double sd = std::sqrt(centered.squaredNorm() / (t - 1.0));
        if (!(sd > 0.0)) {
            throw ConstantColumn(static_cast<std::size_t>(j));
        }
        out.col(j) = centered / sd;
    }
    return TimeSeriesPanel(std::move(out), panel.series_names());
}

Vector vech(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw InvalidArgument("vech requires a square matrix");
    }
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-6) {
        throw AsymmetryExceedsTolerance(asym);
    }
    const Eigen::Index n = m.rows();
    Vector out(vech_size(n));
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i < n; ++i) {
            out(k++) = 0.5 * (m(i, j) + m(j, i));
        }
    }
    return out;
}

Matrix unvech(const Vector& v) {
    // Solve n(n+1)/2 = size for n.
    const auto n = static_cast<Eigen::Index>(std::lround((std::sqrt(8.0 * v.size() + 1.0) - 1.0) / 2.0));
    if (vech_size(n) != v.size()) {
        throw InvalidArgument("vector length " + std::to_string(v.size()) + " is not triangular");
    }
    Matrix out(n, n);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i < n; ++i) {
            out(i, j) = v(k);
            out(j, i) = v(k);
            ++k;
        }
    }
    return out;
}

void normalize_signs(Matrix& vectors) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        Eigen::Index best = 0;
        double best_abs = -1.0;
        for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
            const double a = std::abs(vectors(i, c));
            if (a > best_abs) {
                best_abs = a;
                best = i;
            }
        }
        if (vectors(best, c) < 0.0) {
            vectors.col(c) *= -1.0;
        }
    }
}

SymmetricEigenResult sym_eig_top(const Matrix& m, Eigen::Index k) {
    if (m.rows() != m.cols()) {
        throw InvalidArgument("sym_eig_top requires a square matrix");
    }
    const Eigen::Index n = m.rows();
    if (k < 1 || k > n) {
        throw InvalidArgument("requested " + std::to_string(k) + " eigenpairs of a " + std::to_string(n) +
                              "x" + std::to_string(n) + " matrix");
    }
    const Matrix sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw EigenFailure("self-adjoint eigensolver did not converge");
    }
    // Eigen returns ascending order.
    SymmetricEigenResult out;
    out.eigenvalues = solver.eigenvalues().tail(k).reverse();
    out.eigenvectors = solver.eigenvectors().rightCols(k).rowwise().reverse();
    normalize_signs(out.eigenvectors);
    return out;
}

}  // namespace commonload
