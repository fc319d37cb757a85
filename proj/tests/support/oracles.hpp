#pragma once

// Brute-force loop versions of the statistic building blocks. Deliberately
// naive: explicit outer products, explicit index extraction, no reuse.

#include "commonload/panel.hpp"

#include <cmath>

namespace oracle {

using commonload::Matrix;
using commonload::Vector;

inline Vector vech_loop(const Matrix& m) {
    const Eigen::Index n = m.rows();
    Vector out(n * (n + 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i < n; ++i) {
            out(k++) = m(i, j);
        }
    }
    return out;
}

inline Matrix outer_at(const Matrix& f, Eigen::Index t) {
    const Eigen::Index r = f.cols();
    Matrix o(r, r);
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = 0; j < r; ++j) {
            o(i, j) = f(t, i) * f(t, j);
        }
    }
    return o;
}

inline Vector v_statistic(const Matrix& f) {
    const Eigen::Index t_len = f.rows();
    const Eigen::Index m = t_len / 2;
    Matrix acc = Matrix::Zero(f.cols(), f.cols());
    for (Eigen::Index t = 0; t < t_len; ++t) {
        acc += (t < m ? 1.0 : -1.0) * outer_at(f, t);
    }
    return vech_loop(acc) / std::sqrt(static_cast<double>(t_len));
}

/// Centered at `center` (I_r for the plain definition).
inline Matrix gamma_j(const Matrix& f, Eigen::Index j, const Matrix& center) {
    const Eigen::Index t_len = f.rows();
    const Eigen::Index p = f.cols() * (f.cols() + 1) / 2;
    Matrix g = Matrix::Zero(p, p);
    for (Eigen::Index t = j; t < t_len; ++t) {
        const Vector a = vech_loop(outer_at(f, t) - center);
        const Vector b = vech_loop(outer_at(f, t - j) - center);
        for (Eigen::Index u = 0; u < p; ++u) {
            for (Eigen::Index w = 0; w < p; ++w) {
                g(u, w) += a(u) * b(w);
            }
        }
    }
    return g / static_cast<double>(t_len);
}

inline Matrix long_run_variance(const Matrix& f, Eigen::Index bandwidth, const Matrix& center) {
    Matrix omega = gamma_j(f, 0, center);
    for (Eigen::Index j = 1; j < f.rows(); ++j) {
        const double x = static_cast<double>(j) / static_cast<double>(bandwidth);
        const double w = std::abs(x) <= 1.0 ? 1.0 - std::abs(x) : 0.0;
        if (w == 0.0) {
            continue;
        }
        const Matrix g = gamma_j(f, j, center);
        omega += w * (g + g.transpose());
    }
    return omega;
}

inline Matrix identity_center(const Matrix& f) { return Matrix::Identity(f.cols(), f.cols()); }

inline Matrix sample_center(const Matrix& f) { return f.transpose() * f / static_cast<double>(f.rows()); }

}  // namespace oracle
