#include "commonload/transform.hpp"

#include "commonload/errors.hpp"

#include <string>

namespace commonload {

namespace {

Matrix half_plus_identity(const Matrix& op) {
    Matrix out = 0.5 * op;
    out.diagonal().array() += 0.5;
    return out;
}

void require_same_dimension(const TimeSeriesPanel& x1, const TimeSeriesPanel& x2) {
    if (x1.dimension() != x2.dimension()) {
        throw DimensionMismatch("panels have " + std::to_string(x1.dimension()) + " and " +
                                std::to_string(x2.dimension()) + " series");
    }
}

}  // namespace

Matrix apply_split_operators(const Matrix& x, Eigen::Index split_index, const Matrix& first, const Matrix& second) {
    if (split_index < 1 || split_index >= x.rows()) {
        throw InvalidArgument("split index " + std::to_string(split_index) + " outside [1, T)");
    }
    const Eigen::Index rest = x.rows() - split_index;
    Matrix y(x.rows(), x.cols());
    // Rows are x_t', so A x_t becomes x_t' A'.
    y.topRows(split_index).noalias() = x.topRows(split_index) * first.transpose();
    y.bottomRows(rest).noalias() = x.bottomRows(rest) * second.transpose();
    return y;
}

TransformedSeries transform_two_subject(const TimeSeriesPanel& x1, const TimeSeriesPanel& x2, Eigen::Index r) {
    require_same_dimension(x1, x2);
    const ProjectionOperator p1 = projection(estimate_pca(x1, r));
    const ProjectionOperator p2 = projection(estimate_pca(x2, r));

    TransformedSeries out;
    out.split_index = x2.periods() / 2;
    out.first_operator = half_plus_identity(p1.matrix());
    out.second_operator = half_plus_identity(p2.matrix());
    out.data = apply_split_operators(x2.data(), out.split_index, out.first_operator, out.second_operator);
    out.provenance = {"X2", "(P1 + I)/2", "(P2 + I)/2"};
    out.r_effective = r;
    return out;
}

TransformedSeries transform_changepoint(const TimeSeriesPanel& x, Eigen::Index break_index, Eigen::Index r) {
    const Eigen::Index t = x.periods();
    if (break_index < 4 || break_index > t - 4) {
        throw InvalidArgument("break index " + std::to_string(break_index) + " outside [4, " +
                              std::to_string(t - 4) + "]");
    }
    const Eigen::Index pre_len = break_index;
    const Eigen::Index post_len = t - break_index;
    const Eigen::Index required = 2 * r + 2;
    if (std::min(pre_len, post_len) < required) {
        throw SegmentTooShort(static_cast<std::size_t>(std::min(pre_len, post_len)),
                              static_cast<std::size_t>(required));
    }
    const TimeSeriesPanel pre = x.slice(0, break_index);
    const TimeSeriesPanel post = x.slice(break_index, t);

    // The longer segment plays the role of the transformed subject.
    if (post_len >= pre_len) {
        TransformedSeries out = transform_two_subject(pre, post, r);
        out.provenance = {"post-break segment", "(P_pre + I)/2", "(P_post + I)/2"};
        return out;
    }
    TransformedSeries out = transform_two_subject(post, pre, r);
    out.provenance = {"pre-break segment", "(P_post + I)/2", "(P_pre + I)/2"};
    return out;
}

TransformedSeries transform_diff_r(const TimeSeriesPanel& x1, const TimeSeriesPanel& x2, Eigen::Index r1,
                                   Eigen::Index r2) {
    if (r2 > r1) {
        throw InvalidFactorOrder(static_cast<std::size_t>(r1), static_cast<std::size_t>(r2));
    }
    require_same_dimension(x1, x2);
    const ProjectionOperator p1 = projection(estimate_pca(x1, r1));
    const ProjectionOperator p2 = projection(estimate_pca(x2, r2));

    // P2 P1 = B2 (B2' B1) B1' with orthonormal bases B_k.
    const Matrix composed = p2.basis() * (p2.basis().transpose() * p1.basis()) * p1.basis().transpose();

    TransformedSeries out;
    out.split_index = x2.periods() / 2;
    out.first_operator = half_plus_identity(composed);
    out.second_operator = half_plus_identity(p2.matrix());
    out.data = apply_split_operators(x2.data(), out.split_index, out.first_operator, out.second_operator);
    out.provenance = {"X2", "(P2 P1 + I)/2", "(P2 + I)/2"};
    out.r_effective = r2;
    return out;
}

}  // namespace commonload
