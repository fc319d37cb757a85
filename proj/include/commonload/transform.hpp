#pragma once

#include "commonload/factor_pca.hpp"

#include <string>

namespace commonload {

/// Which operator was applied to which part of which input.
struct Provenance {
    std::string source;           // e.g. "X2", "post-break segment"
    std::string first_operator;   // applied to rows [0, split_index)
    std::string second_operator;  // applied to rows [split_index, T)
};

/// Series whose loadings stay constant under the null of common loadings
/// (up to a nonsingular transformation) and break at split_index otherwise.
struct TransformedSeries {
    Matrix data;  // T x d, rows are time
    Eigen::Index split_index = 0;
    Provenance provenance;
    Matrix first_operator;   // d x d operator A with Y_t = A X_t before the split
    Matrix second_operator;  // d x d operator after the split
    Eigen::Index r_effective = 0;
};

/// Y_t = (P1 + I)/2 X2_t for t < floor(T2/2), (P2 + I)/2 X2_t afterwards,
/// with P_k the PCA loading projector of panel k.
TransformedSeries transform_two_subject(const TimeSeriesPanel& x1, const TimeSeriesPanel& x2, Eigen::Index r);

/// Splits X at break_index into pre/post segments and transforms the longer
/// one (post on ties) using projectors estimated from both segments.
/// Requires 4 <= break_index <= T-4 and both segments at least 2r+2 long.
TransformedSeries transform_changepoint(const TimeSeriesPanel& x, Eigen::Index break_index, Eigen::Index r);

/// Different factor counts (r2 <= r1): (P2 P1 + I)/2 on the first half of X2,
/// (P2 + I)/2 on the second half. Downstream tests use r_effective = r2.
TransformedSeries transform_diff_r(const TimeSeriesPanel& x1, const TimeSeriesPanel& x2, Eigen::Index r1,
                                   Eigen::Index r2);

/// Applies two d x d operators to the rows of X, switching at split_index.
Matrix apply_split_operators(const Matrix& x, Eigen::Index split_index, const Matrix& first, const Matrix& second);

}  // namespace commonload
