#pragma once

#include "commonload/panel.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace commonload {

/// What vech(F_t F_t') is centered at inside the autocovariances.
enum class Centering {
    identity,       // I_r, the population moment of PCA-normalized factors
    sample_moment,  // F'F / T; equals I_r for PCA output, makes W invariant under F -> F A'
};

struct WaldOptions {
    double level = 0.05;
    Centering centering = Centering::sample_moment;
    /// When set, adds ridge * trace(Omega) / p to the diagonal of Omega before inversion.
    std::optional<double> ridge;
    /// Largest admissible condition number of Omega.
    double max_condition = 1e12;
};

struct WaldReport {
    Vector v;        // length p = r(r+1)/2
    Matrix omega;    // p x p long-run variance actually inverted
    double statistic = 0.0;
    Eigen::Index df = 0;
    double p_value = 1.0;
    Eigen::Index bandwidth = 0;
    double level = 0.05;
    bool reject = false;
    double condition_number = 0.0;
};

struct SupWaldReport {
    double sup_statistic = 0.0;
    double argmax_pi = 0.5;
    double pi0 = 0.5;
    double critical_value = 0.0;
    double level = 0.05;
    Eigen::Index df = 0;
    Eigen::Index bandwidth = 0;
    bool reject = false;
    std::vector<std::pair<double, double>> trajectory;  // (pi, W(pi))
};

struct CriticalValueOptions {
    std::size_t n_paths = 20000;
    std::uint64_t seed = 20240601;
    std::size_t grid_points = 3600;  // steps on [0, 1]
};

/// floor(T^{1/3}), at least 1.
Eigen::Index default_bandwidth(Eigen::Index t);

/// Bartlett weight (1 - |x|) on |x| <= 1.
double bartlett(double x) noexcept;

/// Rows vech(F_t F_t'), T x r(r+1)/2.
Matrix vech_outer_products(const Matrix& f);

/// vech((1/sqrt(T)) (sum_{t<m} F_t F_t' - sum_{t>=m} F_t F_t')), m = floor(T/2).
Vector v_statistic(const Matrix& f);

/// (1/T) sum_{t=j}^{T-1} z_t z_{t-j}' with z_t = vech(F_t F_t' - C).
Matrix gamma_j(const Matrix& f, Eigen::Index j, Centering centering = Centering::identity);

/// Bartlett-weighted HAC estimate Gamma_0 + sum_j k(j/b)(Gamma_j + Gamma_j').
Matrix long_run_variance(const Matrix& f, Eigen::Index bandwidth, Centering centering = Centering::identity);

/// W = V' Omega^{-1} V against chi^2(r(r+1)/2). Throws SingularLongRunVariance
/// when Omega's condition number exceeds options.max_condition.
WaldReport wald(const Matrix& f, Eigen::Index bandwidth, const WaldOptions& options = {});

/// sup over splits k/T in [pi0, 1-pi0] of the split-indexed Wald statistic,
/// reusing the full-sample Omega scaled by 1/pi + 1/(1-pi). The critical value
/// comes from sup_wald_critical_value unless critical_value is supplied.
SupWaldReport sup_wald(const Matrix& f, double pi0, Eigen::Index bandwidth, const WaldOptions& options = {},
                       std::optional<double> critical_value = std::nullopt,
                       const CriticalValueOptions& cv_options = {});

/// (1 - level) quantile of sup_{pi in [pi0, 1-pi0]} |B(pi) - pi B(1)|^2 / (pi (1 - pi))
/// for a p-dimensional standard Brownian motion B, by seeded simulation.
/// Results are memoized per (p, pi0, level, options).
double sup_wald_critical_value(Eigen::Index p, double pi0, double level, const CriticalValueOptions& options = {});

/// Change-point Wald test on r_pseudo PCA factors of the raw (untransformed)
/// panel at pi = k / T, k = break_index or floor(T/2). Omega is
/// S_pre / pi + S_post / (1 - pi) with each S a Bartlett HAC of its own
/// subsample, demeaned within that subsample.
WaldReport baseline_changepoint_wald(const TimeSeriesPanel& x, Eigen::Index r_pseudo, Eigen::Index bandwidth,
                                     const WaldOptions& options = {},
                                     std::optional<Eigen::Index> break_index = std::nullopt);

double chi_squared_quantile(double df, double probability);
double chi_squared_survival(double df, double x);

}  // namespace commonload
