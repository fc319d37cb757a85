#include "commonload/wald.hpp"

#include "commonload/errors.hpp"
#include "commonload/factor_pca.hpp"
#include "commonload/rng.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <tuple>

namespace commonload {

namespace {

struct FactorizedOmega {
    Matrix omega;
    Eigen::LDLT<Matrix> ldlt;
    double condition_number = 0.0;
};

FactorizedOmega factorize(Matrix omega, const WaldOptions& options) {
    const auto p = static_cast<double>(omega.rows());
    if (options.ridge) {
        omega.diagonal().array() += *options.ridge * omega.trace() / p;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(omega, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw EigenFailure("long-run variance eigenvalues did not converge");
    }
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(cond <= options.max_condition)) {
        throw SingularLongRunVariance(cond);
    }
    FactorizedOmega out;
    out.ldlt.compute(omega);
    out.omega = std::move(omega);
    out.condition_number = cond;
    return out;
}

double quadratic_form(const FactorizedOmega& fo, const Vector& v) {
    return std::max(0.0, v.dot(fo.ldlt.solve(v)));
}

Vector centering_vector(const Matrix& outer, Eigen::Index r, Centering centering) {
    if (centering == Centering::sample_moment) {
        return outer.colwise().mean().transpose();
    }
    return vech(Matrix::Identity(r, r));
}

void check_level(double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw InvalidArgument("level must lie in (0,1)");
    }
}

void check_factors(const Matrix& f) {
    if (f.cols() < 1 || f.rows() < 2) {
        throw InvalidArgument("factor matrix must be T x r with T >= 2, r >= 1");
    }
}

/// V(k) = sqrt(T)(mean_{t<k} - mean_{t>=k}) of the rows of outer, written as
/// (T/k S_pre - T/(T-k) S_post) / sqrt(T) so that k = T/2 gives exactly 2 v_statistic.
Vector split_v(const Matrix& outer, Eigen::Index k) {
    const Eigen::Index t = outer.rows();
    const double td = static_cast<double>(t);
    const Vector pre = outer.topRows(k).colwise().sum().transpose();
    const Vector post = outer.bottomRows(t - k).colwise().sum().transpose();
    return (td / static_cast<double>(k) * pre - td / static_cast<double>(t - k) * post) / std::sqrt(td);
}

double split_scale(Eigen::Index k, Eigen::Index t) {
    const double pi = static_cast<double>(k) / static_cast<double>(t);
    return 1.0 / pi + 1.0 / (1.0 - pi);
}

/// Bartlett HAC of the rows of z, demeaned by their own mean and normalized by their count.
Matrix subsample_hac(const Matrix& z_raw, Eigen::Index bandwidth) {
    Matrix z = z_raw;
    z.rowwise() -= z.colwise().mean();
    const Eigen::Index n = z.rows();
    const double nd = static_cast<double>(n);
    Matrix omega = z.transpose() * z / nd;
    const Eigen::Index max_lag = std::min(bandwidth - 1, n - 1);
    for (Eigen::Index j = 1; j <= max_lag; ++j) {
        const double w = bartlett(static_cast<double>(j) / static_cast<double>(bandwidth));
        const Matrix g = z.bottomRows(n - j).transpose() * z.topRows(n - j) / nd;
        omega += w * (g + g.transpose());
    }
    return 0.5 * (omega + omega.transpose());
}

}  // namespace

Eigen::Index default_bandwidth(Eigen::Index t) {
    auto b = static_cast<Eigen::Index>(std::floor(std::cbrt(static_cast<double>(t))));
    while ((b + 1) * (b + 1) * (b + 1) <= t) {
        ++b;
    }
    while (b > 0 && b * b * b > t) {
        --b;
    }
    return std::max<Eigen::Index>(1, b);
}

double bartlett(double x) noexcept {
    const double a = std::abs(x);
    return a <= 1.0 ? 1.0 - a : 0.0;
}

Matrix vech_outer_products(const Matrix& f) {
    const Eigen::Index r = f.cols();
    Matrix out(f.rows(), vech_size(r));
    for (Eigen::Index t = 0; t < f.rows(); ++t) {
        Eigen::Index k = 0;
        for (Eigen::Index j = 0; j < r; ++j) {
            for (Eigen::Index i = j; i < r; ++i) {
                out(t, k++) = f(t, i) * f(t, j);
            }
        }
    }
    return out;
}

Vector v_statistic(const Matrix& f) {
    check_factors(f);
    const Eigen::Index t = f.rows();
    const Eigen::Index m = t / 2;
    const Matrix outer = vech_outer_products(f);
    const Vector diff = outer.topRows(m).colwise().sum() - outer.bottomRows(t - m).colwise().sum();
    return diff / std::sqrt(static_cast<double>(t));
}

Matrix gamma_j(const Matrix& f, Eigen::Index j, Centering centering) {
    check_factors(f);
    const Eigen::Index t = f.rows();
    if (j < 0 || j > t - 1) {
        throw InvalidArgument("lag " + std::to_string(j) + " outside [0, T-1]");
    }
    Matrix z = vech_outer_products(f);
    z.rowwise() -= centering_vector(z, f.cols(), centering).transpose();
    const Eigen::Index n = t - j;
    return z.bottomRows(n).transpose() * z.topRows(n) / static_cast<double>(t);
}

Matrix long_run_variance(const Matrix& f, Eigen::Index bandwidth, Centering centering) {
    check_factors(f);
    if (bandwidth < 1) {
        throw InvalidArgument("bandwidth must be at least 1");
    }
    const Eigen::Index t = f.rows();
    Matrix z = vech_outer_products(f);
    z.rowwise() -= centering_vector(z, f.cols(), centering).transpose();
    const double td = static_cast<double>(t);

    Matrix omega = z.transpose() * z / td;
    const Eigen::Index max_lag = std::min(bandwidth - 1, t - 1);
    for (Eigen::Index j = 1; j <= max_lag; ++j) {
        const double w = bartlett(static_cast<double>(j) / static_cast<double>(bandwidth));
        const Eigen::Index n = t - j;
        const Matrix g = z.bottomRows(n).transpose() * z.topRows(n) / td;
        omega += w * (g + g.transpose());
    }
    return 0.5 * (omega + omega.transpose());
}

WaldReport wald(const Matrix& f, Eigen::Index bandwidth, const WaldOptions& options) {
    check_level(options.level);
    WaldReport report;
    report.v = v_statistic(f);
    FactorizedOmega fo = factorize(long_run_variance(f, bandwidth, options.centering), options);
    report.statistic = quadratic_form(fo, report.v);
    report.omega = std::move(fo.omega);
    report.condition_number = fo.condition_number;
    report.df = vech_size(f.cols());
    report.p_value = chi_squared_survival(static_cast<double>(report.df), report.statistic);
    report.bandwidth = bandwidth;
    report.level = options.level;
    report.reject = report.p_value < options.level;
    return report;
}

SupWaldReport sup_wald(const Matrix& f, double pi0, Eigen::Index bandwidth, const WaldOptions& options,
                       std::optional<double> critical_value, const CriticalValueOptions& cv_options) {
    check_level(options.level);
    if (!(pi0 > 0.0 && pi0 <= 0.5)) {
        throw InvalidArgument("pi0 must lie in (0, 1/2]");
    }
    check_factors(f);
    const Eigen::Index t = f.rows();
    const FactorizedOmega fo = factorize(long_run_variance(f, bandwidth, options.centering), options);

    Eigen::Index k_lo = static_cast<Eigen::Index>(std::ceil(pi0 * static_cast<double>(t) - 1e-9));
    Eigen::Index k_hi = static_cast<Eigen::Index>(std::floor((1.0 - pi0) * static_cast<double>(t) + 1e-9));
    k_lo = std::max<Eigen::Index>(k_lo, 1);
    k_hi = std::min<Eigen::Index>(k_hi, t - 1);
    if (k_lo > k_hi) {
        // Odd T with pi0 = 1/2: fall back to the midpoint split used by wald().
        k_lo = k_hi = t / 2;
    }

    const Matrix outer = vech_outer_products(f);

    SupWaldReport report;
    report.pi0 = pi0;
    report.level = options.level;
    report.bandwidth = bandwidth;
    report.df = vech_size(f.cols());
    report.sup_statistic = -1.0;
    for (Eigen::Index k = k_lo; k <= k_hi; ++k) {
        const double pi = static_cast<double>(k) / static_cast<double>(t);
        const double w = quadratic_form(fo, split_v(outer, k)) / split_scale(k, t);
        report.trajectory.emplace_back(pi, w);
        if (w > report.sup_statistic) {
            report.sup_statistic = w;
            report.argmax_pi = pi;
        }
    }
    report.critical_value = critical_value ? *critical_value
                                           : sup_wald_critical_value(report.df, pi0, options.level, cv_options);
    report.reject = report.sup_statistic > report.critical_value;
    return report;
}

double sup_wald_critical_value(Eigen::Index p, double pi0, double level, const CriticalValueOptions& options) {
    if (p < 1) {
        throw InvalidArgument("degrees of freedom must be positive");
    }
    if (!(pi0 > 0.0 && pi0 <= 0.5)) {
        throw InvalidArgument("pi0 must lie in (0, 1/2]");
    }
    check_level(level);
    if (options.n_paths < 1 || options.grid_points < 2) {
        throw InvalidArgument("need at least one path and two grid points");
    }

    using Key = std::tuple<Eigen::Index, double, double, std::size_t, std::uint64_t, std::size_t>;
    static std::mutex mutex;
    static std::map<Key, double> cache;
    const Key key{p, pi0, level, options.n_paths, options.seed, options.grid_points};
    {
        std::lock_guard<std::mutex> lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) {
            return it->second;
        }
    }

    const auto n = static_cast<Eigen::Index>(options.grid_points);
    const double nd = static_cast<double>(n);
    Eigen::Index i_lo = static_cast<Eigen::Index>(std::ceil(pi0 * nd - 1e-9));
    Eigen::Index i_hi = static_cast<Eigen::Index>(std::floor((1.0 - pi0) * nd + 1e-9));
    i_lo = std::max<Eigen::Index>(i_lo, 1);
    i_hi = std::min<Eigen::Index>(i_hi, n - 1);
    const double step_sd = std::sqrt(1.0 / nd);
    const double t_lo = static_cast<double>(i_lo) / nd;
    const double t_hi = static_cast<double>(i_hi) / nd;

    // Only B on [t_lo, t_hi] and B(1) enter the functional, so the path is
    // drawn there exactly: B(t_lo), grid increments, then B(1) - B(t_hi).
    std::vector<double> sups(options.n_paths);
    Matrix window(p, i_hi - i_lo + 1);
    for (std::size_t s = 0; s < options.n_paths; ++s) {
        Rng rng = substream(options.seed, s);
        for (Eigen::Index c = 0; c < p; ++c) {
            window(c, 0) = std::sqrt(t_lo) * standard_normal(rng);
        }
        for (Eigen::Index i = 1; i < window.cols(); ++i) {
            for (Eigen::Index c = 0; c < p; ++c) {
                window(c, i) = window(c, i - 1) + step_sd * standard_normal(rng);
            }
        }
        Vector end = window.col(window.cols() - 1);
        for (Eigen::Index c = 0; c < p; ++c) {
            end(c) += std::sqrt(1.0 - t_hi) * standard_normal(rng);
        }
        double best = 0.0;
        for (Eigen::Index i = 0; i < window.cols(); ++i) {
            const double pi = static_cast<double>(i_lo + i) / nd;
            const double q = (window.col(i) - pi * end).squaredNorm() / (pi * (1.0 - pi));
            best = std::max(best, q);
        }
        sups[s] = best;
    }

    const auto rank = static_cast<std::size_t>(std::ceil((1.0 - level) * static_cast<double>(sups.size())));
    const std::size_t idx = std::min(sups.size() - 1, rank == 0 ? 0 : rank - 1);
    std::nth_element(sups.begin(), sups.begin() + static_cast<std::ptrdiff_t>(idx), sups.end());
    const double value = sups[idx];

    std::lock_guard<std::mutex> lock(mutex);
    cache.emplace(key, value);
    return value;
}

WaldReport baseline_changepoint_wald(const TimeSeriesPanel& x, Eigen::Index r_pseudo, Eigen::Index bandwidth,
                                     const WaldOptions& options, std::optional<Eigen::Index> break_index) {
    check_level(options.level);
    if (bandwidth < 1) {
        throw InvalidArgument("bandwidth must be at least 1");
    }
    const FactorEstimate est = estimate_pca(x, r_pseudo);
    const Eigen::Index t = x.periods();
    const Eigen::Index k = break_index.value_or(t / 2);
    if (k < 2 || k > t - 2) {
        throw InvalidArgument("break index " + std::to_string(k) + " outside [2, T-2]");
    }
    const Matrix outer = vech_outer_products(est.factors);
    const double pi = static_cast<double>(k) / static_cast<double>(t);
    const Matrix omega =
        subsample_hac(outer.topRows(k), bandwidth) / pi + subsample_hac(outer.bottomRows(t - k), bandwidth) / (1.0 - pi);
    const FactorizedOmega fo = factorize(omega, options);

    WaldReport report;
    report.v = split_v(outer, k);
    report.statistic = quadratic_form(fo, report.v);
    report.omega = fo.omega;
    report.condition_number = fo.condition_number;
    report.df = vech_size(r_pseudo);
    report.p_value = chi_squared_survival(static_cast<double>(report.df), report.statistic);
    report.bandwidth = bandwidth;
    report.level = options.level;
    report.reject = report.p_value < options.level;
    return report;
}

double chi_squared_quantile(double df, double probability) {
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(df), probability);
}

double chi_squared_survival(double df, double x) {
    if (x <= 0.0) {
        return 1.0;
    }
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(df), x));
}

}  // namespace commonload
