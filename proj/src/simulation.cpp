#include "commonload/simulation.hpp"

#include "commonload/errors.hpp"
#include "commonload/factor_pca.hpp"
#include "commonload/transform.hpp"

#include <boost/random/cauchy_distribution.hpp>

#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <utility>

namespace commonload {

namespace {

struct FamilyName {
    DgpFamily family;
    const char* name;
};

constexpr std::array<FamilyName, 18> kFamilies{{
    {DgpFamily::NDGP1, "NDGP1"},       {DgpFamily::NDGP2, "NDGP2"},       {DgpFamily::NDGP3, "NDGP3"},
    {DgpFamily::NDGP4, "NDGP4"},       {DgpFamily::ADGP1, "ADGP1"},       {DgpFamily::ADGP2, "ADGP2"},
    {DgpFamily::ADGP3, "ADGP3"},       {DgpFamily::ADGP4, "ADGP4"},       {DgpFamily::NDGPcp1, "NDGPcp1"},
    {DgpFamily::NDGPcp2, "NDGPcp2"},   {DgpFamily::ADGPcp1, "ADGPcp1"},   {DgpFamily::ADGPcp2, "ADGPcp2"},
    {DgpFamily::ADGPcp3, "ADGPcp3"},   {DgpFamily::NDGPdnf1, "NDGPdnf1"}, {DgpFamily::NDGPdnf2, "NDGPdnf2"},
    {DgpFamily::NDGPdnf3, "NDGPdnf3"}, {DgpFamily::NDGPdnf4, "NDGPdnf4"}, {DgpFamily::EIGEXT, "EIGEXT"},
}};

// Rotation matrices in the null designs have eigen/singular values in this interval.
constexpr double kPhiLo = 0.75;
constexpr double kPhiHi = 1.25;
// AR(1) factor recursion as listed for NDGP3 / NDGPdnf2,3; the innovation
// variance 1 - 0.7^2 is kept as written even though the coefficient is 0.5.
constexpr double kFactorAr = 0.5;
const double kFactorInnovationSd = std::sqrt(1.0 - 0.7 * 0.7);
constexpr double kErrorAr = 0.5;

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double mean, double sd, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            m(i, j) = mean + sd * standard_normal(rng);
        }
    }
    return m;
}

Matrix cauchy(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    boost::random::cauchy_distribution<double> dist(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            m(i, j) = dist(rng);
        }
    }
    return m;
}

Matrix iid_factors(Eigen::Index t, Eigen::Index r, Rng& rng) { return gaussian(t, r, 0.0, 1.0, rng); }

Matrix ar_factors(Eigen::Index t, Eigen::Index r, Rng& rng) {
    Matrix f(t, r);
    for (Eigen::Index j = 0; j < r; ++j) {
        f.col(j) = ar1_path(t, kFactorAr, kFactorInnovationSd, rng);
    }
    return f;
}

Matrix iid_errors(Eigen::Index t, Eigen::Index d, double variance, Rng& rng) {
    return gaussian(t, d, 0.0, std::sqrt(variance), rng);
}

/// eps_{i,t} = sigma_i v_{i,t}, v AR(1) with unit innovations, sigma_i ~ U(0.5, 1.5).
Matrix ar_hetero_errors(Eigen::Index t, Eigen::Index d, Rng& rng) {
    Matrix e(t, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double sigma = uniform(rng, 0.5, 1.5);
        e.col(i) = sigma * ar1_path(t, kErrorAr, 1.0, rng);
    }
    return e;
}

Matrix rotation(Eigen::Index r, Rng& rng) {
    return random_nonsingular_phi(r, r, kPhiLo, kPhiHi, PhiMode::eigenvalues, rng);
}

Matrix sv_rotation(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    return random_nonsingular_phi(rows, cols, kPhiLo, kPhiHi, PhiMode::singular_values, rng);
}

TimeSeriesPanel factor_panel(const Matrix& factors, const Matrix& loadings, const Matrix& errors) {
    return TimeSeriesPanel(factors * loadings.transpose() + errors);
}

Eigen::Index break_of(const DgpSpec& spec) {
    return static_cast<Eigen::Index>(std::floor(spec.pi * static_cast<double>(spec.T) + 1e-9));
}

/// (Pi_2, Lambda Phi) with Pi_2 of width r - c and Phi an r x c Gaussian matrix.
Matrix partial_rotation(const Matrix& lambda, Eigen::Index c, const Matrix& pi2, Rng& rng) {
    const Eigen::Index r = lambda.cols();
    const Matrix phi = gaussian(r, c, 0.0, 1.0, rng);
    Matrix out(lambda.rows(), r);
    out.leftCols(r - c) = pi2;
    out.rightCols(c) = lambda * phi;
    return out;
}

/// Changepoint panel: loadings_pre on rows [0, k), loadings_post on [k, T).
ChangepointData splice(const Matrix& factors_pre, const Matrix& loadings_pre, const Matrix& factors_post,
                       const Matrix& loadings_post, const Matrix& errors, Eigen::Index k) {
    const Eigen::Index t = errors.rows();
    Matrix x(t, errors.cols());
    x.topRows(k) = factors_pre.topRows(k) * loadings_pre.transpose();
    x.bottomRows(t - k) = factors_post.bottomRows(t - k) * loadings_post.transpose();
    x += errors;
    return ChangepointData{TimeSeriesPanel(std::move(x)), k};
}

GeneratedData generate_two_subject(const DgpSpec& s, Rng& rng) {
    const Eigen::Index d = s.d;
    const Eigen::Index t = s.T;
    const Eigen::Index r = s.r;
    switch (s.family) {
        case DgpFamily::NDGP1: {
            const Matrix lambda = gaussian(d, r, 0.0, 1.0, rng);
            const Matrix phi2 = rotation(r, rng);
            TimeSeriesPanel x1 = factor_panel(iid_factors(t, r, rng), lambda, iid_errors(t, d, 1.0, rng));
            TimeSeriesPanel x2 = factor_panel(iid_factors(t, r, rng), lambda * phi2, iid_errors(t, d, 1.0, rng));
            return TwoSubjectData{std::move(x1), std::move(x2)};
        }
        case DgpFamily::NDGP2:
        case DgpFamily::NDGP3:
        case DgpFamily::NDGP4: {
            const Matrix lambda = gaussian(d, r, 0.0, 1.0, rng);
            const Matrix phi1 = rotation(r, rng);
            const Matrix phi2 = rotation(r, rng);
            const bool ar_f = s.family == DgpFamily::NDGP3;
            auto factors = [&] { return ar_f ? ar_factors(t, r, rng) : iid_factors(t, r, rng); };
            Matrix f1 = factors();
            Matrix e1 = s.family == DgpFamily::NDGP2 ? ar_hetero_errors(t, d, rng) : iid_errors(t, d, 1.0, rng);
            Matrix f2 = factors();
            Matrix e2 = s.family == DgpFamily::NDGP3 ? iid_errors(t, d, 1.0, rng) : ar_hetero_errors(t, d, rng);
            return TwoSubjectData{factor_panel(f1, lambda * phi1, e1), factor_panel(f2, lambda * phi2, e2)};
        }
        case DgpFamily::ADGP1:
        case DgpFamily::ADGP2: {
            const Matrix lambda = gaussian(d, r, s.b / 2.0, 1.0, rng);
            const Matrix lambda2 = shift_loadings(lambda, s.b, s.family == DgpFamily::ADGP1 ? 1.0 : s.a);
            const double var = 1.0 + s.b * s.b / 4.0;
            TimeSeriesPanel x1 = factor_panel(iid_factors(t, r, rng), lambda, iid_errors(t, d, var, rng));
            TimeSeriesPanel x2 = factor_panel(iid_factors(t, r, rng), lambda2, iid_errors(t, d, var, rng));
            return TwoSubjectData{std::move(x1), std::move(x2)};
        }
        case DgpFamily::ADGP3:
        case DgpFamily::ADGP4: {
            const Matrix lambda = gaussian(d, r, 0.0, 1.0, rng);
            const Matrix pi2 = s.family == DgpFamily::ADGP3 ? gaussian(d, r - s.c, 0.0, std::sqrt(2.0), rng)
                                                            : cauchy(d, r - s.c, rng);
            const Matrix lambda2 = partial_rotation(lambda, s.c, pi2, rng);
            TimeSeriesPanel x1 = factor_panel(iid_factors(t, r, rng), lambda, iid_errors(t, d, 1.0, rng));
            TimeSeriesPanel x2 = factor_panel(iid_factors(t, r, rng), lambda2, iid_errors(t, d, 1.0, rng));
            return TwoSubjectData{std::move(x1), std::move(x2)};
        }
        case DgpFamily::EIGEXT: {
            const Matrix lambda = gaussian(d, r, 0.0, 1.0, rng);
            const Matrix u = random_orthogonal(r, rng);
            Vector eig(r);
            for (Eigen::Index i = 0; i < r; ++i) {
                eig(i) = i == 0 ? s.e : (i == r - 1 ? s.f : uniform(rng, s.e, s.f));
            }
            const Matrix phi = u * eig.asDiagonal() * u.transpose();
            TimeSeriesPanel x1 = factor_panel(iid_factors(t, r, rng), lambda, iid_errors(t, d, 1.0, rng));
            TimeSeriesPanel x2 = factor_panel(iid_factors(t, r, rng), lambda * phi, iid_errors(t, d, 1.0, rng));
            return TwoSubjectData{std::move(x1), std::move(x2)};
        }
        case DgpFamily::NDGPdnf1:
        case DgpFamily::NDGPdnf2: {
            const Matrix lambda = gaussian(d, s.r1, 0.0, 1.0, rng);
            const Matrix phi2 = sv_rotation(s.r1, s.r2, rng);
            Matrix f1 = s.family == DgpFamily::NDGPdnf2 ? ar_factors(t, s.r1, rng) : iid_factors(t, s.r1, rng);
            TimeSeriesPanel x1 = factor_panel(f1, lambda, iid_errors(t, d, 1.0, rng));
            TimeSeriesPanel x2 = factor_panel(iid_factors(t, s.r2, rng), lambda * phi2, iid_errors(t, d, 1.0, rng));
            return TwoSubjectData{std::move(x1), std::move(x2)};
        }
        default:
            throw UnknownFamily(to_string(s.family));
    }
}

GeneratedData generate_changepoint(const DgpSpec& s, Rng& rng) {
    const Eigen::Index d = s.d;
    const Eigen::Index t = s.T;
    const Eigen::Index r = s.r;
    const Eigen::Index k = break_of(s);
    switch (s.family) {
        case DgpFamily::NDGPcp1:
        case DgpFamily::NDGPcp2: {
            const Matrix lambda = gaussian(d, r, 0.0, 1.0, rng);
            const Matrix phi1 = s.family == DgpFamily::NDGPcp1 ? Matrix(Matrix::Identity(r, r)) : rotation(r, rng);
            const Matrix phi2 = rotation(r, rng);
            const Matrix f = iid_factors(t, r, rng);
            const Matrix e = s.family == DgpFamily::NDGPcp1 ? iid_errors(t, d, 1.0, rng) : ar_hetero_errors(t, d, rng);
            return splice(f, lambda * phi1, f, lambda * phi2, e, k);
        }
        case DgpFamily::ADGPcp1:
        case DgpFamily::ADGPcp2: {
            const Matrix lambda = gaussian(d, r, s.b / 2.0, 1.0, rng);
            const Matrix lambda2 = shift_loadings(lambda, s.b, s.family == DgpFamily::ADGPcp1 ? 1.0 : s.a);
            const Matrix f = iid_factors(t, r, rng);
            const Matrix e = iid_errors(t, d, 1.0 + s.b * s.b / 4.0, rng);
            return splice(f, lambda, f, lambda2, e, k);
        }
        case DgpFamily::ADGPcp3: {
            const Matrix lambda = gaussian(d, r, 0.0, 1.0, rng);
            const Matrix lambda2 = partial_rotation(lambda, s.c, cauchy(d, r - s.c, rng), rng);
            const Matrix f = iid_factors(t, r, rng);
            const Matrix e = iid_errors(t, d, 1.0, rng);
            return splice(f, lambda, f, lambda2, e, k);
        }
        case DgpFamily::NDGPdnf3:
        case DgpFamily::NDGPdnf4: {
            const Matrix lambda = gaussian(d, s.r1, 0.0, 1.0, rng);
            const Matrix phi1 = sv_rotation(s.r1, s.r1, rng);
            const Matrix phi2 = sv_rotation(s.r1, s.r2, rng);
            const Matrix f = s.family == DgpFamily::NDGPdnf3 ? ar_factors(t, s.r1, rng) : iid_factors(t, s.r1, rng);
            const Matrix e = iid_errors(t, d, 1.0, rng);
            // Post-break the model loads on the first r2 factor coordinates.
            return splice(f, lambda * phi1, f.leftCols(s.r2), lambda * phi2, e, k);
        }
        default:
            throw UnknownFamily(to_string(s.family));
    }
}

const TimeSeriesPanel& maybe_standardized(const TimeSeriesPanel& x, bool on, std::optional<TimeSeriesPanel>& slot) {
    if (!on) {
        return x;
    }
    slot.emplace(standardize(x));
    return *slot;
}

}  // namespace

Matrix shift_loadings(const Matrix& lambda, double b, double a) {
    const auto rows = static_cast<Eigen::Index>(std::floor(a * static_cast<double>(lambda.rows()) + 1e-9));
    Matrix out = lambda;
    out.topRows(rows).array() -= b;
    return out;
}

std::string to_string(DgpFamily family) {
    for (const auto& entry : kFamilies) {
        if (entry.family == family) {
            return entry.name;
        }
    }
    return "unknown";
}

std::string to_string(Pipeline pipeline) {
    switch (pipeline) {
        case Pipeline::wald: return "wald";
        case Pipeline::sup_wald: return "sup_wald";
        case Pipeline::baseline: return "baseline";
    }
    return "unknown";
}

DgpFamily family_from_string(const std::string& name) {
    for (const auto& entry : kFamilies) {
        if (name == entry.name) {
            return entry.family;
        }
    }
    throw UnknownFamily(name);
}

Pipeline pipeline_from_string(const std::string& name) {
    if (name == "wald") return Pipeline::wald;
    if (name == "sup_wald" || name == "sup-wald") return Pipeline::sup_wald;
    if (name == "baseline") return Pipeline::baseline;
    throw InvalidArgument("unknown pipeline '" + name + "'");
}

std::vector<DgpFamily> all_families() {
    std::vector<DgpFamily> out;
    for (const auto& entry : kFamilies) {
        out.push_back(entry.family);
    }
    return out;
}

Workflow workflow_of(DgpFamily family) {
    switch (family) {
        case DgpFamily::NDGPcp1:
        case DgpFamily::NDGPcp2:
        case DgpFamily::ADGPcp1:
        case DgpFamily::ADGPcp2:
        case DgpFamily::ADGPcp3:
            return Workflow::changepoint;
        case DgpFamily::NDGPdnf1:
        case DgpFamily::NDGPdnf2:
            return Workflow::two_subject_diff_r;
        case DgpFamily::NDGPdnf3:
        case DgpFamily::NDGPdnf4:
            return Workflow::changepoint_diff_r;
        default:
            return Workflow::two_subject;
    }
}

DgpSpec DgpSpec::defaults(DgpFamily family, Eigen::Index d, Eigen::Index T) {
    DgpSpec s;
    s.family = family;
    s.d = d;
    s.T = T;
    switch (family) {
        case DgpFamily::ADGP3:
        case DgpFamily::ADGP4:
        case DgpFamily::ADGPcp3:
            s.r = 4;
            break;
        case DgpFamily::NDGPdnf1:
        case DgpFamily::NDGPdnf2:
        case DgpFamily::NDGPdnf3:
        case DgpFamily::NDGPdnf4:
            s.r = s.r1;
            break;
        default:
            s.r = 3;
    }
    return s;
}

Eigen::Index DgpSpec::effective_r() const {
    const Workflow w = workflow_of(family);
    return (w == Workflow::two_subject_diff_r || w == Workflow::changepoint_diff_r) ? r2 : r;
}

void DgpSpec::validate() const {
    auto fail = [](const std::string& msg) { throw InvalidArgument("invalid DGP spec: " + msg); };
    if (d < 2 || T < 4) fail("need d >= 2 and T >= 4");
    const Workflow w = workflow_of(family);
    const bool dnf = w == Workflow::two_subject_diff_r || w == Workflow::changepoint_diff_r;
    if (dnf) {
        if (r2 < 1 || r1 < r2) fail("need 1 <= r2 <= r1");
        if (r1 >= std::min(d, T)) fail("r1 must be below min(d, T)");
    } else if (r < 1 || r >= std::min(d, T)) {
        fail("r must satisfy 1 <= r < min(d, T)");
    }
    if (!(b >= 0.0) || !std::isfinite(b)) fail("b must be finite and nonnegative");
    if (!(a >= 0.0 && a <= 1.0)) fail("a must lie in [0, 1]");
    if (family == DgpFamily::ADGP3 || family == DgpFamily::ADGP4 || family == DgpFamily::ADGPcp3) {
        if (c < 1 || c > r) fail("c must lie in [1, r]");
    }
    if (!(pi > 0.0 && pi < 1.0)) fail("pi must lie in (0, 1)");
    if (!(e > 0.0 && e <= f) || !std::isfinite(f)) fail("need 0 < e <= f");
}

Matrix random_orthogonal(Eigen::Index n, Rng& rng) {
    const Matrix g = gaussian(n, n, 0.0, 1.0, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    const Matrix& rmat = qr.matrixQR();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (rmat(i, i) < 0.0) {
            q.col(i) *= -1.0;
        }
    }
    return q;
}

Matrix random_nonsingular_phi(Eigen::Index rows, Eigen::Index cols, double lo, double hi, PhiMode mode, Rng& rng) {
    if (!(lo > 0.0 && lo <= hi)) {
        throw InvalidArgument("need 0 < lo <= hi");
    }
    if (rows < 1 || cols < 1) {
        throw InvalidArgument("Phi must have positive dimensions");
    }
    if (mode == PhiMode::eigenvalues) {
        if (rows != cols) {
            throw InvalidArgument("eigenvalue mode requires a square Phi");
        }
        const Matrix u = random_orthogonal(rows, rng);
        Vector lambda(rows);
        for (Eigen::Index i = 0; i < rows; ++i) {
            lambda(i) = uniform(rng, lo, hi);
        }
        return u * lambda.asDiagonal() * u.transpose();
    }
    const Eigen::Index k = std::min(rows, cols);
    const Matrix u = random_orthogonal(rows, rng);
    const Matrix v = random_orthogonal(cols, rng);
    Vector sigma(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        sigma(i) = uniform(rng, lo, hi);
    }
    return u.leftCols(k) * sigma.asDiagonal() * v.leftCols(k).transpose();
}

Vector ar1_path(Eigen::Index T, double coef, double innovation_sd, Rng& rng) {
    if (!(std::abs(coef) < 1.0)) {
        throw InvalidArgument("AR(1) coefficient must satisfy |coef| < 1");
    }
    if (T < 1) {
        throw InvalidArgument("AR(1) path needs T >= 1");
    }
    Vector x(T);
    x(0) = innovation_sd / std::sqrt(1.0 - coef * coef) * standard_normal(rng);
    for (Eigen::Index t = 1; t < T; ++t) {
        x(t) = coef * x(t - 1) + innovation_sd * standard_normal(rng);
    }
    return x;
}

GeneratedData generate(const DgpSpec& spec, Rng& rng) {
    spec.validate();
    switch (workflow_of(spec.family)) {
        case Workflow::two_subject:
        case Workflow::two_subject_diff_r:
            return generate_two_subject(spec, rng);
        case Workflow::changepoint:
        case Workflow::changepoint_diff_r:
            return generate_changepoint(spec, rng);
    }
    throw UnknownFamily(to_string(spec.family));
}

ReplicationOutcome run_replication(const DgpSpec& spec, Pipeline pipeline, double level, Rng& rng,
                                   const MonteCarloOptions& options, std::optional<double> sup_critical_value) {
    const GeneratedData data = generate(spec, rng);
    const Workflow workflow = workflow_of(spec.family);
    WaldOptions wopts;
    wopts.level = level;
    wopts.ridge = options.ridge;

    if (pipeline == Pipeline::baseline) {
        // Untransformed change-point test on the raw data at the true split.
        const Eigen::Index r_pseudo = std::max(spec.r, spec.effective_r());
        TimeSeriesPanel panel = std::visit(
            [&](const auto& dat) -> TimeSeriesPanel {
                using T = std::decay_t<decltype(dat)>;
                if constexpr (std::is_same_v<T, TwoSubjectData>) {
                    std::optional<TimeSeriesPanel> s1, s2;
                    const TimeSeriesPanel& a = maybe_standardized(dat.x1, options.standardize, s1);
                    const TimeSeriesPanel& b = maybe_standardized(dat.x2, options.standardize, s2);
                    Matrix stacked(a.periods() + b.periods(), a.dimension());
                    stacked << a.data(), b.data();
                    return TimeSeriesPanel(std::move(stacked));
                } else {
                    return options.standardize ? standardize(dat.x) : dat.x;
                }
            },
            data);
        const Eigen::Index split = std::visit(
            [](const auto& dat) -> Eigen::Index {
                using T = std::decay_t<decltype(dat)>;
                if constexpr (std::is_same_v<T, TwoSubjectData>) {
                    return dat.x1.periods();
                } else {
                    return dat.break_index;
                }
            },
            data);
        const Eigen::Index bw = options.bandwidth.value_or(default_bandwidth(panel.periods()));
        const WaldReport rep = baseline_changepoint_wald(panel, r_pseudo, bw, wopts, split);
        return {rep.statistic, rep.reject};
    }

    TransformedSeries y;
    if (const auto* two = std::get_if<TwoSubjectData>(&data)) {
        std::optional<TimeSeriesPanel> s1, s2;
        const TimeSeriesPanel& x1 = maybe_standardized(two->x1, options.standardize, s1);
        const TimeSeriesPanel& x2 = maybe_standardized(two->x2, options.standardize, s2);
        y = workflow == Workflow::two_subject_diff_r ? transform_diff_r(x1, x2, spec.r1, spec.r2)
                                                     : transform_two_subject(x1, x2, spec.r);
    } else {
        const auto& cp = std::get<ChangepointData>(data);
        std::optional<TimeSeriesPanel> sx;
        const TimeSeriesPanel& x = maybe_standardized(cp.x, options.standardize, sx);
        if (workflow == Workflow::changepoint_diff_r) {
            y = transform_diff_r(x.slice(0, cp.break_index), x.slice(cp.break_index, x.periods()), spec.r1, spec.r2);
        } else {
            y = transform_changepoint(x, cp.break_index, spec.r);
        }
    }

    const FactorEstimate est = estimate_pca(y.data, y.r_effective);
    const Eigen::Index bw = options.bandwidth.value_or(default_bandwidth(y.data.rows()));
    if (pipeline == Pipeline::sup_wald) {
        const SupWaldReport rep =
            sup_wald(est.factors, options.pi0, bw, wopts, sup_critical_value, options.critical_value);
        return {rep.sup_statistic, rep.reject};
    }
    const WaldReport rep = wald(est.factors, bw, wopts);
    return {rep.statistic, rep.reject};
}

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) {
        return requested;
    }
    if (const char* env = std::getenv("COMMONLOAD_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) {
            return static_cast<unsigned>(v);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

MonteCarloResult monte_carlo(const DgpSpec& spec, std::size_t n_reps, double level, Pipeline pipeline,
                             std::uint64_t seed, const MonteCarloOptions& options) {
    if (n_reps < 1) {
        throw InvalidArgument("n_reps must be at least 1");
    }
    if (!(level > 0.0 && level < 1.0)) {
        throw InvalidArgument("level must lie in (0,1)");
    }
    spec.validate();
    const auto start = std::chrono::steady_clock::now();

    MonteCarloResult result;
    result.spec = spec;
    result.pipeline = pipeline;
    result.n_reps = n_reps;
    result.level = level;
    result.seed = seed;

    std::optional<double> cv;
    if (pipeline == Pipeline::sup_wald) {
        cv = sup_wald_critical_value(vech_size(spec.effective_r()), options.pi0, level, options.critical_value);
        result.critical_value = *cv;
    }

    std::vector<std::optional<ReplicationOutcome>> outcomes(n_reps);
    std::vector<std::string> errors(n_reps);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n_reps; i = next++) {
            Rng rng = substream(seed, i);
            try {
                outcomes[i] = run_replication(spec, pipeline, level, rng, options, cv);
            } catch (const Error& err) {
                errors[i] = err.what();
            }
        }
    };
    const unsigned threads = std::min<unsigned>(resolve_threads(options.threads), static_cast<unsigned>(n_reps));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned i = 0; i < threads; ++i) {
            pool.emplace_back(worker);
        }
    }

    double stat_sum = 0.0;
    for (std::size_t i = 0; i < n_reps; ++i) {
        if (outcomes[i]) {
            stat_sum += outcomes[i]->statistic;
            result.n_rejections += outcomes[i]->reject ? 1 : 0;
        } else {
            ++result.n_failed;
            if (result.failure_messages.size() < 5) {
                result.failure_messages.push_back("replication " + std::to_string(i) + ": " + errors[i]);
            }
        }
    }
    if (static_cast<double>(result.n_failed) > 0.01 * static_cast<double>(n_reps)) {
        throw Error(std::to_string(result.n_failed) + " of " + std::to_string(n_reps) +
                    " replications failed; first: " + result.failure_messages.front());
    }
    const auto ok = static_cast<double>(n_reps - result.n_failed);
    result.rejection_rate = static_cast<double>(result.n_rejections) / ok;
    result.mean_statistic = stat_sum / ok;
    result.elapsed = std::chrono::steady_clock::now() - start;
    return result;
}

}  // namespace commonload
