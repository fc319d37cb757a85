#pragma once

#include "commonload/panel.hpp"
#include "commonload/rng.hpp"
#include "commonload/wald.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace commonload {

enum class DgpFamily {
    NDGP1, NDGP2, NDGP3, NDGP4,
    ADGP1, ADGP2, ADGP3, ADGP4,
    NDGPcp1, NDGPcp2,
    ADGPcp1, ADGPcp2, ADGPcp3,
    NDGPdnf1, NDGPdnf2, NDGPdnf3, NDGPdnf4,
    EIGEXT,
};

/// How a family's data flows through the test.
enum class Workflow { two_subject, changepoint, two_subject_diff_r, changepoint_diff_r };

enum class Pipeline { wald, sup_wald, baseline };

std::string to_string(DgpFamily family);
std::string to_string(Pipeline pipeline);
/// Throws UnknownFamily.
DgpFamily family_from_string(const std::string& name);
Pipeline pipeline_from_string(const std::string& name);
Workflow workflow_of(DgpFamily family);
std::vector<DgpFamily> all_families();

struct DgpSpec {
    DgpFamily family = DgpFamily::NDGP1;
    Eigen::Index d = 200;
    Eigen::Index T = 200;
    Eigen::Index r = 3;   // factor count (r1 pre / subject 1 for the dnf families)
    Eigen::Index r1 = 4;  // dnf families only
    Eigen::Index r2 = 3;  // dnf families only
    double b = 1.0;       // additive loading shift (ADGP1/2, ADGPcp1/2)
    double a = 0.4;       // fraction of shifted rows (ADGP2, ADGPcp2)
    Eigen::Index c = 1;   // rotated column count (ADGP3/4, ADGPcp3)
    double pi = 0.5;      // break fraction (change-point families)
    double e = 0.5;       // smallest eigenvalue of Phi (EIGEXT)
    double f = 1.0;       // largest eigenvalue of Phi (EIGEXT)

    /// Family defaults: r = 4 for ADGP3/4 and ADGPcp3, else 3; r1 = 4, r2 = 3.
    static DgpSpec defaults(DgpFamily family, Eigen::Index d, Eigen::Index T);

    /// Factor count the test runs with on the transformed series.
    Eigen::Index effective_r() const;

    /// Throws InvalidArgument on out-of-range parameters.
    void validate() const;
};

enum class PhiMode { eigenvalues, singular_values };

/// Haar-distributed n x n orthogonal matrix (QR of a Gaussian matrix with
/// the signs of R's diagonal absorbed into Q).
Matrix random_orthogonal(Eigen::Index n, Rng& rng);

/// eigenvalues mode (square only): U diag(l) U', l_i ~ U(lo, hi).
/// singular_values mode: U diag(s) V' of shape rows x cols, s_i ~ U(lo, hi).
Matrix random_nonsingular_phi(Eigen::Index rows, Eigen::Index cols, double lo, double hi, PhiMode mode, Rng& rng);

/// Copy of lambda with its first floor(a d) rows shifted by -b.
Matrix shift_loadings(const Matrix& lambda, double b, double a);

/// Stationary AR(1) path x_t = coef x_{t-1} + innovation_sd e_t, started from
/// N(0, innovation_sd^2 / (1 - coef^2)).
Vector ar1_path(Eigen::Index T, double coef, double innovation_sd, Rng& rng);

struct TwoSubjectData {
    TimeSeriesPanel x1;
    TimeSeriesPanel x2;
};

struct ChangepointData {
    TimeSeriesPanel x;
    Eigen::Index break_index;
};

using GeneratedData = std::variant<TwoSubjectData, ChangepointData>;

GeneratedData generate(const DgpSpec& spec, Rng& rng);

struct MonteCarloOptions {
    /// 0 = COMMONLOAD_THREADS environment variable, else hardware concurrency.
    unsigned threads = 0;
    std::optional<Eigen::Index> bandwidth;
    double pi0 = 0.45;
    std::optional<double> ridge;
    CriticalValueOptions critical_value;
    bool standardize = true;
};

struct ReplicationOutcome {
    double statistic = 0.0;
    bool reject = false;
};

struct MonteCarloResult {
    DgpSpec spec;
    Pipeline pipeline = Pipeline::wald;
    std::size_t n_reps = 0;
    double level = 0.05;
    double rejection_rate = 0.0;
    double mean_statistic = 0.0;
    std::size_t n_rejections = 0;
    std::size_t n_failed = 0;
    std::vector<std::string> failure_messages;  // first few only
    std::uint64_t seed = 0;
    double critical_value = 0.0;  // sup_wald pipeline only
    std::chrono::duration<double> elapsed{0.0};
};

/// One draw-standardize-transform-estimate-test cycle.
ReplicationOutcome run_replication(const DgpSpec& spec, Pipeline pipeline, double level, Rng& rng,
                                   const MonteCarloOptions& options = {},
                                   std::optional<double> sup_critical_value = std::nullopt);

/// Replication i draws from substream(seed, i), so results do not depend on
/// the thread count. Throws Error when more than 1% of replications fail.
MonteCarloResult monte_carlo(const DgpSpec& spec, std::size_t n_reps, double level, Pipeline pipeline,
                             std::uint64_t seed, const MonteCarloOptions& options = {});

/// Worker count resolved from options / environment.
unsigned resolve_threads(unsigned requested);

}  // namespace commonload
