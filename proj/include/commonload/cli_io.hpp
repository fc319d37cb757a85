#pragma once

#include "commonload/panel.hpp"
#include "commonload/wald.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace commonload {

inline constexpr const char* kVersion = "0.1.0";

enum class Command { test_two_subject, test_changepoint, test_diff_r, simulate, estimate_factors };

std::string to_string(Command command);
/// Throws InvalidArgument.
Command command_from_string(const std::string& name);

struct RunConfig {
    Command command = Command::test_two_subject;
    std::vector<std::string> inputs;
    Eigen::Index r = 3;
    Eigen::Index r1 = 4;
    Eigen::Index r2 = 3;
    Eigen::Index r_max = 8;
    std::optional<Eigen::Index> break_index;
    double pi0 = 0.45;
    std::optional<Eigen::Index> bandwidth;
    double level = 0.05;
    std::uint64_t seed = 7;
    std::size_t n_reps = 1000;
    unsigned threads = 0;
    std::string output;
    bool standardize = true;
    bool sup_wald = false;
    bool baseline = false;
    std::optional<double> ridge;
    bool transpose = false;
    // simulate only
    std::string family;
    Eigen::Index d = 200;
    Eigen::Index T = 200;
    std::map<std::string, double> params;  // b, a, c, pi, e, f

    /// Throws InvalidArgument.
    void validate() const;

    bool operator==(const RunConfig&) const = default;
};

/// WaldReport without the matrices.
struct WaldSummary {
    double statistic = 0.0;
    Eigen::Index df = 0;
    double p_value = 1.0;
    Eigen::Index bandwidth = 0;
    double level = 0.05;
    bool reject = false;
    double condition_number = 0.0;
    std::vector<double> v;

    bool operator==(const WaldSummary&) const = default;
};

struct SupWaldSummary {
    double sup_statistic = 0.0;
    double argmax_pi = 0.5;
    double pi0 = 0.5;
    double critical_value = 0.0;
    Eigen::Index df = 0;
    Eigen::Index bandwidth = 0;
    double level = 0.05;
    bool reject = false;

    bool operator==(const SupWaldSummary&) const = default;
};

struct SimulationSummary {
    std::string family;
    std::string pipeline;
    Eigen::Index d = 0;
    Eigen::Index T = 0;
    std::size_t n_reps = 0;
    double rejection_rate = 0.0;
    double mean_statistic = 0.0;
    std::size_t n_rejections = 0;
    std::size_t n_failed = 0;
    double critical_value = 0.0;
    std::string table_row;

    bool operator==(const SimulationSummary&) const = default;
};

struct FactorCountSummary {
    Eigen::Index estimated = 0;
    std::vector<double> criterion;  // index k = k factors

    bool operator==(const FactorCountSummary&) const = default;
};

struct TestReportDocument {
    RunConfig config;
    std::optional<Eigen::Index> r_used;
    std::optional<Eigen::Index> df;
    std::optional<WaldSummary> wald;
    std::optional<SupWaldSummary> sup_wald;
    std::optional<WaldSummary> baseline;
    std::optional<SimulationSummary> simulation;
    std::optional<FactorCountSummary> factors;
    std::string verdict;  // empty for simulate / estimate-factors
    std::string version = kVersion;
    double elapsed_seconds = 0.0;

    /// Decision that drives --exit-on-reject.
    bool rejected() const;

    bool operator==(const TestReportDocument&) const = default;
};

inline constexpr const char* kVerdictReject = "reject common structure";
inline constexpr const char* kVerdictRetain = "fail to reject";

/// Rows are time points, columns series. A first row with no numeric cell is
/// taken as the header. Throws ParseError, RaggedRows, EmptyFile, or
/// InvalidArgument when the panel shape is too small.
TimeSeriesPanel load_csv(const std::string& path, bool transpose = false);

/// Same rules as load_csv, reading from an in-memory string.
TimeSeriesPanel parse_csv(const std::string& text, bool transpose = false);

nlohmann::ordered_json to_json(const TestReportDocument& doc);
TestReportDocument report_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::ordered_json& j);

/// Executes the configured command. Does not write files.
TestReportDocument run(const RunConfig& config);

/// Human-readable report for standard output.
std::string summarize(const TestReportDocument& doc);

/// Pretty-printed JSON with a trailing newline.
void write_report(const TestReportDocument& doc, const std::string& path);

}  // namespace commonload
