#include "commonload/cli_io.hpp"

#include "commonload/errors.hpp"
#include "commonload/factor_pca.hpp"
#include "commonload/simulation.hpp"
#include "commonload/transform.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace commonload {

using nlohmann::ordered_json;

namespace {

constexpr std::pair<Command, const char*> kCommands[] = {
    {Command::test_two_subject, "test-two-subject"},
    {Command::test_changepoint, "test-changepoint"},
    {Command::test_diff_r, "test-diff-r"},
    {Command::simulate, "simulate"},
    {Command::estimate_factors, "estimate-factors"},
};

constexpr const char* kParamKeys[] = {"b", "a", "c", "pi", "e", "f", "r", "r1", "r2"};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) {
            return out;
        }
        pos = comma + 1;
    }
}

// Whole-cell decimal parse; nullopt when the cell is not a number at all.
std::optional<double> parse_number(std::string_view cell) {
    if (!cell.empty() && cell.front() == '+') {
        cell.remove_prefix(1);
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        return std::nullopt;
    }
    return value;
}

WaldSummary summarize_wald(const WaldReport& rep) {
    WaldSummary s;
    s.statistic = rep.statistic;
    s.df = rep.df;
    s.p_value = rep.p_value;
    s.bandwidth = rep.bandwidth;
    s.level = rep.level;
    s.reject = rep.reject;
    s.condition_number = rep.condition_number;
    s.v.assign(rep.v.data(), rep.v.data() + rep.v.size());
    return s;
}

SupWaldSummary summarize_sup(const SupWaldReport& rep) {
    SupWaldSummary s;
    s.sup_statistic = rep.sup_statistic;
    s.argmax_pi = rep.argmax_pi;
    s.pi0 = rep.pi0;
    s.critical_value = rep.critical_value;
    s.df = rep.df;
    s.bandwidth = rep.bandwidth;
    s.level = rep.level;
    s.reject = rep.reject;
    return s;
}

template <class T>
void put_optional(ordered_json& j, const char* key, const std::optional<T>& value) {
    j[key] = value ? ordered_json(*value) : ordered_json(nullptr);
}

template <class T>
std::optional<T> get_optional(const ordered_json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return j.at(key).get<T>();
}

ordered_json wald_json(const WaldSummary& s) {
    return ordered_json{{"statistic", s.statistic},   {"df", s.df},         {"p_value", s.p_value},
                        {"bandwidth", s.bandwidth},   {"level", s.level},   {"reject", s.reject},
                        {"condition_number", s.condition_number}, {"v", s.v}};
}

WaldSummary wald_from_json(const ordered_json& j) {
    WaldSummary s;
    s.statistic = j.at("statistic").get<double>();
    s.df = j.at("df").get<Eigen::Index>();
    s.p_value = j.at("p_value").get<double>();
    s.bandwidth = j.at("bandwidth").get<Eigen::Index>();
    s.level = j.at("level").get<double>();
    s.reject = j.at("reject").get<bool>();
    s.condition_number = j.at("condition_number").get<double>();
    s.v = j.at("v").get<std::vector<double>>();
    return s;
}

struct TestInputs {
    TimeSeriesPanel first;
    std::optional<TimeSeriesPanel> second;
};

TimeSeriesPanel prepared(const TimeSeriesPanel& x, bool standardize_on) {
    return standardize_on ? standardize(x) : x;
}

Eigen::Index bandwidth_for(const RunConfig& config, Eigen::Index t) {
    return config.bandwidth.value_or(default_bandwidth(t));
}

void run_tests_on(const RunConfig& config, const TransformedSeries& y, TestReportDocument& doc) {
    WaldOptions opts;
    opts.level = config.level;
    opts.ridge = config.ridge;
    const FactorEstimate est = estimate_pca(y.data, y.r_effective);
    const Eigen::Index bw = bandwidth_for(config, y.data.rows());
    doc.r_used = y.r_effective;
    doc.df = vech_size(y.r_effective);
    doc.wald = summarize_wald(wald(est.factors, bw, opts));
    if (config.sup_wald) {
        doc.sup_wald = summarize_sup(sup_wald(est.factors, config.pi0, bw, opts));
    }
}

void run_baseline(const RunConfig& config, const TimeSeriesPanel& x, Eigen::Index split, Eigen::Index r,
                  TestReportDocument& doc) {
    WaldOptions opts;
    opts.level = config.level;
    opts.ridge = config.ridge;
    doc.baseline = summarize_wald(baseline_changepoint_wald(x, r, bandwidth_for(config, x.periods()), opts, split));
}

TimeSeriesPanel stack(const TimeSeriesPanel& a, const TimeSeriesPanel& b) {
    if (a.dimension() != b.dimension()) {
        throw DimensionMismatch("panels have " + std::to_string(a.dimension()) + " and " +
                                std::to_string(b.dimension()) + " series");
    }
    Matrix m(a.periods() + b.periods(), a.dimension());
    m << a.data(), b.data();
    return TimeSeriesPanel(std::move(m), a.series_names());
}

void run_two_subject(const RunConfig& config, TestReportDocument& doc) {
    const TimeSeriesPanel x1 = prepared(load_csv(config.inputs[0], config.transpose), config.standardize);
    const TimeSeriesPanel x2 = prepared(load_csv(config.inputs[1], config.transpose), config.standardize);
    run_tests_on(config, transform_two_subject(x1, x2, config.r), doc);
    if (config.baseline) {
        run_baseline(config, stack(x1, x2), x1.periods(), config.r, doc);
    }
}

void run_changepoint(const RunConfig& config, TestReportDocument& doc) {
    const TimeSeriesPanel x = prepared(load_csv(config.inputs[0], config.transpose), config.standardize);
    run_tests_on(config, transform_changepoint(x, *config.break_index, config.r), doc);
    if (config.baseline) {
        run_baseline(config, x, *config.break_index, config.r, doc);
    }
}

void run_diff_r(const RunConfig& config, TestReportDocument& doc) {
    if (config.inputs.size() == 2) {
        const TimeSeriesPanel x1 = prepared(load_csv(config.inputs[0], config.transpose), config.standardize);
        const TimeSeriesPanel x2 = prepared(load_csv(config.inputs[1], config.transpose), config.standardize);
        run_tests_on(config, transform_diff_r(x1, x2, config.r1, config.r2), doc);
        return;
    }
    const TimeSeriesPanel x = prepared(load_csv(config.inputs[0], config.transpose), config.standardize);
    const Eigen::Index k = *config.break_index;
    if (k < 4 || k > x.periods() - 4) {
        throw InvalidArgument("break index " + std::to_string(k) + " outside [4, " +
                              std::to_string(x.periods() - 4) + "]");
    }
    run_tests_on(config, transform_diff_r(x.slice(0, k), x.slice(k, x.periods()), config.r1, config.r2), doc);
}

std::string format_rate(double rate) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << rate;
    return os.str();
}

void run_simulate(const RunConfig& config, TestReportDocument& doc) {
    const DgpFamily family = family_from_string(config.family);
    DgpSpec spec = DgpSpec::defaults(family, config.d, config.T);
    std::string param_text;
    for (const auto& [key, value] : config.params) {
        if (key == "b") spec.b = value;
        else if (key == "a") spec.a = value;
        else if (key == "c") spec.c = static_cast<Eigen::Index>(value);
        else if (key == "pi") spec.pi = value;
        else if (key == "e") spec.e = value;
        else if (key == "f") spec.f = value;
        else if (key == "r") spec.r = static_cast<Eigen::Index>(value);
        else if (key == "r1") spec.r1 = static_cast<Eigen::Index>(value);
        else if (key == "r2") spec.r2 = static_cast<Eigen::Index>(value);
        std::ostringstream os;
        os << " " << key << "=" << value;
        param_text += os.str();
    }
    const Pipeline pipeline = config.sup_wald ? Pipeline::sup_wald
                              : config.baseline ? Pipeline::baseline
                                                : Pipeline::wald;
    MonteCarloOptions opts;
    opts.threads = config.threads;
    opts.bandwidth = config.bandwidth;
    opts.pi0 = config.pi0;
    opts.ridge = config.ridge;
    opts.standardize = config.standardize;
    const MonteCarloResult res = monte_carlo(spec, config.n_reps, config.level, pipeline, config.seed, opts);

    SimulationSummary s;
    s.family = to_string(family);
    s.pipeline = to_string(pipeline);
    s.d = spec.d;
    s.T = spec.T;
    s.n_reps = res.n_reps;
    s.rejection_rate = res.rejection_rate;
    s.mean_statistic = res.mean_statistic;
    s.n_rejections = res.n_rejections;
    s.n_failed = res.n_failed;
    s.critical_value = res.critical_value;
    s.table_row = "(" + std::to_string(spec.d) + "," + std::to_string(spec.T) + ") | " + s.family + param_text +
                  " | " + format_rate(res.rejection_rate);
    doc.r_used = spec.effective_r();
    doc.df = vech_size(spec.effective_r());
    doc.simulation = s;
}

void run_estimate_factors(const RunConfig& config, TestReportDocument& doc) {
    const TimeSeriesPanel x = prepared(load_csv(config.inputs[0], config.transpose), config.standardize);
    FactorCountSummary s;
    const Vector ic = information_criterion(x, config.r_max);
    s.criterion.assign(ic.data(), ic.data() + ic.size());
    Eigen::Index best = 0;
    ic.minCoeff(&best);
    s.estimated = best;
    doc.r_used = best;
    doc.factors = s;
}

}  // namespace

std::string to_string(Command command) {
    for (const auto& [c, name] : kCommands) {
        if (c == command) {
            return name;
        }
    }
    return "unknown";
}

Command command_from_string(const std::string& name) {
    for (const auto& [c, n] : kCommands) {
        if (name == n) {
            return c;
        }
    }
    throw InvalidArgument("unknown command '" + name + "'");
}

void RunConfig::validate() const {
    auto fail = [](const std::string& msg) { throw InvalidArgument(msg); };
    if (!(level > 0.0 && level < 1.0)) fail("level must lie in (0,1)");
    if (!(pi0 > 0.0 && pi0 <= 0.5)) fail("pi0 must lie in (0, 1/2]");
    if (bandwidth && *bandwidth < 1) fail("bandwidth must be at least 1");
    if (ridge && !(*ridge >= 0.0)) fail("ridge must be nonnegative");
    const std::size_t n_inputs = inputs.size();
    switch (command) {
        case Command::test_two_subject:
            if (n_inputs != 2) fail("test-two-subject needs two input files");
            if (r < 1) fail("r must be at least 1");
            break;
        case Command::test_changepoint:
            if (n_inputs != 1) fail("test-changepoint needs one input file");
            if (!break_index) fail("test-changepoint needs --break");
            if (r < 1) fail("r must be at least 1");
            break;
        case Command::test_diff_r:
            if (n_inputs == 1 && !break_index) fail("test-diff-r on one file needs --break");
            if (n_inputs < 1 || n_inputs > 2) fail("test-diff-r needs one or two input files");
            if (r2 < 1 || r1 < r2) fail("need 1 <= r2 <= r1");
            break;
        case Command::simulate:
            if (family.empty()) fail("simulate needs a DGP family");
            if (n_reps < 1) fail("reps must be at least 1");
            if (sup_wald && baseline) fail("choose at most one of --sup-wald and --baseline for simulate");
            for (const auto& [key, value] : params) {
                if (std::find(std::begin(kParamKeys), std::end(kParamKeys), key) == std::end(kParamKeys)) {
                    fail("unknown DGP parameter '" + key + "'");
                }
                if (!std::isfinite(value)) fail("DGP parameter '" + key + "' must be finite");
            }
            break;
        case Command::estimate_factors:
            if (n_inputs != 1) fail("estimate-factors needs one input file");
            if (r_max < 1) fail("r_max must be at least 1");
            break;
    }
}

bool TestReportDocument::rejected() const {
    if (config.sup_wald && sup_wald) {
        return sup_wald->reject;
    }
    return wald && wald->reject;
}

TimeSeriesPanel parse_csv(const std::string& text, bool transpose) {
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    std::size_t expected = 0;
    std::size_t line_no = 0;
    bool first_content = true;

    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (first_content) {
            first_content = false;
            expected = fields.size();
            const bool any_numeric = std::any_of(fields.begin(), fields.end(),
                                                 [](std::string_view f) { return parse_number(f).has_value(); });
            if (!any_numeric) {
                for (auto f : fields) {
                    names.emplace_back(f);
                }
                continue;
            }
        }
        if (fields.size() != expected) {
            throw RaggedRows(line_no, fields.size(), expected);
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const auto value = parse_number(fields[c]);
            if (!value) {
                throw ParseError(line_no, c + 1, "'" + std::string(fields[c]) + "' is not a number");
            }
            if (!std::isfinite(*value)) {
                throw ParseError(line_no, c + 1, "non-finite value");
            }
            row.push_back(*value);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw EmptyFile("no numeric rows");
    }

    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(expected));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    if (transpose) {
        // Header labels would be time stamps here, not series names.
        return TimeSeriesPanel(m.transpose());
    }
    return TimeSeriesPanel(std::move(m), std::move(names));
}

TimeSeriesPanel load_csv(const std::string& path, bool transpose) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidArgument("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), transpose);
}

ordered_json to_json(const RunConfig& c) {
    ordered_json j;
    j["command"] = to_string(c.command);
    j["inputs"] = c.inputs;
    j["r"] = c.r;
    j["r1"] = c.r1;
    j["r2"] = c.r2;
    j["r_max"] = c.r_max;
    put_optional(j, "break_index", c.break_index);
    j["pi0"] = c.pi0;
    put_optional(j, "bandwidth", c.bandwidth);
    j["level"] = c.level;
    j["seed"] = c.seed;
    j["n_reps"] = c.n_reps;
    j["threads"] = c.threads;
    j["output"] = c.output;
    j["standardize"] = c.standardize;
    j["sup_wald"] = c.sup_wald;
    j["baseline"] = c.baseline;
    put_optional(j, "ridge", c.ridge);
    j["transpose"] = c.transpose;
    j["family"] = c.family;
    j["d"] = c.d;
    j["T"] = c.T;
    j["params"] = ordered_json::object();
    for (const auto& [k, v] : c.params) {
        j["params"][k] = v;
    }
    return j;
}

RunConfig config_from_json(const ordered_json& j) {
    RunConfig c;
    c.command = command_from_string(j.at("command").get<std::string>());
    c.inputs = j.at("inputs").get<std::vector<std::string>>();
    c.r = j.at("r").get<Eigen::Index>();
    c.r1 = j.at("r1").get<Eigen::Index>();
    c.r2 = j.at("r2").get<Eigen::Index>();
    c.r_max = j.at("r_max").get<Eigen::Index>();
    c.break_index = get_optional<Eigen::Index>(j, "break_index");
    c.pi0 = j.at("pi0").get<double>();
    c.bandwidth = get_optional<Eigen::Index>(j, "bandwidth");
    c.level = j.at("level").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.n_reps = j.at("n_reps").get<std::size_t>();
    c.threads = j.at("threads").get<unsigned>();
    c.output = j.at("output").get<std::string>();
    c.standardize = j.at("standardize").get<bool>();
    c.sup_wald = j.at("sup_wald").get<bool>();
    c.baseline = j.at("baseline").get<bool>();
    c.ridge = get_optional<double>(j, "ridge");
    c.transpose = j.at("transpose").get<bool>();
    c.family = j.at("family").get<std::string>();
    c.d = j.at("d").get<Eigen::Index>();
    c.T = j.at("T").get<Eigen::Index>();
    for (const auto& [k, v] : j.at("params").items()) {
        c.params[k] = v.get<double>();
    }
    return c;
}

ordered_json to_json(const TestReportDocument& doc) {
    ordered_json j;
    j["version"] = doc.version;
    j["config"] = to_json(doc.config);
    put_optional(j, "r_used", doc.r_used);
    put_optional(j, "df", doc.df);
    j["wald"] = doc.wald ? wald_json(*doc.wald) : ordered_json(nullptr);
    if (doc.sup_wald) {
        const auto& s = *doc.sup_wald;
        j["sup_wald"] = ordered_json{{"sup_statistic", s.sup_statistic}, {"argmax_pi", s.argmax_pi},
                                     {"pi0", s.pi0},
                                     {"critical_value", s.critical_value},
                                     {"df", s.df},
                                     {"bandwidth", s.bandwidth},
                                     {"level", s.level},
                                     {"reject", s.reject}};
    } else {
        j["sup_wald"] = nullptr;
    }
    j["baseline"] = doc.baseline ? wald_json(*doc.baseline) : ordered_json(nullptr);
    if (doc.simulation) {
        const auto& s = *doc.simulation;
        j["simulation"] = ordered_json{{"family", s.family},
                                       {"pipeline", s.pipeline},
                                       {"d", s.d},
                                       {"T", s.T},
                                       {"n_reps", s.n_reps},
                                       {"rejection_rate", s.rejection_rate},
                                       {"mean_statistic", s.mean_statistic},
                                       {"n_rejections", s.n_rejections},
                                       {"n_failed", s.n_failed},
                                       {"critical_value", s.critical_value},
                                       {"table_row", s.table_row}};
    } else {
        j["simulation"] = nullptr;
    }
    if (doc.factors) {
        j["factors"] = ordered_json{{"estimated", doc.factors->estimated}, {"criterion", doc.factors->criterion}};
    } else {
        j["factors"] = nullptr;
    }
    j["verdict"] = doc.verdict;
    j["elapsed_seconds"] = doc.elapsed_seconds;
    return j;
}

TestReportDocument report_from_json(const ordered_json& j) {
    TestReportDocument doc;
    doc.version = j.at("version").get<std::string>();
    doc.config = config_from_json(j.at("config"));
    doc.r_used = get_optional<Eigen::Index>(j, "r_used");
    doc.df = get_optional<Eigen::Index>(j, "df");
    if (!j.at("wald").is_null()) {
        doc.wald = wald_from_json(j.at("wald"));
    }
    if (const auto& s = j.at("sup_wald"); !s.is_null()) {
        SupWaldSummary out;
        out.sup_statistic = s.at("sup_statistic").get<double>();
        out.argmax_pi = s.at("argmax_pi").get<double>();
        out.pi0 = s.at("pi0").get<double>();
        out.critical_value = s.at("critical_value").get<double>();
        out.df = s.at("df").get<Eigen::Index>();
        out.bandwidth = s.at("bandwidth").get<Eigen::Index>();
        out.level = s.at("level").get<double>();
        out.reject = s.at("reject").get<bool>();
        doc.sup_wald = out;
    }
    if (!j.at("baseline").is_null()) {
        doc.baseline = wald_from_json(j.at("baseline"));
    }
    if (const auto& s = j.at("simulation"); !s.is_null()) {
        SimulationSummary out;
        out.family = s.at("family").get<std::string>();
        out.pipeline = s.at("pipeline").get<std::string>();
        out.d = s.at("d").get<Eigen::Index>();
        out.T = s.at("T").get<Eigen::Index>();
        out.n_reps = s.at("n_reps").get<std::size_t>();
        out.rejection_rate = s.at("rejection_rate").get<double>();
        out.mean_statistic = s.at("mean_statistic").get<double>();
        out.n_rejections = s.at("n_rejections").get<std::size_t>();
        out.n_failed = s.at("n_failed").get<std::size_t>();
        out.critical_value = s.at("critical_value").get<double>();
        out.table_row = s.at("table_row").get<std::string>();
        doc.simulation = out;
    }
    if (const auto& s = j.at("factors"); !s.is_null()) {
        doc.factors = FactorCountSummary{s.at("estimated").get<Eigen::Index>(),
                                         s.at("criterion").get<std::vector<double>>()};
    }
    doc.verdict = j.at("verdict").get<std::string>();
    doc.elapsed_seconds = j.at("elapsed_seconds").get<double>();
    return doc;
}

TestReportDocument run(const RunConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    TestReportDocument doc;
    doc.config = config;
    switch (config.command) {
        case Command::test_two_subject:
            run_two_subject(config, doc);
            break;
        case Command::test_changepoint:
            run_changepoint(config, doc);
            break;
        case Command::test_diff_r:
            run_diff_r(config, doc);
            break;
        case Command::simulate:
            run_simulate(config, doc);
            break;
        case Command::estimate_factors:
            run_estimate_factors(config, doc);
            break;
    }
    if (doc.wald) {
        doc.verdict = doc.rejected() ? kVerdictReject : kVerdictRetain;
    }
    doc.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return doc;
}

std::string summarize(const TestReportDocument& doc) {
    std::ostringstream os;
    os << std::setprecision(6);
    os << "commonload " << doc.version << "  " << to_string(doc.config.command) << "\n";
    if (doc.wald) {
        const auto& w = *doc.wald;
        os << "  factors (transformed): " << doc.r_used.value_or(0) << "  df: " << w.df
           << "  bandwidth: " << w.bandwidth << "\n";
        os << "  Wald W = " << w.statistic << "  p = " << w.p_value << "\n";
    }
    if (doc.sup_wald) {
        const auto& s = *doc.sup_wald;
        os << "  sup-Wald = " << s.sup_statistic << " at pi = " << s.argmax_pi << "  critical value ("
           << s.level << ") = " << s.critical_value << "\n";
    }
    if (doc.baseline) {
        const auto& b = *doc.baseline;
        os << "  untransformed change-point Wald = " << b.statistic << "  p = " << b.p_value << "\n";
    }
    if (doc.simulation) {
        const auto& s = *doc.simulation;
        os << "  " << s.table_row << "\n";
        os << "  pipeline " << s.pipeline << ", " << s.n_reps << " reps, " << s.n_rejections << " rejections";
        if (s.n_failed > 0) {
            os << ", " << s.n_failed << " failed";
        }
        os << ", mean statistic " << s.mean_statistic << "\n";
    }
    if (doc.factors) {
        os << "  estimated number of factors: " << doc.factors->estimated << "\n";
    }
    if (!doc.verdict.empty()) {
        os << "  verdict at level " << doc.config.level << ": " << doc.verdict << "\n";
    }
    return os.str();
}

void write_report(const TestReportDocument& doc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InvalidArgument("cannot write '" + path + "'");
    }
    out << to_json(doc).dump(2) << "\n";
}

}  // namespace commonload
