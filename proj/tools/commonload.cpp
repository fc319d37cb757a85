#include "commonload/cli_io.hpp"
#include "commonload/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace commonload;

namespace {

struct Flags {
    std::optional<Eigen::Index> break_index;
    std::optional<Eigen::Index> bandwidth;
    std::optional<double> ridge;
    bool no_standardize = false;
    bool exit_on_reject = false;
    std::vector<std::string> params;
};

void add_common(CLI::App* sub, RunConfig& cfg, Flags& flags) {
    sub->add_option("--level", cfg.level, "Significance level")->capture_default_str();
    sub->add_option("--bandwidth", flags.bandwidth, "Bartlett bandwidth (default floor(T^(1/3)))");
    sub->add_option("--ridge", flags.ridge, "Ridge added to the long-run variance, relative to its mean eigenvalue");
    sub->add_flag("--no-standardize", flags.no_standardize, "Skip column standardization");
    sub->add_option("-o,--output", cfg.output, "Write the JSON report here");
    sub->add_flag("--exit-on-reject", flags.exit_on_reject, "Exit with status 2 when the test rejects");
}

void add_testing(CLI::App* sub, RunConfig& cfg) {
    sub->add_flag("--sup-wald", cfg.sup_wald, "Also run the sup-Wald variant");
    sub->add_option("--pi0", cfg.pi0, "sup-Wald trimming, splits in [pi0, 1-pi0]")->capture_default_str();
    sub->add_flag("--transpose", cfg.transpose, "Input files store one series per row");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Test whether two factor models share loadings up to a nonsingular transformation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    RunConfig cfg;
    Flags flags;

    auto* two = app.add_subcommand("test-two-subject", "Compare the loadings of two panels");
    two->add_option("x1", cfg.inputs, "CSV files for subject 1 and subject 2")->required()->expected(2);
    two->add_option("-r,--factors", cfg.r, "Number of factors")->capture_default_str();
    two->add_flag("--baseline", cfg.baseline, "Also run the change-point Wald test on the stacked raw panels");
    add_testing(two, cfg);
    add_common(two, cfg, flags);

    auto* cp = app.add_subcommand("test-changepoint", "Classify a known break in one panel");
    cp->add_option("input", cfg.inputs, "CSV file")->required()->expected(1);
    cp->add_option("--break", flags.break_index, "First row of the post-break segment (0-based)")->required();
    cp->add_option("-r,--factors", cfg.r, "Number of factors")->capture_default_str();
    cp->add_flag("--baseline", cfg.baseline, "Also run the change-point Wald test on the raw panel");
    add_testing(cp, cfg);
    add_common(cp, cfg, flags);

    auto* diff = app.add_subcommand("test-diff-r", "Nested loadings with r1 >= r2 factors");
    diff->add_option("inputs", cfg.inputs, "Two CSV files, or one with --break")->required()->expected(1, 2);
    diff->add_option("--break", flags.break_index, "Split a single file at this row");
    diff->add_option("--r1", cfg.r1, "Factors in the first panel")->capture_default_str();
    diff->add_option("--r2", cfg.r2, "Factors in the second panel")->capture_default_str();
    add_testing(diff, cfg);
    add_common(diff, cfg, flags);

    auto* sim = app.add_subcommand("simulate", "Monte Carlo rejection rate for a named DGP");
    sim->add_option("family", cfg.family, "NDGP1..4, ADGP1..4, NDGPcp1..2, ADGPcp1..3, NDGPdnf1..4, EIGEXT")
        ->required();
    sim->add_option("-d", cfg.d, "Cross-section size")->capture_default_str();
    sim->add_option("-T", cfg.T, "Sample length")->capture_default_str();
    sim->add_option("--reps", cfg.n_reps, "Replications")->capture_default_str();
    sim->add_option("--seed", cfg.seed, "Seed")->capture_default_str();
    sim->add_option("--threads", cfg.threads, "Worker threads (0: COMMONLOAD_THREADS or all cores)");
    sim->add_option("--param", flags.params, "DGP parameter key=value (b, a, c, pi, e, f, r, r1, r2)");
    sim->add_flag("--sup-wald", cfg.sup_wald, "Use the sup-Wald statistic");
    sim->add_option("--pi0", cfg.pi0, "sup-Wald trimming")->capture_default_str();
    sim->add_flag("--baseline", cfg.baseline, "Use the change-point Wald test on the raw data");
    add_common(sim, cfg, flags);

    auto* est = app.add_subcommand("estimate-factors", "Information-criterion estimate of the factor count");
    est->add_option("input", cfg.inputs, "CSV file")->required()->expected(1);
    est->add_option("--r-max", cfg.r_max, "Largest count considered")->capture_default_str();
    est->add_flag("--transpose", cfg.transpose, "Input file stores one series per row");
    add_common(est, cfg, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        cfg.command = command_from_string(app.get_subcommands().front()->get_name());
        cfg.break_index = flags.break_index;
        cfg.bandwidth = flags.bandwidth;
        cfg.ridge = flags.ridge;
        cfg.standardize = !flags.no_standardize;
        for (const auto& kv : flags.params) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) {
                throw InvalidArgument("--param expects key=value, got '" + kv + "'");
            }
            try {
                cfg.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
            } catch (const std::exception&) {
                throw InvalidArgument("--param value in '" + kv + "' is not a number");
            }
        }

        const TestReportDocument doc = run(cfg);
        std::cout << summarize(doc);
        if (!cfg.output.empty()) {
            write_report(doc, cfg.output);
        }
        return flags.exit_on_reject && doc.rejected() ? 2 : 0;
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "unexpected error: " << err.what() << "\n";
        return 1;
    }
}
