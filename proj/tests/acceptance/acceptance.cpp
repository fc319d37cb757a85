// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Pass criterion numbers as arguments to
// run a subset, e.g. `commonload_acceptance 8 9 10`.

#include "commonload/factor_pca.hpp"
#include "commonload/simulation.hpp"
#include "commonload/wald.hpp"

#include "../support/oracles.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace commonload;

namespace {

constexpr std::uint64_t kSeed = 7;
constexpr std::size_t kReps = 1000;
constexpr double kLevel = 0.05;

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(double x, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

DgpSpec spec_for(DgpFamily family) { return DgpSpec::defaults(family, 200, 200); }

double rate(const DgpSpec& spec, Pipeline pipeline = Pipeline::wald) {
    MonteCarloOptions opts;
    opts.pi0 = 0.45;
    return monte_carlo(spec, kReps, kLevel, pipeline, kSeed, opts).rejection_rate;
}

// Appends "label value (want [lo, hi])" and folds the verdict into `out`.
void check(Outcome& out, const std::string& label, double value, double lo, double hi) {
    const bool ok = value >= lo && value <= hi;
    out.pass = out.pass && ok;
    if (!out.detail.empty()) {
        out.detail += "; ";
    }
    out.detail += label + " " + fmt(value) + " (want [" + fmt(lo, 2) + ", " + fmt(hi, 2) + "])";
}

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            m(i, j) = standard_normal(rng);
        }
    }
    return m;
}

Outcome criterion1() {
    Outcome out;
    check(out, "NDGP1 size", rate(spec_for(DgpFamily::NDGP1)), 0.01, 0.07);
    return out;
}

Outcome criterion2() {
    Outcome out;
    DgpSpec a3 = spec_for(DgpFamily::ADGP3);
    a3.c = 1;
    check(out, "ADGP3 c=1 power", rate(a3), 0.98, 1.0);
    DgpSpec a4 = spec_for(DgpFamily::ADGP4);
    a4.c = 1;
    check(out, "ADGP4 c=1 power", rate(a4), 0.98, 1.0);
    DgpSpec a1 = spec_for(DgpFamily::ADGP1);
    a1.b = 1.0;
    check(out, "ADGP1 b=1 power", rate(a1), 0.95, 1.0);
    return out;
}

Outcome criterion3() {
    Outcome out;
    DgpSpec s = spec_for(DgpFamily::NDGPcp1);
    s.pi = 0.5;
    check(out, "NDGPcp1 size", rate(s), 0.0, 0.05);
    return out;
}

Outcome criterion4() {
    Outcome out;
    DgpSpec s = spec_for(DgpFamily::NDGPcp1);
    s.pi = 0.5;
    check(out, "NDGPcp1 untransformed baseline", rate(s, Pipeline::baseline), 0.70, 1.0);
    check(out, "NDGPcp1 transformed", rate(s), 0.0, 0.05);
    return out;
}

Outcome criterion5() {
    Outcome out;
    check(out, "NDGPdnf1 size", rate(spec_for(DgpFamily::NDGPdnf1)), 0.02, 0.08);
    return out;
}

Outcome criterion6() {
    Outcome out;
    check(out, "NDGP1 sup-Wald size", rate(spec_for(DgpFamily::NDGP1), Pipeline::sup_wald), 0.05, 0.14);
    DgpSpec a3 = spec_for(DgpFamily::ADGP3);
    a3.c = 3;
    check(out, "ADGP3 c=3 sup-Wald power", rate(a3, Pipeline::sup_wald), 0.98, 1.0);
    return out;
}

Outcome criterion7() {
    Outcome out;
    DgpSpec lo = spec_for(DgpFamily::EIGEXT);
    lo.e = 0.01;
    lo.f = 1.0;
    check(out, "EIGEXT e=0.01 f=1", rate(lo), 0.98, 1.0);
    DgpSpec hi = spec_for(DgpFamily::EIGEXT);
    hi.e = 0.5;
    hi.f = 1.0;
    check(out, "EIGEXT e=0.5 f=1", rate(hi), 0.0, 0.07);
    return out;
}

Outcome criterion8() {
    Rng rng(8);
    double worst = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        const auto t = static_cast<Eigen::Index>(uniform(rng, 4.0, 65.0));
        const auto r = static_cast<Eigen::Index>(uniform(rng, 1.0, 4.0));
        const Matrix f = normal_matrix(t, r, rng);
        const auto j = static_cast<Eigen::Index>(uniform(rng, 0.0, static_cast<double>(t)));
        const auto b = static_cast<Eigen::Index>(uniform(rng, 1.0, static_cast<double>(t) + 1.0));
        worst = std::max(worst, (v_statistic(f) - oracle::v_statistic(f)).cwiseAbs().maxCoeff());
        for (Centering c : {Centering::identity, Centering::sample_moment}) {
            const Matrix center = c == Centering::identity ? oracle::identity_center(f) : oracle::sample_center(f);
            worst = std::max(worst, (gamma_j(f, j, c) - oracle::gamma_j(f, j, center)).cwiseAbs().maxCoeff());
            worst = std::max(worst, (long_run_variance(f, b, c) - oracle::long_run_variance(f, b, center))
                                        .cwiseAbs()
                                        .maxCoeff());
        }
    }
    return {worst <= 1e-12, "max abs deviation over 100 instances " + [&] {
                std::ostringstream os;
                os << worst;
                return os.str();
            }() + " (want <= 1e-12)"};
}

Outcome criterion9() {
    Rng rng(9);
    double proj = 0.0, idem = 0.0, nest = 0.0, winv = 0.0, min_eig = 0.0;
    bool half_exact = true;
    for (int inst = 0; inst < 50; ++inst) {
        const Matrix l = normal_matrix(30, 4, rng);
        const Matrix phi = normal_matrix(4, 4, rng);
        const Matrix p = projection(l).matrix();
        proj = std::max(proj, (p - projection(Matrix(l * phi)).matrix()).cwiseAbs().maxCoeff());
        idem = std::max(idem, (p * p - p).cwiseAbs().maxCoeff());
        const Matrix p2 = projection(Matrix(l * normal_matrix(4, 2, rng))).matrix();
        nest = std::max(nest, (p2 * p - p2).cwiseAbs().maxCoeff());

        const Matrix x = normal_matrix(150, 3, rng) * normal_matrix(40, 3, rng).transpose() + normal_matrix(150, 40, rng);
        const Matrix f = estimate_pca(x, 3).factors;
        const Eigen::Index bw = default_bandwidth(150);
        const WaldReport w = wald(f, bw);
        // Singular values in [0.5, 2]; cond(Omega) grows like cond(A)^4.
        const Matrix a = random_nonsingular_phi(3, 3, 0.5, 2.0, PhiMode::singular_values, rng);
        winv = std::max(winv, std::abs(wald(Matrix(f * a.transpose()), bw).statistic - w.statistic) /
                                  std::max(1.0, w.statistic));
        half_exact = half_exact && sup_wald(f, 0.5, bw, {}, 1.0).sup_statistic == w.statistic;
        const Matrix omega = long_run_variance(f, bw, Centering::sample_moment);
        min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Matrix>(omega).eigenvalues().minCoeff() /
                                        omega.norm());
    }
    const bool pass = proj <= 1e-10 && idem <= 1e-8 && nest <= 1e-8 && winv <= 1e-8 && half_exact && min_eig >= -1e-12;
    std::ostringstream os;
    os << "P invariance " << proj << ", P^2-P " << idem << ", P2P1-P2 " << nest << ", W(FA') rel " << winv
       << ", W(1/2)==W " << (half_exact ? "yes" : "no") << ", min eig(Omega)/|Omega| " << min_eig;
    return {pass, os.str()};
}

Outcome criterion10() {
    const Eigen::Index t = 2000;
    const Eigen::Index bw = default_bandwidth(t);
    std::vector<double> stats;
    stats.reserve(5000);
    for (std::uint64_t i = 0; i < 5000; ++i) {
        Rng rng = substream(10, i);
        stats.push_back(wald(normal_matrix(t, 2, rng), bw).statistic);
    }
    std::sort(stats.begin(), stats.end());
    // Type-7 sample quantile.
    const double h = 0.95 * static_cast<double>(stats.size() - 1);
    const auto k = static_cast<std::size_t>(h);
    const double q = stats[k] + (h - static_cast<double>(k)) * (stats[k + 1] - stats[k]);
    Outcome out;
    check(out, "95th percentile of W", q, 7.815 - 0.8, 7.815 + 0.8);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                            criterion5, criterion6, criterion7, criterion8,
                                                            criterion9, criterion10};
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) {
        wanted.insert(std::atoi(argv[i]));
    }
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!wanted.empty() && !wanted.count(id)) {
            continue;
        }
        Outcome out;
        try {
            out = criteria[i]();
        } catch (const std::exception& e) {
            out = {false, std::string("threw: ") + e.what()};
        }
        failures += out.pass ? 0 : 1;
        std::printf("criterion %2d: %s  %s\n", id, out.pass ? "PASS" : "FAIL", out.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
