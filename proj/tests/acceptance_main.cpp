// End-to-end acceptance suite.  Nine numbered criteria, each printing one
// PASS/FAIL line with the measured quantity and the tolerance it is judged
// against.  Tolerances are pinned here, not read from configuration, so a
// regression cannot hide behind a loosened knob.  Exit status is the number
// of failed criteria (0 = all green).

#include <livsic/cocycle.hpp>
#include <livsic/experiments.hpp>
#include <livsic/group.hpp>
#include <livsic/interval_map.hpp>
#include <livsic/reconstruction.hpp>
#include <livsic/tower.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

using namespace livsic;

namespace {

int g_failures = 0;

void report(int idx, const char* what, bool pass, const std::string& detail) {
    std::printf("criterion %d %-38s %s  (%s)\n", idx, what, pass ? "PASS" : "FAIL",
                detail.c_str());
    if (!pass) ++g_failures;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const Verdict& find_verdict(const ExperimentReport& rep, const std::string& name) {
    for (const auto& v : rep.summary.verdicts())
        if (v.name == name) return v;
    throw std::logic_error("verdict not found: " + name);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

// ---- criterion 1: Chebyshev conjugacy pipeline -------------------------

void criterion_1() {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentReport rep = chebyshev_case(128, 1e-8, 1);
    double secs = elapsed_s(t0);
    double sup = find_verdict(rep, "reconstruction_sup_error").value;
    bool pass = rep.pass && sup < 1e-4 && secs < 30.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "sup_err=%.3e tol=1e-4, %.1fs limit=30s, pipeline %s",
                  sup, secs, rep.pass ? "clean" : "dirty");
    report(1, "chebyshev reconstruction", pass, buf);
}

// ---- criterion 2: solvable vs obstructed quadratic parameters ----------

void criterion_2() {
    auto t0 = std::chrono::steady_clock::now();
    PiecewiseMap q2 = quadratic_map(2.0);
    Cocycle solvable = log_derivative_cocycle(q2, std::log(2.0));
    ObstructionReport ok = periodic_obstruction(solvable, q2, 8, 1e-6);

    double min_bad = 1e300;
    for (double a : {1.54368901, 1.6, 1.9}) {
        PiecewiseMap qa = quadratic_map(a);
        Cocycle shifted = log_derivative_cocycle(qa, std::log(2.0));
        ObstructionReport bad = periodic_obstruction(shifted, qa, 2, 1e-8);
        min_bad = std::min(min_bad, bad.max_residual);
    }
    double secs = elapsed_s(t0);
    bool pass = ok.max_residual < 1e-6 && min_bad > 0.01 && secs < 60.0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "a=2 residual=%.2e tol=1e-6, off-parameter min=%.3f floor=0.01, %.1fs",
                  ok.max_residual, min_bad, secs);
    report(2, "periodic obstruction separates", pass, buf);
}

// ---- criterion 3: intermittent scaling exponents ------------------------

void criterion_3() {
    bool pass = true;
    std::string detail;
    for (double p : {0.5, 1.0}) {
        ExperimentReport rep = mp_scaling_experiment(p, 10000, 1);
        const Verdict& slope = find_verdict(rep, "diameter_exponent");
        double target = -(1.0 + p) / p;
        bool slope_ok = std::fabs(slope.value - target) <= 0.10 * std::fabs(target);
        bool flip_ok = find_verdict(rep, "partial_sums_divergent_below").pass &&
                       find_verdict(rep, "partial_sums_cauchy_above").pass;
        pass = pass && slope_ok && flip_ok;
        char buf[96];
        std::snprintf(buf, sizeof buf, "p=%.1f slope=%.3f target=%.1f flip=%s; ", p,
                      slope.value, target, flip_ok ? "yes" : "no");
        detail += buf;
    }
    report(3, "neutral-orbit scaling + flip", pass, detail + "rel_tol=10%");
}

// ---- criterion 4: doubling tower statistics ------------------------------

void criterion_4() {
    PiecewiseMap d = doubling_map();
    YoungTower tower = induce_first_return(d, Interval{0.5, 1.0}, 24, 400000, 11);

    bool kac_ok = std::fabs(tower.kac_sum - 2.0) <= 0.02 * 2.0;
    bool masses_ok = true;
    for (int n = 1; n <= 8; ++n) {
        double expect = std::pow(2.0, -n);
        double got = tower.mass_by_return_time.at(static_cast<std::size_t>(n - 1));
        if (std::fabs(got - expect) > 0.02 * expect) masses_ok = false;
    }
    KacLambdaReport kl = kac_and_lambda(tower, 200000, 13);
    // exact statement: lambda(mu) = log 2 within 1e-3 on the log scale, and
    // the induced bound lambda(mu) >= lambda0^{1/kac_sum} holds.
    bool lambda_ok = std::fabs(std::log(kl.lambda_birkhoff) - std::log(2.0)) < 1e-3;
    bool bound_ok = kl.defect >= -1e-3;

    bool pass = kac_ok && masses_ok && lambda_ok && bound_ok;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "kac=%.4f tol=2%%, masses(n<=8) %s tol=2%%, lambda=%.6f "
                  "log-tol=1e-3, induced bound margin=%.3f",
                  tower.kac_sum, masses_ok ? "match 2^-n" : "MISMATCH", kl.lambda_birkhoff,
                  kl.defect);
    report(4, "first-return tower statistics", pass, buf);
}

// ---- criterion 5: extension levels vs brute-force word closure ----------

// Independent oracle: enumerate every branch word of length 1..depth by
// depth-first search, carrying the closed image interval along the word
// (endpoint images only; every branch is monotone).  Collect distinct images
// with the same endpoint tolerance the tower builder uses and count the base
// separately.  No transition-graph reuse: identical mid-search intervals are
// re-expanded, so agreement with the builder is evidence, not tautology.
std::size_t brute_force_level_count(const PiecewiseMap& map, int depth) {
    struct IV {
        double lo, hi;
    };
    std::vector<IV> found;
    auto record = [&](const IV& iv) {
        for (const auto& f : found)
            if (std::fabs(f.lo - iv.lo) < 1e-9 && std::fabs(f.hi - iv.hi) < 1e-9) return;
        found.push_back(iv);
    };

    struct Frame {
        IV dom;
        int next_branch;
        int level;
    };
    std::vector<Frame> stack;
    stack.push_back({{map.domain().lo, map.domain().hi}, 0, 0});
    while (!stack.empty()) {
        Frame& fr = stack.back();
        if (fr.level == depth || fr.next_branch == map.branch_count()) {
            stack.pop_back();
            continue;
        }
        int b = fr.next_branch++;
        const Branch& br = map.branch(b);
        double lo = std::max(fr.dom.lo, br.domain.lo);
        double hi = std::min(fr.dom.hi, br.domain.hi);
        if (hi - lo < 1e-12) continue;
        double fa = map.apply(b, lo);
        double fb = map.apply(b, hi);
        IV img{std::min(fa, fb), std::max(fa, fb)};
        record(img);
        stack.push_back({img, 0, fr.level + 1});
    }
    return found.size() + 1;  // the base is never identified with an image
}

void criterion_5() {
    struct Case {
        const char* name;
        PiecewiseMap map;
    };
    std::vector<Case> cases;
    cases.push_back({"tent(2)", tent_map(2.0)});
    cases.push_back({"quadratic(2)", quadratic_map(2.0)});
    cases.push_back({"quadratic(1.7)", quadratic_map(1.7)});

    bool pass = true;
    std::string detail;
    for (const auto& c : cases) {
        std::size_t built = hofbauer_build(c.map, 16, 200000, 5).levels.size();
        std::size_t brute = brute_force_level_count(c.map, 16);
        if (built != brute) pass = false;
        char buf[80];
        std::snprintf(buf, sizeof buf, "%s built=%zu brute=%zu; ", c.name, built, brute);
        detail += buf;
    }
    report(5, "extension levels match oracle", pass, detail + "exact");
}

// ---- criterion 6: transfer-function recovery ----------------------------

void criterion_6() {
    PiecewiseMap d = doubling_map();
    const double ref = 0.37;
    std::vector<std::function<double(double)>> us = {
        [](double x) { return std::sin(kTwoPi * x); },
        [](double x) { return x * x; },
        [](double x) { return std::fabs(x - 0.37); },  // piecewise smooth
    };

    double worst_sup = 0.0;
    double worst_defect = 0.0;
    for (const auto& u : us) {
        Cocycle phi =
            manufactured_coboundary(d, [&u](double x) { return make_real(u(x)); });
        BackwardOrbit anchor = sample_backward_orbit(d, ref, 60, 3);

        // direct endpoint quotients at points spread through the reference cell
        for (int k = 1; k < 32; ++k) {
            double y0 = 0.5 * k / 32.0;
            ReconstructionResult tr = reconstruct_transfer(phi, d, anchor, y0, 1e-10);
            double got = std::get<RealVec>(tr.value).v(0);
            double expect = u(y0) - u(ref);
            worst_sup = std::max(worst_sup, std::fabs(got - expect));
            worst_defect = std::max(worst_defect, tr.ad_bound_defect);
        }

        // full-domain grid solve
        std::vector<double> grid(256);
        for (int k = 0; k < 256; ++k) grid[static_cast<std::size_t>(k)] = k / 256.0;
        GridFunction psi = reconstruct_coboundary_on_grid(phi, d, ref, grid, 1e-10);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            double got = std::get<RealVec>(psi.values[i]).v(0);
            double expect = u(grid[i]) - u(ref);
            worst_sup = std::max(worst_sup, std::fabs(got - expect));
        }
    }

    // non-commuting variant: SU(2)-valued transfer function
    using Mat = Eigen::Matrix2cd;
    const std::complex<double> I(0.0, 1.0);
    auto su2_u = [&](double x) -> Mat {
        Mat sx, sz;
        sx << 0, 1, 1, 0;
        sz << 1, 0, 0, -1;
        Mat H = 0.4 * std::sin(kTwoPi * x) * sx + 0.3 * std::cos(kTwoPi * x) * sz;
        return (I * H).exp();
    };
    Cocycle uphi = manufactured_coboundary(
        d, [&](double x) { return make_unitary(su2_u(x)); });
    BackwardOrbit anchor = sample_backward_orbit(d, ref, 60, 3);
    for (int k = 1; k < 8; ++k) {
        double y0 = 0.5 * k / 8.0;
        ReconstructionResult tr = reconstruct_transfer(uphi, d, anchor, y0, 1e-10);
        Mat expect = su2_u(y0) * su2_u(ref).adjoint();
        double err = distance(tr.value, GroupElement{Unitary{expect}});
        worst_sup = std::max(worst_sup, err);
        worst_defect = std::max(worst_defect, tr.ad_bound_defect);
    }

    bool pass = worst_sup < 1e-6 && worst_defect <= 1e-9;
    char buf[120];
    std::snprintf(buf, sizeof buf, "sup_err=%.2e tol=1e-6, ad_defect=%.2e tol=1e-9",
                  worst_sup, worst_defect);
    report(6, "transfer recovery + step bound", pass, buf);
}

// ---- criterion 7: metric axioms on random triples ------------------------

void criterion_7() {
    GroupMetric metric;
    struct Variant {
        const char* name;
        std::function<GroupElement()> gen;
        double tol;
    };
    GroupSampler sv(17), sc(19), su(23);
    std::vector<Variant> variants;
    variants.push_back({"realvec", [&] { return sv.realvec(3); }, 1e-12});
    variants.push_back({"circle", [&] { return sc.circle(); }, 1e-12});
    variants.push_back({"unitary", [&] { return su.unitary(2); }, 1e-10});

    bool pass = true;
    std::string detail;
    for (auto& v : variants) {
        double worst = 0.0;
        int checked = 0;
        for (int i = 0; i < 1000; ++i) {
            GroupElement a = v.gen();
            GroupElement b = v.gen();
            GroupElement c = v.gen();
            try {
                worst = std::max(worst, metric.right_invariance_defect(a, b, c));
                worst = std::max(worst, metric.ad_inequality_defect(a, b, c));
                ++checked;
            } catch (const std::domain_error&) {
                // antipodal unitary pair has no principal log: skip the triple
            }
        }
        bool ok = worst <= v.tol && checked >= 900;
        pass = pass && ok;
        char buf[96];
        std::snprintf(buf, sizeof buf, "%s defect=%.2e tol=%.0e n=%d; ", v.name, worst,
                      v.tol, checked);
        detail += buf;
    }
    report(7, "metric invariance on 1000 triples", pass, detail + "per variant");
}

// ---- criterion 8: singular-exponent estimation ---------------------------

void criterion_8() {
    const double lambda = 2.0;
    const double beta = 0.3;
    std::vector<double> eps(400);
    for (std::size_t n = 1; n <= eps.size(); ++n)
        eps[n - 1] = std::pow(lambda, -beta * static_cast<double>(n));

    SingularitySpec log_spec;
    log_spec.kind = SingularitySpec::Kind::logarithmic;
    log_spec.epsilons = eps;
    double a_log = singular_effective_exponent(log_spec, lambda, 0.05).alpha_tilde;

    SingularitySpec pole_spec;
    pole_spec.kind = SingularitySpec::Kind::pole;
    pole_spec.pole_order = 1.0;
    pole_spec.epsilons = eps;
    double a_pole = singular_effective_exponent(pole_spec, lambda, 0.05).alpha_tilde;

    bool geo_ok = std::fabs(a_log - beta) < 1e-6 && std::fabs(a_pole - 2.0 * beta) < 1e-6;

    // polynomial shrinking: the exponent must collapse to zero (finite-horizon
    // reading at N = 1e7: the running max is 2 log(N/2) / ((N/2) log lambda),
    // below 1e-5 and positive)
    double a_poly = singular_effective_exponent_fn(
                        [](long n) {
                            double x = static_cast<double>(n);
                            return 1.0 / (x * x);
                        },
                        10000000L, false, 0.0, lambda, 0.05)
                        .alpha_tilde;
    bool poly_ok = a_poly <= 1e-5 && a_poly > 0.0;

    bool pass = geo_ok && poly_ok;
    char buf[140];
    std::snprintf(buf, sizeof buf,
                  "geometric: log=%.7f pole=%.7f tol=1e-6; polynomial alpha=%.2e cap=1e-5",
                  a_log, a_pole, a_poly);
    report(8, "effective singular exponents", pass, buf);
}

// ---- criterion 9: density approximation martingale -----------------------

void criterion_9() {
    auto u = [](double x) { return std::sin(kTwoPi * x); };
    std::vector<int> depths{2, 4, 6, 8, 10, 12};
    MartingaleReport rep = martingale_density_check(u, depths, 0.1, 200, 21);
    double prop = rep.proportion_at_deepest;
    bool pass = prop >= 0.99;
    char buf[96];
    std::snprintf(buf, sizeof buf, "depth=12 eta=0.1 proportion=%.4f floor=0.99", prop);
    report(9, "conditional-mean approximation", pass, buf);
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    if (g_failures == 0)
        std::printf("acceptance: all 9 criteria passed\n");
    else
        std::printf("acceptance: %d criteria FAILED\n", g_failures);
    return g_failures;
}
