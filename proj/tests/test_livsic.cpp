// Transfer-function reconstruction and its certificates: backward-orbit
// limits, grid solutions of psi(fx) = phi(x) psi(x), periodic obstructions,
// expansion gates, Hoelder fits, singular exponent calculus, shrinking-target
// sums and conditional concentration.
//
// Manufactured coboundaries phi = u(f x) u(x)^{-1} drive the recovery tests:
// the reconstruction must return u(y0) u(x0)^{-1} without ever being shown u.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <livsic/reconstruction.hpp>

#include <cmath>
#include <complex>
#include <numbers>

using namespace livsic;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sin_u(double x) { return std::sin(kTwoPi * x); }

Cocycle sin_coboundary(const PiecewiseMap& map) {
    return manufactured_coboundary(map, [](double x) { return make_real(sin_u(x)); });
}

// A genuinely non-commuting SU(2) path: exp(i (a sigma_x + b sigma_z)).
GroupElement su2_u(double x) {
    double a = 0.4 * std::sin(kTwoPi * x);
    double b = 0.3 * std::cos(kTwoPi * x);
    double th = std::hypot(a, b);
    Eigen::MatrixXcd m = std::cos(th) * Eigen::MatrixXcd::Identity(2, 2);
    if (th > 1e-300) {
        std::complex<double> i(0.0, 1.0);
        Eigen::MatrixXcd sx(2, 2), sz(2, 2);
        sx << 0, 1, 1, 0;
        sz << 1, 0, 0, -1;
        m += i * std::sin(th) * (a * sx + b * sz) / th;
    }
    return make_unitary(m);
}
}  // namespace

TEST_CASE("backward-orbit transfer limit recovers the endpoint quotient") {
    auto d = doubling_map();
    Cocycle phi = sin_coboundary(d);
    auto anchor = sample_backward_orbit(d, 0.37, 60, 3);

    auto res = reconstruct_transfer(phi, d, anchor, 0.2, 1e-10);
    CHECK(distance(res.value, make_real(sin_u(0.2) - sin_u(0.37))) < 1e-6);
    CHECK(res.kappa_hat > 0.0);
    CHECK(res.kappa_hat < 1.0);
    // Every step satisfied d(Psi_n, Psi_{n-1}) <= ad_norm(A) d(phi y_n, phi x_n).
    CHECK(res.ad_bound_defect <= 1e-9);
    CHECK(res.iterations_used == static_cast<int>(res.successive_diffs.size()));

    // Non-commuting values, same contract.
    Cocycle uphi = manufactured_coboundary(d, su2_u);
    auto ures = reconstruct_transfer(uphi, d, anchor, 0.2, 1e-10);
    CHECK(distance(ures.value, multiply(su2_u(0.2), inverse(su2_u(0.37)))) < 1e-6);
    CHECK(ures.ad_bound_defect <= 1e-9);
}

TEST_CASE("transfer limit: degenerate and failure modes") {
    auto d = doubling_map();
    auto anchor = sample_backward_orbit(d, 0.37, 60, 3);

    // Constant cocycle: differences vanish immediately, no decay rate.
    auto res = reconstruct_transfer(constant_cocycle(make_real(0.3)), d, anchor, 0.2, 1e-10);
    CHECK(res.kappa_hat == 0.0);
    CHECK(distance(res.value, make_real(0.0)) < 1e-15);

    // y0 in the wrong partition cell.
    CHECK_THROWS_AS(reconstruct_transfer(sin_coboundary(d), d, anchor, 0.7, 1e-10),
                    std::domain_error);
    try {
        reconstruct_transfer(sin_coboundary(d), d, anchor, 0.7, 1e-10);
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("branch-word mismatch at step 0") != std::string::npos);
    }

    // Unreachable tolerance on a short anchor: differences stay above tol.
    auto shorty = sample_backward_orbit(d, 0.37, 25, 3);
    CHECK_THROWS_AS(reconstruct_transfer(sin_coboundary(d), d, shorty, 0.2, 1e-30),
                    std::runtime_error);
    try {
        reconstruct_transfer(sin_coboundary(d), d, shorty, 0.2, 1e-30);
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("PH violated or singular orbit") != std::string::npos);
    }

    BackwardOrbit stub;
    stub.points = {0.37};
    stub.labels = {-1};
    CHECK_THROWS_AS(reconstruct_transfer(sin_coboundary(d), d, stub, 0.2, 1e-10),
                    std::invalid_argument);
}

TEST_CASE("grid reconstruction solves the transfer equation globally") {
    auto d = doubling_map();
    Cocycle phi = sin_coboundary(d);
    std::vector<double> grid(256);
    for (int k = 0; k < 256; ++k) grid[k] = k / 256.0;

    auto psi = reconstruct_coboundary_on_grid(phi, d, 0.37, grid, 1e-10, 400, 19);
    REQUIRE(psi.points.size() == grid.size());
    double sup = 0.0;
    for (double x : grid)
        sup = std::max(sup, distance(psi.at(x), make_real(sin_u(x) - sin_u(0.37))));
    CHECK(sup < 1e-6);

    // The dyadic grid maps into itself, so the residual check is exact.
    CHECK(coboundary_residual(phi, psi, d) < 1e-6);
}

TEST_CASE("mean-shifted cocycles cannot fake a coboundary") {
    // phi = u(fx) - u(x) + m has no solution; the grid solver still returns
    // a function, but the residual is forced to be at least m.
    auto d = doubling_map();
    const double m = 0.05;
    Cocycle shifted = scalar_cocycle(
        [&d, m](double x) { return sin_u(d.apply(x)) - sin_u(x) + m; });
    std::vector<double> grid(256);
    for (int k = 0; k < 256; ++k) grid[k] = k / 256.0;
    auto psi = reconstruct_coboundary_on_grid(shifted, d, 0.37, grid, 1e-10, 400, 19);
    double residual = coboundary_residual(shifted, psi, d);
    CHECK(residual >= m - 1e-6);
    // The shift surfaces on cell crossings; one inverse step accumulates at
    // most two of them.
    CHECK(residual <= 2.0 * m + 1e-6);
}

TEST_CASE("grid function charts: lookup and interpolation") {
    GridFunction rv{{0.0, 1.0}, {make_real(1.0), make_real(3.0)}};
    CHECK(distance(rv.at(1.0), make_real(3.0)) == 0.0);
    CHECK_THROWS_AS(rv.at(0.5), std::domain_error);
    CHECK(distance(rv.interpolate(0.25), make_real(1.5)) < 1e-12);
    CHECK_THROWS_AS(rv.interpolate(1.5), std::domain_error);
    try {
        rv.interpolate(-0.1);
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("enlarge the grid") != std::string::npos);
    }
    CHECK_THROWS_AS(GridFunction{}.interpolate(0.5), std::logic_error);

    // Circle chart: shortest arc from 0.9 to 0.1 passes through 0.
    GridFunction cg{{0.1, 0.9}, {make_circle(0.9), make_circle(0.1)}};
    CHECK(distance(cg.interpolate(0.5), make_circle(0.0)) < 1e-12);

    // Unitary chart: geodesic midpoint halves every eigenphase.
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(2, 2);
    Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(2, 2);
    B(0, 0) = std::polar(1.0, 0.8);
    B(1, 1) = std::polar(1.0, -0.6);
    GridFunction ug{{0.0, 1.0}, {make_unitary(A), make_unitary(B)}};
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(2, 2);
    M(0, 0) = std::polar(1.0, 0.4);
    M(1, 1) = std::polar(1.0, -0.3);
    CHECK(distance(ug.interpolate(0.5), make_unitary(M)) < 1e-12);
}

TEST_CASE("periodic obstruction: coboundaries pass, shifted log-derivatives fail") {
    auto d = doubling_map();
    auto obs = periodic_obstruction(sin_coboundary(d), d, 10, 1e-8);
    CHECK(obs.rows.size() == 225);  // primitive orbits of the full shift, periods 1..10
    CHECK(obs.max_residual < 1e-7);
    CHECK(obs.coboundary_consistent);

    // log|T'| - log 2 on the a = 2 quadratic map is a measurable coboundary;
    // the orbit through the flat point is excluded, everything else vanishes.
    auto q2 = quadratic_map(2.0);
    auto obs2 = periodic_obstruction(log_derivative_cocycle(q2, std::log(2.0)), q2, 8, 1e-6);
    CHECK(obs2.max_residual < 1e-6);
    CHECK(obs2.coboundary_consistent);

    // Away from a = 2 the same shift leaves a visible residual: the period-two
    // multiplier is 4|1 - a|, so the orbit shows |log(|1 - a|)| per cycle.
    auto q16 = quadratic_map(1.6);
    auto obs3 = periodic_obstruction(log_derivative_cocycle(q16, std::log(2.0)), q16, 2, 1e-8);
    CHECK_FALSE(obs3.coboundary_consistent);
    CHECK(obs3.max_residual == doctest::Approx(std::fabs(std::log(0.6))).epsilon(1e-6));

    CHECK_THROWS_AS(periodic_obstruction(sin_coboundary(d), d, 0, 1e-8), std::invalid_argument);
    CHECK_THROWS_AS(periodic_obstruction(sin_coboundary(d), d, 13, 1e-8), std::invalid_argument);
}

TEST_CASE("expansion gates") {
    auto ok = ph_check(1.0, 2.0, 0.5);
    CHECK(ok.ok);
    CHECK(ok.margin == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-12));
    CHECK_FALSE(ph_check(1.5, 2.0, 0.5).ok);

    auto tower = ph_check_tower(1.0, 2.0, 2.0, 1.0);
    CHECK(tower.ok);
    CHECK(tower.margin == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-12));

    CHECK_THROWS_AS(ph_check(1.0, 0.9, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(ph_check(1.0, 2.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ph_check(1.0, 2.0, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(ph_check(0.5, 2.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(ph_check_tower(1.0, 2.0, 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("Hoelder exponent regression") {
    std::vector<HolderSample> samples;
    for (int i = 0; i < 300; ++i) {
        double gap = std::pow(10.0, -6.0 + 5.0 * i / 299.0);
        samples.push_back({0.2, 0.2 + gap, 3.0 * std::pow(gap, 0.7)});
    }
    auto fit = holder_exponent_estimate(samples);
    CHECK(fit.alpha_hat == doctest::Approx(0.7).epsilon(1e-9));
    CHECK(fit.coefficient == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(fit.r2 > 0.9999);
    CHECK_FALSE(fit.low_confidence);

    // Separations spanning a factor-of-two range identify nothing reliably.
    std::vector<HolderSample> narrow;
    for (int i = 0; i < 300; ++i) {
        double gap = 1e-3 * (1.0 + i / 299.0);
        narrow.push_back({0.2, 0.2 + gap, 3.0 * std::pow(gap, 0.7)});
    }
    CHECK(holder_exponent_estimate(narrow).low_confidence);

    CHECK_THROWS_AS(holder_exponent_estimate(std::vector<HolderSample>(100)),
                    std::invalid_argument);
}

TEST_CASE("singular effective exponents") {
    SingularitySpec logspec;
    logspec.kind = SingularitySpec::Kind::logarithmic;
    for (int n = 1; n <= 400; ++n) logspec.epsilons.push_back(std::pow(2.0, -0.3 * n));

    auto se = singular_effective_exponent(logspec, 2.0, 0.05);
    CHECK(se.alpha_tilde == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(se.effective_exponent == doctest::Approx(1.0 - 0.3 - 0.05).epsilon(1e-9));

    SingularitySpec pole = logspec;
    pole.kind = SingularitySpec::Kind::pole;
    pole.pole_order = 1.0;
    CHECK(singular_effective_exponent(pole, 2.0, 0.05).alpha_tilde ==
          doctest::Approx(0.6).epsilon(1e-9));

    // Polynomially shrinking targets cost nothing asymptotically: at N = 1e7
    // the running exponent is ~2 log(N/2) / ((N/2) log 2).
    auto fn = singular_effective_exponent_fn(
        [](long n) { return 1.0 / (static_cast<double>(n) * static_cast<double>(n)); },
        10000000L, false, 0.0, 2.0, 0.05);
    CHECK(fn.alpha_tilde > 0.0);
    CHECK(fn.alpha_tilde <= 1e-5);

    // Exponent >= 1 leaves no usable regularity.
    SingularitySpec toofast;
    toofast.kind = SingularitySpec::Kind::logarithmic;
    for (int n = 1; n <= 400; ++n) toofast.epsilons.push_back(std::pow(2.0, -1.2 * n));
    CHECK_THROWS_AS(singular_effective_exponent(toofast, 2.0, 0.05), std::runtime_error);

    SingularitySpec rising;
    rising.kind = SingularitySpec::Kind::logarithmic;
    for (int n = 1; n <= 60; ++n) rising.epsilons.push_back(0.1 * n);
    CHECK_THROWS_AS(singular_effective_exponent(rising, 2.0, 0.05), std::invalid_argument);

    SingularitySpec shortspec;
    shortspec.kind = SingularitySpec::Kind::logarithmic;
    for (int n = 1; n <= 10; ++n) shortspec.epsilons.push_back(std::pow(2.0, -0.3 * n));
    CHECK_THROWS_AS(singular_effective_exponent(shortspec, 2.0, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(singular_effective_exponent(logspec, 1.0, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(singular_effective_exponent(logspec, 2.0, 0.0), std::invalid_argument);
}

TEST_CASE("shrinking-target sums around a point") {
    auto d = doubling_map();
    auto sq = borel_cantelli_avoidance(
        d, 0.3, [](long n) { return 1.0 / (static_cast<double>(n) * static_cast<double>(n)); },
        2000, 9, 32, 2000);
    CHECK(sq.summable);
    CHECK(sq.tail_fraction < 0.05);
    CHECK(sq.last_hit.size() == 32);
    CHECK(sq.hit_quantile(0.5) >= 0.0);

    auto harmonic = borel_cantelli_avoidance(
        d, 0.3, [](long n) { return 0.25 / static_cast<double>(n); }, 2000, 9, 32, 2000);
    CHECK_FALSE(harmonic.summable);
    // Divergent sums keep hitting: the median last hit sits deep in the orbit.
    CHECK(harmonic.hit_quantile(0.5) > 100.0);

    CHECK_THROWS_AS(borel_cantelli_avoidance(manneville_pomeau_map(1.0), 0.3,
                                             [](long) { return 1e-3; }, 200, 9, 8, 200),
                    std::logic_error);
    CHECK_THROWS_AS(borel_cantelli_avoidance(d, 7.0, [](long) { return 1e-3; }, 200, 9, 8, 200),
                    std::invalid_argument);
}

TEST_CASE("neutral-family regularity gate") {
    CHECK(mp_regularity_gate(1.0, 0.6));
    CHECK_FALSE(mp_regularity_gate(1.0, 0.4));
    CHECK(mp_regularity_gate(0.0, 0.1));  // threshold 0: any exponent passes
    CHECK_FALSE(mp_regularity_gate(2.0, 2.0 / 3.0));
    CHECK_THROWS_AS(mp_regularity_gate(-0.5, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(mp_regularity_gate(1.0, 1.5), std::invalid_argument);
}

TEST_CASE("conditional concentration on dyadic cells") {
    auto smooth = martingale_density_check([](double x) { return std::sin(kTwoPi * x); },
                                           {2, 4, 6, 8, 10, 12}, 0.1, 200, 21);
    REQUIRE(smooth.depths.size() == 6);
    CHECK(smooth.proportion_at_deepest >= 0.99);
    // Fractions improve with depth for a Lipschitz observable.
    CHECK(smooth.mean_fraction.back() >= smooth.mean_fraction.front());

    auto constant = martingale_density_check([](double) { return 0.7; }, {2, 4}, 0.1, 64, 21);
    CHECK(constant.mean_fraction[0] == doctest::Approx(1.0));
    CHECK(constant.proportion_at_deepest == doctest::Approx(1.0));

    // Dyadic indicator: constant on every cell of depth >= 1.
    auto indicator = martingale_density_check([](double x) { return x < 0.5 ? 1.0 : 0.0; },
                                              {4, 8, 12}, 0.1, 200, 21);
    CHECK(indicator.proportion_at_deepest >= 0.99);

    CHECK_THROWS_AS(martingale_density_check([](double) { return 0.0; }, {}, 0.1, 64, 21),
                    std::invalid_argument);
    CHECK_THROWS_AS(martingale_density_check([](double) { return 0.0; }, {2}, 1.5, 64, 21),
                    std::invalid_argument);
}
