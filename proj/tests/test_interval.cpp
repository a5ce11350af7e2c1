// Piecewise map mechanics: branch data, cylinders, word arithmetic, periodic
// orbits, Lyapunov exponents, densities and backward orbits.  Closed-form
// values (dyadic cylinders, arcsine integrals, tent multipliers) are asserted
// to tight tolerances; Monte Carlo quantities get CLT-scaled ones.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <livsic/interval_map.hpp>

#include <cmath>
#include <json.hpp>
#include <sstream>

using namespace livsic;

namespace {
constexpr double kLog2 = 0.6931471805599453;
}

TEST_CASE("builtin families expose consistent branch data") {
    std::vector<PiecewiseMap> fams = {doubling_map(), tent_map(1.7), quadratic_map(2.0),
                                      quadratic_map(1.7), manneville_pomeau_map(1.0)};
    for (const auto& m : fams) {
        CAPTURE(m.name());
        REQUIRE(m.branch_count() == 2);
        // Branch domains tile the phase interval in order.
        CHECK(m.branches().front().domain.lo == doctest::Approx(m.domain().lo));
        CHECK(m.branches().back().domain.hi == doctest::Approx(m.domain().hi));
        CHECK(m.branch(0).domain.hi == doctest::Approx(m.branch(1).domain.lo));
        for (int b = 0; b < m.branch_count(); ++b) {
            const Branch& br = m.branch(b);
            double sign = br.increasing ? 1.0 : -1.0;
            CHECK(sign * br.df(br.domain.mid()) > 0.0);
            for (double t : {0.1, 0.35, 0.8}) {
                double x = br.domain.lo + t * br.domain.length();
                double y = m.apply(b, x);
                CHECK(y >= br.image.lo - 1e-12);
                CHECK(y <= br.image.hi + 1e-12);
                CHECK(m.inverse(b, y) == doctest::Approx(x).epsilon(1e-8));
            }
        }
        // Point evaluation agrees with branch-pinned evaluation.
        for (double t : {0.05, 0.3, 0.62, 0.9}) {
            double x = m.domain().lo + t * m.domain().length();
            CHECK(m.apply(x) == doctest::Approx(m.apply(m.branch_index(x), x)));
            CHECK(m.derivative(x) == doctest::Approx(m.derivative(m.branch_index(x), x)));
        }
    }
}

TEST_CASE("branch lookup conventions and guards") {
    auto d = doubling_map();
    CHECK(d.branch_index(0.0) == 0);
    CHECK(d.branch_index(0.49) == 0);
    // Shared endpoint belongs to the right-hand branch.
    CHECK(d.branch_index(0.5) == 1);
    CHECK_THROWS_AS(d.branch_index(2.0), std::domain_error);
    CHECK_THROWS_AS(d.inverse(0, 1.5), std::domain_error);

    PiecewiseMap placeholder;
    CHECK_THROWS_AS(placeholder.branch_index(0.3), std::logic_error);
}

TEST_CASE("preimages enumerate every inverse branch") {
    auto d = doubling_map();
    auto pre = d.preimages(0.3);
    REQUIRE(pre.size() == 2);
    CHECK(pre[0].first == 0);
    CHECK(pre[0].second == doctest::Approx(0.15));
    CHECK(pre[1].first == 1);
    CHECK(pre[1].second == doctest::Approx(0.65));

    auto q = quadratic_map(2.0);
    for (const auto& [b, x] : q.preimages(0.5)) {
        CHECK(q.apply(b, x) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(std::fabs(x) == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("dyadic cylinders are exact") {
    auto d = doubling_map();
    auto c = cylinder(d, 0.3, 2);
    REQUIRE(c.word == std::vector<int>{0, 1});
    CHECK(c.interval.lo == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(c.interval.hi == doctest::Approx(0.5).epsilon(1e-12));

    auto iv = cylinder_of_word(d, c.word);
    REQUIRE(iv.has_value());
    CHECK(iv->lo == doctest::Approx(c.interval.lo));
    CHECK(iv->hi == doctest::Approx(c.interval.hi));

    // One forward step through branch 0 doubles the cylinder onto [1/2, 1].
    Interval img = word_image(d, c.word, c.interval, 1);
    CHECK(img.lo == doctest::Approx(0.5));
    CHECK(img.hi == doctest::Approx(1.0));

    // 0.25 -> 0.5 lands on the branch endpoint: labels are ambiguous.
    CHECK_THROWS_AS(cylinder(d, 0.25, 3), std::domain_error);
    try {
        cylinder(d, 0.25, 3);
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("boundary orbit") != std::string::npos);
    }
}

TEST_CASE("word arithmetic: apply, derivative, pull back") {
    auto d = doubling_map();
    std::vector<int> word{0, 1, 1};
    double x = pull_back_word(d, word, 0.7);
    CHECK(apply_word(d, word, x) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(word_derivative(d, word, x) == doctest::Approx(8.0));
    auto iv = cylinder_of_word(d, word);
    REQUIRE(iv.has_value());
    CHECK(iv->contains(x));

    auto q = quadratic_map(2.0);
    std::vector<int> qw{1, 0};
    double y = pull_back_word(q, qw, 0.4);
    CHECK(apply_word(q, qw, y) == doctest::Approx(0.4).epsilon(1e-10));
    double prod = q.derivative(1, y) * q.derivative(0, q.apply(1, y));
    CHECK(word_derivative(q, qw, y) == doctest::Approx(prod).epsilon(1e-12));
}

TEST_CASE("periodic orbits: counts, points, multipliers") {
    auto d = doubling_map();
    auto fix = periodic_points(d, 1);
    REQUIRE(fix.size() == 1);  // x = 1 is the same circle point as x = 0
    CHECK(fix[0].points[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fix[0].multiplier == doctest::Approx(2.0));

    auto two = periodic_points(d, 2);
    REQUIRE(two.size() == 1);  // {1/3, 2/3}, one orbit up to rotation
    CHECK(two[0].multiplier == doctest::Approx(4.0).epsilon(1e-12));
    std::vector<double> pts = two[0].points;
    std::sort(pts.begin(), pts.end());
    CHECK(pts[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    CHECK(pts[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-10));

    auto t = periodic_points(tent_map(2.0), 1);
    REQUIRE(t.size() == 2);  // 0 and 2/3
    for (const auto& o : t) CHECK(o.multiplier == doctest::Approx(2.0));

    auto qf = periodic_points(quadratic_map(2.0), 1);
    REQUIRE(qf.size() == 2);  // -1 and 1/2
    for (const auto& o : qf) {
        double p = o.points[0];
        CHECK(o.multiplier == doctest::Approx(4.0 * std::fabs(p)).epsilon(1e-10));
    }

    // 1 - a x^2: the interior fixed point has |f'| = sqrt(1+4a) - 1 and the
    // period-two cycle has multiplier 4|1-a|.
    const double a = 1.8;
    auto q = quadratic_map(a);
    bool found_interior = false;
    for (const auto& o : periodic_points(q, 1)) {
        if (o.points[0] > 0.0) {
            found_interior = true;
            CHECK(o.multiplier == doctest::Approx(std::sqrt(1.0 + 4.0 * a) - 1.0).epsilon(1e-9));
        }
    }
    CHECK(found_interior);
    auto q2 = periodic_points(q, 2);
    REQUIRE(q2.size() == 1);
    CHECK(q2[0].multiplier == doctest::Approx(4.0 * std::fabs(1.0 - a)).epsilon(1e-9));

    CHECK_THROWS_AS(periodic_points(d, 0), std::invalid_argument);
    CHECK_THROWS_AS(periodic_points(d, 15), std::invalid_argument);
}

TEST_CASE("Lyapunov exponents") {
    // Constant-slope maps: every Birkhoff mean equals the log slope exactly.
    auto ld = lyapunov_exponent(doubling_map(), 50000, 100, 2);
    CHECK(std::fabs(ld.value - kLog2) < 1e-9);
    auto lt = lyapunov_exponent(tent_map(1.7), 50000, 100, 2);
    CHECK(std::fabs(lt.value - std::log(1.7)) < 1e-9);

    // Non-constant slope: the mean is log 2; accept a CLT-sized deviation.
    auto lq = lyapunov_exponent(quadratic_map(2.0), 100000, 1000, 1);
    CHECK(lq.std_error > 0.0);
    CHECK(std::fabs(lq.value - kLog2) < 5.0 * lq.std_error + 1e-6);
    CHECK(lq.iterations == 100000);
}

TEST_CASE("distortion ratios") {
    auto d = doubling_map();
    auto c = cylinder(d, 0.3, 5);
    CHECK(distortion_ratio(d, c) == doctest::Approx(1.0).epsilon(1e-12));

    auto q = quadratic_map(2.0);
    auto qc = cylinder(q, 0.3, 3);
    CHECK(distortion_ratio(q, qc) >= 1.0);

    // A cell whose closure meets the critical point: |Df| vanishes there.
    CylinderSet bad{1, {0}, Interval{-0.5, 0.5}};
    CHECK_THROWS_AS(distortion_ratio(q, bad, 63), std::domain_error);
}

TEST_CASE("contraction fit: dyadic orbit exponential, neutral dive not") {
    auto d = doubling_map();
    auto orb = sample_backward_orbit(d, 0.37, 30, 5);
    auto fit = contraction_check(d, orb, 30);
    CHECK(fit.exponential_ok);
    CHECK(fit.lambda_hat == doctest::Approx(2.0).epsilon(1e-9));
    // diam P_n = 2^-n exactly for the doubling map.
    CHECK(fit.diameters[9] == doctest::Approx(std::pow(2.0, -10)).epsilon(1e-12));

    auto mp = manneville_pomeau_map(1.0);
    auto dive = backward_orbit_along(mp, 0.9, {0}, 80);
    auto mfit = contraction_check(mp, dive, 80);
    CHECK_FALSE(mfit.exponential_ok);  // polynomial contraction toward x = 0
    CHECK(mfit.lambda_hat < 1.2);

    CHECK_THROWS_AS(contraction_check(d, sample_backward_orbit(d, 0.37, 10, 5), 10),
                    std::invalid_argument);
}

TEST_CASE("densities: exact integrals, estimates, weight-only guard") {
    auto q = quadratic_map(2.0);
    REQUIRE(q.density().has_value());
    CHECK(q.density()->is_probability);
    CHECK(q.density()->kind == "analytic");
    // arcsine law: integral over [-1/2, 1/2] is exactly 1/3.
    CHECK(q.density()->integrate(-0.5, 0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    auto d = doubling_map();
    REQUIRE(d.density().has_value());
    CHECK(d.density()->integrate(0.2, 0.7) == doctest::Approx(0.5).epsilon(1e-12));

    auto mp1 = manneville_pomeau_map(1.0);
    REQUIRE(mp1.density().has_value());
    CHECK_FALSE(mp1.density()->is_probability);
    CHECK_THROWS_AS(mp1.density()->integrate(0.25, 0.75), std::logic_error);

    // p = 0 degenerates to the doubling map with Lebesgue invariant measure.
    auto mp0 = manneville_pomeau_map(0.0);
    CHECK(mp0.density()->is_probability);

    auto est = estimate_density(q, 512, 2000000, 1000, 3);
    CHECK(est.kind == "histogram");
    CHECK(est.integrate(-0.5, 0.5) == doctest::Approx(1.0 / 3.0).epsilon(5e-3));

    auto hist = histogram_density({0.0, 0.5, 1.0}, {1.0, 3.0});
    CHECK(hist.pdf(0.25) == doctest::Approx(0.5));
    CHECK(hist.pdf(0.75) == doctest::Approx(1.5));
    CHECK(hist.integrate(0.0, 0.5) == doctest::Approx(0.25));
    CHECK(hist.integrate(0.25, 0.75) == doctest::Approx(0.5));
}

TEST_CASE("backward orbit sampling honours the orbit contract") {
    for (auto m : {doubling_map(), quadratic_map(2.0)}) {
        CAPTURE(m.name());
        auto orb = sample_backward_orbit(m, 0.37, 30, 5);
        REQUIRE(orb.points.size() == 31);
        REQUIRE(orb.labels.size() == 31);
        CHECK(orb.labels[0] == -1);
        for (std::size_t i = 1; i < orb.points.size(); ++i) {
            CHECK(m.apply(orb.points[i]) == doctest::Approx(orb.points[i - 1]).epsilon(1e-10));
            CHECK(orb.labels[i] == m.branch_index(orb.points[i]));
        }
    }
    auto d = doubling_map();
    auto orb = sample_backward_orbit(d, 0.37, 30, 5);
    CHECK(orb.lambda_hat == doctest::Approx(2.0).epsilon(1e-6));

    // Deterministic pullback follows the requested word cycle.
    auto along = backward_orbit_along(d, 0.3, {0, 1}, 6);
    for (std::size_t i = 1; i < along.points.size(); ++i)
        CHECK(along.labels[i] == ((i - 1) % 2 == 0 ? 0 : 1));
}

TEST_CASE("serialization formats") {
    auto q = quadratic_map(1.7);
    auto j = nlohmann::json::parse(map_to_json(q));
    CHECK(j["name"] == "quadratic");
    CHECK(j["params"]["a"] == doctest::Approx(1.7));
    REQUIRE(j["branchEndpoints"].size() == 3);
    CHECK(j["branchEndpoints"][0] == doctest::Approx(-1.0));
    CHECK(j["branchEndpoints"][1] == doctest::Approx(0.0));
    CHECK(j["branchEndpoints"][2] == doctest::Approx(1.0));

    auto d = doubling_map();
    std::string csv = density_to_csv(*d.density(), d.domain(), 4);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "bin_left,bin_right,density");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        auto last = line.rfind(',');
        CHECK(std::stod(line.substr(last + 1)) == doctest::Approx(1.0));
    }
    CHECK(rows == 4);
}
