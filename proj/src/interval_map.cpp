#include "livsic/interval_map.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

namespace livsic {

namespace {

constexpr double kBranchTol = 1e-12;

double splitmix_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

// Least squares y = a + b x; returns {a, b, r2}.
struct LinFit {
    double a = 0.0, b = 0.0, r2 = 0.0;
};
LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinFit f;
    f.b = sxy / sxx;
    f.a = my - f.b * mx;
    f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

}  // namespace

// ── densities ───────────────────────────────────────────────────────────────

double DensityModel::integrate(double a, double b) const {
    if (!is_probability)
        throw std::logic_error(
            "density is a weight-only reference shape; run estimate_density for a "
            "normalized invariant density before integrating");
    if (b < a) std::swap(a, b);
    if (cdf) return cdf(b) - cdf(a);
    // Composite Simpson; densities without a CDF are bounded in-scope.
    const int n = 2048;
    const double h = (b - a) / n;
    double s = pdf(a) + pdf(b);
    for (int i = 1; i < n; ++i) s += pdf(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

DensityModel histogram_density(const std::vector<double>& edges,
                               const std::vector<double>& mass_per_bin) {
    if (edges.size() != mass_per_bin.size() + 1 || edges.size() < 2)
        throw std::invalid_argument("histogram_density: need edges = bins + 1");
    double total = std::accumulate(mass_per_bin.begin(), mass_per_bin.end(), 0.0);
    if (total <= 0) throw std::invalid_argument("histogram_density: empty histogram");
    auto heights = std::make_shared<std::vector<double>>(mass_per_bin.size());
    auto cum = std::make_shared<std::vector<double>>(mass_per_bin.size() + 1, 0.0);
    auto edg = std::make_shared<std::vector<double>>(edges);
    for (std::size_t i = 0; i < mass_per_bin.size(); ++i) {
        double w = edges[i + 1] - edges[i];
        (*heights)[i] = mass_per_bin[i] / (total * (w > 0 ? w : 1.0));
        (*cum)[i + 1] = (*cum)[i] + mass_per_bin[i] / total;
    }
    DensityModel d;
    d.kind = "histogram";
    d.is_probability = true;
    d.pdf = [heights, edg](double x) {
        auto it = std::upper_bound(edg->begin(), edg->end(), x);
        if (it == edg->begin() || it == edg->end()) {
            if (x == edg->back()) return heights->back();
            return 0.0;
        }
        return (*heights)[static_cast<std::size_t>(it - edg->begin()) - 1];
    };
    d.cdf = [heights, cum, edg](double x) {
        if (x <= edg->front()) return 0.0;
        if (x >= edg->back()) return 1.0;
        auto it = std::upper_bound(edg->begin(), edg->end(), x);
        std::size_t i = static_cast<std::size_t>(it - edg->begin()) - 1;
        return (*cum)[i] + (*heights)[i] * (x - (*edg)[i]);
    };
    return d;
}

// ── the map ─────────────────────────────────────────────────────────────────

PiecewiseMap::PiecewiseMap(std::string name, std::map<std::string, double> params,
                           Interval domain, std::vector<Branch> branches,
                           std::vector<double> critical_set, bool circular)
    : name_(std::move(name)),
      params_(std::move(params)),
      domain_(domain),
      branches_(std::move(branches)),
      critical_(std::move(critical_set)),
      circular_(circular) {
    if (branches_.empty()) throw std::invalid_argument("map needs at least one branch");
    for (std::size_t b = 0; b + 1 < branches_.size(); ++b) {
        if (branches_[b].domain.hi > branches_[b + 1].domain.lo + kBranchTol)
            throw std::invalid_argument("branch domains must be ordered with disjoint interiors");
    }
    // Inverse/forward consistency spot check.
    for (const auto& br : branches_) {
        for (double t : {0.17, 0.5, 0.83}) {
            double x = br.domain.lo + t * br.domain.length();
            double y = br.f(x);
            double back = br.inv(y);
            if (std::fabs(back - x) > 1e-9 * std::max(1.0, std::fabs(x)))
                throw std::invalid_argument("branch inverse does not invert forward map");
        }
    }
}

int PiecewiseMap::branch_index(double x) const {
    if (branches_.empty()) throw std::logic_error("PiecewiseMap: empty placeholder map");
    if (x < domain_.lo - kBranchTol || x > domain_.hi + kBranchTol)
        throw std::domain_error("point " + std::to_string(x) + " outside map domain");
    for (std::size_t b = branches_.size(); b-- > 0;) {
        if (x >= branches_[b].domain.lo) {
            if (x <= branches_[b].domain.hi + kBranchTol) return static_cast<int>(b);
            break;
        }
    }
    if (x <= branches_.front().domain.lo + kBranchTol) return 0;
    throw std::domain_error("point " + std::to_string(x) + " not covered by any branch");
}

double PiecewiseMap::apply(double x) const { return apply(branch_index(x), x); }

double PiecewiseMap::apply(int b, double x) const { return branch(b).f(x); }

double PiecewiseMap::derivative(double x) const { return derivative(branch_index(x), x); }

double PiecewiseMap::derivative(int b, double x) const { return branch(b).df(x); }

double PiecewiseMap::inverse(int b, double y) const {
    const Branch& br = branch(b);
    if (y < br.image.lo - 1e-9 || y > br.image.hi + 1e-9)
        throw std::domain_error("inverse: value outside branch image");
    double yc = std::clamp(y, br.image.lo, br.image.hi);
    double x = br.inv(yc);
    return std::clamp(x, br.domain.lo, br.domain.hi);
}

std::vector<std::pair<int, double>> PiecewiseMap::preimages(double y) const {
    std::vector<std::pair<int, double>> out;
    for (int b = 0; b < branch_count(); ++b) {
        const Branch& br = branches_[static_cast<std::size_t>(b)];
        if (y < br.image.lo - kBranchTol || y > br.image.hi + kBranchTol) continue;
        double x = inverse(b, y);
        if (std::fabs(apply(b, x) - y) <= 1e-9) out.emplace_back(b, x);
    }
    return out;
}

PiecewiseMap PiecewiseMap::with_density(DensityModel d) const {
    PiecewiseMap copy = *this;
    copy.density_ = std::move(d);
    return copy;
}

double PiecewiseMap::boundary_gap(double x) const {
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& br : branches_) {
        gap = std::min(gap, std::fabs(x - br.domain.lo));
        gap = std::min(gap, std::fabs(x - br.domain.hi));
    }
    return gap;
}

// ── builtin families ────────────────────────────────────────────────────────

PiecewiseMap doubling_map() {
    Branch b0{{0.0, 0.5},
              {0.0, 1.0},
              [](double x) { return 2.0 * x; },
              [](double) { return 2.0; },
              [](double y) { return 0.5 * y; },
              true};
    Branch b1{{0.5, 1.0},
              {0.0, 1.0},
              [](double x) { return 2.0 * x - 1.0; },
              [](double) { return 2.0; },
              [](double y) { return 0.5 * (y + 1.0); },
              true};
    DensityModel lebesgue;
    lebesgue.pdf = [](double) { return 1.0; };
    lebesgue.cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
    lebesgue.kind = "analytic";
    PiecewiseMap m("doubling", {}, {0.0, 1.0}, {b0, b1}, {0.5}, /*circular=*/true);
    return m.with_density(lebesgue);
}

PiecewiseMap tent_map(double slope) {
    if (!(slope > 1.0 && slope <= 2.0))
        throw std::invalid_argument("tent slope must lie in (1, 2]");
    double top = slope / 2.0;
    Branch b0{{0.0, 0.5},
              {0.0, top},
              [slope](double x) { return slope * x; },
              [slope](double) { return slope; },
              [slope](double y) { return y / slope; },
              true};
    Branch b1{{0.5, 1.0},
              {0.0, top},
              [slope](double x) { return slope * (1.0 - x); },
              [slope](double) { return -slope; },
              [slope](double y) { return 1.0 - y / slope; },
              false};
    PiecewiseMap m("tent", {{"slope", slope}}, {0.0, 1.0}, {b0, b1}, {0.5});
    if (slope == 2.0) {
        DensityModel lebesgue;
        lebesgue.pdf = [](double) { return 1.0; };
        lebesgue.cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
        lebesgue.kind = "analytic";
        return m.with_density(lebesgue);
    }
    return m;
}

PiecewiseMap chebyshev_tent_map() {
    PiecewiseMap t = tent_map(2.0);
    return PiecewiseMap("chebyshev_tent", {}, t.domain(), t.branches(), t.critical_set())
        .with_density(*t.density());
}

PiecewiseMap quadratic_map(double a) {
    if (!(a > 0.0 && a <= 2.0))
        throw std::invalid_argument("quadratic parameter must lie in (0, 2]");
    auto f = [a](double x) { return 1.0 - a * x * x; };
    auto df = [a](double x) { return -2.0 * a * x; };
    Branch b0{{-1.0, 0.0},
              {1.0 - a, 1.0},
              f,
              df,
              [a](double y) { return -std::sqrt(std::max(0.0, (1.0 - y) / a)); },
              true};
    Branch b1{{0.0, 1.0},
              {1.0 - a, 1.0},
              f,
              df,
              [a](double y) { return std::sqrt(std::max(0.0, (1.0 - y) / a)); },
              false};
    PiecewiseMap m("quadratic", {{"a", a}}, {-1.0, 1.0}, {b0, b1}, {0.0});
    if (a == 2.0) {
        DensityModel arcsine;
        arcsine.pdf = [](double x) {
            double s = std::max(1e-300, 1.0 - x * x);
            return 1.0 / (M_PI * std::sqrt(s));
        };
        arcsine.cdf = [](double x) {
            return std::asin(std::clamp(x, -1.0, 1.0)) / M_PI + 0.5;
        };
        arcsine.kind = "analytic";
        return m.with_density(arcsine);
    }
    return m;
}

PiecewiseMap manneville_pomeau_map(double p) {
    if (p < 0.0) throw std::invalid_argument("manneville_pomeau exponent must be >= 0");
    const double c = std::pow(2.0, p);
    auto f0 = [c, p](double x) { return x + c * std::pow(x, 1.0 + p); };
    auto df0 = [c, p](double x) {
        return 1.0 + c * (1.0 + p) * (p == 0.0 ? 1.0 : std::pow(x, p));
    };
    // Monotone solve of f0(x) = y on [0, 1/2]: bisection then Newton polish,
    // residual below 1e-14.
    auto inv0 = [f0, df0](double y) {
        if (y <= 0.0) return 0.0;
        if (y >= 1.0) return 0.5;
        double lo = 0.0, hi = 0.5;
        for (int i = 0; i < 40; ++i) {
            double mid = 0.5 * (lo + hi);
            (f0(mid) < y ? lo : hi) = mid;
        }
        // 2^-40 bracket, two Newton steps land at machine precision.
        double x = 0.5 * (lo + hi);
        for (int i = 0; i < 2; ++i) x -= (f0(x) - y) / df0(x);
        return std::clamp(x, 0.0, 0.5);
    };
    Branch b0{{0.0, 0.5}, {0.0, 1.0}, f0, df0, inv0, true};
    Branch b1{{0.5, 1.0},
              {0.0, 1.0},
              [](double x) { return 2.0 * x - 1.0; },
              [](double) { return 2.0; },
              [](double y) { return 0.5 * (y + 1.0); },
              true};
    PiecewiseMap m("manneville_pomeau", {{"p", p}}, {0.0, 1.0}, {b0, b1}, {0.5});
    if (p == 0.0) {
        DensityModel lebesgue;
        lebesgue.pdf = [](double) { return 1.0; };
        lebesgue.cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
        lebesgue.kind = "analytic";
        return m.with_density(lebesgue);
    }
    // Weight-only reference shape h ~ x^{-p}: correct local behaviour near the
    // neutral point, used solely where density ratios enter (branch weights).
    DensityModel w;
    w.pdf = [p](double x) { return std::pow(std::max(x, 1e-300), -p); };
    w.is_probability = false;
    w.kind = "analytic";
    return m.with_density(w);
}

PiecewiseMap builtin_map(const std::string& name, const std::map<std::string, double>& params) {
    auto get = [&params](const std::string& key, std::optional<double> fallback =
                                                     std::nullopt) -> double {
        auto it = params.find(key);
        if (it != params.end()) return it->second;
        if (fallback) return *fallback;
        throw std::invalid_argument("builtin_map: missing parameter '" + key + "'");
    };
    if (name == "doubling") return doubling_map();
    if (name == "tent") return tent_map(get("slope", 2.0));
    if (name == "chebyshev_tent") return chebyshev_tent_map();
    if (name == "quadratic") return quadratic_map(get("a"));
    if (name == "manneville_pomeau") return manneville_pomeau_map(get("p"));
    throw std::invalid_argument("unknown builtin map '" + name + "'");
}

// ── cylinders ───────────────────────────────────────────────────────────────

std::optional<Interval> cylinder_of_word(const PiecewiseMap& map, const std::vector<int>& word) {
    if (word.empty()) return map.domain();
    Interval j = map.branch(word.back()).domain;
    for (std::size_t i = word.size() - 1; i-- > 0;) {
        const Branch& br = map.branch(word[i]);
        double lo = std::max(j.lo, br.image.lo);
        double hi = std::min(j.hi, br.image.hi);
        if (hi - lo <= 1e-15) return std::nullopt;
        double a = map.inverse(word[i], lo);
        double b = map.inverse(word[i], hi);
        if (a > b) std::swap(a, b);
        j = {a, b};
    }
    return j;
}

CylinderSet cylinder(const PiecewiseMap& map, double x, int depth, double boundary_tol) {
    CylinderSet c;
    c.depth = depth;
    double cur = x;
    for (int i = 0; i < depth; ++i) {
        if (map.boundary_gap(cur) < boundary_tol)
            throw std::domain_error("boundary orbit: iterate " + std::to_string(i) +
                                    " lies on a branch endpoint, labels ambiguous");
        int b = map.branch_index(cur);
        c.word.push_back(b);
        cur = map.apply(b, cur);
    }
    auto iv = cylinder_of_word(map, c.word);
    if (!iv || !Interval{iv->lo - 1e-9, iv->hi + 1e-9}.contains(x))
        throw std::logic_error("cylinder: word pullback does not contain the base point");
    c.interval = *iv;
    return c;
}

Interval word_image(const PiecewiseMap& map, const std::vector<int>& word, Interval iv, int k) {
    double a = iv.lo, b = iv.hi;
    for (int i = 0; i < k; ++i) {
        a = map.apply(word[static_cast<std::size_t>(i)], a);
        b = map.apply(word[static_cast<std::size_t>(i)], b);
        if (a > b) std::swap(a, b);
    }
    return {a, b};
}

// ── backward orbits ─────────────────────────────────────────────────────────

namespace {

void fit_orbit_contraction(const PiecewiseMap& map, BackwardOrbit& orbit) {
    orbit.lambda_hat = std::numeric_limits<double>::quiet_NaN();
    orbit.chat = std::numeric_limits<double>::quiet_NaN();
    if (orbit.points.size() < 21) return;
    try {
        // Depth capped: the cylinder arithmetic is O(depth^2) and the fit
        // stabilises long before 48 levels.
        ContractionFit fit = contraction_check(
            map, orbit, std::min<int>(48, static_cast<int>(orbit.points.size()) - 1));
        orbit.lambda_hat = fit.lambda_hat;
        orbit.chat = fit.chat;
    } catch (const std::exception&) {
        // leave NaN; diagnostic only
    }
}

}  // namespace

BackwardOrbit sample_backward_orbit(const PiecewiseMap& map, double x0, int length,
                                    std::uint64_t seed) {
    if (!map.density())
        throw std::logic_error(
            "sample_backward_orbit: map has no invariant density; run estimate_density and "
            "attach it with with_density");
    const DensityModel& h = *map.density();
    BackwardOrbit orbit;
    orbit.points.push_back(x0);
    orbit.labels.push_back(-1);
    std::uint64_t state = seed ? seed : 1;
    double cur = x0;
    for (int i = 0; i < length; ++i) {
        auto pre = map.preimages(cur);
        if (pre.empty())
            throw std::domain_error("sample_backward_orbit: point has no preimage");
        std::vector<double> w(pre.size());
        double total = 0.0;
        for (std::size_t k = 0; k < pre.size(); ++k) {
            double y = pre[k].second;
            double dfy = std::fabs(map.derivative(pre[k].first, y));
            w[k] = h(y) / std::max(dfy, 1e-300);
            total += w[k];
        }
        if (total <= 0.0)
            throw std::domain_error("sample_backward_orbit: degenerate branch weights");
        double u = splitmix_next(state) * total;
        std::size_t pick = 0;
        for (; pick + 1 < pre.size(); ++pick) {
            if (u < w[pick]) break;
            u -= w[pick];
        }
        double y = pre[pick].second;
        if (map.boundary_gap(y) < 1e-13)
            throw std::domain_error("sample_backward_orbit: boundary orbit rejected");
        if (std::fabs(map.apply(pre[pick].first, y) - cur) > 1e-10)
            throw std::logic_error("sample_backward_orbit: inverse residual exceeds 1e-10");
        orbit.points.push_back(y);
        orbit.labels.push_back(pre[pick].first);
        cur = y;
    }
    fit_orbit_contraction(map, orbit);
    return orbit;
}

BackwardOrbit backward_orbit_along(const PiecewiseMap& map, double x0,
                                   const std::vector<int>& word_cycle, int length) {
    if (word_cycle.empty()) throw std::invalid_argument("backward_orbit_along: empty word");
    BackwardOrbit orbit;
    orbit.points.push_back(x0);
    orbit.labels.push_back(-1);
    double cur = x0;
    for (int i = 0; i < length; ++i) {
        int b = word_cycle[static_cast<std::size_t>(i) % word_cycle.size()];
        const Branch& br = map.branch(b);
        if (cur < br.image.lo - 1e-12 || cur > br.image.hi + 1e-12)
            throw std::domain_error("backward_orbit_along: branch image does not cover point at step " +
                                    std::to_string(i));
        double y = map.inverse(b, cur);
        orbit.points.push_back(y);
        orbit.labels.push_back(b);
        cur = y;
    }
    fit_orbit_contraction(map, orbit);
    return orbit;
}

// ── diagnostics ─────────────────────────────────────────────────────────────

double distortion_ratio(const PiecewiseMap& map, const CylinderSet& cyl, int grid_points) {
    if (cyl.interval.length() <= 0)
        throw std::domain_error("distortion_ratio: cylinder has empty interior");
    double lo_deriv = std::numeric_limits<double>::infinity();
    double hi_deriv = 0.0;
    for (int g = 0; g < grid_points; ++g) {
        double y = cyl.interval.lo + (g + 0.5) / grid_points * cyl.interval.length();
        double prod = 1.0;
        double cur = y;
        for (int i = 0; i < cyl.depth; ++i) {
            double d = std::fabs(map.derivative(cyl.word[static_cast<std::size_t>(i)], cur));
            if (d < 1e-14)
                throw std::domain_error(
                    "critical cylinder: |Df^n| vanishes on the cylinder closure");
            prod *= d;
            cur = map.apply(cyl.word[static_cast<std::size_t>(i)], cur);
        }
        lo_deriv = std::min(lo_deriv, prod);
        hi_deriv = std::max(hi_deriv, prod);
    }
    return hi_deriv / lo_deriv;
}

JacobianBoundResult jacobian_distortion_bound(const PiecewiseMap& map, const BackwardOrbit& orbit,
                                              int depth, double gamma, int pairs,
                                              std::uint64_t seed) {
    if (depth < 1 || depth >= static_cast<int>(orbit.points.size()))
        throw std::invalid_argument("jacobian_distortion_bound: depth exceeds orbit length");
    if (!map.density() || !map.density()->is_probability)
        throw std::logic_error("jacobian_distortion_bound: needs an invariant probability density");
    const DensityModel& h = *map.density();
    auto jac = [&](double x) {
        return std::fabs(map.derivative(x)) * h(map.apply(x)) / std::max(h(x), 1e-300);
    };
    Interval cell = map.branch(map.branch_index(orbit.points[0])).domain;
    std::uint64_t state = seed ? seed : 1;
    JacobianBoundResult res;
    for (int q = 0; q < pairs; ++q) {
        double y = cell.lo + (0.02 + 0.96 * splitmix_next(state)) * cell.length();
        double z = cell.lo + (0.02 + 0.96 * splitmix_next(state)) * cell.length();
        if (std::fabs(y - z) < 1e-12) continue;
        double rho0 = std::fabs(y - z);
        double log_jy = 0.0, log_jz = 0.0;
        bool ok = true;
        double ycur = y, zcur = z;
        for (int i = 1; i <= depth; ++i) {
            int b = orbit.labels[static_cast<std::size_t>(i)];
            const Branch& br = map.branch(b);
            if (ycur < br.image.lo - 1e-12 || ycur > br.image.hi + 1e-12 ||
                zcur < br.image.lo - 1e-12 || zcur > br.image.hi + 1e-12) {
                ok = false;
                break;
            }
            ycur = map.inverse(b, ycur);
            zcur = map.inverse(b, zcur);
            log_jy += std::log(std::max(jac(ycur), 1e-300));
            log_jz += std::log(std::max(jac(zcur), 1e-300));
        }
        if (!ok) continue;
        double ratio = std::exp(std::fabs(log_jy - log_jz));
        res.max_ratio = std::max(res.max_ratio, ratio);
        res.bound = std::max(res.bound, (ratio - 1.0) / std::pow(rho0, gamma));
        ++res.pairs_used;
    }
    return res;
}

LyapunovResult lyapunov_exponent(const PiecewiseMap& map, long iterations, long burn_in,
                                 std::uint64_t seed) {
    if (iterations < 1) throw std::invalid_argument("lyapunov_exponent: iterations >= 1");
    std::uint64_t state = seed ? seed : 1;
    double x = map.domain().lo + splitmix_next(state) * map.domain().length();
    for (long i = 0; i < burn_in; ++i) x = map.apply(x);
    LyapunovResult res;
    res.iterations = iterations;
    const long blocks = 100;
    const long block_len = std::max<long>(1, iterations / blocks);
    std::vector<double> block_means;
    double total = 0.0;
    long count = 0;
    double block_sum = 0.0;
    long block_count = 0;
    for (long i = 0; i < iterations; ++i) {
        double d = std::fabs(map.derivative(x));
        if (d > 1e-300) {
            double l = std::log(d);
            total += l;
            block_sum += l;
            ++count;
            ++block_count;
        }
        if (block_count == block_len) {
            block_means.push_back(block_sum / block_count);
            block_sum = 0.0;
            block_count = 0;
        }
        x = map.apply(x);
    }
    if (count == 0) throw std::domain_error("lyapunov_exponent: derivative vanished everywhere");
    res.value = total / count;
    if (block_means.size() > 2) {
        double m = std::accumulate(block_means.begin(), block_means.end(), 0.0) /
                   static_cast<double>(block_means.size());
        double v = 0.0;
        for (double bm : block_means) v += (bm - m) * (bm - m);
        v /= static_cast<double>(block_means.size() - 1);
        res.std_error = std::sqrt(v / static_cast<double>(block_means.size()));
    }
    return res;
}

double apply_word(const PiecewiseMap& map, const std::vector<int>& word, double x) {
    for (int b : word) x = map.apply(b, x);
    return x;
}

double word_derivative(const PiecewiseMap& map, const std::vector<int>& word, double x) {
    double prod = 1.0;
    for (int b : word) {
        prod *= map.derivative(b, x);
        x = map.apply(b, x);
    }
    return prod;
}

double pull_back_word(const PiecewiseMap& map, const std::vector<int>& word, double y) {
    for (std::size_t i = word.size(); i-- > 0;) y = map.inverse(word[i], y);
    return y;
}

namespace {

// DFS over admissible branch words with forward-image pruning.
void enumerate_words(const PiecewiseMap& map, int depth, std::vector<int>& word, Interval image,
                     const std::function<void(const std::vector<int>&)>& leaf) {
    if (depth == 0) {
        leaf(word);
        return;
    }
    for (int b = 0; b < map.branch_count(); ++b) {
        const Branch& br = map.branch(b);
        double lo = std::max(image.lo, br.domain.lo);
        double hi = std::min(image.hi, br.domain.hi);
        if (hi - lo <= 1e-14) continue;
        double a = map.apply(b, lo);
        double c = map.apply(b, hi);
        if (a > c) std::swap(a, c);
        word.push_back(b);
        enumerate_words(map, depth - 1, word, {a, c}, leaf);
        word.pop_back();
    }
}

}  // namespace

std::vector<PeriodicOrbit> periodic_points(const PiecewiseMap& map, int period) {
    if (period < 1 || period > 14)
        throw std::invalid_argument("periodic_points: period must lie in [1, 14]");
    std::vector<PeriodicOrbit> orbits;
    std::vector<double> seen_representatives;
    auto is_new = [&seen_representatives](double x) {
        for (double s : seen_representatives)
            if (std::fabs(s - x) < 1e-9) return false;
        return true;
    };
    std::vector<int> divisors;
    for (int d = 1; d < period; ++d)
        if (period % d == 0) divisors.push_back(d);

    auto handle_word = [&](const std::vector<int>& word) {
        auto cylo = cylinder_of_word(map, word);
        if (!cylo) return;
        Interval cyl = *cylo;
        auto g = [&](double x) { return apply_word(map, word, x) - x; };
        double glo = g(cyl.lo), ghi = g(cyl.hi);
        double root;
        if (std::fabs(glo) < 1e-12)
            root = cyl.lo;
        else if (std::fabs(ghi) < 1e-12)
            root = cyl.hi;
        else if (glo * ghi < 0) {
            double lo = cyl.lo, hi = cyl.hi;
            for (int i = 0; i < 100; ++i) {
                double mid = 0.5 * (lo + hi);
                double gm = g(mid);
                if (gm == 0.0) {
                    lo = hi = mid;
                    break;
                }
                ((glo < 0) == (gm < 0) ? lo : hi) = mid;
            }
            root = 0.5 * (lo + hi);
            for (int i = 0; i < 3; ++i) {
                double denom = word_derivative(map, word, root) - 1.0;
                if (std::fabs(denom) < 1e-12) break;
                double next = root - g(root) / denom;
                if (next >= cyl.lo - 1e-12 && next <= cyl.hi + 1e-12) root = next;
            }
        } else {
            return;
        }
        if (std::fabs(g(root)) > 1e-9) return;
        // Fold the circular identification hi ~ lo.  The original word
        // described the unfolded endpoint, so the folded point's itinerary is
        // re-read from the map; using the stale word here would fabricate an
        // orbit through out-of-domain points.
        std::vector<int> w = word;
        if (map.circular() && root >= map.domain().hi - 1e-9) {
            root = map.domain().lo;
            double cur = root;
            for (int i = 0; i < period; ++i) {
                w[static_cast<std::size_t>(i)] = map.branch_index(cur);
                cur = map.apply(cur);
            }
        }
        // Primitive period check.
        for (int d : divisors) {
            std::vector<int> prefix(w.begin(), w.begin() + d);
            if (std::fabs(apply_word(map, prefix, root) - root) < 1e-9) return;
        }
        // Rotation dedup: keep one representative per orbit.
        std::vector<double> pts;
        double cur = root;
        double rep = root;
        for (int i = 0; i < period; ++i) {
            pts.push_back(cur);
            rep = std::min(rep, cur);
            cur = map.apply(w[static_cast<std::size_t>(i)], cur);
        }
        if (!is_new(rep)) return;
        seen_representatives.push_back(rep);
        PeriodicOrbit orb;
        orb.period = period;
        orb.points = pts;
        orb.word = w;
        orb.multiplier = std::fabs(word_derivative(map, w, root));
        orbits.push_back(std::move(orb));
    };

    std::vector<int> word;
    enumerate_words(map, period, word, map.domain(), handle_word);
    return orbits;
}

ContractionFit contraction_check(const PiecewiseMap& map, const BackwardOrbit& orbit,
                                 int max_depth) {
    if (orbit.points.size() < 21)
        throw std::invalid_argument("contraction_check: need a backward orbit of length >= 20");
    int n_max = std::min<int>(max_depth, static_cast<int>(orbit.points.size()) - 1);
    if (n_max < 3) throw std::invalid_argument("contraction_check: max_depth too small");
    ContractionFit fit;
    std::vector<double> ns, logs;
    for (int n = 1; n <= n_max; ++n) {
        std::vector<int> word;
        word.reserve(static_cast<std::size_t>(n));
        for (int i = n; i >= 1; --i) word.push_back(orbit.labels[static_cast<std::size_t>(i)]);
        auto iv = cylinder_of_word(map, word);
        if (!iv) throw std::logic_error("contraction_check: empty cylinder along orbit");
        fit.diameters.push_back(iv->length());
        if (iv->length() > 0) {
            ns.push_back(n);
            logs.push_back(std::log(iv->length()));
        }
    }
    if (ns.size() < 3) throw std::domain_error("contraction_check: cylinders degenerate");
    LinFit lf = linear_fit(ns, logs);
    fit.lambda_hat = std::exp(-lf.b);
    fit.chat = std::exp(lf.a);
    fit.r2 = lf.r2;
    fit.exponential_ok = fit.r2 > 0.99 && fit.lambda_hat > 1.02;
    return fit;
}

DensityModel estimate_density(const PiecewiseMap& map, int bins, long iterations, long burn_in,
                              std::uint64_t seed) {
    if (bins < 2) throw std::invalid_argument("estimate_density: bins >= 2");
    std::uint64_t state = seed ? seed : 1;
    double x = map.domain().lo + (0.1 + 0.8 * splitmix_next(state)) * map.domain().length();
    for (long i = 0; i < burn_in; ++i) x = map.apply(x);
    std::vector<double> mass(static_cast<std::size_t>(bins), 0.0);
    const double lo = map.domain().lo, len = map.domain().length();
    for (long i = 0; i < iterations; ++i) {
        int b = static_cast<int>((x - lo) / len * bins);
        b = std::clamp(b, 0, bins - 1);
        mass[static_cast<std::size_t>(b)] += 1.0;
        x = map.apply(x);
    }
    std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) edges[static_cast<std::size_t>(i)] = lo + len * i / bins;
    return histogram_density(edges, mass);
}

// ── serialization ───────────────────────────────────────────────────────────

std::string map_to_json(const PiecewiseMap& map) {
    nlohmann::json j;
    j["name"] = map.name();
    j["params"] = map.params();
    std::vector<double> endpoints;
    endpoints.push_back(map.branches().front().domain.lo);
    for (const auto& br : map.branches()) endpoints.push_back(br.domain.hi);
    j["branchEndpoints"] = endpoints;
    return j.dump();
}

std::string density_to_csv(const DensityModel& d, const Interval& domain, int bins) {
    std::string out = "bin_left,bin_right,density\n";
    char buf[128];
    for (int i = 0; i < bins; ++i) {
        double a = domain.lo + domain.length() * i / bins;
        double b = domain.lo + domain.length() * (i + 1) / bins;
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", a, b, d.pdf(0.5 * (a + b)));
        out += buf;
    }
    return out;
}

}  // namespace livsic
