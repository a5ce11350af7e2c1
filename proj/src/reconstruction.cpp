#include "livsic/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "livsic/rng.hpp"

namespace livsic {

namespace {

double wrap_unit(double t) {
    double w = t - std::floor(t);
    return w == 1.0 ? 0.0 : w;
}

// Fitted geometric ratio of the last `window` positive entries; NaN when
// fewer than 5 usable entries exist.
double fitted_ratio(const std::vector<double>& diffs, std::size_t window) {
    std::vector<double> xs, ys;
    std::size_t start = diffs.size() > window ? diffs.size() - window : 0;
    for (std::size_t i = start; i < diffs.size(); ++i) {
        if (diffs[i] > 0) {
            xs.push_back(static_cast<double>(i));
            ys.push_back(std::log(diffs[i]));
        }
    }
    if (xs.size() < 5) return std::numeric_limits<double>::quiet_NaN();
    double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    return std::exp(sxy / sxx);
}

bool dyadic_blocks_divergent(const std::vector<double>& terms) {
    std::vector<double> blocks;
    std::size_t lo = 1;
    while (lo <= terms.size()) {
        std::size_t hi = std::min(terms.size() + 1, lo * 2);
        double s = 0.0;
        for (std::size_t n = lo; n < hi; ++n) s += terms[n - 1];
        blocks.push_back(s);
        if (hi == terms.size() + 1) break;
        lo = hi;
    }
    std::vector<double> ratios;
    for (std::size_t k = 3; k + 1 < blocks.size(); ++k)
        if (blocks[k] > 0) ratios.push_back(blocks[k + 1] / blocks[k]);
    if (ratios.size() < 3) return false;
    std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
    return ratios[ratios.size() / 2] >= 0.95;
}

}  // namespace

ReconstructionResult reconstruct_transfer(const Cocycle& phi, const PiecewiseMap& map,
                                          const BackwardOrbit& anchor, double y0, double tol) {
    if (anchor.points.size() < 2)
        throw std::invalid_argument("reconstruct_transfer: anchor orbit too short");
    if (map.branch_index(y0) != map.branch_index(anchor.points[0]))
        throw std::domain_error(
            "reconstruct_transfer: branch-word mismatch at step 0 (y0 outside the anchor's "
            "partition cell)");

    ReconstructionResult res;
    GroupElement A = phi.identity;  // phi_n(y_n), grown by right-appending
    GroupElement B = phi.identity;  // phi_n(x_n)
    GroupElement psi_prev = phi.identity;
    res.value = phi.identity;
    double y = y0;

    const std::size_t n_max = anchor.points.size() - 1;
    for (std::size_t n = 1; n <= n_max; ++n) {
        const int b = anchor.labels[n];
        const Branch& br = map.branch(b);
        if (y < br.image.lo - 1e-12 || y > br.image.hi + 1e-12)
            throw std::domain_error("reconstruct_transfer: branch-word mismatch at step " +
                                    std::to_string(n));
        const double y_next = map.inverse(b, y);
        const double x_next = anchor.points[n];

        const double ad_prev = ad_norm(A);  // ||Ad(phi_{n-1}(y_{n-1}))||
        const GroupElement py = phi.eval(y_next);
        const GroupElement px = phi.eval(x_next);
        A = multiply(A, py);
        B = multiply(B, px);
        GroupElement psi = multiply(A, inverse(B));

        const double lhs = distance(psi, psi_prev);
        const double rhs = ad_prev * distance(py, px);
        res.ad_bound_defect = std::max(res.ad_bound_defect, lhs - rhs);
        res.successive_diffs.push_back(lhs);
        res.iterations_used = static_cast<int>(n);
        psi_prev = psi;
        res.value = psi;
        y = y_next;

        const std::size_t m = res.successive_diffs.size();
        if (m >= 3 && res.successive_diffs[m - 1] < 1e-15 &&
            res.successive_diffs[m - 2] < 1e-15 && res.successive_diffs[m - 3] < 1e-15) {
            res.kappa_hat = 0.0;  // exact plateau (constant or finite-word cocycle)
            return res;
        }
        if (m >= 12 && res.successive_diffs.back() < tol) {
            double ratio = fitted_ratio(res.successive_diffs, 10);
            if (std::isnan(ratio)) {
                // nearly all of the last window vanished: converged
                res.kappa_hat = 0.0;
                return res;
            }
            if (ratio < 0.95) {
                res.kappa_hat = ratio;
                return res;
            }
        }
    }
    throw std::runtime_error(
        "reconstruct_transfer: PH violated or singular orbit (differences not geometric "
        "within the anchor length)");
}

const GroupElement& GridFunction::at(double x, double tol) const {
    auto it = std::lower_bound(points.begin(), points.end(), x - tol);
    if (it != points.end() && std::fabs(*it - x) <= tol)
        return values[static_cast<std::size_t>(it - points.begin())];
    throw std::domain_error("GridFunction::at: point is not on the grid");
}

GroupElement GridFunction::interpolate(double x) const {
    if (points.empty()) throw std::logic_error("GridFunction::interpolate: empty grid");
    auto it = std::lower_bound(points.begin(), points.end(), x);
    if (it != points.end() && std::fabs(*it - x) <= 1e-12)
        return values[static_cast<std::size_t>(it - points.begin())];
    if (it == points.begin() || it == points.end())
        throw std::domain_error(
            "GridFunction::interpolate: point outside the grid hull; enlarge the grid");
    std::size_t j = static_cast<std::size_t>(it - points.begin());
    std::size_t i = j - 1;
    double t = (x - points[i]) / (points[j] - points[i]);
    const GroupElement& a = values[i];
    const GroupElement& b = values[j];
    if (const auto* va = std::get_if<RealVec>(&a)) {
        const auto& vb = std::get<RealVec>(b);
        return GroupElement{RealVec{va->v + t * (vb.v - va->v)}};
    }
    if (const auto* ca = std::get_if<Circle>(&a)) {
        const auto& cb = std::get<Circle>(b);
        double delta = cb.turns - ca->turns;
        delta -= std::round(delta);  // shortest arc in (-1/2, 1/2]
        return make_circle(wrap_unit(ca->turns + t * delta));
    }
    const auto& ua = std::get<Unitary>(a);
    const auto& ub = std::get<Unitary>(b);
    // geodesic: exp(t log(ub ua*)) ua
    Eigen::MatrixXcd rel = ub.m * ua.m.adjoint();
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(rel);
    Eigen::VectorXcd lam = es.eigenvalues();
    Eigen::MatrixXcd V = es.eigenvectors();
    Eigen::VectorXcd powed(lam.size());
    for (long k = 0; k < lam.size(); ++k) {
        double theta = std::arg(lam(k));
        powed(k) = std::polar(1.0, t * theta);
    }
    Eigen::MatrixXcd interp = V * powed.asDiagonal() * V.inverse() * ua.m;
    // re-unitarize: eigenvector inversion of a normal matrix drifts slightly
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(interp,
                                           Eigen::ComputeThinU | Eigen::ComputeThinV);
    return make_unitary(svd.matrixU() * svd.matrixV().adjoint());
}

GridFunction reconstruct_coboundary_on_grid(const Cocycle& phi, const PiecewiseMap& map,
                                            double reference, const std::vector<double>& grid,
                                            double tol, int anchor_length, std::uint64_t seed) {
    BackwardOrbit anchor;
    bool sampled = false;
    std::string last_error = "no attempt";
    for (int attempt = 0; attempt < 16 && !sampled; ++attempt) {
        try {
            anchor = sample_backward_orbit(map, reference, anchor_length, seed + attempt);
            sampled = true;
        } catch (const std::domain_error& e) {
            last_error = e.what();  // boundary orbit: retry with shifted seed
        }
    }
    if (!sampled)
        throw std::runtime_error("reconstruct_coboundary_on_grid: anchor sampling failed: " +
                                 last_error);

    const int ref_branch = map.branch_index(reference);
    std::vector<std::pair<double, GroupElement>> entries;
    entries.reserve(grid.size());
    for (double g : grid) {
        GroupElement value = phi.identity;
        if (std::fabs(g - reference) < 1e-15) {
            value = phi.identity;
        } else if (map.branch_index(g) == ref_branch) {
            value = reconstruct_transfer(phi, map, anchor, g, tol).value;
        } else {
            // One inverse step through the reference branch lands in the
            // reference cell: psi(g) = psi(f y1) = phi(y1) psi(y1).
            const Branch& br = map.branch(ref_branch);
            if (g < br.image.lo - 1e-12 || g > br.image.hi + 1e-12)
                throw std::domain_error(
                    "reconstruct_coboundary_on_grid: reference branch image does not cover "
                    "grid point " +
                    std::to_string(g));
            double y1 = map.inverse(ref_branch, g);
            GroupElement psi_y1 = reconstruct_transfer(phi, map, anchor, y1, tol).value;
            value = multiply(phi.eval(y1), psi_y1);
        }
        entries.emplace_back(g, std::move(value));
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    GridFunction out;
    out.points.reserve(entries.size());
    out.values.reserve(entries.size());
    for (auto& e : entries) {
        out.points.push_back(e.first);
        out.values.push_back(std::move(e.second));
    }
    return out;
}

double coboundary_residual(const Cocycle& phi, const GridFunction& psi,
                           const PiecewiseMap& map) {
    double worst = 0.0;
    for (std::size_t i = 0; i < psi.points.size(); ++i) {
        double x = psi.points[i];
        double fx = map.apply(x);
        GroupElement lhs = psi.interpolate(fx);
        GroupElement rhs = multiply(phi.eval(x), psi.values[i]);
        worst = std::max(worst, distance(lhs, rhs));
    }
    return worst;
}

ObstructionReport periodic_obstruction(const Cocycle& phi, const PiecewiseMap& map,
                                       int max_period, double tol) {
    if (max_period < 1 || max_period > 12)
        throw std::invalid_argument("periodic_obstruction: max_period must lie in [1, 12]");

    // Orbits meeting the forward orbit of a degenerate critical point are
    // excluded: a measurable transfer function may blow up exactly there (the
    // orbit carries zero invariant mass), so residuals on it witness nothing.
    // Example: the boundary fixed point of the a = 2 quadratic map lies on
    // the critical orbit and has multiplier 4, yet the equation is solvable.
    // Marked points with a healthy derivative (branch joints of tent-like
    // maps) stay in: the classical periodic obstruction applies there.
    std::vector<double> excluded;
    for (double c : map.critical_set()) {
        double dc = 0.0;
        try {
            dc = std::fabs(map.derivative(c));
        } catch (const std::exception&) {
            dc = 0.0;
        }
        if (dc > 1e-8 && dc < 1e8) continue;
        double x = c;
        for (int i = 0; i <= 64; ++i) {
            excluded.push_back(x);
            double next = 0.0;
            try {
                next = map.apply(x);
            } catch (const std::exception&) {
                break;
            }
            if (std::fabs(next - x) < 1e-15) break;  // absorbed by a fixed point
            x = next;
        }
    }
    auto on_critical_orbit = [&excluded](const PeriodicOrbit& orbit) {
        for (double p : orbit.points)
            for (double e : excluded)
                if (std::fabs(p - e) < 1e-9) return true;
        return false;
    };

    ObstructionReport rep;
    rep.tol = tol;
    for (int n = 1; n <= max_period; ++n) {
        for (const PeriodicOrbit& orbit : periodic_points(map, n)) {
            if (on_critical_orbit(orbit)) continue;
            GroupElement prod = cocycle_product(map, phi, orbit.points);
            ObstructionRow row;
            row.period = n;
            row.representative = orbit.points.front();
            row.residual = distance(prod, phi.identity);
            rep.max_residual = std::max(rep.max_residual, row.residual);
            rep.rows.push_back(row);
        }
    }
    rep.coboundary_consistent = rep.max_residual < tol;
    return rep;
}

PhCheck ph_check(double mu_u, double lambda, double alpha) {
    if (!(lambda > 1.0)) throw std::invalid_argument("ph_check: lambda must exceed 1");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("ph_check: alpha must lie in (0, 1]");
    if (mu_u < 1.0 - 1e-12)
        throw std::invalid_argument("ph_check: mu_u must be >= 1 for the groups in scope");
    PhCheck out;
    out.margin = std::pow(lambda, alpha) - mu_u;
    out.ok = out.margin > 0.0;
    return out;
}

PhCheck ph_check_tower(double mu_u, double lambda0, double kac_sum, double alpha) {
    if (!(kac_sum >= 1.0)) throw std::invalid_argument("ph_check_tower: kac_sum must be >= 1");
    return ph_check(mu_u, std::pow(lambda0, 1.0 / kac_sum), alpha);
}

HolderFit holder_exponent_estimate(const std::vector<HolderSample>& samples) {
    if (samples.size() < 200)
        throw std::invalid_argument("holder_exponent_estimate: need at least 200 pairs");
    std::vector<double> xs, ys;
    double gap_min = std::numeric_limits<double>::infinity(), gap_max = 0.0;
    for (const HolderSample& s : samples) {
        double gap = std::fabs(s.x - s.y);
        if (gap <= 0 || s.dist <= 0) continue;
        gap_min = std::min(gap_min, gap);
        gap_max = std::max(gap_max, gap);
        xs.push_back(std::log(gap));
        ys.push_back(std::log(s.dist));
    }
    if (xs.size() < 10)
        throw std::invalid_argument("holder_exponent_estimate: too few non-degenerate pairs");
    HolderFit fit;
    fit.low_confidence = gap_max / gap_min < 1e3;
    double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    double slope = sxy / sxx;
    fit.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    fit.coefficient = std::exp(my - slope * mx);
    fit.alpha_hat = std::clamp(slope, 1e-6, 1.2);
    return fit;
}

namespace {

SingularExponent effective_exponent_impl(const std::function<double(long)>& eps, long N,
                                         double factor, double lambda, double iota) {
    if (!(lambda > 1.0))
        throw std::invalid_argument("singular_effective_exponent: lambda must exceed 1");
    if (!(iota > 0.0))
        throw std::invalid_argument("singular_effective_exponent: iota must be positive");
    if (N < 50)
        throw std::invalid_argument("singular_effective_exponent: need at least 50 terms");
    const double log_lambda = std::log(lambda);
    double alpha_tilde = 0.0;
    for (long n = N / 2; n <= N; ++n) {
        double e = eps(n);
        if (!(e > 0))
            throw std::invalid_argument("singular_effective_exponent: epsilons must be positive");
        alpha_tilde = std::max(alpha_tilde, factor * std::log(1.0 / e) / (n * log_lambda));
    }
    if (alpha_tilde >= 1.0)
        throw std::runtime_error(
            "singular_effective_exponent: hypothesis violated (alpha~ >= 1, no positive "
            "Hoelder exponent remains)");
    SingularExponent out;
    out.alpha_tilde = alpha_tilde;
    out.effective_exponent = 1.0 - alpha_tilde - iota;
    return out;
}

}  // namespace

SingularExponent singular_effective_exponent(const SingularitySpec& sing, double lambda,
                                             double iota) {
    if (sing.epsilons.size() < 50)
        throw std::invalid_argument(
            "singular_effective_exponent: supply >= 50 epsilon terms or use the closed-form "
            "variant");
    for (std::size_t i = 0; i + 1 < sing.epsilons.size(); ++i)
        if (sing.epsilons[i + 1] > sing.epsilons[i] + 1e-15)
            throw std::invalid_argument(
                "singular_effective_exponent: epsilon sequence must be decreasing");
    double factor = sing.kind == SingularitySpec::Kind::pole ? sing.pole_order + 1.0 : 1.0;
    auto eval = [&sing](long n) { return sing.epsilons[static_cast<std::size_t>(n - 1)]; };
    return effective_exponent_impl(eval, static_cast<long>(sing.epsilons.size()), factor,
                                   lambda, iota);
}

SingularExponent singular_effective_exponent_fn(const std::function<double(long)>& eps, long N,
                                                bool pole, double pole_order, double lambda,
                                                double iota) {
    return effective_exponent_impl(eps, N, pole ? pole_order + 1.0 : 1.0, lambda, iota);
}

double BorelCantelliReport::hit_quantile(double q) const {
    if (last_hit.empty()) return 0.0;
    std::vector<int> sorted = last_hit;
    std::sort(sorted.begin(), sorted.end());
    std::size_t idx = static_cast<std::size_t>(q * (sorted.size() - 1));
    return sorted[idx];
}

BorelCantelliReport borel_cantelli_avoidance(const PiecewiseMap& map, double c,
                                             const std::function<double(long)>& eps,
                                             long n_terms, std::uint64_t seed, int orbits,
                                             int orbit_length) {
    if (!map.density() || !map.density()->is_probability)
        throw std::logic_error(
            "borel_cantelli_avoidance: needs an invariant probability density; run "
            "estimate_density first");
    if (!map.domain().contains(c))
        throw std::invalid_argument("borel_cantelli_avoidance: centre outside the domain");
    BorelCantelliReport rep;
    const DensityModel& h = *map.density();
    std::vector<double> terms(static_cast<std::size_t>(n_terms));
    double running = 0.0;
    for (long n = 1; n <= n_terms; ++n) {
        double e = eps(n);
        double lo = std::max(map.domain().lo, c - e);
        double hi = std::min(map.domain().hi, c + e);
        terms[static_cast<std::size_t>(n - 1)] = hi > lo ? h.integrate(lo, hi) : 0.0;
        running += terms[static_cast<std::size_t>(n - 1)];
        rep.partial_sums.push_back(running);
    }
    rep.summable = !dyadic_blocks_divergent(terms);
    double half = rep.partial_sums[static_cast<std::size_t>(n_terms / 2) - 1];
    rep.tail_fraction = running > 0 ? (running - half) / running : 0.0;

    SplitMix rng(seed);
    for (int k = 0; k < orbits; ++k) {
        double x0 = 0.0;
        BackwardOrbit orbit;
        bool ok = false;
        for (int attempt = 0; attempt < 8 && !ok; ++attempt) {
            x0 = map.domain().lo + (1e-6 + (1 - 2e-6) * rng.next_double()) * map.domain().length();
            try {
                orbit = sample_backward_orbit(map, x0, orbit_length, rng.next_u64());
                ok = true;
            } catch (const std::exception&) {
            }
        }
        if (!ok) continue;
        int last = 0;
        for (int n = 1; n <= orbit_length; ++n)
            if (std::fabs(orbit.points[static_cast<std::size_t>(n)] - c) < eps(n)) last = n;
        rep.last_hit.push_back(last);
    }
    return rep;
}

bool mp_regularity_gate(double p, double alpha) {
    if (p < 0) throw std::invalid_argument("mp_regularity_gate: p must be >= 0");
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("mp_regularity_gate: alpha must lie in (0, 1]");
    return alpha > p / (1.0 + p);
}

MartingaleReport martingale_density_check(const std::function<double(double)>& phi,
                                          const std::vector<int>& depths, double eta,
                                          int samples, std::uint64_t seed) {
    if (depths.empty()) throw std::invalid_argument("martingale_density_check: no depths");
    if (!(eta > 0 && eta < 1))
        throw std::invalid_argument("martingale_density_check: eta must lie in (0, 1)");
    MartingaleReport rep;
    rep.depths = depths;
    rep.mean_fraction.assign(depths.size(), 0.0);
    const int deepest = *std::max_element(depths.begin(), depths.end());
    SplitMix rng(seed);
    const int quad = 64;  // Lebesgue quadrature points per cell
    int concentrated = 0;
    for (int s = 0; s < samples; ++s) {
        double x = rng.next_double();
        double deepest_fraction = 0.0;
        for (std::size_t di = 0; di < depths.size(); ++di) {
            int n = depths[di];
            double width = std::ldexp(1.0, -n);
            double cell_lo = std::floor(x / width) * width;
            int close = 0;
            double px = phi(x);
            for (int q = 0; q < quad; ++q) {
                double y = cell_lo + (q + 0.5) / quad * width;
                if (std::fabs(phi(y) - px) < eta) ++close;
            }
            double fraction = static_cast<double>(close) / quad;
            rep.mean_fraction[di] += fraction;
            if (n == deepest) deepest_fraction = fraction;
        }
        if (deepest_fraction > 1.0 - eta) ++concentrated;
    }
    for (double& f : rep.mean_fraction) f /= samples;
    rep.proportion_at_deepest = static_cast<double>(concentrated) / samples;
    return rep;
}

}  // namespace livsic
