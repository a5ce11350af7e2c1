#include "livsic/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "livsic/rng.hpp"

namespace livsic {

Cocycle constant_cocycle(const GroupElement& g) {
    Cocycle c;
    c.eval = [g](double) { return g; };
    c.identity = identity_like(g);
    c.holder_alpha = 1.0;
    c.holder_coeff = 0.0;  // constant: any coefficient works
    return c;
}

Cocycle scalar_cocycle(std::function<double(double)> f, double alpha, double coeff) {
    Cocycle c;
    c.eval = [f = std::move(f)](double x) { return make_real(f(x)); };
    c.identity = make_real(0.0);
    c.holder_alpha = alpha;
    c.holder_coeff = coeff;
    return c;
}

Cocycle circle_cocycle(std::function<double(double)> turns, double alpha, double coeff) {
    Cocycle c;
    c.eval = [turns = std::move(turns)](double x) { return make_circle(turns(x)); };
    c.identity = make_circle(0.0);
    c.holder_alpha = alpha;
    c.holder_coeff = coeff;
    return c;
}

Cocycle log_derivative_cocycle(const PiecewiseMap& map, double shift) {
    Cocycle c;
    c.eval = [map, shift](double x) {
        double d = std::fabs(map.derivative(x));
        if (d < 1e-300) throw std::domain_error("log|f'| evaluated at a critical point");
        return make_real(std::log(d) - shift);
    };
    c.identity = make_real(0.0);
    c.holder_alpha = 1.0;
    c.holder_coeff = 0.0;
    // A critical point where |f'| vanishes makes log|f'| log-singular there.
    for (double p : map.critical_set()) {
        double d = std::numeric_limits<double>::infinity();
        for (double probe : {p - 1e-9, p, p + 1e-9}) {
            if (!map.domain().contains(probe)) continue;
            try {
                d = std::min(d, std::fabs(map.derivative(probe)));
            } catch (const std::exception&) {
            }
        }
        if (d < 1e-6) {
            c.singularity.kind = SingularitySpec::Kind::logarithmic;
            c.singularity.points.push_back(p);
        }
    }
    return c;
}

Cocycle manufactured_coboundary(const PiecewiseMap& map, std::function<GroupElement(double)> u) {
    Cocycle c;
    c.identity = identity_like(u(map.domain().mid()));
    c.eval = [map, u = std::move(u)](double x) {
        return multiply(u(map.apply(x)), inverse(u(x)));
    };
    c.holder_alpha = 1.0;
    c.holder_coeff = 0.0;
    return c;
}

GroupElement cocycle_product(const PiecewiseMap& map, const Cocycle& phi,
                             const std::vector<double>& orbit) {
    GroupElement acc = phi.identity;
    for (std::size_t i = 0; i < orbit.size(); ++i) {
        if (i + 1 < orbit.size()) {
            double fx = map.apply(orbit[i]);
            double expected = orbit[i + 1];
            double err = std::fabs(fx - expected);
            if (map.circular())
                err = std::min(err, map.domain().length() - err);
            if (err > 1e-9)
                throw std::domain_error("cocycle_product: orbit inconsistent at index " +
                                        std::to_string(i) + " (|f(x_i) - x_{i+1}| = " +
                                        std::to_string(err) + ")");
        }
        acc = multiply(phi.eval(orbit[i]), acc);
    }
    return acc;
}

GroupElement cocycle_product(const PiecewiseMap& map, const Cocycle& phi, double x, int n) {
    GroupElement acc = phi.identity;
    double cur = x;
    for (int i = 0; i < n; ++i) {
        acc = multiply(phi.eval(cur), acc);
        cur = map.apply(cur);
    }
    return acc;
}

GrowthRateResult growth_rate_mu_u(const Cocycle& phi, const PiecewiseMap& map, int sample_count,
                                  int N, std::uint64_t seed) {
    if (N < 8) throw std::invalid_argument("growth_rate_mu_u: need N >= 8");
    if (sample_count < 100) throw std::invalid_argument("growth_rate_mu_u: need >= 100 samples");
    SplitMix rng(seed);
    std::vector<double> points(static_cast<std::size_t>(sample_count));
    std::vector<GroupElement> products(static_cast<std::size_t>(sample_count), phi.identity);
    for (auto& x : points)
        x = map.domain().lo + rng.next_double() * map.domain().length();
    GrowthRateResult res;
    for (int n = 1; n <= N; ++n) {
        double worst = 0.0;
        for (std::size_t s = 0; s < points.size(); ++s) {
            products[s] = multiply(phi.eval(points[s]), products[s]);
            points[s] = map.apply(points[s]);
            worst = std::max(worst, ad_norm(products[s]));
        }
        res.sequence.push_back(std::pow(worst, 1.0 / n));
    }
    res.estimate = res.sequence.back();
    return res;
}

Cocycle reduce_transfer_to_coboundary(const Cocycle& phi1, const Cocycle& phi2) {
    const auto* u1 = std::get_if<Unitary>(&phi1.identity);
    const auto* u2 = std::get_if<Unitary>(&phi2.identity);
    if (!u1 || !u2 || u1->m.rows() != u2->m.rows())
        throw std::invalid_argument(
            "reduce_transfer_to_coboundary: both cocycles must be unitary of equal dimension");
    const long d = u1->m.rows();
    Cocycle theta;
    theta.identity = make_unitary(Eigen::MatrixXcd::Identity(d * d, d * d));
    theta.eval = [e1 = phi1.eval, e2 = phi2.eval, d](double x) {
        // copies: eval returns temporaries, references would dangle
        const Eigen::MatrixXcd g1 = std::get<Unitary>(e1(x)).m;
        const Eigen::MatrixXcd g2 = std::get<Unitary>(e2(x)).m;
        // kron(conj(g1), g2): column-major vec identity
        // vec(g2 A g1*) = kron(conj(g1), g2) vec(A).
        Eigen::MatrixXcd k(d * d, d * d);
        for (long p = 0; p < d; ++p)
            for (long r = 0; r < d; ++r)
                k.block(p * d, r * d, d, d) = std::conj(g1(p, r)) * g2;
        return make_unitary(k);
    };
    theta.holder_alpha = std::min(phi1.holder_alpha, phi2.holder_alpha);
    theta.holder_coeff = (phi1.holder_coeff > 0 && phi2.holder_coeff > 0)
                             ? phi1.holder_coeff + phi2.holder_coeff
                             : 0.0;
    return theta;
}

Cocycle twisted_cocycle(const Cocycle& phi, const TwistSpec& twist) {
    Cocycle c;
    c.identity = make_circle(0.0);
    c.eval = [eval = phi.eval, twist](double x) {
        return make_circle(twist.alpha_turns + twist.character(eval(x)));
    };
    c.holder_alpha = phi.holder_alpha;
    c.holder_coeff = 0.0;
    return c;
}

double holder_consistency_defect(const Cocycle& phi, const PiecewiseMap& map, int pairs,
                                 double exclusion, std::uint64_t seed) {
    if (phi.holder_coeff <= 0.0) return 0.0;  // coefficient not asserted
    SplitMix rng(seed);
    auto near_singular = [&phi, exclusion](double x) {
        for (double p : phi.singularity.points)
            if (std::fabs(x - p) < exclusion) return true;
        return false;
    };
    double defect = 0.0;
    for (int i = 0; i < pairs; ++i) {
        double x = map.domain().lo + rng.next_double() * map.domain().length();
        double y = map.domain().lo + rng.next_double() * map.domain().length();
        if (x == y || near_singular(x) || near_singular(y)) continue;
        double lhs = distance(phi.eval(x), phi.eval(y));
        double rhs = phi.holder_coeff * std::pow(std::fabs(x - y), phi.holder_alpha);
        defect = std::max(defect, lhs - rhs);
    }
    return defect;
}

}  // namespace livsic
