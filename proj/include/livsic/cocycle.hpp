#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "livsic/group.hpp"
#include "livsic/interval_map.hpp"

namespace livsic {

// Singular behaviour of a cocycle near marked points. The epsilon sequence
// describes shrinking neighbourhoods used by the effective-exponent calculus;
// it must be positive and decreasing when supplied.
struct SingularitySpec {
    enum class Kind { none, bounded_discontinuity, logarithmic, pole };
    Kind kind = Kind::none;
    std::vector<double> points;
    double pole_order = 0.0;
    std::vector<double> epsilons;
};

// Group-valued observable over phase space together with declared regularity
// data. holder_coeff == 0 means "coefficient not asserted".
struct Cocycle {
    std::function<GroupElement(double)> eval;
    GroupElement identity;
    double holder_alpha = 1.0;
    double holder_coeff = 0.0;
    SingularitySpec singularity;

    GroupElement operator()(double x) const { return eval(x); }
};

Cocycle constant_cocycle(const GroupElement& g);

// Real scalar observable embedded as a 1-dimensional vector value.
Cocycle scalar_cocycle(std::function<double(double)> f, double alpha = 1.0, double coeff = 0.0);

Cocycle circle_cocycle(std::function<double(double)> turns, double alpha = 1.0,
                       double coeff = 0.0);

// x -> log|f'(x)| - shift, with a logarithmic singularity recorded at each
// critical point of the map.
Cocycle log_derivative_cocycle(const PiecewiseMap& map, double shift = 0.0);

// phi(x) = u(f x) * u(x)^{-1}; u itself solves psi(f x) = phi(x) psi(x).
Cocycle manufactured_coboundary(const PiecewiseMap& map,
                                std::function<GroupElement(double)> u);

// n-step product phi(f^{n-1}x) ... phi(f x) phi(x) along a supplied forward
// orbit (x, f x, ..., f^{n-1} x). Each consecutive pair is checked against the
// map to 1e-9; a violation names the offending index. Empty orbit -> identity.
GroupElement cocycle_product(const PiecewiseMap& map, const Cocycle& phi,
                             const std::vector<double>& orbit);
GroupElement cocycle_product(const PiecewiseMap& map, const Cocycle& phi, double x, int n);

struct GrowthRateResult {
    double estimate = 1.0;
    std::vector<double> sequence;  // max_x ad_norm(phi_n(x))^{1/n} for n = 1..N
};

// Sampled estimate of the adjoint growth rate mu_u. Requires N >= 8 and at
// least 100 sample points.
GrowthRateResult growth_rate_mu_u(const Cocycle& phi, const PiecewiseMap& map,
                                  int sample_count = 128, int N = 16,
                                  std::uint64_t seed = 11);

// Collapses the two-cocycle transfer problem psi(fx) = phi2(x) psi(x) phi1(x)*
// into one coboundary-form cocycle acting on matrix space: theta(x) = the
// unitary kron(conj(phi1(x)), phi2(x)) of dimension d^2, so that column-major
// vectorisation intertwines the two equations. Both inputs must be unitary of
// equal dimension.
Cocycle reduce_transfer_to_coboundary(const Cocycle& phi1, const Cocycle& phi2);

// Circle-valued cocycle x -> alpha_turns + character(phi(x)) (turn units).
Cocycle twisted_cocycle(const Cocycle& phi, const TwistSpec& twist);

// Max over sampled pairs of d(phi(x), phi(y)) - coeff * |x-y|^alpha, skipping
// pairs within `exclusion` of a declared singular point. Positive values mean
// the declared Hoelder data is violated.
double holder_consistency_defect(const Cocycle& phi, const PiecewiseMap& map, int pairs = 512,
                                 double exclusion = 1e-3, std::uint64_t seed = 13);

}  // namespace livsic
