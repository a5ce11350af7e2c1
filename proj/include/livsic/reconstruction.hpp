#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "livsic/cocycle.hpp"
#include "livsic/group.hpp"
#include "livsic/interval_map.hpp"

namespace livsic {

struct ReconstructionResult {
    GroupElement value;
    int iterations_used = 0;
    std::vector<double> successive_diffs;  // d(Psi_n, Psi_{n-1}) for n = 1..
    double kappa_hat = 0.0;                // fitted geometric ratio at stop
    double ad_bound_defect = 0.0;          // max over steps of lhs - rhs in the
                                           // adjoint telescoping inequality
};

// Limit of phi_n(y_n) phi_n(x_n)^{-1} along the anchor's branch word, where
// y_0 shares the anchor's partition cell and y_n is pulled back through the
// same branches. Stops once the successive difference drops below tol and the
// fitted ratio of the last ten differences is below 0.95. Throws
// "PH violated or singular orbit" when the differences never turn geometric,
// and "branch-word mismatch" when y leaves the anchor's branch images.
ReconstructionResult reconstruct_transfer(const Cocycle& phi, const PiecewiseMap& map,
                                          const BackwardOrbit& anchor, double y0,
                                          double tol = 1e-8);

struct GridFunction {
    std::vector<double> points;  // sorted ascending
    std::vector<GroupElement> values;

    const GroupElement& at(double x, double tol = 1e-12) const;
    // Chart interpolation between neighbouring grid points: componentwise for
    // vectors, shortest arc for the circle, unitary geodesic for matrices.
    GroupElement interpolate(double x) const;
};

// Solves psi(f x) = phi(x) psi(x) on the grid, normalized to psi(reference) =
// identity. One anchor orbit is sampled at the reference and shared by every
// grid point in the reference cell; other cells are reached by one inverse
// step into the reference branch.
GridFunction reconstruct_coboundary_on_grid(const Cocycle& phi, const PiecewiseMap& map,
                                            double reference, const std::vector<double>& grid,
                                            double tol = 1e-8, int anchor_length = 400,
                                            std::uint64_t seed = 19);

// sup over grid points x of d(psi(f x), phi(x) psi(x)). Forward images are
// looked up exactly when on-grid, else chart-interpolated; images outside the
// grid hull throw.
double coboundary_residual(const Cocycle& phi, const GridFunction& psi, const PiecewiseMap& map);

struct ObstructionRow {
    int period = 0;
    double representative = 0.0;
    double residual = 0.0;  // d(phi_n(p), identity)
};

struct ObstructionReport {
    std::vector<ObstructionRow> rows;
    double max_residual = 0.0;
    bool coboundary_consistent = false;
    double tol = 0.0;
};

ObstructionReport periodic_obstruction(const Cocycle& phi, const PiecewiseMap& map,
                                       int max_period, double tol = 1e-8);

struct PhCheck {
    bool ok = false;
    double margin = 0.0;  // lambda^alpha - mu_u
};

// Partial-hyperbolicity gate mu_u < lambda^alpha.
PhCheck ph_check(double mu_u, double lambda, double alpha);
// Tower variant: expansion rate lambda0^(1/kac_sum).
PhCheck ph_check_tower(double mu_u, double lambda0, double kac_sum, double alpha);

struct HolderSample {
    double x = 0.0;
    double y = 0.0;
    double dist = 0.0;  // d(psi(x), psi(y))
};

struct HolderFit {
    double alpha_hat = 0.0;
    double coefficient = 0.0;
    double r2 = 0.0;
    bool low_confidence = false;  // separations span fewer than 3 decades
};

// Log-log regression of value distance against point separation; needs >= 200
// pairs. The slope is clipped to (0, 1.2].
HolderFit holder_exponent_estimate(const std::vector<HolderSample>& samples);

struct SingularExponent {
    double alpha_tilde = 0.0;
    double effective_exponent = 0.0;  // 1 - alpha_tilde - iota
};

// Effective-exponent calculus for log/pole singularities: alpha~ is the
// running max over the last half of log(1/eps_n)/(n log lambda), multiplied by
// (pole order + 1) for poles. alpha~ >= 1 throws "hypothesis violated".
SingularExponent singular_effective_exponent(const SingularitySpec& sing, double lambda,
                                             double iota);
// Closed-form epsilon sequence evaluated up to N without materialising it.
SingularExponent singular_effective_exponent_fn(const std::function<double(long)>& eps, long N,
                                                bool pole, double pole_order, double lambda,
                                                double iota);

struct BorelCantelliReport {
    std::vector<double> partial_sums;  // S_n = sum_{k<=n} mu(B(c, eps_k))
    bool summable = false;
    double tail_fraction = 0.0;     // (S_N - S_{N/2}) / S_N
    std::vector<int> last_hit;      // per orbit: last n with x_n in B_n (0 = never)
    double hit_quantile(double q) const;
};

BorelCantelliReport borel_cantelli_avoidance(const PiecewiseMap& map, double c,
                                             const std::function<double(long)>& eps,
                                             long n_terms, std::uint64_t seed, int orbits,
                                             int orbit_length);

// Regularity gate for the neutral-point family: alpha must exceed p/(1+p).
bool mp_regularity_gate(double p, double alpha);

struct MartingaleReport {
    std::vector<int> depths;
    std::vector<double> mean_fraction;     // per depth
    double proportion_at_deepest = 0.0;    // fraction of samples concentrated
};

// Conditional concentration of a scalar observable on dyadic cells: for each
// sampled x and depth n, the Lebesgue fraction of the depth-n dyadic cell
// where |phi(y) - phi(x)| < eta. Reports the proportion of samples whose
// deepest-cell fraction exceeds 1 - eta.
MartingaleReport martingale_density_check(const std::function<double(double)>& phi,
                                          const std::vector<int>& depths, double eta,
                                          int samples, std::uint64_t seed);

}  // namespace livsic
