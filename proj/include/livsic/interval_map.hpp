#pragma once
// Piecewise monotone interval maps with explicit branch data: forward map,
// derivative and inverse per branch, cylinder sets, backward orbits sampled
// against an invariant density, distortion and contraction diagnostics,
// Lyapunov exponents and periodic orbit enumeration.
//
// Conventions used throughout:
//   * branch domains are closed intervals with disjoint interiors, listed in
//     increasing order; point lookup assigns a shared endpoint to the
//     right-hand branch;
//   * a depth-n cylinder is the set of y whose first n branch labels agree
//     with a given word, computed exactly by composing inverse branches;
//   * backward orbits store x_0, x_1, ... with f(x_{i+1}) = x_i and the
//     branch label of each x_{i+1}.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace livsic {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

// ── densities ───────────────────────────────────────────────────────────────

// Invariant (or reference) density on the phase interval.  `is_probability`
// distinguishes honest invariant probability densities from weight-only
// reference shapes (used where only ratios h(y)/h(x) enter, e.g. backward
// branch weights for maps whose invariant measure is merely sigma-finite).
struct DensityModel {
    std::function<double(double)> pdf;
    std::function<double(double)> cdf;  // optional; enables exact integrals
    bool is_probability = true;
    std::string kind;  // "analytic" or "histogram"

    double operator()(double x) const { return pdf(x); }
    // Integral of the density over [a,b].  Throws std::logic_error for
    // weight-only densities; uses the CDF when available, otherwise
    // composite Simpson quadrature.
    double integrate(double a, double b) const;
};

DensityModel histogram_density(const std::vector<double>& edges,
                               const std::vector<double>& mass_per_bin);

// ── the map ─────────────────────────────────────────────────────────────────

struct Branch {
    Interval domain;
    Interval image;
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> inv;  // image -> domain
    bool increasing = true;
};

class PiecewiseMap {
  public:
    // Empty placeholder so aggregates holding a map can be built up; every
    // query on it throws. Assign a real map before use.
    PiecewiseMap() = default;

    PiecewiseMap(std::string name, std::map<std::string, double> params, Interval domain,
                 std::vector<Branch> branches, std::vector<double> critical_set,
                 bool circular = false);

    const std::string& name() const { return name_; }
    const std::map<std::string, double>& params() const { return params_; }
    const Interval& domain() const { return domain_; }
    const std::vector<Branch>& branches() const { return branches_; }
    const Branch& branch(int b) const { return branches_.at(static_cast<std::size_t>(b)); }
    int branch_count() const { return static_cast<int>(branches_.size()); }
    const std::vector<double>& critical_set() const { return critical_; }
    // True when the two domain endpoints are dynamically the same point
    // (mod-1 maps); periodic orbit dedup folds hi onto lo in that case.
    bool circular() const { return circular_; }

    int branch_index(double x) const;          // throws outside the domain
    double apply(double x) const;              // f(x)
    double apply(int b, double x) const;       // branch-pinned evaluation
    double derivative(double x) const;
    double derivative(int b, double x) const;
    double inverse(int b, double y) const;     // throws when y is outside the branch image
    // All (branch, preimage) pairs with f(preimage) = y.
    std::vector<std::pair<int, double>> preimages(double y) const;

    const std::optional<DensityModel>& density() const { return density_; }
    PiecewiseMap with_density(DensityModel d) const;

    // Distance from x to the nearest branch endpoint.
    double boundary_gap(double x) const;

  private:
    std::string name_;
    std::map<std::string, double> params_;
    Interval domain_;
    std::vector<Branch> branches_;
    std::vector<double> critical_;
    std::optional<DensityModel> density_;
    bool circular_ = false;
};

// ── builtin families ────────────────────────────────────────────────────────

PiecewiseMap doubling_map();                    // 2x mod 1 on [0,1)
PiecewiseMap tent_map(double slope);            // slope in (1,2]
PiecewiseMap chebyshev_tent_map();              // tent with slope 2 on [0,1]
PiecewiseMap quadratic_map(double a);           // 1 - a x^2 on [-1,1], a in (0,2]
// x + 2^p x^{1+p} on [0,1/2), 2x-1 on [1/2,1]; p >= 0.  The left inverse is
// solved numerically (bisection + Newton) to 1e-14.
PiecewiseMap manneville_pomeau_map(double p);
PiecewiseMap builtin_map(const std::string& name, const std::map<std::string, double>& params);

// ── cylinders ───────────────────────────────────────────────────────────────

struct CylinderSet {
    int depth = 0;
    std::vector<int> word;
    Interval interval;
};

// Depth-n cylinder containing x.  Throws std::domain_error("boundary orbit...")
// when the forward orbit of x passes within `boundary_tol` of a branch
// endpoint (labels would be ambiguous).
CylinderSet cylinder(const PiecewiseMap& map, double x, int depth,
                     double boundary_tol = 1e-12);
// Cylinder of an explicit word; empty-interior words yield std::nullopt.
std::optional<Interval> cylinder_of_word(const PiecewiseMap& map, const std::vector<int>& word);

// Forward image T^k(cylinder) evaluated branch-wise along the word (exact for
// monotone branches; k <= word length).
Interval word_image(const PiecewiseMap& map, const std::vector<int>& word, Interval iv, int k);

// Branch-pinned orbit arithmetic along an explicit word.
double apply_word(const PiecewiseMap& map, const std::vector<int>& word, double x);
double word_derivative(const PiecewiseMap& map, const std::vector<int>& word, double x);
// Composed inverse: y -> inv(word[0], inv(word[1], ... inv(word[n-1], y))),
// i.e. the preimage of y under the word's forward composition.
double pull_back_word(const PiecewiseMap& map, const std::vector<int>& word, double y);

// ── backward orbits ─────────────────────────────────────────────────────────

struct BackwardOrbit {
    std::vector<double> points;  // x_0, x_1, ...; f(x_{i+1}) = x_i
    std::vector<int> labels;     // labels[i] = branch of points[i], i >= 1 (labels[0] unused = -1)
    // Empirical cylinder-contraction fit diam P_n[x_n] ~ chat * lambda_hat^-n
    // (NaN when the orbit is too short to fit).
    double lambda_hat = 0.0;
    double chat = 0.0;
};

// Samples a backward orbit from the natural-extension conditional law: the
// preimage y of x through branch b is chosen with probability proportional to
// h(y)/|f'(y)|.  Requires a density (throws std::logic_error advising
// estimate_density otherwise).
BackwardOrbit sample_backward_orbit(const PiecewiseMap& map, double x0, int length,
                                    std::uint64_t seed);
// Deterministic variant: always pull back through the given branch (or a
// fixed word cycled).  Used for worst-case paths, e.g. neutral-branch dives.
BackwardOrbit backward_orbit_along(const PiecewiseMap& map, double x0,
                                   const std::vector<int>& word_cycle, int length);

// ── diagnostics ─────────────────────────────────────────────────────────────

// sup_{y,z in C} |Df^n(y)| / |Df^n(z)| over an interior quantile grid.
// Throws std::domain_error("critical cylinder") when |Df^n| vanishes on the
// grid (cylinder closure meets the critical set under some iterate).
double distortion_ratio(const PiecewiseMap& map, const CylinderSet& cyl, int grid_points = 64);

// Empirical bound B in |J^n(y_n)/J^n(z_n)| <= 1 + B rho(y0,z0)^gamma for the
// invariant-density Jacobian J(x) = |f'(x)| h(f x) / h(x), with y0, z0 sampled
// in the base cell of the orbit and pulled back along its labels.
struct JacobianBoundResult {
    double bound = 0.0;       // empirical B
    double max_ratio = 1.0;   // worst |J^n(y_n)/J^n(z_n)| seen
    int pairs_used = 0;
};
JacobianBoundResult jacobian_distortion_bound(const PiecewiseMap& map, const BackwardOrbit& orbit,
                                              int depth, double gamma, int pairs,
                                              std::uint64_t seed);

struct LyapunovResult {
    double value = 0.0;     // Birkhoff mean of log|f'|
    double std_error = 0.0; // CLT estimate from block means
    long iterations = 0;
};
LyapunovResult lyapunov_exponent(const PiecewiseMap& map, long iterations = 100000,
                                 long burn_in = 1000, std::uint64_t seed = 1);

struct PeriodicOrbit {
    int period = 0;               // primitive period
    std::vector<double> points;   // the full orbit, starting at the representative
    std::vector<int> word;        // branch word of the representative
    double multiplier = 0.0;      // prod |f'| over the orbit
};
// All primitive periodic orbits of period exactly n (n <= 14), found by
// enumerating admissible branch words and solving f^n(x) = x by bisection in
// each cylinder, then polishing with Newton.
std::vector<PeriodicOrbit> periodic_points(const PiecewiseMap& map, int period);

struct ContractionFit {
    double lambda_hat = 0.0;  // fitted contraction base
    double chat = 0.0;        // fitted constant
    double r2 = 0.0;          // fit quality of log diam vs n
    bool exponential_ok = false;
    std::vector<double> diameters;  // diam P_n[x_n], n = 1..N
};
// Fits diam P_n[x_n] ~ chat * lambda_hat^{-n} along a backward orbit.
// exponential_ok is cleared when the log-linear fit is poor (r2 < 0.99) or
// lambda_hat <= 1 (e.g. neutral-parameter orbits).
ContractionFit contraction_check(const PiecewiseMap& map, const BackwardOrbit& orbit,
                                 int max_depth);

// Histogram invariant density from a long orbit (4096 bins, 1e7 iterates and
// 1e3 burn-in by default).
DensityModel estimate_density(const PiecewiseMap& map, int bins = 4096, long iterations = 10000000,
                              long burn_in = 1000, std::uint64_t seed = 7);

// ── serialization ───────────────────────────────────────────────────────────

std::string map_to_json(const PiecewiseMap& map);                       // {name, params, branchEndpoints}
std::string density_to_csv(const DensityModel& d, const Interval& domain, int bins);

}  // namespace livsic
