#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "livsic/interval_map.hpp"

namespace livsic {

struct ReturnCell {
    Interval interval;      // Lambda_j, a subinterval of the base
    int return_time = 0;    // R_j
    std::vector<int> word;  // branch labels of T realising the return
    double mass = 0.0;      // mu_Y(Lambda_j), normalized over the base
    double leb_mass = 0.0;  // |Lambda_j| / |Y|
};

// First-return (Young) tower over a base interval: the induced map F = T^R,
// return-time statistics and expansion data. `kac_sum` carries the fitted tail
// correction beyond max_return; `tail_mass` is the unresolved Lebesgue mass.
struct YoungTower {
    PiecewiseMap base_map;
    Interval base;
    std::vector<ReturnCell> cells;
    PiecewiseMap induced;
    double kac_sum = 0.0;
    double lambda0 = 0.0;  // min over cells of inf |DF|
    double tail_mass = 0.0;
    bool infinite_kac = false;  // partial sums of n * mass(R = n) not Cauchy
    int max_return = 0;
    double base_measure = 0.0;                // mu(Y), empirical or analytic
    std::vector<double> mass_by_return_time;  // index n-1 -> mu_Y(R = n)
};

// Enumerates first-return cells of `map` to Y by pulling Y back through branch
// words, up to return time max_return. Cells beyond max_return are aggregated
// into the tail. Throws if the unresolved tail exceeds 20% of the base.
YoungTower induce_first_return(const PiecewiseMap& map, Interval Y, int max_return,
                               long orbit_samples = 2000000, std::uint64_t seed = 17);

struct KacLambdaReport {
    double kac_sum = 0.0;
    double lambda_tower = 0.0;     // lambda0^(1/kac_sum)
    double lambda_birkhoff = 0.0;  // exp of measured Birkhoff exponent of T
    bool infinite_kac = false;
    double defect = 0.0;  // lambda_birkhoff - lambda_tower, expected >= -tol
};

KacLambdaReport kac_and_lambda(const YoungTower& tower, long lyap_iterations = 200000,
                               std::uint64_t seed = 3);

struct PullbackResult {
    double value = 0.0;
    bool sigma_finite_flag = false;  // infinite Kac sum: unnormalized value
    double invariance_defect = 0.0;  // |nu(A) - nu(T^{-1}A)|
};

// nu(A) = sum_j sum_{i=0}^{R_j - 1} mu(T^{-i}A intersect Lambda_j), normalized
// so that nu(whole) = 1 when the Kac sum is finite.
PullbackResult pull_back_measure(const YoungTower& tower, Interval A);

// Canonical Markov extension: levels are deduplicated closures of T^n(P).
// levels[0] is the base copy of the whole space and is never identified with
// a higher level. transitions[level][branch] is the target level, or -1 when
// the branch piece is empty or the target lies beyond the built depth.
struct HofbauerTower {
    PiecewiseMap map;
    std::vector<Interval> levels;
    std::vector<int> level_depth;  // BFS depth at which each level appeared
    std::vector<std::vector<int>> transitions;
    int depth_built = 0;
    std::vector<double> lifted_mass;  // orbit-pushforward occupation per level
};

HofbauerTower hofbauer_build(const PiecewiseMap& map, int depth, long mass_orbit = 1000000,
                             std::uint64_t seed = 5);

enum class TowerMetric { rho1, rho2 };

struct TowerPoint {
    double x = 0.0;  // base coordinate in Lambda_j
    int cell = 0;    // j
    int level = 0;   // 0 <= level < R_j
};

// rho1: distance between the level images T^i x, T^j y when the points share a
// cell and level, else 1. rho2: base distance |x - y| under the same gate.
double tower_metric_distance(const YoungTower& tower, const TowerPoint& a, const TowerPoint& b,
                             TowerMetric metric);

std::string tower_to_csv(const YoungTower& tower);
std::string hofbauer_edges(const HofbauerTower& tower);
std::string hofbauer_levels_csv(const HofbauerTower& tower);

}  // namespace livsic
