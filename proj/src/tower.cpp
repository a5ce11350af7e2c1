#include "livsic/tower.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numeric>
#include <stdexcept>

#include "livsic/rng.hpp"

namespace livsic {

namespace {

constexpr double kIdTol = 1e-9;  // interval identification / endpoint tolerance

struct PendingPiece {
    Interval image;  // T^n of an unreturned sliver of the base
    std::vector<int> word;
};

// Dyadic-block increment test on partial sums of a nonnegative sequence.
// Converging series have block ratios well below 1; ratio >= 0.95 over the
// observed blocks is treated as divergence.
bool partial_sums_divergent(const std::vector<double>& terms) {
    std::vector<double> block_sums;
    std::size_t lo = 1;
    bool last_complete = true;
    while (lo <= terms.size()) {
        std::size_t hi = std::min(terms.size() + 1, lo * 2);
        double s = 0.0;
        for (std::size_t n = lo; n < hi; ++n) s += terms[n - 1];
        block_sums.push_back(s);
        if (hi == terms.size() + 1) {
            last_complete = (hi == lo * 2);
            break;
        }
        lo = hi;
    }
    // A truncated final block is a cut artifact, not evidence about the tail.
    std::size_t usable = block_sums.size() - (last_complete ? 0 : 1);
    std::vector<double> ratios;
    for (std::size_t k = 3; k + 1 < usable; ++k)
        if (block_sums[k] > 0) ratios.push_back(block_sums[k + 1] / block_sums[k]);
    if (ratios.size() < 3) return false;
    std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
    return ratios[ratios.size() / 2] >= 0.95;
}

double cell_min_expansion(const PiecewiseMap& map, const ReturnCell& cell) {
    double lo = std::numeric_limits<double>::infinity();
    const int grid = 17;
    for (int g = 0; g < grid; ++g) {
        double x = cell.interval.lo + cell.interval.length() * g / (grid - 1);
        lo = std::min(lo, std::fabs(word_derivative(map, cell.word, x)));
    }
    return lo;
}

}  // namespace

YoungTower induce_first_return(const PiecewiseMap& map, Interval Y, int max_return,
                               long orbit_samples, std::uint64_t seed) {
    if (Y.length() <= 0 || Y.lo < map.domain().lo - kIdTol || Y.hi > map.domain().hi + kIdTol)
        throw std::invalid_argument("induce_first_return: base must be a positive subinterval");
    if (max_return < 1) throw std::invalid_argument("induce_first_return: max_return >= 1");

    YoungTower tower;
    tower.base_map = map;
    tower.base = Y;
    tower.max_return = max_return;

    std::deque<PendingPiece> queue;
    for (int b = 0; b < map.branch_count(); ++b) {
        const Branch& br = map.branch(b);
        Interval piece{std::max(Y.lo, br.domain.lo), std::min(Y.hi, br.domain.hi)};
        if (piece.length() <= 1e-14) continue;
        double a = map.apply(b, piece.lo), c = map.apply(b, piece.hi);
        if (a > c) std::swap(a, c);
        queue.push_back({{a, c}, {b}});
    }

    double tail_leb = 0.0;
    long budget = 1000000;
    while (!queue.empty()) {
        if (--budget < 0)
            throw std::runtime_error("induce_first_return: cell enumeration exceeded budget");
        PendingPiece item = std::move(queue.front());
        queue.pop_front();
        const int n = static_cast<int>(item.word.size());

        std::vector<Interval> remainders;
        Interval hit{std::max(item.image.lo, Y.lo), std::min(item.image.hi, Y.hi)};
        if (hit.length() > 1e-14) {
            // A return must cover the whole base, otherwise the induced map
            // cannot be full-branch over Y.
            if (item.image.lo > Y.lo + kIdTol || item.image.hi < Y.hi - kIdTol)
                throw std::runtime_error(
                    "induce_first_return: return image covers the base only partially; the "
                    "base is not Markov-compatible with this map");
            double a = pull_back_word(map, item.word, Y.lo);
            double c = pull_back_word(map, item.word, Y.hi);
            if (a > c) std::swap(a, c);
            ReturnCell cell;
            cell.interval = {a, c};
            cell.return_time = n;
            cell.word = item.word;
            cell.leb_mass = (c - a) / Y.length();
            tower.cells.push_back(std::move(cell));
            if (item.image.lo < Y.lo - 1e-14) remainders.push_back({item.image.lo, Y.lo});
            if (item.image.hi > Y.hi + 1e-14) remainders.push_back({Y.hi, item.image.hi});
        } else {
            remainders.push_back(item.image);
        }

        for (const Interval& rem : remainders) {
            if (n >= max_return) {
                double a = pull_back_word(map, item.word, rem.lo);
                double c = pull_back_word(map, item.word, rem.hi);
                tail_leb += std::fabs(c - a) / Y.length();
                continue;
            }
            for (int b = 0; b < map.branch_count(); ++b) {
                const Branch& br = map.branch(b);
                Interval piece{std::max(rem.lo, br.domain.lo), std::min(rem.hi, br.domain.hi)};
                if (piece.length() <= 1e-14) continue;
                double a = map.apply(b, piece.lo), c = map.apply(b, piece.hi);
                if (a > c) std::swap(a, c);
                std::vector<int> w = item.word;
                w.push_back(b);
                queue.push_back({{a, c}, std::move(w)});
            }
        }
    }

    tower.tail_mass = tail_leb;
    if (tail_leb > 0.20)
        throw std::runtime_error(
            "induce_first_return: unresolved tail mass " + std::to_string(tail_leb) +
            " exceeds 20% of the base; increase max_return");

    std::sort(tower.cells.begin(), tower.cells.end(),
              [](const ReturnCell& a, const ReturnCell& b) {
                  return a.interval.lo < b.interval.lo;
              });
    for (const ReturnCell& cell : tower.cells) {
        Interval img = word_image(map, cell.word, cell.interval, cell.return_time);
        if (std::fabs(img.lo - Y.lo) > kIdTol || std::fabs(img.hi - Y.hi) > kIdTol)
            throw std::logic_error("induce_first_return: cell does not map onto the base");
    }

    // Cell masses under the invariant measure conditioned on Y: analytic when a
    // probability density is attached, else empirical visit frequencies.
    const bool analytic = map.density() && map.density()->is_probability;
    std::vector<double> visit_hist;
    if (analytic) {
        tower.base_measure = map.density()->integrate(Y.lo, Y.hi);
        for (ReturnCell& cell : tower.cells)
            cell.mass =
                map.density()->integrate(cell.interval.lo, cell.interval.hi) / tower.base_measure;
    } else {
        SplitMix rng(seed);
        double x = map.domain().lo + (0.1 + 0.8 * rng.next_double()) * map.domain().length();
        for (int i = 0; i < 1000; ++i) x = map.apply(x);
        const int hist_bins = 512;
        visit_hist.assign(hist_bins, 0.0);
        std::vector<double> counts(tower.cells.size(), 0.0);
        long y_visits = 0;
        for (long i = 0; i < orbit_samples; ++i) {
            if (x >= Y.lo && x <= Y.hi) {
                ++y_visits;
                int bin = static_cast<int>((x - Y.lo) / Y.length() * hist_bins);
                visit_hist[static_cast<std::size_t>(std::clamp(bin, 0, hist_bins - 1))] += 1.0;
                // cells are sorted: binary search for the containing cell
                auto it = std::upper_bound(tower.cells.begin(), tower.cells.end(), x,
                                           [](double v, const ReturnCell& c) {
                                               return v < c.interval.lo;
                                           });
                if (it != tower.cells.begin()) {
                    --it;
                    if (it->interval.contains(x))
                        counts[static_cast<std::size_t>(it - tower.cells.begin())] += 1.0;
                }
            }
            x = map.apply(x);
        }
        if (y_visits == 0)
            throw std::runtime_error("induce_first_return: orbit never visited the base");
        tower.base_measure = static_cast<double>(y_visits) / orbit_samples;
        for (std::size_t j = 0; j < tower.cells.size(); ++j)
            tower.cells[j].mass = counts[j] / static_cast<double>(y_visits);
    }

    tower.mass_by_return_time.assign(static_cast<std::size_t>(max_return), 0.0);
    std::vector<double> leb_by_R(static_cast<std::size_t>(max_return), 0.0);
    for (const ReturnCell& cell : tower.cells) {
        tower.mass_by_return_time[static_cast<std::size_t>(cell.return_time - 1)] += cell.mass;
        leb_by_R[static_cast<std::size_t>(cell.return_time - 1)] += cell.leb_mass;
    }

    // Kac sum with tail handling; divergence detected on the Lebesgue-mass
    // series n * leb(R = n), which is deterministic.
    std::vector<double> kac_terms(leb_by_R.size());
    for (std::size_t n = 0; n < leb_by_R.size(); ++n)
        kac_terms[n] = static_cast<double>(n + 1) * leb_by_R[n];
    tower.infinite_kac = partial_sums_divergent(kac_terms);
    tower.kac_sum = 0.0;
    for (std::size_t n = 0; n < tower.mass_by_return_time.size(); ++n)
        tower.kac_sum += static_cast<double>(n + 1) * tower.mass_by_return_time[n];
    if (!tower.infinite_kac && tail_leb > 0) {
        // Geometric extrapolation when the tail decays geometrically, else a
        // polynomial integral estimate from the fitted log-log slope.
        std::size_t half = leb_by_R.size() / 2;
        double num = 0.0, den = 0.0;
        for (std::size_t n = half; n + 1 < leb_by_R.size(); ++n) {
            if (leb_by_R[n] > 0 && leb_by_R[n + 1] > 0) {
                num += leb_by_R[n + 1];
                den += leb_by_R[n];
            }
        }
        const double mR = leb_by_R.back();
        const double R = static_cast<double>(max_return);
        if (den > 0 && mR > 0) {
            double q = num / den;
            if (q < 0.8) {
                tower.kac_sum += mR * (R * q / (1 - q) + q / ((1 - q) * (1 - q)));
            } else {
                double s = std::log(leb_by_R[half] / mR) /
                           std::log(static_cast<double>(half + 1) / R);
                // integral tail: sum_{n>R} n * C n^s ~ C R^{2+s}/(-2-s), C = mR R^{-s}
                if (s < -2.0) tower.kac_sum += mR * R * R / (-2.0 - s);
            }
        }
    }

    // Assemble the induced map F = T^R.
    std::vector<Branch> branches;
    branches.reserve(tower.cells.size());
    for (const ReturnCell& cell : tower.cells) {
        Branch br;
        br.domain = cell.interval;
        br.image = Y;
        br.f = [m = map, w = cell.word](double x) { return apply_word(m, w, x); };
        br.df = [m = map, w = cell.word](double x) { return word_derivative(m, w, x); };
        br.inv = [m = map, w = cell.word](double y) { return pull_back_word(m, w, y); };
        br.increasing = word_derivative(map, cell.word, cell.interval.mid()) > 0;
        branches.push_back(std::move(br));
    }
    PiecewiseMap induced("first_return(" + map.name() + ")", map.params(), Y,
                         std::move(branches), {});
    if (analytic) {
        DensityModel d = *map.density();
        double base_mass = tower.base_measure;
        double ylo = Y.lo;
        DensityModel restricted;
        restricted.kind = d.kind;
        restricted.is_probability = true;
        restricted.pdf = [d, base_mass](double x) { return d.pdf(x) / base_mass; };
        if (d.cdf)
            restricted.cdf = [d, base_mass, ylo](double x) {
                return (d.cdf(x) - d.cdf(ylo)) / base_mass;
            };
        tower.induced = induced.with_density(restricted);
    } else {
        std::vector<double> edges(visit_hist.size() + 1);
        for (std::size_t i = 0; i < edges.size(); ++i)
            edges[i] = Y.lo + Y.length() * static_cast<double>(i) / visit_hist.size();
        tower.induced = induced.with_density(histogram_density(edges, visit_hist));
    }

    tower.lambda0 = std::numeric_limits<double>::infinity();
    for (const ReturnCell& cell : tower.cells)
        tower.lambda0 = std::min(tower.lambda0, cell_min_expansion(map, cell));
    return tower;
}

KacLambdaReport kac_and_lambda(const YoungTower& tower, long lyap_iterations,
                               std::uint64_t seed) {
    if (tower.tail_mass >= 0.05)
        throw std::invalid_argument("kac_and_lambda: tail mass >= 5%, tower too coarse");
    KacLambdaReport rep;
    rep.kac_sum = tower.kac_sum;
    rep.infinite_kac = tower.infinite_kac;
    rep.lambda_tower = tower.infinite_kac ? 1.0 : std::pow(tower.lambda0, 1.0 / tower.kac_sum);
    rep.lambda_birkhoff =
        std::exp(lyapunov_exponent(tower.base_map, lyap_iterations, 1000, seed).value);
    rep.defect = rep.lambda_birkhoff - rep.lambda_tower;
    return rep;
}

namespace {

double raw_pullback(const YoungTower& tower, const Interval& A) {
    const PiecewiseMap& map = tower.base_map;
    const bool analytic = map.density() && map.density()->is_probability;
    double total = 0.0;
    for (const ReturnCell& cell : tower.cells) {
        for (int i = 0; i < cell.return_time; ++i) {
            Interval img = word_image(map, cell.word, cell.interval, i);
            Interval hit{std::max(img.lo, A.lo), std::min(img.hi, A.hi)};
            if (hit.length() <= 1e-14) continue;
            std::vector<int> prefix(cell.word.begin(), cell.word.begin() + i);
            double a = pull_back_word(map, prefix, hit.lo);
            double c = pull_back_word(map, prefix, hit.hi);
            if (a > c) std::swap(a, c);
            if (analytic) {
                total += map.density()->integrate(a, c) / tower.base_measure;
            } else {
                // within-cell uniformisation of the empirical mass
                total += cell.mass * (c - a) / cell.interval.length();
            }
        }
    }
    return total;
}

}  // namespace

PullbackResult pull_back_measure(const YoungTower& tower, Interval A) {
    const Interval dom = tower.base_map.domain();
    A = {std::max(A.lo, dom.lo), std::min(A.hi, dom.hi)};
    PullbackResult res;
    double raw = A.length() > 0 ? raw_pullback(tower, A) : 0.0;
    if (tower.infinite_kac) {
        res.value = raw;
        res.sigma_finite_flag = true;
        return res;
    }
    double whole = raw_pullback(tower, dom);
    if (whole <= 0) throw std::logic_error("pull_back_measure: degenerate tower measure");
    res.value = raw / whole;

    double preimage_raw = 0.0;
    for (int b = 0; b < tower.base_map.branch_count(); ++b) {
        const Branch& br = tower.base_map.branch(b);
        Interval hit{std::max(A.lo, br.image.lo), std::min(A.hi, br.image.hi)};
        if (hit.length() <= 1e-14) continue;
        double a = tower.base_map.inverse(b, hit.lo);
        double c = tower.base_map.inverse(b, hit.hi);
        if (a > c) std::swap(a, c);
        preimage_raw += raw_pullback(tower, {a, c});
    }
    res.invariance_defect = std::fabs(res.value - preimage_raw / whole);
    return res;
}

HofbauerTower hofbauer_build(const PiecewiseMap& map, int depth, long mass_orbit,
                             std::uint64_t seed) {
    if (depth < 1 || depth > 24)
        throw std::invalid_argument("hofbauer_build: depth must lie in [1, 24]");
    HofbauerTower tower;
    tower.map = map;
    tower.depth_built = depth;
    tower.levels.push_back(map.domain());
    tower.level_depth.push_back(0);

    auto find_level = [&tower](const Interval& iv) -> int {
        // levels[0] is the abstract base and is never an identification target
        for (std::size_t l = 1; l < tower.levels.size(); ++l)
            if (std::fabs(tower.levels[l].lo - iv.lo) <= kIdTol &&
                std::fabs(tower.levels[l].hi - iv.hi) <= kIdTol)
                return static_cast<int>(l);
        return -1;
    };

    std::deque<int> frontier{0};
    tower.transitions.emplace_back(map.branch_count(), -1);
    while (!frontier.empty()) {
        int l = frontier.front();
        frontier.pop_front();
        if (tower.level_depth[static_cast<std::size_t>(l)] >= depth) continue;
        Interval D = tower.levels[static_cast<std::size_t>(l)];
        for (int b = 0; b < map.branch_count(); ++b) {
            const Branch& br = map.branch(b);
            Interval piece{std::max(D.lo, br.domain.lo), std::min(D.hi, br.domain.hi)};
            if (piece.length() <= 1e-12) continue;
            double a = map.apply(b, piece.lo), c = map.apply(b, piece.hi);
            if (a > c) std::swap(a, c);
            Interval target{a, c};
            int idx = find_level(target);
            if (idx < 0) {
                tower.levels.push_back(target);
                tower.level_depth.push_back(tower.level_depth[static_cast<std::size_t>(l)] + 1);
                tower.transitions.emplace_back(map.branch_count(), -1);
                idx = static_cast<int>(tower.levels.size()) - 1;
                frontier.push_back(idx);
            }
            tower.transitions[static_cast<std::size_t>(l)][static_cast<std::size_t>(b)] = idx;
        }
    }

    // Lifted measure: push one long typical orbit through the tower dynamics.
    // Transitions beyond the built depth wrap to the base (truncation policy).
    // A tiny seeded jitter breaks exactly-dyadic orbits (tent(2) collapses to
    // the fixed point in floating point otherwise); it is far below every
    // identification tolerance in use.
    tower.lifted_mass.assign(tower.levels.size(), 0.0);
    SplitMix rng(seed);
    double x = map.domain().lo + (0.1 + 0.8 * rng.next_double()) * map.domain().length();
    int level = 0;
    long counted = 0;
    const long burn = 1000;
    for (long i = 0; i < mass_orbit + burn; ++i) {
        if (i >= burn) {
            tower.lifted_mass[static_cast<std::size_t>(level)] += 1.0;
            ++counted;
        }
        int b = map.branch_index(x);
        int next = tower.transitions[static_cast<std::size_t>(level)][static_cast<std::size_t>(b)];
        x = map.apply(b, x);
        x += (rng.next_double() - 0.5) * 1e-12;
        level = next >= 0 ? next : 0;
        Interval D = tower.levels[static_cast<std::size_t>(level)];
        x = std::clamp(x, D.lo, D.hi);
    }
    for (double& m : tower.lifted_mass) m /= static_cast<double>(counted);
    return tower;
}

double tower_metric_distance(const YoungTower& tower, const TowerPoint& a, const TowerPoint& b,
                             TowerMetric metric) {
    auto validate = [&tower](const TowerPoint& p) {
        if (p.cell < 0 || p.cell >= static_cast<int>(tower.cells.size()))
            throw std::invalid_argument("tower_metric_distance: invalid cell index");
        const ReturnCell& cell = tower.cells[static_cast<std::size_t>(p.cell)];
        if (p.level < 0 || p.level >= cell.return_time)
            throw std::invalid_argument("tower_metric_distance: invalid level index");
    };
    validate(a);
    validate(b);
    if (a.cell != b.cell || a.level != b.level) return 1.0;
    if (metric == TowerMetric::rho2) return std::fabs(a.x - b.x);
    const ReturnCell& cell = tower.cells[static_cast<std::size_t>(a.cell)];
    std::vector<int> prefix(cell.word.begin(), cell.word.begin() + a.level);
    return std::fabs(apply_word(tower.base_map, prefix, a.x) -
                     apply_word(tower.base_map, prefix, b.x));
}

std::string tower_to_csv(const YoungTower& tower) {
    std::string out = "cellIndex,left,right,R,mass\n";
    char buf[160];
    for (std::size_t j = 0; j < tower.cells.size(); ++j) {
        const ReturnCell& c = tower.cells[j];
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%d,%.17g\n", j, c.interval.lo,
                      c.interval.hi, c.return_time, c.mass);
        out += buf;
    }
    return out;
}

std::string hofbauer_edges(const HofbauerTower& tower) {
    std::string out;
    char buf[96];
    for (std::size_t l = 0; l < tower.transitions.size(); ++l)
        for (std::size_t b = 0; b < tower.transitions[l].size(); ++b)
            if (tower.transitions[l][b] >= 0) {
                std::snprintf(buf, sizeof(buf), "%zu %zu %d\n", l, b, tower.transitions[l][b]);
                out += buf;
            }
    return out;
}

std::string hofbauer_levels_csv(const HofbauerTower& tower) {
    std::string out = "level,left,right,depth,mass\n";
    char buf[160];
    for (std::size_t l = 0; l < tower.levels.size(); ++l) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%d,%.17g\n", l, tower.levels[l].lo,
                      tower.levels[l].hi, tower.level_depth[l], tower.lifted_mass[l]);
        out += buf;
    }
    return out;
}

}  // namespace livsic
