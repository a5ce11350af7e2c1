#include "livsic/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "livsic/cocycle.hpp"
#include "livsic/interval_map.hpp"
#include "livsic/reconstruction.hpp"

namespace livsic {

namespace {

constexpr double kPi = std::numbers::pi;

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
};

SlopeFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

// Median dyadic-block increment ratio >= 0.95 reads as a divergent series;
// geometric or summable-polynomial tails land well below the cut.
bool partial_sums_divergent(const std::vector<double>& terms) {
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

Verdict make_verdict(std::string name, double value, double tolerance, bool pass,
                     std::string detail = "") {
    Verdict v;
    v.name = std::move(name);
    v.value = value;
    v.tolerance = tolerance;
    v.pass = pass;
    v.detail = std::move(detail);
    return v;
}

void add_check_row(CsvWriter& csv, RunSummary& summary, const std::string& name, double value,
                   double tolerance, bool pass, const std::string& detail = "") {
    csv.begin_row();
    csv.add(name);
    csv.add(value);
    csv.add(tolerance);
    csv.add(pass);
    summary.add_verdict(make_verdict(name, value, tolerance, pass, detail));
}

}  // namespace

ExperimentReport chebyshev_case(int grid_size, double tol, std::uint64_t seed) {
    if (grid_size < 16)
        throw std::invalid_argument("chebyshev_case: grid_size must be at least 16");
    if (!(tol > 0)) throw std::invalid_argument("chebyshev_case: tol must be positive");

    ExperimentReport rep;
    rep.name = "chebyshev";
    rep.csv_file = "chebyshev.csv";
    CsvWriter csv({"check", "value", "tolerance", "pass"});
    ScopedTimer timer(rep.summary, "chebyshev_total");

    const PiecewiseMap f = quadratic_map(2.0);
    const PiecewiseMap tent = tent_map(2.0);
    const double log2 = std::log(2.0);
    auto h = [](double x) { return -std::cos(kPi * x); };
    auto psi_explicit = [](double y) { return std::log(kPi * std::sqrt(1.0 - y * y)); };
    auto phi_fn = [log2](double x) { return std::log(4.0 * std::fabs(x)) - log2; };

    // Certify the conjugacy h T = f h before trusting anything derived from h.
    double conj_defect = 0.0;
    for (int i = 0; i < 64; ++i) {
        double x = (i + 0.5) / 64.0;
        conj_defect = std::max(conj_defect, std::fabs(h(tent.apply(x)) - f.apply(h(x))));
    }
    if (conj_defect > 1e-9)
        throw std::runtime_error("chebyshev_case: conjugacy self-check failed, defect = " +
                                 format_real(conj_defect));
    add_check_row(csv, rep.summary, "conjugacy_defect", conj_defect, 1e-9, true);

    // Certify the closed-form primitive against the cohomological equation
    // psi(f y) - psi(y) = phi(y) away from the singular points 0 and +-1.
    double form_defect = 0.0;
    for (int i = 0; i <= 180; ++i) {
        double y = -0.95 + 1.9 * i / 180.0;
        if (std::fabs(y) < 0.05) continue;
        form_defect =
            std::max(form_defect, std::fabs(psi_explicit(f.apply(y)) - psi_explicit(y) - phi_fn(y)));
    }
    if (form_defect > 1e-9)
        throw std::runtime_error("chebyshev_case: closed-form primitive self-check failed, defect = " +
                                 format_real(form_defect));
    add_check_row(csv, rep.summary, "closed_form_defect", form_defect, 1e-9, true);

    const Cocycle phi = log_derivative_cocycle(f, log2);
    const ObstructionReport obs = periodic_obstruction(phi, f, 8, tol);
    add_check_row(csv, rep.summary, "obstruction_max_residual_p8", obs.max_residual, tol,
                  obs.max_residual < tol);

    std::vector<double> grid(static_cast<std::size_t>(grid_size));
    for (int i = 0; i < grid_size; ++i)
        grid[static_cast<std::size_t>(i)] = -0.9 + 1.8 * i / (grid_size - 1);
    const GridFunction psi_hat = reconstruct_coboundary_on_grid(phi, f, 0.3, grid, tol, 400, seed);

    // The reconstruction is normalized at the reference point, so compare up
    // to an additive constant: subtract the mean difference, take the sup.
    std::vector<double> diffs(psi_hat.points.size());
    for (std::size_t i = 0; i < psi_hat.points.size(); ++i)
        diffs[i] = std::get<RealVec>(psi_hat.values[i]).v(0) - psi_explicit(psi_hat.points[i]);
    double shift = std::accumulate(diffs.begin(), diffs.end(), 0.0) / diffs.size();
    double sup_err = 0.0;
    for (double d : diffs) sup_err = std::max(sup_err, std::fabs(d - shift));
    add_check_row(csv, rep.summary, "reconstruction_sup_error", sup_err, 1e-4, sup_err < 1e-4);

    // Mean of phi against the smooth invariant measure, via the substitution
    // x = -cos(pi u) that flattens it to Lebesgue in u.
    const long quad_n = 1000000;
    double mean = 0.0;
    for (long k = 0; k < quad_n; ++k) {
        double u = (k + 0.5) / static_cast<double>(quad_n);
        mean += phi_fn(-std::cos(kPi * u));
    }
    mean /= static_cast<double>(quad_n);
    add_check_row(csv, rep.summary, "invariant_mean_defect", std::fabs(mean), 1e-4,
                  std::fabs(mean) < 1e-4);

    rep.csv = csv.str();
    rep.pass = rep.summary.all_pass();
    return rep;
}

ExperimentReport renormalization_case(const std::vector<double>& a_values, std::uint64_t seed) {
    if (a_values.empty())
        throw std::invalid_argument("renormalization_case: a_values must be nonempty");
    for (double a : a_values)
        if (!(a > 1.0 && a <= 2.0))
            throw std::invalid_argument("renormalization_case: each a must lie in (1, 2]");

    ExperimentReport rep;
    rep.name = "renormalization";
    rep.csv_file = "renormalization.csv";
    CsvWriter csv({"a", "lambda_bar", "multiplier2", "identity_defect", "residual_exact",
                   "residual_measured", "tolerance", "pass"});
    ScopedTimer timer(rep.summary, "renormalization_total");
    const double log4 = std::log(4.0);

    for (double a : a_values) {
        const PiecewiseMap f = quadratic_map(a);
        const LyapunovResult lyap = lyapunov_exponent(f, 1000000, 1000, seed);
        const auto orbits = periodic_points(f, 2);
        if (orbits.empty())
            throw std::runtime_error("renormalization_case: no period-2 orbit at a = " +
                                     format_real(a));
        const double m2 = orbits.front().multiplier;
        const double identity_defect = std::fabs(m2 - 4.0 * std::fabs(1.0 - a));
        const double residual_exact = std::fabs(std::log(m2) - log4);
        const double residual_measured = std::fabs(std::log(m2) - 2.0 * lyap.value);

        bool pass = identity_defect < 1e-9;
        double tolerance = 1e-9;
        std::string detail;
        if (std::fabs(a - 2.0) < 1e-12) {
            // Conjugate parameter: the entropy anchor matches the multiplier.
            pass = pass && residual_exact < 1e-6;
            tolerance = 1e-6;
            detail = "conjugate parameter, residual_exact judged at 1e-6";
        } else if (a <= 1.95) {
            // Away from the conjugate parameter the residual stays visibly
            // nonzero: 4|1-a| <= 3.8 forces |log(m2/4)| > 0.05.
            pass = pass && residual_exact > 0.01;
            tolerance = 0.01;
            detail = "non-conjugate parameter, residual_exact must exceed 0.01";
        } else {
            detail = "near-conjugate parameter, only the multiplier identity is judged";
        }

        csv.begin_row();
        csv.add(a);
        csv.add(lyap.value);
        csv.add(m2);
        csv.add(identity_defect);
        csv.add(residual_exact);
        csv.add(residual_measured);
        csv.add(tolerance);
        csv.add(pass);
        rep.summary.add_verdict(make_verdict("renormalization_a_" + format_real(a),
                                             residual_exact, tolerance, pass, detail));
    }

    rep.csv = csv.str();
    rep.pass = rep.summary.all_pass();
    return rep;
}

ExperimentReport mp_scaling_experiment(double p, int depth, std::uint64_t seed) {
    if (!(p > 0)) throw std::invalid_argument("mp_scaling_experiment: p must be positive");
    if (depth < 100) throw std::invalid_argument("mp_scaling_experiment: depth must be >= 100");
    (void)seed;  // fully deterministic; kept for interface uniformity

    ExperimentReport rep;
    rep.name = "mp_scaling";
    rep.csv_file = "mp_scaling.csv";
    CsvWriter csv({"check", "value", "tolerance", "pass"});
    ScopedTimer timer(rep.summary, "mp_scaling_total");

    const PiecewiseMap f = manneville_pomeau_map(p);

    // Left-branch preimages of J = [1/2, 1]: the n-th pullback is
    // [x_{n+1}, x_n] with x_0 = 1 and x_{n+1} = f_0^{-1}(x_n).
    std::vector<double> diam(static_cast<std::size_t>(depth));
    double hi = 1.0;
    double lo = f.inverse(0, hi);
    for (int n = 1; n <= depth; ++n) {
        double next = f.inverse(0, lo);
        diam[static_cast<std::size_t>(n - 1)] = hi - lo;
        hi = lo;
        lo = next;
    }

    std::vector<double> xs, ys;
    for (int n = std::max(1, depth / 10); n <= depth; ++n) {
        xs.push_back(std::log(static_cast<double>(n)));
        ys.push_back(std::log(diam[static_cast<std::size_t>(n - 1)]));
    }
    const SlopeFit fit = fit_line(xs, ys);
    const double expected = -(1.0 + p) / p;
    const double rel_err = std::fabs(fit.slope - expected) / std::fabs(expected);
    add_check_row(csv, rep.summary, "diameter_exponent", fit.slope, 0.10, rel_err <= 0.10,
                  "expected " + format_real(expected) + ", relative error " + format_real(rel_err));

    // Hoelder partial sums sum_n diam_n^alpha on each side of the regularity
    // threshold alpha* = p/(1+p): divergent below, Cauchy above.
    const double threshold = p / (1.0 + p);
    const double alpha_low = threshold - 0.1;
    const double alpha_high = threshold + 0.1;
    auto divergent_at = [&diam](double alpha) {
        std::vector<double> terms(diam.size());
        for (std::size_t i = 0; i < diam.size(); ++i) terms[i] = std::pow(diam[i], alpha);
        return partial_sums_divergent(terms);
    };
    const bool low_divergent = divergent_at(alpha_low);
    const bool high_divergent = divergent_at(alpha_high);
    add_check_row(csv, rep.summary, "partial_sums_divergent_below", alpha_low, 0.0, low_divergent,
                  "alpha below threshold " + format_real(threshold));
    add_check_row(csv, rep.summary, "partial_sums_cauchy_above", alpha_high, 0.0, !high_divergent,
                  "alpha above threshold " + format_real(threshold));
    add_check_row(csv, rep.summary, "regularity_gate_flip", threshold, 0.0,
                  mp_regularity_gate(p, alpha_high) && !mp_regularity_gate(p, alpha_low));

    rep.csv = csv.str();
    rep.pass = rep.summary.all_pass();
    return rep;
}

ExperimentReport corphi_scan(double a_min, double a_max, int steps, int max_period,
                             std::uint64_t seed) {
    if (!(a_min > 1.4 && a_max <= 2.0 && a_min < a_max))
        throw std::invalid_argument("corphi_scan: need 1.4 < a_min < a_max <= 2.0");
    if (steps < 2) throw std::invalid_argument("corphi_scan: steps must be >= 2");
    if (max_period < 1 || max_period > 12)
        throw std::invalid_argument("corphi_scan: max_period must lie in [1, 12]");

    ExperimentReport rep;
    rep.name = "corphi_scan";
    rep.csv_file = "corphi_scan.csv";
    CsvWriter csv({"a", "lambda_bar", "max_residual", "tolerance", "skipped", "pass"});
    ScopedTimer timer(rep.summary, "corphi_scan_total");

    for (int i = 0; i < steps; ++i) {
        const double a = a_min + (a_max - a_min) * i / (steps - 1);
        const PiecewiseMap f = quadratic_map(a);
        const LyapunovResult lyap = lyapunov_exponent(f, 1000000, 1000, seed);

        if (lyap.value <= 0.0) {
            // Attracting window: the shifted cocycle has no meaning here.
            csv.begin_row();
            csv.add(a);
            csv.add(lyap.value);
            csv.add(0.0);
            csv.add(0.0);
            csv.add(true);
            csv.add(true);
            rep.summary.add_verdict(make_verdict("corphi_a_" + format_real(a), lyap.value, 0.0,
                                                 true, "attracting window, skipped"));
            continue;
        }

        const Cocycle phi = log_derivative_cocycle(f, lyap.value);
        const ObstructionReport obs = periodic_obstruction(phi, f, max_period, 1e-8);
        // Per-iterate residuals keep rows comparable across periods and keep
        // the tolerance honest against the sampling noise in lambda_bar.
        double max_residual = 0.0;
        for (const ObstructionRow& row : obs.rows)
            max_residual = std::max(max_residual, row.residual / row.period);

        bool pass = true;
        double tolerance = 0.0;
        std::string detail = "informational row";
        if (std::fabs(a - 2.0) < 1e-9) {
            tolerance = 5e-3;  // sampling-noise floor of lambda_bar at 1e6 iterates
            pass = max_residual < tolerance;
            detail = "conjugate parameter, residual at the measured-mean noise floor";
        } else if (a <= 1.95) {
            tolerance = 0.01;
            pass = max_residual > tolerance;
            detail = "non-conjugate parameter, residual must exceed 0.01";
        }

        csv.begin_row();
        csv.add(a);
        csv.add(lyap.value);
        csv.add(max_residual);
        csv.add(tolerance);
        csv.add(false);
        csv.add(pass);
        rep.summary.add_verdict(
            make_verdict("corphi_a_" + format_real(a), max_residual, tolerance, pass, detail));
    }

    rep.csv = csv.str();
    rep.pass = rep.summary.all_pass();
    return rep;
}

namespace {

using nlohmann::json;

void check_unknown_keys(const json& doc, const std::set<std::string>& allowed,
                        std::vector<std::string>& problems) {
    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (!allowed.count(it.key()))
            problems.push_back("unknown key '" + it.key() + "'");
}

bool get_int(const json& doc, const char* key, int lo, int hi, int& out,
             std::vector<std::string>& problems) {
    if (!doc.contains(key)) return false;
    if (!doc[key].is_number_integer()) {
        problems.push_back(std::string("'") + key + "' must be an integer");
        return false;
    }
    long long v = doc[key].get<long long>();
    if (v < lo || v > hi) {
        problems.push_back(std::string("'") + key + "' must lie in [" + std::to_string(lo) +
                           ", " + std::to_string(hi) + "]");
        return false;
    }
    out = static_cast<int>(v);
    return true;
}

bool get_double(const json& doc, const char* key, double lo, double hi, double& out,
                std::vector<std::string>& problems) {
    if (!doc.contains(key)) return false;
    if (!doc[key].is_number()) {
        problems.push_back(std::string("'") + key + "' must be a number");
        return false;
    }
    double v = doc[key].get<double>();
    if (!(v >= lo && v <= hi)) {
        problems.push_back(std::string("'") + key + "' must lie in [" + format_real(lo) + ", " +
                           format_real(hi) + "]");
        return false;
    }
    out = v;
    return true;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");

    std::vector<std::string> problems;
    ExperimentConfig cfg;

    static const std::map<std::string, std::set<std::string>> schema = {
        {"chebyshev", {"experiment", "grid_size", "tol", "seed", "output_dir"}},
        {"renormalization", {"experiment", "a_values", "seed", "output_dir"}},
        {"mp_scaling", {"experiment", "p", "depth", "seed", "output_dir"}},
        {"corphi_scan",
         {"experiment", "a_min", "a_max", "steps", "max_period", "seed", "output_dir"}},
    };

    if (!doc.contains("experiment") || !doc["experiment"].is_string()) {
        problems.push_back("'experiment' (string) is required");
    } else {
        cfg.experiment = doc["experiment"].get<std::string>();
        auto it = schema.find(cfg.experiment);
        if (it == schema.end()) {
            std::string names;
            for (const auto& [name, keys] : schema) names += (names.empty() ? "" : ", ") + name;
            problems.push_back("unknown experiment '" + cfg.experiment + "' (expected one of: " +
                               names + ")");
        } else {
            check_unknown_keys(doc, it->second, problems);
        }
    }

    get_int(doc, "grid_size", 16, 100000, cfg.grid_size, problems);
    get_int(doc, "depth", 100, 100000000, cfg.depth, problems);
    get_int(doc, "steps", 2, 100000, cfg.steps, problems);
    get_int(doc, "max_period", 1, 12, cfg.max_period, problems);
    get_double(doc, "tol", 1e-15, 1.0, cfg.tol, problems);
    get_double(doc, "p", 1e-9, 100.0, cfg.p, problems);
    get_double(doc, "a_min", 1.4, 2.0, cfg.a_min, problems);
    get_double(doc, "a_max", 1.4, 2.0, cfg.a_max, problems);
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned())
            problems.push_back("'seed' must be a non-negative integer");
        else
            cfg.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("output_dir")) {
        if (!doc["output_dir"].is_string())
            problems.push_back("'output_dir' must be a string");
        else
            cfg.output_dir = doc["output_dir"].get<std::string>();
    }
    if (doc.contains("a_values")) {
        if (!doc["a_values"].is_array() || doc["a_values"].empty()) {
            problems.push_back("'a_values' must be a nonempty array of numbers");
        } else {
            std::vector<double> values;
            bool ok = true;
            for (const auto& v : doc["a_values"]) {
                if (!v.is_number()) {
                    problems.push_back("'a_values' entries must be numbers");
                    ok = false;
                    break;
                }
                double a = v.get<double>();
                if (!(a > 1.0 && a <= 2.0)) {
                    problems.push_back("'a_values' entries must lie in (1, 2]");
                    ok = false;
                    break;
                }
                values.push_back(a);
            }
            if (ok) cfg.a_values = std::move(values);
        }
    }

    if (!problems.empty()) {
        std::string msg = "config rejected:";
        for (const std::string& p : problems) msg += "\n  - " + p;
        throw ConfigError(msg);
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str());
}

std::string apply_override(ExperimentConfig& cfg, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must have the form key=value: '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    auto as_int = [&](int lo, int hi) {
        try {
            std::size_t used = 0;
            long long v = std::stoll(value, &used);
            if (used != value.size() || v < lo || v > hi) throw std::invalid_argument("range");
            return static_cast<int>(v);
        } catch (const std::exception&) {
            throw ConfigError("override '" + key + "' needs an integer in [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
    };
    auto as_double = [&](double lo, double hi) {
        try {
            std::size_t used = 0;
            double v = std::stod(value, &used);
            if (used != value.size() || !(v >= lo && v <= hi))
                throw std::invalid_argument("range");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("override '" + key + "' needs a number in [" + format_real(lo) +
                              ", " + format_real(hi) + "]");
        }
    };

    if (key == "experiment")
        cfg.experiment = value;
    else if (key == "grid_size")
        cfg.grid_size = as_int(16, 100000);
    else if (key == "depth")
        cfg.depth = as_int(100, 100000000);
    else if (key == "steps")
        cfg.steps = as_int(2, 100000);
    else if (key == "max_period")
        cfg.max_period = as_int(1, 12);
    else if (key == "tol")
        cfg.tol = as_double(1e-15, 1.0);
    else if (key == "p")
        cfg.p = as_double(1e-9, 100.0);
    else if (key == "a_min")
        cfg.a_min = as_double(1.4, 2.0);
    else if (key == "a_max")
        cfg.a_max = as_double(1.4, 2.0);
    else if (key == "seed")
        cfg.seed = static_cast<std::uint64_t>(as_int(0, 2147483647));
    else if (key == "output_dir")
        cfg.output_dir = value;
    else if (key == "a_values") {
        std::vector<double> values;
        std::istringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                double a = std::stod(item);
                if (!(a > 1.0 && a <= 2.0)) throw std::invalid_argument("range");
                values.push_back(a);
            } catch (const std::exception&) {
                throw ConfigError("override 'a_values' needs comma-separated numbers in (1, 2]");
            }
        }
        if (values.empty()) throw ConfigError("override 'a_values' is empty");
        cfg.a_values = std::move(values);
    } else {
        throw ConfigError("override: unknown key '" + key + "'");
    }
    return "override applied: " + key + " = " + value;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    ExperimentReport rep;
    if (cfg.experiment == "chebyshev")
        rep = chebyshev_case(cfg.grid_size, cfg.tol, cfg.seed);
    else if (cfg.experiment == "renormalization")
        rep = renormalization_case(cfg.a_values, cfg.seed);
    else if (cfg.experiment == "mp_scaling")
        rep = mp_scaling_experiment(cfg.p, cfg.depth, cfg.seed);
    else if (cfg.experiment == "corphi_scan")
        rep = corphi_scan(cfg.a_min, cfg.a_max, cfg.steps, cfg.max_period, cfg.seed);
    else
        throw ConfigError("unknown experiment '" + cfg.experiment + "'");

    const std::string dir = resolve_output_dir(cfg.output_dir);
    write_text_atomic(dir + "/" + rep.csv_file, rep.csv);
    rep.summary.write(dir + "/" + rep.name + "_summary.json");
    return rep;
}

}  // namespace livsic
