#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "livsic/report.hpp"

namespace livsic {

// All schema problems found in a config, newline-joined; thrown after the
// whole document has been checked so a user sees every mistake at once.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ExperimentConfig {
    std::string experiment;  // chebyshev | renormalization | mp_scaling | corphi_scan

    // chebyshev
    int grid_size = 128;
    double tol = 1e-8;

    // renormalization
    std::vector<double> a_values = {2.0, 1.54368901, 1.6, 1.9};

    // mp_scaling
    double p = 1.0;
    int depth = 10000;

    // corphi_scan
    double a_min = 1.5;
    double a_max = 2.0;
    int steps = 11;
    int max_period = 8;

    std::uint64_t seed = 1;
    std::string output_dir;  // empty: resolve_output_dir decides
};

// Strict parse: unknown keys, wrong types, and out-of-range values are all
// collected and reported together in one ConfigError.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

// key=value override, applied after parsing (last one wins). Returns a
// human-readable note of what changed, for the invocation log.
std::string apply_override(ExperimentConfig& cfg, const std::string& assignment);

struct ExperimentReport {
    std::string name;
    std::string csv;       // verdict table, one row per check, tolerance column included
    std::string csv_file;  // suggested file name
    RunSummary summary;
    bool pass = false;
};

// Chebyshev-parameter quadratic map: the log-derivative cocycle shifted by
// its entropy is an exact coboundary with a closed-form primitive coming
// from the tent-map conjugacy h(x) = -cos(pi x). The experiment certifies
// the conjugacy and the closed form on a grid before using either, then
// checks periodic-orbit residuals, grid reconstruction against the closed
// form (up to additive constant), and the mean-zero property.
ExperimentReport chebyshev_case(int grid_size, double tol, std::uint64_t seed);

// Period-2 multiplier arithmetic across quadratic parameters: the orbit
// multiplier equals 4|1 - a| independently of any measured quantity, and the
// entropy-shift residual |log 4|1-a| - 2 log 2| separates the conjugate
// parameter a = 2 from the renormalization parameter a = 1.54368901 and
// generic samples. Also records the measured Lyapunov average per parameter.
ExperimentReport renormalization_case(const std::vector<double>& a_values, std::uint64_t seed);

// Neutral-fixed-point scaling: pulls [1/2, 1] back along the left branch,
// fits the polynomial diameter exponent against -(1+p)/p, and runs the
// Hoelder partial-sum test on both sides of the threshold alpha = p/(1+p).
ExperimentReport mp_scaling_experiment(double p, int depth, std::uint64_t seed);

// Scans quadratic parameters: for each a with positive measured Lyapunov
// average, the cocycle log|f'| - lambda_bar is tested against all periodic
// orbits up to max_period; per-iterate residuals land near zero only at the
// conjugate parameter a = 2. Parameters inside attracting windows are
// flagged (lambda_bar <= 0) and skipped without a verdict.
ExperimentReport corphi_scan(double a_min, double a_max, int steps, int max_period,
                             std::uint64_t seed);

// Dispatch + output: runs the configured experiment, writes its CSV and a
// JSON summary into the resolved output directory. Returns the report; the
// caller maps report.pass to an exit status.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

}  // namespace livsic
