#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "picard/cli/config.hpp"
#include "picard/convergence.hpp"

namespace picard::cli
{

struct EmittedFile
{
    std::string name; // relative to the output directory
    std::string sha256;
};

/// What a run was asked to do and what it wrote.
struct RunManifest
{
    std::string subcommand;
    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::string output_dir;
    std::vector<EmittedFile> files;
};

struct CommandResult
{
    int exit_code = 0;
    RunManifest manifest;
};

/// Parses argv (without the program name) and runs one subcommand:
/// simulate, filter, converge, kalman-check or selftest.
///
/// Exit status is 0 iff every requested output was written and no
/// acceptance-tagged check failed; 2 for usage or config errors.
CommandResult run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// One row of the Picard-vs-Kalman table at a coarse node.
struct KalmanRow
{
    std::size_t index = 0;
    double time = 0.0;
    double picard_mean = 0.0;
    double kalman_mean = 0.0;
    double abs_diff = 0.0;
    double mc_stderr = 0.0;
    double kalman_variance = 0.0;
};

struct KalmanComparison
{
    std::vector<KalmanRow> rows;
    double tolerance = 0.0; // max(configured tolerance, 3 x inner SE) at t = T
    bool passed = false;
};

/// Simulates one observed signal at n_ref, runs the Kalman-Bucy filter on it
/// and the recursive Picard filter on its coarsening to `filter_steps` cells,
/// and compares posterior means of component `experiment.coordinate`.
KalmanComparison compare_with_kalman(const RunConfig& config, std::size_t workers = 1);

struct CheckResult
{
    std::string name;
    bool passed = false;
    std::string detail;
};

/// The quick example suite behind `selftest`.
std::vector<CheckResult> run_selftest();

/// SHA-256 of a byte string as lowercase hex.
std::string sha256_hex(const std::string& bytes);

/// CSV and JSON bodies written by `converge`.
std::string convergence_csv(const ConvergenceReport& report, std::size_t g_index);
std::string slopes_csv(const ConvergenceReport& report, std::size_t g_index);
std::string convergence_json(const ConvergenceReport& report, const RunConfig& config);

} // namespace picard::cli
