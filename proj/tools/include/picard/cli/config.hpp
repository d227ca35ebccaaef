#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "picard/convergence.hpp"

namespace picard::cli
{

/// Everything a subcommand reads from a config file.
///
/// File format: one `key = value` per line, `#` starts a comment, keys are
/// dotted into the sections model.*, experiment.* and output.*. Unknown keys
/// are errors. model.preset picks the preset; every other model.* key is a
/// preset parameter.
struct RunConfig
{
    ConvergenceConfig experiment;            // model, ladder, replicas, seed, normalized
    bool seed_set = false;                   // experiment.seed present in the file
    std::size_t filter_steps = 64;           // experiment.n
    std::size_t substeps = 1;                // experiment.substeps
    std::size_t particles = 1000;            // experiment.M
    bool resample = false;                   // experiment.resample
    std::string filter_g = "identity";       // experiment.filter_g
    double kalman_tolerance = 0.02;          // experiment.kalman_tolerance
    std::string output_dir;                  // output.dir
    bool output_timing = false;              // output.timing

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Config problem with the 1-based line it came from (0 = not tied to a line).
class ConfigError : public std::runtime_error
{
  public:
    ConfigError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical text form; parse_config(to_config_text(c)) == c.
std::string to_config_text(const RunConfig& config);

/// Shortest-round-trip-safe formatting with 17 significant digits.
std::string format_number(double v);

} // namespace picard::cli
