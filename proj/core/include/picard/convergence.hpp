#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "picard/filter.hpp"
#include "picard/matrix.hpp"
#include "picard/model.hpp"
#include "picard/noise.hpp"
#include "picard/test_function.hpp"

namespace picard
{

/// Experiment plan for the discretization-error ladder.
struct ConvergenceConfig
{
    std::string model = "ou";
    ParamMap model_params;
    std::vector<std::string> test_functions{"identity", "indicator"};
    double indicator_threshold = 0.5;
    std::size_t coordinate = 0;
    double horizon = 1.0;
    std::vector<std::size_t> n_list{4, 8, 16, 32, 64};
    std::size_t n_ref = 1024;
    std::vector<double> p_list{2.0};
    std::size_t inner_replicas = 20000; // M_X, signal paths per observation path
    std::size_t outer_replicas = 200;   // M_Y, observation paths
    std::uint64_t seed = 0;
    bool normalized = false;

    /// Powers of two, n | n_ref, M_X and M_Y >= 2, p >= 1.
    void validate() const;

    friend bool operator==(const ConvergenceConfig&, const ConvergenceConfig&) = default;
};

/// Test function objects named by the config, with its threshold/coordinate applied.
std::vector<TestFunction> make_test_functions(const ConvergenceConfig& config);

/// Per-signal-path ingredients of the coupled estimators for one observation path.
///
/// For replica k and ladder level l: `base(k, l)` is the Picard log weight on
/// grid n_l and `gap(k, l)` is log(reference weight) - base(k, l), summed so
/// that it vanishes exactly when the frozen and fine node values coincide.
struct CouplingSamples
{
    std::vector<std::size_t> levels;
    Matrix g_values; // M x (#test functions)
    Matrix base;     // M x (#levels)
    Matrix gap;      // M x (#levels)
};

/// Accumulates CouplingSamples one reference-grid signal path at a time.
class PathCoupler
{
  public:
    PathCoupler(const FilteringModel& model, const NoiseTable& y_fine, std::vector<std::size_t> levels,
                std::span<const TestFunction> test_functions, std::size_t capacity = 0);

    /// `path` holds X at the n_ref + 1 reference nodes.
    void add(const Matrix& path);

    CouplingSamples take();

  private:
    const FilteringModel& model_;
    const NoiseTable& y_fine_;
    std::vector<std::size_t> levels_;
    std::vector<std::size_t> factors_;
    std::vector<NoiseTable> y_coarse_;
    std::span<const TestFunction> gs_;
    std::vector<double> g_values_;
    std::vector<double> base_;
    std::vector<double> gap_;
    Matrix h_nodes_;
    std::size_t count_ = 0;
};

/// |E_ref(g) - E_n(g)| for one observation path with its inner Monte Carlo standard error.
Estimate level_discrepancy(const CouplingSamples& samples, std::size_t level, std::size_t g_index, bool normalized);

/// Difference between the reference-grid and grid-n estimators for one fixed Y path.
///
/// Both estimators use the same signal paths (the grid-n one reads them at its
/// nested nodes) and the same Y increments (coarsened), so the difference
/// isolates the weight discretization.
double coupled_discrepancy(const NoiseTable& y_fine, std::span<const Matrix> x_fine_paths, const TestFunction& g,
                           std::size_t n, const FilteringModel& model, bool normalized = false);

/// (mean of s^p)^(1/p) with a delta-method standard error.
Estimate lp_norm(std::span<const double> samples, double p);

struct SlopeFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;        // RMS of log residuals
    double slope_halfwidth = 0.0; // 95% t-interval half-width
};

/// Ordinary least squares of log(error) on log(n).
/// Throws NoiseFloorError on non-positive errors, ValidationError on fewer than 3 points.
SlopeFit fit_slope(std::span<const std::pair<double, double>> points);

struct ErrorPoint
{
    std::size_t n = 0;
    double p = 0.0;
    double error = 0.0;
    double standard_error = 0.0;
};

struct SlopeRow
{
    double p = 0.0;
    std::optional<SlopeFit> fit;
    std::string diagnostic; // set when the fit was rejected
};

struct NoiseFloorCheck
{
    double p = 0.0;
    std::size_t n = 0;
    double error = 0.0;
    double inner_stderr = 0.0;
    bool passed = false;
};

struct TestFunctionReport
{
    std::string test_function;
    std::vector<ErrorPoint> errors; // n-major, then p
    std::vector<SlopeRow> slopes;
    std::vector<NoiseFloorCheck> noise_floor;
};

struct ConvergenceReport
{
    ConvergenceConfig config;
    bool normalized = false;
    std::vector<TestFunctionReport> results;
    std::vector<std::string> warnings;
    double wall_time_seconds = 0.0;
};

/// Per observation path discrepancies for both estimator modes.
struct ConvergenceData
{
    ConvergenceConfig config;
    // [mode][g][level][outer replica]; mode 0 = unnormalized, 1 = normalized.
    std::vector<std::vector<std::vector<std::vector<Estimate>>>> discrepancies;
    std::vector<std::string> warnings;
    double wall_time_seconds = 0.0;
};

/// CouplingSamples for outer replica `replica`: its Y path and all M_X signal paths.
CouplingSamples couple_observation_path(const FilteringModel& model, const ConvergenceConfig& config,
                                        std::span<const TestFunction> test_functions, std::uint64_t replica);

/// The simulation half of run_convergence; outer replicas are spread over `workers`.
ConvergenceData simulate_convergence(const ConvergenceConfig& config, std::size_t workers = 1);

/// L^p aggregation, noise-floor checks and slope fits for one estimator mode.
ConvergenceReport make_report(const ConvergenceData& data, bool normalized);

/// simulate_convergence followed by make_report(config.normalized).
ConvergenceReport run_convergence(const ConvergenceConfig& config, std::size_t workers = 1);

/// Factor by which the discretization error must exceed its inner standard error.
inline constexpr double kNoiseFloorRatio = 3.0;

} // namespace picard
