#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "picard/grid.hpp"
#include "picard/matrix.hpp"
#include "picard/model.hpp"
#include "picard/noise.hpp"
#include "picard/test_function.hpp"

namespace picard
{

/// Particle cloud with log-domain Girsanov weights at node `time_index` of `grid`.
struct WeightedEnsemble
{
    TimeGrid grid;
    std::size_t time_index = 0;
    Matrix particles;                // M x N
    std::vector<double> log_weights; // M

    std::size_t size() const noexcept { return particles.rows(); }

    /// Throws unless row counts agree, M >= 1 and every log weight is finite.
    void validate() const;
};

/// M copies of the model's initial state with zero log weights at t = 0.
WeightedEnsemble make_initial_ensemble(const FilteringModel& model, const TimeGrid& grid, std::size_t particles);

struct Estimate
{
    double value = 0.0;
    double standard_error = 0.0;
};

/// (1/M) sum_k g(x_k) exp(w_k), evaluated as exp(max w) times shifted sums
/// kept in separate positive and negative accumulators.
double unnormalized_estimate(const TestFunction& g, const WeightedEnsemble& ensemble);

/// unnormalized_estimate(g) / unnormalized_estimate(1), without forming exp(max w).
double normalized_estimate(const TestFunction& g, const WeightedEnsemble& ensemble);

/// Unnormalized estimate with the sample standard error of g(x) exp(w).
Estimate unnormalized_with_error(const TestFunction& g, const WeightedEnsemble& ensemble);

/// Self-normalized estimate with its delta-method standard error.
Estimate normalized_with_error(const TestFunction& g, const WeightedEnsemble& ensemble);

/// Signal noise of particle `replica` under user seed `seed`.
NoiseTable particle_noise(const TimeGrid& grid, std::size_t dim, std::uint64_t seed, std::uint64_t replica);

/// One parameterized-operator step across cell [t_i, t_{i+1}].
///
/// Each log weight gains h(x_k) . dy - 1/2 |h(x_k)|^2 dt with x_k the state at
/// t_i; the particle then takes `substeps` Euler steps of size dt / substeps.
/// `noise` row k holds particle k's substeps x N Brownian increments, in
/// substep-major order.
WeightedEnsemble recursive_update(const WeightedEnsemble& ensemble, const FilteringModel& model,
                                  std::span<const double> y_increment, std::size_t substeps, const Matrix& noise,
                                  std::size_t workers = 1);

struct FilterNode
{
    std::size_t index = 0;
    double time = 0.0;
    double unnormalized = 0.0;
    double normalized = 0.0;
    double normalized_stderr = 0.0;
};

struct FilterTrajectory
{
    std::vector<FilterNode> nodes; // one per coarse node, t_0 .. t_n
    WeightedEnsemble final_ensemble;
};

struct RecursiveFilterOptions
{
    std::size_t substeps = 1;
    std::size_t workers = 1;
    bool resample = false;
};

/// Composes recursive_update over every cell of `y_path`, reporting estimates at each node.
/// Particle k is driven by particle_noise(fine grid, N, seed, k), the same noise
/// batch_ensemble uses.
FilterTrajectory run_recursive_filter(const FilteringModel& model, const NoiseTable& y_path, const TestFunction& g,
                                      std::size_t particles, std::uint64_t seed,
                                      const RecursiveFilterOptions& options = {});

/// The batch route: full Euler paths at the fine grid, weights from picard_log_weight.
WeightedEnsemble batch_ensemble(const FilteringModel& model, const NoiseTable& y_path, std::size_t particles,
                                std::size_t substeps, std::uint64_t seed, std::size_t workers = 1);

/// Multinomial resampling. Offspring carry equal log weights log(mean exp(w)),
/// which keeps the unnormalized total mass.
WeightedEnsemble resample_multinomial(const WeightedEnsemble& ensemble, std::uint64_t seed);

} // namespace picard
