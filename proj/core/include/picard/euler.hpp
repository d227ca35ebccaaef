#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "picard/matrix.hpp"
#include "picard/model.hpp"
#include "picard/noise.hpp"

namespace picard
{

/// One Euler-Maruyama step x + b(x) dt + sigma(x) dB, with reusable scratch.
///
/// Every path in the library (batch, recursive, convergence) advances through
/// this class, which is what makes their states bit-identical.
class EulerStepper
{
  public:
    explicit EulerStepper(const FilteringModel& model);

    void step(std::span<const double> x, std::span<const double> dB, double dt, std::span<double> out);

  private:
    const FilteringModel& model_;
    std::vector<double> drift_;
    std::vector<double> sigma_;
};

/// Node values X_0 .. X_n (rows) of the Euler scheme driven by `noise`.
/// Throws IntegrationError carrying the offending step on non-finite states.
Matrix euler_maruyama(const FilteringModel& model, const NoiseTable& noise);

/// Same as euler_maruyama, writing into a caller-owned (steps + 1) x N buffer.
void euler_maruyama_into(const FilteringModel& model, const NoiseTable& noise, Matrix& path);

/// Rows 0, f, 2f, ... of a node path; used to view a fine path on a nested coarse grid.
Matrix subsample_nodes(const Matrix& path, std::size_t factor);

/// A hidden signal path with the observation increments it generates.
struct ObservedSignal
{
    Matrix path;  // X at the grid nodes
    NoiseTable y; // dY_i = h(X_{t_i}) dt + dW_i
};

/// Simulates X under its own law and Y = int h(X) ds + W on `grid`.
/// X uses Stream::hidden_signal and W uses Stream::observation_noise, both replica `replica`.
ObservedSignal simulate_observed_signal(const FilteringModel& model, const TimeGrid& grid, std::uint64_t seed,
                                        std::uint64_t replica = 0);

} // namespace picard
