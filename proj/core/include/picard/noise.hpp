#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "picard/grid.hpp"
#include "picard/matrix.hpp"
#include "picard/rng.hpp"

namespace picard
{

/// Brownian increments on a uniform grid.
///
/// Row i holds the increment over [t_i, t_{i+1}]; column j is the Brownian
/// component. Tables produced by sample_increments carry the stream key that
/// regenerates them.
class NoiseTable
{
  public:
    /// Wrap explicit increments; rows must equal grid.steps().
    NoiseTable(TimeGrid grid, Matrix increments, StreamKey key = {});

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t dim() const noexcept { return increments_.cols(); }
    std::size_t steps() const noexcept { return increments_.rows(); }
    const Matrix& increments() const noexcept { return increments_; }
    std::span<const double> row(std::size_t i) const { return increments_.row(i); }
    StreamKey key() const noexcept { return key_; }

    /// Y_{t_i} - Y_0 accumulated left to right, one row per node.
    Matrix cumulative() const;

    friend bool operator==(const NoiseTable&, const NoiseTable&) = default;

  private:
    TimeGrid grid_;
    Matrix increments_;
    StreamKey key_;
};

/// Increment row `row` of the stream: N(0, dt I) entries written to `out`.
void fill_increment_row(StreamKey key, std::uint64_t row, double sqrt_dt, std::span<double> out) noexcept;

/// Gaussian increments with variance T/n, a pure function of (seed, replica, grid, dim).
NoiseTable sample_increments(const TimeGrid& grid, std::size_t dim, std::uint64_t seed, std::uint64_t replica);

/// Sum consecutive blocks of `factor` rows; the horizon is unchanged.
NoiseTable coarsen_increments(const NoiseTable& fine, std::size_t factor);

} // namespace picard
