#pragma once

#include <cstddef>

namespace picard
{

/// Uniform partition of [0, T] into n cells, nodes t_i = iT/n.
class TimeGrid
{
  public:
    /// Throws ValidationError unless T is finite and positive and n >= 1.
    TimeGrid(double horizon, std::size_t steps);

    double horizon() const noexcept { return horizon_; }
    std::size_t steps() const noexcept { return steps_; }
    double dt() const noexcept { return horizon_ / static_cast<double>(steps_); }

    /// t_i = iT/n, for i in [0, n].
    double node(std::size_t i) const;

    /// Index i with t in [t_i, t_{i+1}); t = T maps to the last cell.
    std::size_t cell_of(double t) const;

    /// Left grid node of the cell containing t, i.e. eta(t).
    double eta(double t) const { return node(cell_of(t)); }

    /// True when every node of `coarse` is a node of this grid.
    bool refines(const TimeGrid& coarse) const noexcept;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

  private:
    double horizon_;
    std::size_t steps_;
};

TimeGrid make_uniform_grid(double horizon, std::size_t steps);

} // namespace picard
