#include "picard/grid.hpp"

#include <cmath>

#include "picard/error.hpp"

namespace picard
{

TimeGrid::TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps)
{
    if (!(std::isfinite(horizon) && horizon > 0.0))
        throw ValidationError("time grid horizon must be finite and positive");
    if (steps == 0)
        throw ValidationError("time grid needs at least one step");
}

double TimeGrid::node(std::size_t i) const
{
    if (i > steps_)
        throw ValidationError("grid node index out of range");
    if (i == steps_)
        return horizon_;
    return static_cast<double>(i) * horizon_ / static_cast<double>(steps_);
}

std::size_t TimeGrid::cell_of(double t) const
{
    if (!(t >= 0.0 && t <= horizon_))
        throw ValidationError("time outside the grid horizon");
    const auto i = static_cast<std::size_t>(std::floor(t * static_cast<double>(steps_) / horizon_));
    return i >= steps_ ? steps_ - 1 : i;
}

bool TimeGrid::refines(const TimeGrid& coarse) const noexcept
{
    return horizon_ == coarse.horizon_ && steps_ % coarse.steps_ == 0;
}

TimeGrid make_uniform_grid(double horizon, std::size_t steps) { return TimeGrid(horizon, steps); }

} // namespace picard
