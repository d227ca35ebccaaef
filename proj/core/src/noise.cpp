#include "picard/noise.hpp"

#include <cmath>

#include "picard/error.hpp"

namespace picard
{

NoiseTable::NoiseTable(TimeGrid grid, Matrix increments, StreamKey key)
    : grid_(grid), increments_(std::move(increments)), key_(key)
{
    if (increments_.rows() != grid_.steps())
        throw ValidationError("noise table row count must equal grid steps");
    if (increments_.cols() == 0)
        throw ValidationError("noise table needs at least one column");
}

Matrix NoiseTable::cumulative() const
{
    Matrix out(steps() + 1, dim());
    for (std::size_t i = 0; i < steps(); ++i)
        for (std::size_t j = 0; j < dim(); ++j)
            out(i + 1, j) = out(i, j) + increments_(i, j);
    return out;
}

void fill_increment_row(StreamKey key, std::uint64_t row, double sqrt_dt, std::span<double> out) noexcept
{
    standard_normals(key, row, out);
    for (double& v : out)
        v *= sqrt_dt;
}

NoiseTable sample_increments(const TimeGrid& grid, std::size_t dim, std::uint64_t seed, std::uint64_t replica)
{
    if (dim == 0)
        throw ValidationError("noise dimension must be positive");
    const StreamKey key{seed, replica};
    const double sqrt_dt = std::sqrt(grid.dt());
    Matrix inc(grid.steps(), dim);
    standard_normal_entries(key, 0, inc.data());
    for (double& v : inc.data())
        v *= sqrt_dt;
    return NoiseTable(grid, std::move(inc), key);
}

NoiseTable coarsen_increments(const NoiseTable& fine, std::size_t factor)
{
    if (factor == 0 || fine.steps() % factor != 0)
        throw ValidationError("coarsening factor must divide the fine step count");
    const std::size_t coarse_steps = fine.steps() / factor;
    Matrix out(coarse_steps, fine.dim());
    for (std::size_t i = 0; i < coarse_steps; ++i)
    {
        for (std::size_t j = 0; j < fine.dim(); ++j)
        {
            double s = fine.increments()(i * factor, j);
            for (std::size_t k = 1; k < factor; ++k)
                s += fine.increments()(i * factor + k, j);
            out(i, j) = s;
        }
    }
    return NoiseTable(TimeGrid(fine.grid().horizon(), coarse_steps), std::move(out), fine.key());
}

} // namespace picard
