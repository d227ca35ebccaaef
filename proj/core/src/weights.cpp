#include "picard/weights.hpp"

#include <algorithm>
#include <cmath>

#include "picard/error.hpp"

namespace picard
{

Matrix observation_values(const VectorField& h, std::size_t obs_dim, const Matrix& path)
{
    Matrix out(path.rows(), obs_dim);
    for (std::size_t i = 0; i < path.rows(); ++i)
        h(path.row(i), out.row(i));
    return out;
}

double log_weight_from_values(const Matrix& h_nodes, std::size_t stride, const NoiseTable& y)
{
    if (h_nodes.cols() != y.dim())
        throw ValidationError("observation dimension does not match the Y increments");
    if (stride == 0 || h_nodes.rows() < (y.steps() - 1) * stride + 1)
        throw ValidationError("too few observation nodes for the Y grid");
    const double dt = y.grid().dt();
    double w = 0.0;
    for (std::size_t i = 0; i < y.steps(); ++i)
        w += cell_log_increment(h_nodes.row(i * stride), y.row(i), dt);
    return w;
}

LogWeight picard_log_weight(const Matrix& x_nodes, const NoiseTable& y_increments, const VectorField& h)
{
    if (x_nodes.rows() != y_increments.steps() + 1)
        throw ValidationError("state path and Y increments are on different grids");
    const Matrix hv = observation_values(h, y_increments.dim(), x_nodes);
    return {log_weight_from_values(hv, 1, y_increments)};
}

LogWeight reference_log_weight(const Matrix& x_fine, const NoiseTable& y_fine, const VectorField& h)
{
    return picard_log_weight(x_fine, y_fine, h);
}

double weight_discretization_gap(const Matrix& h_fine, const NoiseTable& y_fine, std::size_t factor)
{
    if (factor == 0 || y_fine.steps() % factor != 0)
        throw ValidationError("coarse grid must nest in the reference grid");
    if (h_fine.rows() < y_fine.steps() || h_fine.cols() != y_fine.dim())
        throw ValidationError("observation values do not cover the reference grid");
    const double dt = y_fine.grid().dt();
    const std::size_t d = y_fine.dim();
    const std::size_t coarse_steps = y_fine.steps() / factor;
    double gap = 0.0;
    for (std::size_t c = 0; c < coarse_steps; ++c)
    {
        const auto hc = h_fine.row(c * factor);
        for (std::size_t s = 0; s < factor; ++s)
        {
            const std::size_t i = c * factor + s;
            const auto hf = h_fine.row(i);
            const auto dy = y_fine.row(i);
            double term = 0.0;
            for (std::size_t j = 0; j < d; ++j)
            {
                const double diff = hf[j] - hc[j];
                term += diff * dy[j] - 0.5 * diff * (hf[j] + hc[j]) * dt;
            }
            gap += term;
        }
    }
    return gap;
}

MeanEstimate girsanov_mean(std::span<const LogWeight> samples)
{
    if (samples.size() < 2)
        throw ValidationError("girsanov_mean needs at least two samples");
    double shift = samples[0].value;
    for (const auto& s : samples)
        shift = std::max(shift, s.value);
    const double m = static_cast<double>(samples.size());
    double sum = 0.0;
    for (const auto& s : samples)
        sum += std::exp(s.value - shift);
    const double scaled_mean = sum / m;
    double ss = 0.0;
    for (const auto& s : samples)
    {
        const double dev = std::exp(s.value - shift) - scaled_mean;
        ss += dev * dev;
    }
    const double scale = std::exp(shift);
    return {scale * scaled_mean, scale * std::sqrt(ss / (m - 1.0) / m)};
}

std::optional<std::string> moment_bound_warning(const FilteringModel& model)
{
    if (model.h_bounded)
        return std::nullopt;
    return "model '" + model.name +
           "': observation function is not bounded; weight moment bounds are not guaranteed";
}

} // namespace picard
