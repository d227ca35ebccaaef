#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "picard/matrix.hpp"
#include "picard/model.hpp"
#include "picard/noise.hpp"

namespace picard
{

/// Natural log of a Girsanov likelihood weight.
struct LogWeight
{
    double value = 0.0;

    friend bool operator==(const LogWeight&, const LogWeight&) = default;
};

/// sum_j h^j dy^j - 1/2 sum_j (h^j)^2 dt for one grid cell, h frozen at the cell's left node.
inline double cell_log_increment(std::span<const double> h, std::span<const double> dy, double dt) noexcept
{
    double term = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j)
        term += h[j] * dy[j] - 0.5 * h[j] * h[j] * dt;
    return term;
}

/// h evaluated at every row of a node path (rows x d).
Matrix observation_values(const VectorField& h, std::size_t obs_dim, const Matrix& path);

/// Riemann-sum log weight from precomputed h values.
///
/// Row i * stride of `h_nodes` supplies h(X_{t_i}) for cell i of `y`. Cells
/// are accumulated left to right starting from zero.
double log_weight_from_values(const Matrix& h_nodes, std::size_t stride, const NoiseTable& y);

/// log of the Riemann-sum weight: sum_i [h(X_{t_i}) . dY_i - 1/2 |h(X_{t_i})|^2 dt].
///
/// `x_nodes` holds the path at the nodes of y's grid (steps + 1 rows). The
/// result is exact for this grid: dY enters only through its cell sums.
LogWeight picard_log_weight(const Matrix& x_nodes, const NoiseTable& y_increments, const VectorField& h);

/// Proxy for the exact log weight: the Riemann sum on the reference grid n_ref.
LogWeight reference_log_weight(const Matrix& x_fine, const NoiseTable& y_fine, const VectorField& h);

/// log(reference weight) - log(Picard weight on the grid coarsened by `factor`).
///
/// Summed as sum over fine cells of (h_fine - h_left) . dy - 1/2 (|h_fine|^2 - |h_left|^2) dt_fine,
/// so every cell whose fine node value equals its frozen left-node value
/// contributes exactly zero.
double weight_discretization_gap(const Matrix& h_fine, const NoiseTable& y_fine, std::size_t factor);

struct MeanEstimate
{
    double mean = 0.0;
    double standard_error = 0.0;
};

/// Mean of exp(w) over the samples with its Monte Carlo standard error.
/// Uses a max shift so large log weights do not overflow the intermediate sums.
MeanEstimate girsanov_mean(std::span<const LogWeight> samples);

/// Set when h is not flagged bounded: the moment bound on the weights is then unverified.
std::optional<std::string> moment_bound_warning(const FilteringModel& model);

} // namespace picard
