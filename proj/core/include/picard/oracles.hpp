#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "picard/grid.hpp"
#include "picard/model.hpp"
#include "picard/noise.hpp"
#include "picard/test_function.hpp"

namespace picard
{

/// Mean and covariance of the exact linear-Gaussian filter at every grid node.
struct KalmanState
{
    TimeGrid grid;
    std::vector<Eigen::VectorXd> mean;       // steps + 1 entries
    std::vector<Eigen::MatrixXd> covariance; // steps + 1 entries
};

/// Kalman-Bucy filter driven by observation increments.
///
/// Explicit Euler on
///   dm = A m dt + P H^T (dY - H m dt),
///   dP = (A P + P A^T + sigma sigma^T - P H^T H P) dt,
/// from m_0 = x, P_0 = 0, with P replaced by (P + P^T) / 2 after every step.
/// Throws ValidationError for models without the linear-Gaussian flag.
KalmanState kalman_bucy(const FilteringModel& model, const NoiseTable& y_increments);

/// Gauss-Hermite nodes and weights for the weight function exp(-x^2).
struct GaussHermite
{
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Golub-Welsch: eigen-decomposition of the Hermite Jacobi matrix.
GaussHermite gauss_hermite(std::size_t order);

/// Single-cell Picard filter in closed form for b = 0 and constant sigma:
///   exp(h(x) . y_total - 1/2 |h(x)|^2 T) * E[g(x + sigma B_T)],
/// the expectation by tensor Gauss-Hermite quadrature. N must be 1 or 2.
double single_step_quadrature(const FilteringModel& model, const TestFunction& g,
                              std::span<const double> y_total, double horizon, std::size_t order = 64);

} // namespace picard
