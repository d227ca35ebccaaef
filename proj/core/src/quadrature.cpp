#include <cmath>
#include <numbers>

#include "picard/error.hpp"
#include "picard/oracles.hpp"

namespace picard
{

GaussHermite gauss_hermite(std::size_t order)
{
    if (order == 0)
        throw ValidationError("quadrature order must be positive");
    const auto n = static_cast<Eigen::Index>(order);
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k)
    {
        const double off = std::sqrt(static_cast<double>(k) / 2.0);
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    if (solver.info() != Eigen::Success)
        throw ValidationError("Gauss-Hermite eigen-decomposition failed");

    GaussHermite rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const double mass = std::sqrt(std::numbers::pi);
    for (Eigen::Index k = 0; k < n; ++k)
    {
        const double v0 = solver.eigenvectors()(0, k);
        rule.nodes[static_cast<std::size_t>(k)] = solver.eigenvalues()(k);
        rule.weights[static_cast<std::size_t>(k)] = mass * v0 * v0;
    }
    return rule;
}

double single_step_quadrature(const FilteringModel& model, const TestFunction& g, std::span<const double> y_total,
                              double horizon, std::size_t order)
{
    model.validate();
    const std::size_t n = model.state_dim;
    if (n > 2)
        throw ValidationError("single_step_quadrature supports N <= 2");
    if (!model.constant_diffusion)
        throw ValidationError("single_step_quadrature needs a constant diffusion");
    if (y_total.size() != model.obs_dim)
        throw ValidationError("observation total has the wrong dimension");
    if (!(horizon > 0.0))
        throw ValidationError("horizon must be positive");

    std::vector<double> b(n);
    model.drift(model.initial_state, b);
    for (double v : b)
        if (v != 0.0)
            throw ValidationError("single_step_quadrature needs a zero drift");

    std::vector<double> h(model.obs_dim);
    model.observe(model.initial_state, h);
    double log_weight = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j)
        log_weight += h[j] * y_total[j] - 0.5 * h[j] * h[j] * horizon;

    std::vector<double> sigma(n * n);
    model.diffusion(model.initial_state, sigma);

    // B_T = sqrt(2T) xi with xi ~ exp(-|xi|^2).
    const GaussHermite rule = gauss_hermite(order);
    const double scale = std::sqrt(2.0 * horizon);
    std::vector<double> z(n);
    std::vector<double> xi(n);
    double total = 0.0;
    double mass = 0.0;
    const std::size_t points = n == 1 ? order : order * order;
    for (std::size_t p = 0; p < points; ++p)
    {
        double w = 1.0;
        std::size_t rem = p;
        for (std::size_t c = 0; c < n; ++c)
        {
            const std::size_t idx = rem % order;
            rem /= order;
            xi[c] = scale * rule.nodes[idx];
            w *= rule.weights[idx];
        }
        for (std::size_t r = 0; r < n; ++r)
        {
            double v = model.initial_state[r];
            for (std::size_t c = 0; c < n; ++c)
                v += sigma[r * n + c] * xi[c];
            z[r] = v;
        }
        total += w * g(z);
        mass += w;
    }
    // Dividing by the summed weights makes g = 1 reproduce the weight factor exactly.
    return std::exp(log_weight) * (total / mass);
}

} // namespace picard
