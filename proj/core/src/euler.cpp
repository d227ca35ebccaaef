#include "picard/euler.hpp"

#include <cmath>

#include "picard/error.hpp"
#include "picard/rng.hpp"

namespace picard
{

EulerStepper::EulerStepper(const FilteringModel& model)
    : model_(model), drift_(model.state_dim), sigma_(model.state_dim * model.state_dim)
{
    if (model.constant_diffusion)
        model.diffusion(model.initial_state, sigma_);
}

void EulerStepper::step(std::span<const double> x, std::span<const double> dB, double dt, std::span<double> out)
{
    const std::size_t n = model_.state_dim;
    model_.drift(x, drift_);
    if (!model_.constant_diffusion)
        model_.diffusion(x, sigma_);
    for (std::size_t r = 0; r < n; ++r)
    {
        double next = x[r] + drift_[r] * dt;
        for (std::size_t c = 0; c < n; ++c)
            next += sigma_[r * n + c] * dB[c];
        out[r] = next;
    }
}

void euler_maruyama_into(const FilteringModel& model, const NoiseTable& noise, Matrix& path)
{
    const std::size_t n = model.state_dim;
    if (noise.dim() != n)
        throw ValidationError("signal noise dimension must equal the state dimension");
    if (path.rows() != noise.steps() + 1 || path.cols() != n)
        path.resize(noise.steps() + 1, n);

    const double dt = noise.grid().dt();
    EulerStepper stepper(model);
    std::copy(model.initial_state.begin(), model.initial_state.end(), path.row(0).begin());
    for (std::size_t i = 0; i < noise.steps(); ++i)
    {
        auto next = path.row(i + 1);
        stepper.step(path.row(i), noise.row(i), dt, next);
        for (double v : next)
            if (!std::isfinite(v))
                throw IntegrationError(i, "non-finite signal state");
    }
}

Matrix euler_maruyama(const FilteringModel& model, const NoiseTable& noise)
{
    Matrix path(noise.steps() + 1, model.state_dim);
    euler_maruyama_into(model, noise, path);
    return path;
}

Matrix subsample_nodes(const Matrix& path, std::size_t factor)
{
    if (factor == 0 || path.rows() == 0 || (path.rows() - 1) % factor != 0)
        throw ValidationError("subsampling factor must divide the path's step count");
    const std::size_t rows = (path.rows() - 1) / factor + 1;
    Matrix out(rows, path.cols());
    for (std::size_t i = 0; i < rows; ++i)
    {
        const auto src = path.row(i * factor);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

ObservedSignal simulate_observed_signal(const FilteringModel& model, const TimeGrid& grid, std::uint64_t seed,
                                        std::uint64_t replica)
{
    model.validate();
    Matrix path = euler_maruyama(
        model, sample_increments(grid, model.state_dim, derive_seed(seed, Stream::hidden_signal), replica));
    const NoiseTable w =
        sample_increments(grid, model.obs_dim, derive_seed(seed, Stream::observation_noise), replica);
    Matrix dy = w.increments();
    std::vector<double> h(model.obs_dim);
    const double dt = grid.dt();
    for (std::size_t i = 0; i < grid.steps(); ++i)
    {
        model.observe(path.row(i), h);
        for (std::size_t j = 0; j < model.obs_dim; ++j)
            dy(i, j) = h[j] * dt + dy(i, j);
    }
    return {std::move(path), NoiseTable(grid, std::move(dy), w.key())};
}

} // namespace picard
