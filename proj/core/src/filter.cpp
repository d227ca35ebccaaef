#include "picard/filter.hpp"

#include <algorithm>
#include <cmath>

#include "picard/error.hpp"
#include "picard/euler.hpp"
#include "picard/parallel.hpp"
#include "picard/rng.hpp"
#include "picard/weights.hpp"

namespace picard
{
namespace
{

double max_log_weight(const WeightedEnsemble& e)
{
    return *std::max_element(e.log_weights.begin(), e.log_weights.end());
}

struct SignedSums
{
    double positive = 0.0;
    double negative = 0.0;
    double mass = 0.0; // sum of exp(w - shift)
    double shift = 0.0;
};

SignedSums signed_sums(const TestFunction& g, const WeightedEnsemble& e)
{
    if (e.size() == 0)
        throw ValidationError("estimate requested on an empty ensemble");
    SignedSums s;
    s.shift = max_log_weight(e);
    for (std::size_t k = 0; k < e.size(); ++k)
    {
        const double w = std::exp(e.log_weights[k] - s.shift);
        const double v = g(e.particles.row(k));
        if (v >= 0.0)
            s.positive += v * w;
        else
            s.negative -= v * w;
        s.mass += w;
    }
    return s;
}

} // namespace

void WeightedEnsemble::validate() const
{
    if (particles.rows() == 0)
        throw ValidationError("ensemble needs at least one particle");
    if (log_weights.size() != particles.rows())
        throw ValidationError("ensemble particle and weight counts differ");
    if (time_index > grid.steps())
        throw ValidationError("ensemble time index beyond its grid");
    for (double w : log_weights)
        if (!std::isfinite(w))
            throw ValidationError("ensemble carries a non-finite log weight");
}

WeightedEnsemble make_initial_ensemble(const FilteringModel& model, const TimeGrid& grid, std::size_t particles)
{
    if (particles == 0)
        throw ValidationError("particle count must be positive");
    WeightedEnsemble e{grid, 0, Matrix(particles, model.state_dim), std::vector<double>(particles, 0.0)};
    for (std::size_t k = 0; k < particles; ++k)
        std::copy(model.initial_state.begin(), model.initial_state.end(), e.particles.row(k).begin());
    return e;
}

double unnormalized_estimate(const TestFunction& g, const WeightedEnsemble& ensemble)
{
    const auto s = signed_sums(g, ensemble);
    const double m = static_cast<double>(ensemble.size());
    return std::exp(s.shift) * ((s.positive - s.negative) / m);
}

double normalized_estimate(const TestFunction& g, const WeightedEnsemble& ensemble)
{
    const auto s = signed_sums(g, ensemble);
    return (s.positive - s.negative) / s.mass;
}

Estimate unnormalized_with_error(const TestFunction& g, const WeightedEnsemble& ensemble)
{
    const auto s = signed_sums(g, ensemble);
    const double m = static_cast<double>(ensemble.size());
    const double mean = (s.positive - s.negative) / m;
    double ss = 0.0;
    for (std::size_t k = 0; k < ensemble.size(); ++k)
    {
        const double dev = g(ensemble.particles.row(k)) * std::exp(ensemble.log_weights[k] - s.shift) - mean;
        ss += dev * dev;
    }
    const double scale = std::exp(s.shift);
    const double se = m > 1.0 ? std::sqrt(ss / (m - 1.0) / m) : 0.0;
    return {scale * mean, scale * se};
}

Estimate normalized_with_error(const TestFunction& g, const WeightedEnsemble& ensemble)
{
    const auto s = signed_sums(g, ensemble);
    const double ratio = (s.positive - s.negative) / s.mass;
    double ss = 0.0;
    for (std::size_t k = 0; k < ensemble.size(); ++k)
    {
        const double w = std::exp(ensemble.log_weights[k] - s.shift);
        const double dev = w * (g(ensemble.particles.row(k)) - ratio);
        ss += dev * dev;
    }
    return {ratio, std::sqrt(ss) / s.mass};
}

NoiseTable particle_noise(const TimeGrid& grid, std::size_t dim, std::uint64_t seed, std::uint64_t replica)
{
    return sample_increments(grid, dim, derive_seed(seed, Stream::signal_noise), replica);
}

WeightedEnsemble recursive_update(const WeightedEnsemble& ensemble, const FilteringModel& model,
                                  std::span<const double> y_increment, std::size_t substeps, const Matrix& noise,
                                  std::size_t workers)
{
    ensemble.validate();
    const std::size_t n = model.state_dim;
    if (ensemble.particles.cols() != n)
        throw ValidationError("ensemble state dimension does not match the model");
    if (y_increment.size() != model.obs_dim)
        throw ValidationError("observation increment dimension does not match the model");
    if (substeps == 0)
        throw ValidationError("substeps must be positive");
    if (noise.rows() != ensemble.size() || noise.cols() != substeps * n)
        throw ValidationError("noise slice must hold substeps x N increments per particle");
    if (ensemble.time_index >= ensemble.grid.steps())
        throw ValidationError("ensemble is already at the final grid node");

    const double dt = ensemble.grid.dt();
    const double fine_dt = TimeGrid(ensemble.grid.horizon(), ensemble.grid.steps() * substeps).dt();

    WeightedEnsemble next{ensemble.grid, ensemble.time_index + 1, Matrix(ensemble.size(), n), ensemble.log_weights};
    parallel_chunks(ensemble.size(), workers, [&](std::size_t begin, std::size_t end) {
        EulerStepper stepper(model);
        std::vector<double> h(model.obs_dim);
        std::vector<double> a(n);
        std::vector<double> b(n);
        for (std::size_t k = begin; k < end; ++k)
        {
            const auto x = ensemble.particles.row(k);
            model.observe(x, h);
            next.log_weights[k] += cell_log_increment(h, y_increment, dt);

            std::copy(x.begin(), x.end(), a.begin());
            const auto dB = noise.row(k);
            for (std::size_t s = 0; s < substeps; ++s)
            {
                stepper.step(a, dB.subspan(s * n, n), fine_dt, b);
                for (double v : b)
                    if (!std::isfinite(v))
                        throw IntegrationError(ensemble.time_index * substeps + s, "non-finite particle state");
                std::swap(a, b);
            }
            std::copy(a.begin(), a.end(), next.particles.row(k).begin());
        }
    });
    return next;
}

FilterTrajectory run_recursive_filter(const FilteringModel& model, const NoiseTable& y_path, const TestFunction& g,
                                      std::size_t particles, std::uint64_t seed, const RecursiveFilterOptions& options)
{
    model.validate();
    if (y_path.dim() != model.obs_dim)
        throw ValidationError("observation path dimension does not match the model");
    if (options.substeps == 0)
        throw ValidationError("substeps must be positive");

    const TimeGrid& grid = y_path.grid();
    const std::size_t n = model.state_dim;
    const std::size_t sub = options.substeps;
    const TimeGrid fine(grid.horizon(), grid.steps() * sub);
    const double sqrt_fine_dt = std::sqrt(fine.dt());
    const std::uint64_t noise_seed = derive_seed(seed, Stream::signal_noise);

    FilterTrajectory out{{}, make_initial_ensemble(model, grid, particles)};
    auto record = [&](const WeightedEnsemble& e) {
        const auto norm = normalized_with_error(g, e);
        out.nodes.push_back({e.time_index, grid.node(e.time_index), unnormalized_estimate(g, e), norm.value,
                             norm.standard_error});
    };
    record(out.final_ensemble);

    Matrix slice(particles, sub * n);
    for (std::size_t i = 0; i < grid.steps(); ++i)
    {
        parallel_chunks(particles, options.workers, [&](std::size_t begin, std::size_t end) {
            for (std::size_t k = begin; k < end; ++k)
            {
                auto row = slice.row(k);
                for (std::size_t s = 0; s < sub; ++s)
                    fill_increment_row({noise_seed, k}, i * sub + s, sqrt_fine_dt, row.subspan(s * n, n));
            }
        });
        out.final_ensemble =
            recursive_update(out.final_ensemble, model, y_path.row(i), sub, slice, options.workers);
        if (options.resample)
            out.final_ensemble = resample_multinomial(out.final_ensemble, seed);
        record(out.final_ensemble);
    }
    return out;
}

WeightedEnsemble batch_ensemble(const FilteringModel& model, const NoiseTable& y_path, std::size_t particles,
                                std::size_t substeps, std::uint64_t seed, std::size_t workers)
{
    model.validate();
    if (substeps == 0)
        throw ValidationError("substeps must be positive");
    const TimeGrid& grid = y_path.grid();
    const TimeGrid fine(grid.horizon(), grid.steps() * substeps);
    WeightedEnsemble out = make_initial_ensemble(model, grid, particles);
    out.time_index = grid.steps();
    parallel_chunks(particles, workers, [&](std::size_t begin, std::size_t end) {
        Matrix path;
        for (std::size_t k = begin; k < end; ++k)
        {
            euler_maruyama_into(model, particle_noise(fine, model.state_dim, seed, k), path);
            const Matrix hv = observation_values(model.observe, model.obs_dim, path);
            out.log_weights[k] = log_weight_from_values(hv, substeps, y_path);
            const auto last = path.row(path.rows() - 1);
            std::copy(last.begin(), last.end(), out.particles.row(k).begin());
        }
    });
    return out;
}

WeightedEnsemble resample_multinomial(const WeightedEnsemble& ensemble, std::uint64_t seed)
{
    ensemble.validate();
    const std::size_t m = ensemble.size();
    const double shift = max_log_weight(ensemble);
    std::vector<double> cumulative(m);
    double total = 0.0;
    for (std::size_t k = 0; k < m; ++k)
    {
        total += std::exp(ensemble.log_weights[k] - shift);
        cumulative[k] = total;
    }
    const double log_mean = shift + std::log(total / static_cast<double>(m));

    const StreamKey key{derive_seed(seed, Stream::resampling), ensemble.time_index};
    WeightedEnsemble out{ensemble.grid, ensemble.time_index, Matrix(m, ensemble.particles.cols()),
                         std::vector<double>(m, log_mean)};
    for (std::size_t k = 0; k < m; ++k)
    {
        const double target = uniform01(key, k) * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
        const auto parent = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
            it - cumulative.begin(), static_cast<std::ptrdiff_t>(m) - 1));
        const auto src = ensemble.particles.row(parent);
        std::copy(src.begin(), src.end(), out.particles.row(k).begin());
    }
    return out;
}

} // namespace picard
