#include "picard/convergence.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "picard/error.hpp"
#include "picard/euler.hpp"
#include "picard/parallel.hpp"
#include "picard/rng.hpp"
#include "picard/weights.hpp"

namespace picard
{
namespace
{

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

std::string format_real(double v)
{
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

struct Column
{
    const Matrix& m;
    std::size_t c;
    double operator[](std::size_t k) const { return m(k, c); }
};

Estimate unnormalized_discrepancy(Column g, Column base, Column gap, std::size_t count)
{
    double shift = base[0];
    for (std::size_t k = 1; k < count; ++k)
        shift = std::max(shift, base[k]);
    const double m = static_cast<double>(count);
    std::vector<double> v(count);
    double sum = 0.0;
    for (std::size_t k = 0; k < count; ++k)
    {
        v[k] = g[k] * std::exp(base[k] - shift) * std::expm1(gap[k]);
        sum += v[k];
    }
    const double mean = sum / m;
    double ss = 0.0;
    for (std::size_t k = 0; k < count; ++k)
        ss += (v[k] - mean) * (v[k] - mean);
    const double scale = std::exp(shift);
    return {std::abs(scale * mean), scale * std::sqrt(ss / (m - 1.0) / m)};
}

// R_ref - R_n = sum (g - R_n) w expm1(gap) / sum w exp(gap), w = exp(base - shift).
Estimate normalized_discrepancy(Column g, Column base, Column gap, std::size_t count)
{
    double shift = base[0];
    for (std::size_t k = 1; k < count; ++k)
        shift = std::max(shift, base[k]);
    const double m = static_cast<double>(count);
    std::vector<double> w(count);
    std::vector<double> wr(count);
    double mass = 0.0;
    double weighted = 0.0;
    double mass_ref = 0.0;
    for (std::size_t k = 0; k < count; ++k)
    {
        w[k] = std::exp(base[k] - shift);
        wr[k] = w[k] + w[k] * std::expm1(gap[k]);
        mass += w[k];
        weighted += g[k] * w[k];
        mass_ref += wr[k];
    }
    const double ratio = weighted / mass;
    double num = 0.0;
    for (std::size_t k = 0; k < count; ++k)
        num += (g[k] - ratio) * w[k] * std::expm1(gap[k]);
    const double diff = num / mass_ref;
    const double ratio_ref = ratio + diff;

    // Influence terms of the two ratio estimators; their mean is zero.
    const double mean_w = mass / m;
    const double mean_wr = mass_ref / m;
    std::vector<double> psi(count);
    double psi_sum = 0.0;
    for (std::size_t k = 0; k < count; ++k)
    {
        psi[k] = wr[k] * (g[k] - ratio_ref) / mean_wr - w[k] * (g[k] - ratio) / mean_w;
        psi_sum += psi[k];
    }
    const double psi_mean = psi_sum / m;
    double ss = 0.0;
    for (double p : psi)
        ss += (p - psi_mean) * (p - psi_mean);
    return {std::abs(diff), std::sqrt(ss / (m - 1.0) / m)};
}

} // namespace

void ConvergenceConfig::validate() const
{
    if (!(std::isfinite(horizon) && horizon > 0.0))
        throw ValidationError("experiment horizon must be finite and positive");
    if (!is_power_of_two(n_ref))
        throw ValidationError("n_ref must be a power of two");
    if (n_list.empty())
        throw ValidationError("n_list must not be empty");
    for (std::size_t n : n_list)
    {
        if (!is_power_of_two(n))
            throw ValidationError("n_list entries must be powers of two (got " + std::to_string(n) + ")");
        if (n_ref % n != 0)
            throw ValidationError("n_list entry " + std::to_string(n) + " does not divide n_ref");
    }
    if (p_list.empty())
        throw ValidationError("p_list must not be empty");
    for (double p : p_list)
        if (!(std::isfinite(p) && p >= 1.0))
            throw ValidationError("every p must be a finite real >= 1");
    if (inner_replicas < 2 || outer_replicas < 2)
        throw ValidationError("M_X and M_Y must both be at least 2");
    if (test_functions.empty())
        throw ValidationError("at least one test function is required");
}

std::vector<TestFunction> make_test_functions(const ConvergenceConfig& config)
{
    std::vector<TestFunction> out;
    for (const auto& id : config.test_functions)
    {
        ParamMap params;
        if (id != "one")
            params["coordinate"] = std::to_string(config.coordinate);
        if (id == "indicator")
        {
            std::ostringstream os;
            os.precision(17);
            os << config.indicator_threshold;
            params["threshold"] = os.str();
        }
        out.push_back(make_test_function(id, params));
    }
    return out;
}

PathCoupler::PathCoupler(const FilteringModel& model, const NoiseTable& y_fine, std::vector<std::size_t> levels,
                         std::span<const TestFunction> test_functions, std::size_t capacity)
    : model_(model), y_fine_(y_fine), levels_(std::move(levels)), gs_(test_functions)
{
    if (y_fine.dim() != model.obs_dim)
        throw ValidationError("observation increments do not match the model");
    for (std::size_t n : levels_)
    {
        if (n == 0 || y_fine.steps() % n != 0)
            throw ValidationError("grid n = " + std::to_string(n) + " does not nest in the reference grid");
        factors_.push_back(y_fine.steps() / n);
        y_coarse_.push_back(coarsen_increments(y_fine, factors_.back()));
    }
    g_values_.reserve(capacity * gs_.size());
    base_.reserve(capacity * levels_.size());
    gap_.reserve(capacity * levels_.size());
}

void PathCoupler::add(const Matrix& path)
{
    if (path.rows() != y_fine_.steps() + 1 || path.cols() != model_.state_dim)
        throw ValidationError("signal path is not on the reference grid");
    if (h_nodes_.rows() != path.rows())
        h_nodes_.resize(path.rows(), model_.obs_dim);
    for (std::size_t i = 0; i < path.rows(); ++i)
        model_.observe(path.row(i), h_nodes_.row(i));

    const auto terminal = path.row(path.rows() - 1);
    for (const auto& g : gs_)
        g_values_.push_back(g(terminal));
    for (std::size_t l = 0; l < levels_.size(); ++l)
    {
        base_.push_back(log_weight_from_values(h_nodes_, factors_[l], y_coarse_[l]));
        gap_.push_back(weight_discretization_gap(h_nodes_, y_fine_, factors_[l]));
    }
    ++count_;
}

CouplingSamples PathCoupler::take()
{
    CouplingSamples out{levels_, Matrix(count_, gs_.size(), std::move(g_values_)),
                        Matrix(count_, levels_.size(), std::move(base_)),
                        Matrix(count_, levels_.size(), std::move(gap_))};
    g_values_ = {};
    base_ = {};
    gap_ = {};
    count_ = 0;
    return out;
}

Estimate level_discrepancy(const CouplingSamples& samples, std::size_t level, std::size_t g_index, bool normalized)
{
    const std::size_t count = samples.base.rows();
    if (count < 2)
        throw ValidationError("a discrepancy needs at least two signal paths");
    if (level >= samples.levels.size() || g_index >= samples.g_values.cols())
        throw ValidationError("discrepancy level or test function index out of range");
    const Column g{samples.g_values, g_index};
    const Column base{samples.base, level};
    const Column gap{samples.gap, level};
    return normalized ? normalized_discrepancy(g, base, gap, count) : unnormalized_discrepancy(g, base, gap, count);
}

double coupled_discrepancy(const NoiseTable& y_fine, std::span<const Matrix> x_fine_paths, const TestFunction& g,
                           std::size_t n, const FilteringModel& model, bool normalized)
{
    if (n == 0 || y_fine.steps() % n != 0)
        throw ValidationError("grid n must divide the reference step count");
    PathCoupler coupler(model, y_fine, {n}, std::span<const TestFunction>(&g, 1), x_fine_paths.size());
    for (const auto& path : x_fine_paths)
        coupler.add(path);
    return level_discrepancy(coupler.take(), 0, 0, normalized).value;
}

Estimate lp_norm(std::span<const double> samples, double p)
{
    if (!(p >= 1.0))
        throw ValidationError("L^p norm requires p >= 1");
    if (samples.size() < 2)
        throw ValidationError("L^p norm needs at least two samples");
    const double m = static_cast<double>(samples.size());
    std::vector<double> powered(samples.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        if (samples[i] < 0.0)
            throw ValidationError("L^p norm samples must be nonnegative");
        powered[i] = std::pow(samples[i], p);
        sum += powered[i];
    }
    const double mean = sum / m;
    if (mean == 0.0)
        return {0.0, 0.0};
    double ss = 0.0;
    for (double v : powered)
        ss += (v - mean) * (v - mean);
    const double se_mean = std::sqrt(ss / (m - 1.0) / m);
    const double estimate = std::pow(mean, 1.0 / p);
    return {estimate, estimate / (p * mean) * se_mean};
}

SlopeFit fit_slope(std::span<const std::pair<double, double>> points)
{
    if (points.size() < 3)
        throw ValidationError("slope fit needs at least three points");
    std::vector<double> lx;
    std::vector<double> ly;
    for (const auto& [n, err] : points)
    {
        if (!(n > 0.0))
            throw ValidationError("slope fit needs positive n");
        if (!(err > 0.0))
            throw NoiseFloorError("non-positive error at n = " + format_real(n) +
                                  ": the discretization error is below the Monte Carlo noise floor");
        lx.push_back(std::log(n));
        ly.push_back(std::log(err));
    }
    const double k = static_cast<double>(points.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i)
    {
        mx += lx[i];
        my += ly[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i)
    {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0)
        throw ValidationError("slope fit needs at least two distinct n");

    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i)
    {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ssr += r * r;
    }
    fit.residual = std::sqrt(ssr / k);
    const boost::math::students_t t_dist(k - 2.0);
    const double t = boost::math::quantile(boost::math::complement(t_dist, 0.025));
    fit.slope_halfwidth = t * std::sqrt(ssr / (k - 2.0) / sxx);
    return fit;
}

CouplingSamples couple_observation_path(const FilteringModel& model, const ConvergenceConfig& config,
                                        std::span<const TestFunction> test_functions, std::uint64_t replica)
{
    const TimeGrid fine(config.horizon, config.n_ref);
    const NoiseTable y_fine =
        sample_increments(fine, model.obs_dim, derive_seed(config.seed, Stream::observation_noise), replica);
    PathCoupler coupler(model, y_fine, config.n_list, test_functions, config.inner_replicas);
    const std::uint64_t x_seed = derive_seed(config.seed, Stream::signal_noise);
    Matrix path(config.n_ref + 1, model.state_dim);
    for (std::size_t k = 0; k < config.inner_replicas; ++k)
    {
        const NoiseTable noise = sample_increments(fine, model.state_dim, x_seed, replica * config.inner_replicas + k);
        euler_maruyama_into(model, noise, path);
        coupler.add(path);
    }
    return coupler.take();
}

ConvergenceData simulate_convergence(const ConvergenceConfig& config, std::size_t workers)
{
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const FilteringModel model = ModelRegistry::builtin().make(config.model, config.model_params);
    const std::vector<TestFunction> gs = make_test_functions(config);

    ConvergenceData data;
    data.config = config;
    if (auto w = moment_bound_warning(model))
        data.warnings.push_back(*w);

    const std::size_t levels = config.n_list.size();
    data.discrepancies.assign(
        2, std::vector(gs.size(), std::vector(levels, std::vector<Estimate>(config.outer_replicas))));
    parallel_for(config.outer_replicas, workers, [&](std::size_t j) {
        const CouplingSamples samples = couple_observation_path(model, config, gs, j);
        for (std::size_t mode = 0; mode < 2; ++mode)
            for (std::size_t g = 0; g < gs.size(); ++g)
                for (std::size_t l = 0; l < levels; ++l)
                    data.discrepancies[mode][g][l][j] = level_discrepancy(samples, l, g, mode == 1);
    });
    data.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return data;
}

ConvergenceReport make_report(const ConvergenceData& data, bool normalized)
{
    const auto& config = data.config;
    ConvergenceReport report;
    report.config = config;
    report.config.normalized = normalized;
    report.normalized = normalized;
    report.warnings = data.warnings;
    report.wall_time_seconds = data.wall_time_seconds;

    const auto& by_g = data.discrepancies.at(normalized ? 1 : 0);
    const std::size_t max_level = static_cast<std::size_t>(
        std::max_element(config.n_list.begin(), config.n_list.end()) - config.n_list.begin());
    for (std::size_t g = 0; g < config.test_functions.size(); ++g)
    {
        TestFunctionReport tr;
        tr.test_function = config.test_functions[g];
        std::vector<std::vector<std::pair<double, double>>> ladders(config.p_list.size());
        for (std::size_t l = 0; l < config.n_list.size(); ++l)
        {
            std::vector<double> values;
            for (const auto& e : by_g[g][l])
                values.push_back(e.value);
            for (std::size_t pi = 0; pi < config.p_list.size(); ++pi)
            {
                const double p = config.p_list[pi];
                const auto est = lp_norm(values, p);
                tr.errors.push_back({config.n_list[l], p, est.value, est.standard_error});
                ladders[pi].emplace_back(static_cast<double>(config.n_list[l]), est.value);
            }
        }
        for (std::size_t pi = 0; pi < config.p_list.size(); ++pi)
        {
            const double p = config.p_list[pi];
            SlopeRow row{p, std::nullopt, {}};
            try
            {
                row.fit = fit_slope(ladders[pi]);
            }
            catch (const ValidationError& e)
            {
                row.diagnostic = e.what();
                report.warnings.push_back("g = " + tr.test_function + ", p = " + format_real(p) +
                                          ": slope fit rejected: " + e.what());
            }
            tr.slopes.push_back(row);

            std::vector<double> inner;
            for (const auto& e : by_g[g][max_level])
                inner.push_back(e.standard_error);
            const double inner_se = lp_norm(inner, p).value;
            const double err = ladders[pi][max_level].second;
            const bool passed = err > 0.0 && err >= kNoiseFloorRatio * inner_se;
            tr.noise_floor.push_back({p, config.n_list[max_level], err, inner_se, passed});
            if (!passed)
                report.warnings.push_back("noise floor: g = " + tr.test_function + ", p = " + format_real(p) +
                                          ", n = " + std::to_string(config.n_list[max_level]) + ": error " +
                                          format_real(err) + " is below " + format_real(kNoiseFloorRatio) +
                                          "x its Monte Carlo standard error " + format_real(inner_se) +
                                          "; increase M_X");
        }
        report.results.push_back(std::move(tr));
    }
    return report;
}

ConvergenceReport run_convergence(const ConvergenceConfig& config, std::size_t workers)
{
    return make_report(simulate_convergence(config, workers), config.normalized);
}

} // namespace picard
