#include <cmath>
#include <functional>
#include <sstream>

#include "picard/cli/commands.hpp"
#include "picard/picard.hpp"

namespace picard::cli
{
namespace
{

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(b)); }

std::string show(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

using Check = std::pair<std::string, std::function<std::string()>>;

// Each check returns an empty string on success, otherwise what went wrong.
std::vector<Check> checks()
{
    std::vector<Check> list;
    list.emplace_back("grid: T=1, n=4 nodes and eta(0.6) = 0.5", [] {
        const TimeGrid g(1.0, 4);
        const bool ok = g.node(0) == 0.0 && g.node(1) == 0.25 && g.node(2) == 0.5 && g.node(3) == 0.75 &&
                        g.node(4) == 1.0 && g.eta(0.6) == 0.5;
        return ok ? "" : "unexpected node or eta value";
    });
    list.emplace_back("grid: T=2, n=8 gives eta(1.99) = 1.75", [] {
        const TimeGrid g(2.0, 8);
        return g.dt() == 0.25 && g.eta(1.99) == 1.75 ? "" : "eta(1.99) = " + show(g.eta(1.99));
    });
    list.emplace_back("noise: same (seed, replica) regenerates bit-identical increments", [] {
        const TimeGrid g(1.0, 64);
        return sample_increments(g, 2, 11, 3) == sample_increments(g, 2, 11, 3) ? "" : "tables differ";
    });
    list.emplace_back("noise: coarsen {0.1, 0.2, -0.3, 0.4} by 2 gives {0.3, 0.1}", [] {
        const NoiseTable t(TimeGrid(1.0, 4), Matrix{{0.1}, {0.2}, {-0.3}, {0.4}});
        const auto c = coarsen_increments(t, 2);
        return close(c.row(0)[0], 0.3, 1e-15) && close(c.row(1)[0], 0.1, 1e-15) ? "" : "wrong cell sums";
    });
    list.emplace_back("euler: b = 1, sigma = 0 walks 0, 0.25, ..., 1", [] {
        FilteringModel m = make_ou_model(0.0, 0.0, 1.0, 0.0);
        m.drift = [](std::span<const double>, std::span<double> out) { out[0] = 1.0; };
        const auto path = euler_maruyama(m, sample_increments(TimeGrid(1.0, 4), 1, 1, 0));
        for (std::size_t i = 0; i <= 4; ++i)
            if (path(i, 0) != 0.25 * static_cast<double>(i))
                return "X_" + std::to_string(i) + " = " + show(path(i, 0));
        return std::string();
    });
    list.emplace_back("weights: constant h = 2 with Y_T = 0.5 gives -1", [] {
        const NoiseTable y(TimeGrid(1.0, 2), Matrix{{0.2}, {0.3}});
        const auto w = picard_log_weight(Matrix(3, 1), y, [](std::span<const double>, std::span<double> o) {
            o[0] = 2.0;
        });
        return close(w.value, -1.0, 1e-14) ? "" : "log weight " + show(w.value);
    });
    list.emplace_back("weights: girsanov_mean of {ln 2, ln 0.5} is 1.25", [] {
        const std::vector<LogWeight> s{{std::log(2.0)}, {std::log(0.5)}};
        const auto m = girsanov_mean(s);
        return close(m.mean, 1.25, 1e-14) ? "" : "mean " + show(m.mean);
    });
    list.emplace_back("filter: states {0, 1, 2}, weights {1, 2, 4} give 10/3", [] {
        WeightedEnsemble e{TimeGrid(1.0, 1), 0, Matrix{{0.0}, {1.0}, {2.0}},
                           {0.0, std::log(2.0), std::log(4.0)}};
        const double v = unnormalized_estimate(make_test_function("identity"), e);
        return close(v, 10.0 / 3.0, 1e-14) ? "" : "estimate " + show(v);
    });
    list.emplace_back("filter: normalized estimate is invariant to a +100 log-weight shift", [] {
        WeightedEnsemble e{TimeGrid(1.0, 1), 0, Matrix{{0.3}, {-1.0}, {2.0}}, {0.1, -0.7, 0.4}};
        const auto g = make_test_function("identity");
        const double a = normalized_estimate(g, e);
        for (double& w : e.log_weights)
            w += 100.0;
        const double b = normalized_estimate(g, e);
        return close(a, b, 1e-12) ? "" : show(a) + " vs " + show(b);
    });
    list.emplace_back("filter: one coarse step matches the batch route exactly", [] {
        const FilteringModel m = make_ou_model(1.0, 1.0, 1.0, 1.0);
        const NoiseTable y = sample_increments(TimeGrid(1.0, 1), 1, 5, 0);
        const auto g = make_test_function("identity");
        const auto traj = run_recursive_filter(m, y, g, 16, 9, {4, 1, false});
        const auto batch = batch_ensemble(m, y, 16, 4, 9);
        const double a = traj.nodes.back().unnormalized;
        const double b = unnormalized_estimate(g, batch);
        return a == b ? "" : show(a) + " vs " + show(b);
    });
    list.emplace_back("oracles: Kalman-Bucy with A = 0, sigma = 0 keeps P = 0 and m = x", [] {
        const FilteringModel m = make_linear_model(Matrix{{0.0}}, Matrix{{0.0}}, Matrix{{1.0}}, {0.7});
        const auto k = kalman_bucy(m, sample_increments(TimeGrid(1.0, 32), 1, 3, 0));
        return k.mean.back()(0) == 0.7 && k.covariance.back()(0, 0) == 0.0 ? "" : "state moved";
    });
    list.emplace_back("oracles: quadrature second moment of B_1 is 1", [] {
        const FilteringModel m = make_ou_model(0.0, 1.0, 0.0, 0.0);
        const std::vector<double> y{0.0};
        const double v = single_step_quadrature(m, make_test_function("square"), y, 1.0);
        return close(v, 1.0, 1e-10) ? "" : "moment " + show(v);
    });
    list.emplace_back("experiments: lp_norm({3, 4}, 2) = sqrt(12.5)", [] {
        const std::vector<double> s{3.0, 4.0};
        const double v = lp_norm(s, 2.0).value;
        return close(v, std::sqrt(12.5), 1e-15) ? "" : show(v);
    });
    list.emplace_back("experiments: fit_slope recovers c/n and c/n^2", [] {
        std::vector<std::pair<double, double>> one, two;
        for (double n : {4.0, 8.0, 16.0})
        {
            one.emplace_back(n, 0.3 / n);
            two.emplace_back(n, 0.3 / (n * n));
        }
        const double a = fit_slope(one).slope;
        const double b = fit_slope(two).slope;
        return close(a, -1.0, 1e-12) && close(b, -2.0, 1e-12) ? "" : show(a) + ", " + show(b);
    });
    list.emplace_back("experiments: coupled discrepancy vanishes at n = n_ref and for a frozen signal", [] {
        const TimeGrid fine(1.0, 64);
        const NoiseTable y = sample_increments(fine, 1, 2, 0);
        const auto g = make_test_function("identity");
        const FilteringModel ou = make_ou_model(1.0, 1.0, 1.0, 1.0);
        const FilteringModel frozen = make_ou_model(0.0, 0.0, 1.0, 1.0);
        std::vector<Matrix> paths, still;
        for (std::uint64_t k = 0; k < 8; ++k)
        {
            paths.push_back(euler_maruyama(ou, sample_increments(fine, 1, 4, k)));
            still.push_back(euler_maruyama(frozen, sample_increments(fine, 1, 4, k)));
        }
        if (coupled_discrepancy(y, paths, g, 64, ou) != 0.0)
            return std::string("nonzero at n = n_ref");
        for (std::size_t n : {1, 4, 16})
            if (coupled_discrepancy(y, still, g, n, frozen) != 0.0)
                return "frozen signal nonzero at n = " + std::to_string(n);
        return std::string();
    });
    return list;
}

} // namespace

std::vector<CheckResult> run_selftest()
{
    std::vector<CheckResult> out;
    for (const auto& [name, fn] : checks())
    {
        try
        {
            const std::string detail = fn();
            out.push_back({name, detail.empty(), detail});
        }
        catch (const std::exception& e)
        {
            out.push_back({name, false, std::string("threw: ") + e.what()});
        }
    }
    return out;
}

} // namespace picard::cli
