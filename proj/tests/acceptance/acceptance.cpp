// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "picard/cli/commands.hpp"
#include "picard/cli/config.hpp"
#include "picard/picard.hpp"
#include "test_models.hpp"

using namespace picard;
namespace fs = std::filesystem;

namespace
{

struct Outcome
{
    bool passed = false;
    std::string detail;
};

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Slope band and noise floor for every test function of one estimator mode.
Outcome check_rate(const ConvergenceReport& report)
{
    Outcome o{true, {}};
    for (const auto& tr : report.results)
    {
        const auto& row = tr.slopes.at(0);
        const auto& floor = tr.noise_floor.at(0);
        if (!row.fit)
        {
            o.passed = false;
            o.detail += tr.test_function + ": fit rejected (" + row.diagnostic + "); ";
            continue;
        }
        const double s = row.fit->slope;
        const bool in_band = s >= -1.3 && s <= -0.7;
        o.passed = o.passed && in_band && floor.passed;
        o.detail += tr.test_function + " slope " + fmt(s) + " +- " + fmt(row.fit->slope_halfwidth) +
                    ", floor " + fmt(floor.error) + " vs 3x" + fmt(floor.inner_stderr) +
                    (floor.passed ? "" : " (below noise floor)") + "; ";
    }
    return o;
}

Outcome batch_recursive_identity()
{
    const auto model = ModelRegistry::builtin().make("ou");
    const TimeGrid grid(1.0, 8);
    const auto g = make_test_function("identity");
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    bool bit_equal = true;
    for (std::uint64_t seed : {0ull, 1ull, 7ull, 12345ull, 0xdeadbeefull})
    {
        const auto y = simulate_observed_signal(model, grid, seed).y;
        const auto traj = run_recursive_filter(model, y, g, 64, seed);
        for (std::size_t k = 0; k < 64; ++k)
        {
            const auto path = euler_maruyama(model, particle_noise(grid, 1, seed, k));
            bit_equal = bit_equal && traj.final_ensemble.particles(k, 0) == path(8, 0);
            const double want = picard_log_weight(path, y, model.observe).value;
            const double got = traj.final_ensemble.log_weights[k];
            worst = std::max(worst, std::abs(got - want) / std::max(std::abs(want), 1e-300));
        }
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {bit_equal && worst <= 1e-12 && seconds < 1.0,
            std::string(bit_equal ? "states bit-equal" : "states differ") + ", max relative log-weight gap " +
                fmt(worst) + ", " + fmt(seconds) + " s for 5 seeds"};
}

Outcome girsanov_normalization()
{
    const auto model = ModelRegistry::builtin().make("ou");
    const TimeGrid grid(1.0, 64);
    const std::size_t draws = 100000;
    const std::uint64_t seed = 2024;
    std::vector<LogWeight> w(draws);
    Matrix x;
    for (std::size_t r = 0; r < draws; ++r)
    {
        euler_maruyama_into(model, sample_increments(grid, 1, derive_seed(seed, Stream::signal_noise), r), x);
        const auto y = sample_increments(grid, 1, derive_seed(seed, Stream::observation_noise), r);
        w[r] = picard_log_weight(x, y, model.observe);
    }
    const auto est = girsanov_mean(w);
    const double z = (est.mean - 1.0) / est.standard_error;
    return {std::abs(z) <= 4.0, "mean " + fmt(est.mean) + ", SE " + fmt(est.standard_error) + ", z = " + fmt(z)};
}

Outcome quadrature_equivalence()
{
    const auto model = picard::testing::constant_model(0.0, 1.0, [](double v) { return std::tanh(v); }, 1.0);
    const TimeGrid grid(1.0, 1);
    const std::uint64_t seed = 99;
    const auto y = sample_increments(grid, 1, derive_seed(seed, Stream::observation_noise), 0);
    const auto ensemble = batch_ensemble(model, y, 1000000, 1, seed);
    Outcome o{true, {}};
    for (const char* id : {"one", "identity", "square"})
    {
        const auto g = make_test_function(id);
        const auto mc = unnormalized_with_error(g, ensemble);
        const double quad = single_step_quadrature(model, g, y.row(0), 1.0);
        const double diff = std::abs(mc.value - quad);
        o.passed = o.passed && diff <= 4.0 * mc.standard_error;
        o.detail += std::string(id) + " |" + fmt(mc.value) + " - " + fmt(quad) + "| = " + fmt(diff) + " (4 SE " +
                    fmt(4.0 * mc.standard_error) + "); ";
    }
    return o;
}

Outcome frozen_signal_exactness()
{
    const TimeGrid fine(1.0, 1024);
    const auto y = sample_increments(fine, 1, 31, 0);
    const auto g = make_test_function("identity");
    double worst = 0.0;
    for (const auto& model : {picard::testing::frozen_model(0.7), picard::testing::unobserved_model(0.7)})
    {
        std::vector<Matrix> paths;
        for (std::size_t k = 0; k < 200; ++k)
            paths.push_back(euler_maruyama(model, sample_increments(fine, 1, 32, k)));
        for (std::size_t n = 1; n <= 1024; n *= 2)
            for (bool normalized : {false, true})
                worst = std::max(worst, std::abs(coupled_discrepancy(y, paths, g, n, model, normalized)));
    }
    return {worst == 0.0, "largest |discrepancy| over n = 1..1024, both modes: " + fmt(worst)};
}

Outcome converge_determinism(const fs::path& quick_config)
{
    const fs::path root = fs::temp_directory_path() / "picard_acceptance_determinism";
    fs::remove_all(root);
    std::ostringstream sink;
    const std::string cfg = quick_config.string();
    const int a = cli::run_command({"converge", "--config", cfg, "--out", (root / "w1").string(), "--workers", "1"},
                                   sink, sink)
                      .exit_code;
    const int b = cli::run_command({"converge", "--config", cfg, "--out", (root / "w4").string(), "--workers", "4"},
                                   sink, sink)
                      .exit_code;
    if (a != 0 || b != 0)
        return {false, "converge exited with " + std::to_string(a) + " / " + std::to_string(b)};
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(root / "w1"))
    {
        const auto name = entry.path().filename();
        if (slurp(entry.path()) != slurp(root / "w4" / name))
            return {false, name.string() + " differs between --workers 1 and 4"};
        ++compared;
    }
    fs::remove_all(root);
    return {compared > 0, std::to_string(compared) + " files byte-identical for --workers 1 and 4"};
}

Outcome slope_oracle()
{
    double worst = 0.0;
    for (double alpha : {0.5, 1.0, 2.0})
    {
        std::vector<std::pair<double, double>> pts;
        for (double n : {4.0, 8.0, 16.0, 32.0, 64.0})
            pts.emplace_back(n, std::pow(n, -alpha));
        worst = std::max(worst, std::abs(fit_slope(pts).slope + alpha));
    }
    return {worst <= 1e-12, "max |slope + alpha| = " + fmt(worst)};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"picard_lab acceptance suite"};
    std::string configs = "configs";
    app.add_option("--configs", configs, "directory holding ou.cfg, ou_quick.cfg and linear.cfg");
    CLI11_PARSE(app, argc, argv);
    const fs::path dir(configs);

    int failures = 0;
    auto report = [&](const std::string& name, const std::function<Outcome()>& check) {
        Outcome o;
        try
        {
            o = check();
        }
        catch (const std::exception& e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.passed ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
        failures += o.passed ? 0 : 1;
    };

    report("slope-fit oracle", slope_oracle);
    report("frozen-signal exactness", frozen_signal_exactness);
    report("batch/recursive identity", batch_recursive_identity);
    report("girsanov normalization", girsanov_normalization);
    report("quadrature vs monte carlo", quadrature_equivalence);
    report("converge determinism", [&] { return converge_determinism(dir / "ou_quick.cfg"); });
    report("kalman-bucy agreement", [&] {
        const auto c = cli::compare_with_kalman(cli::load_config((dir / "linear.cfg").string()));
        const auto& last = c.rows.back();
        return Outcome{c.passed, "|picard - kalman| = " + fmt(last.abs_diff) + " at t = " + fmt(last.time) +
                                     ", tolerance " + fmt(c.tolerance)};
    });

    std::optional<ConvergenceData> data;
    auto rate_data = [&]() -> const ConvergenceData& {
        if (!data)
            data = simulate_convergence(cli::load_config((dir / "ou.cfg").string()).experiment);
        return *data;
    };
    report("rate reproduction", [&] { return check_rate(make_report(rate_data(), false)); });
    report("normalized rate", [&] { return check_rate(make_report(rate_data(), true)); });

    std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
