// Coupled discrepancies, L^p aggregation, slope fits and the convergence harness.
#include <cmath>
#include <gtest/gtest.h>
#include <vector>

#include "picard/convergence.hpp"
#include "picard/error.hpp"
#include "picard/euler.hpp"
#include "picard/filter.hpp"
#include "picard/noise.hpp"
#include "picard/parallel.hpp"
#include "picard/rng.hpp"
#include "picard/test_function.hpp"
#include "picard/weights.hpp"
#include "test_models.hpp"

using namespace picard;

namespace
{

std::vector<Matrix> signal_paths(const FilteringModel& m, const TimeGrid& fine, std::size_t count, std::uint64_t seed)
{
    std::vector<Matrix> out;
    for (std::size_t k = 0; k < count; ++k)
        out.push_back(euler_maruyama(m, sample_increments(fine, m.state_dim, seed, k)));
    return out;
}

ConvergenceConfig small_config()
{
    ConvergenceConfig c;
    c.n_list = {2, 4, 8};
    c.n_ref = 32;
    c.inner_replicas = 60;
    c.outer_replicas = 6;
    c.seed = 3;
    return c;
}

} // namespace

// -----------------------------------------------------------------------------
// coupled_discrepancy
// -----------------------------------------------------------------------------

TEST(CoupledDiscrepancy, CoincidentGridsExactlyZero) {
    const auto m = make_ou_model(1, 1, 1, 1);
    const TimeGrid fine(1.0, 64);
    const auto y = sample_increments(fine, 1, 2, 0);
    const auto paths = signal_paths(m, fine, 50, 9);
    for (bool normalized : {false, true})
        EXPECT_EQ(coupled_discrepancy(y, paths, make_test_function("identity"), 64, m, normalized), 0.0);
}

TEST(CoupledDiscrepancy, ZeroObservationExactlyZero) {
    const auto m = picard::testing::unobserved_model();
    const TimeGrid fine(1.0, 64);
    const auto y = sample_increments(fine, 1, 2, 0);
    const auto paths = signal_paths(m, fine, 50, 9);
    for (std::size_t n : {1, 2, 4, 8, 16, 32})
        for (bool normalized : {false, true})
            EXPECT_EQ(coupled_discrepancy(y, paths, make_test_function("identity"), n, m, normalized), 0.0);
}

TEST(CoupledDiscrepancy, FrozenSignalExactlyZero) {
    const auto m = picard::testing::frozen_model(0.6);
    const TimeGrid fine(1.0, 64);
    const auto y = sample_increments(fine, 1, 2, 0);
    const auto paths = signal_paths(m, fine, 10, 9);
    for (std::size_t n : {1, 2, 4, 8, 16, 32})
        for (bool normalized : {false, true})
            EXPECT_EQ(coupled_discrepancy(y, paths, make_test_function("square"), n, m, normalized), 0.0);
}

TEST(CoupledDiscrepancy, MatchesDirectComputation) {
    // Independent evaluation: both estimators spelled out from the weights themselves.
    const auto m = make_ou_model(1, 1, 1, 1);
    const TimeGrid fine(1.0, 64);
    const auto y = sample_increments(fine, 1, 5, 0);
    const auto paths = signal_paths(m, fine, 200, 6);
    const auto g = make_test_function("identity");
    for (std::size_t n : {4, 16})
    {
        const auto yc = coarsen_increments(y, 64 / n);
        double ref = 0.0, coarse = 0.0, ref_mass = 0.0, coarse_mass = 0.0;
        for (const auto& p : paths)
        {
            const double wr = std::exp(reference_log_weight(p, y, m.observe).value);
            const double wc = std::exp(picard_log_weight(subsample_nodes(p, 64 / n), yc, m.observe).value);
            const double gv = g(p.row(64));
            ref += gv * wr;
            coarse += gv * wc;
            ref_mass += wr;
            coarse_mass += wc;
        }
        const double k = static_cast<double>(paths.size());
        EXPECT_NEAR(coupled_discrepancy(y, paths, g, n, m, false), std::abs(ref - coarse) / k, 1e-13);
        EXPECT_NEAR(coupled_discrepancy(y, paths, g, n, m, true), std::abs(ref / ref_mass - coarse / coarse_mass),
                    1e-13);
    }
}

TEST(CoupledDiscrepancy, RejectsNonNestedGrid) {
    const auto m = make_ou_model(1, 1, 1, 1);
    const TimeGrid fine(1.0, 64);
    const auto y = sample_increments(fine, 1, 2, 0);
    const auto paths = signal_paths(m, fine, 4, 9);
    EXPECT_THROW(coupled_discrepancy(y, paths, make_test_function("one"), 3, m), ValidationError);
}

// -----------------------------------------------------------------------------
// lp_norm
// -----------------------------------------------------------------------------

TEST(LpNorm, AllZero) {
    const std::vector<double> s(5, 0.0);
    EXPECT_EQ(lp_norm(s, 2.0).value, 0.0);
}

TEST(LpNorm, TwoPointRms) {
    const std::vector<double> s{3.0, 4.0};
    EXPECT_DOUBLE_EQ(lp_norm(s, 2.0).value, std::sqrt(12.5));
}

TEST(LpNorm, PowerMeanMonotone) {
    for (std::uint64_t seed = 0; seed < 10; ++seed)
    {
        const auto t_table = sample_increments(TimeGrid(1.0, 40), 1, seed, 0);
        const auto t = t_table.increments().data();
        std::vector<double> s;
        for (double v : t)
            s.push_back(std::abs(v));
        double m1 = 0.0, m2 = 0.0;
        for (double v : s)
        {
            m1 += v;
            m2 += v * v;
        }
        m1 /= s.size();
        m2 = std::sqrt(m2 / s.size());
        EXPECT_NEAR(lp_norm(s, 1.0).value, m1, 1e-15);
        EXPECT_NEAR(lp_norm(s, 2.0).value, m2, 1e-15);
        EXPECT_GE(lp_norm(s, 2.0).value, lp_norm(s, 1.0).value);
    }
}

TEST(LpNorm, Rejections) {
    EXPECT_THROW(lp_norm(std::vector<double>{1.0, 2.0}, 0.5), ValidationError);
    EXPECT_THROW(lp_norm(std::vector<double>{1.0}, 2.0), ValidationError);
    EXPECT_THROW(lp_norm(std::vector<double>{1.0, -2.0}, 2.0), ValidationError);
}

// -----------------------------------------------------------------------------
// fit_slope
// -----------------------------------------------------------------------------

TEST(SlopeFit, FirstOrder) {
    const std::vector<std::pair<double, double>> pts{{4, 0.3 / 4}, {8, 0.3 / 8}, {16, 0.3 / 16}};
    const auto f = fit_slope(pts);
    EXPECT_NEAR(f.slope, -1.0, 1e-12);
    EXPECT_NEAR(f.residual, 0.0, 1e-14);
}

TEST(SlopeFit, Flat) {
    const std::vector<std::pair<double, double>> pts{{4, 0.2}, {8, 0.2}, {16, 0.2}, {32, 0.2}};
    EXPECT_NEAR(fit_slope(pts).slope, 0.0, 1e-15);
}

TEST(SlopeFit, PowerLaws) {
    for (double alpha : {0.5, 1.0, 2.0})
    {
        std::vector<std::pair<double, double>> pts;
        for (double n : {4.0, 8.0, 16.0, 32.0, 64.0})
            pts.emplace_back(n, 1.7 * std::pow(n, -alpha));
        const auto f = fit_slope(pts);
        EXPECT_NEAR(f.slope, -alpha, 1e-12);
        EXPECT_NEAR(f.intercept, std::log(1.7), 1e-12);
        EXPECT_NEAR(f.slope_halfwidth, 0.0, 1e-12);
    }
}

TEST(SlopeFit, RejectsDegenerateData) {
    EXPECT_THROW(fit_slope(std::vector<std::pair<double, double>>{{4, 1}, {8, 1}}), ValidationError);
    EXPECT_THROW(fit_slope(std::vector<std::pair<double, double>>{{4, 1}, {8, 0}, {16, 1}}), NoiseFloorError);
    EXPECT_THROW(fit_slope(std::vector<std::pair<double, double>>{{4, 1}, {4, 2}, {4, 1}}), ValidationError);
}

TEST(SlopeFit, HalfWidthFromStudentT) {
    // residual scatter with known closed-form OLS statistics
    const std::vector<std::pair<double, double>> pts{
        {1.0, std::exp(0.1)}, {std::exp(1.0), std::exp(-1.0)}, {std::exp(2.0), std::exp(-1.9)}};
    const auto f = fit_slope(pts);
    // x = {0,1,2}, y = {0.1,-1,-1.9}: slope -1, intercept 1/15, residuals {1/30,-1/15,1/30}
    EXPECT_NEAR(f.slope, -1.0, 1e-14);
    EXPECT_NEAR(f.intercept, 1.0 / 15.0, 1e-14);
    const double se = std::sqrt((1.0 / 150.0) / 1.0 / 2.0);
    EXPECT_NEAR(f.slope_halfwidth, 12.706204736174707 * se, 1e-9);
}

// -----------------------------------------------------------------------------
// Harness
// -----------------------------------------------------------------------------

TEST(ConvergenceConfig, Validation) {
    auto c = small_config();
    EXPECT_NO_THROW(c.validate());
    c.n_list = {3};
    EXPECT_THROW(c.validate(), ValidationError);
    c = small_config();
    c.n_ref = 48;
    EXPECT_THROW(c.validate(), ValidationError);
    c = small_config();
    c.n_list = {64};
    EXPECT_THROW(c.validate(), ValidationError);
    c = small_config();
    c.p_list = {0.5};
    EXPECT_THROW(c.validate(), ValidationError);
    c = small_config();
    c.inner_replicas = 1;
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Convergence, ZeroObservationRejectsFit) {
    auto c = small_config();
    c.model = "linear";
    c.model_params = {{"H", "0"}};
    const auto report = run_convergence(c);
    for (const auto& tr : report.results)
    {
        for (const auto& e : tr.errors)
            EXPECT_EQ(e.error, 0.0);
        ASSERT_EQ(tr.slopes.size(), 1u);
        EXPECT_FALSE(tr.slopes[0].fit);
        EXPECT_NE(tr.slopes[0].diagnostic.find("noise floor"), std::string::npos);
        EXPECT_FALSE(tr.noise_floor[0].passed);
    }
}

TEST(Convergence, WorkerCountDoesNotChangeBits) {
    const auto c = small_config();
    const auto a = simulate_convergence(c, 1);
    const auto b = simulate_convergence(c, 3);
    for (std::size_t mode = 0; mode < 2; ++mode)
        for (std::size_t g = 0; g < 2; ++g)
            for (std::size_t l = 0; l < c.n_list.size(); ++l)
                for (std::size_t j = 0; j < c.outer_replicas; ++j)
                {
                    EXPECT_EQ(a.discrepancies[mode][g][l][j].value, b.discrepancies[mode][g][l][j].value);
                    EXPECT_EQ(a.discrepancies[mode][g][l][j].standard_error,
                              b.discrepancies[mode][g][l][j].standard_error);
                }
}

TEST(Convergence, ReportLayout) {
    auto c = small_config();
    c.p_list = {1.0, 2.0};
    const auto data = simulate_convergence(c);
    const auto r = make_report(data, true);
    EXPECT_TRUE(r.normalized);
    EXPECT_TRUE(r.config.normalized);
    ASSERT_EQ(r.results.size(), 2u);
    EXPECT_EQ(r.results[0].test_function, "identity");
    ASSERT_EQ(r.results[0].errors.size(), 6u);
    EXPECT_EQ(r.results[0].errors[1].n, 2u);
    EXPECT_EQ(r.results[0].errors[1].p, 2.0);
    EXPECT_EQ(r.results[0].slopes.size(), 2u);
    // L^1 never exceeds L^2 over the same samples
    for (std::size_t l = 0; l < 3; ++l)
        EXPECT_LE(r.results[0].errors[2 * l].error, r.results[0].errors[2 * l + 1].error);
}

TEST(Convergence, ErrorShrinksWithRefinement) {
    ConvergenceConfig c;
    c.n_list = {2, 8, 32};
    c.n_ref = 128;
    c.inner_replicas = 400;
    c.outer_replicas = 8;
    c.seed = 11;
    c.test_functions = {"identity"};
    const auto r = run_convergence(c);
    const auto& e = r.results[0].errors;
    EXPECT_GT(e[0].error, e[1].error);
    EXPECT_GT(e[1].error, e[2].error);
}

TEST(Convergence, ObservationPathCoupling) {
    // The harness couples each Y replica with the signal paths of its own block.
    const auto c = small_config();
    const auto m = ModelRegistry::builtin().make("ou");
    const auto gs = make_test_functions(c);
    const auto samples = couple_observation_path(m, c, gs, 2);
    const TimeGrid fine(1.0, c.n_ref);
    const auto y = sample_increments(fine, 1, derive_seed(c.seed, Stream::observation_noise), 2);
    std::vector<Matrix> paths;
    for (std::size_t k = 0; k < c.inner_replicas; ++k)
        paths.push_back(euler_maruyama(
            m, sample_increments(fine, 1, derive_seed(c.seed, Stream::signal_noise), 2 * c.inner_replicas + k)));
    for (std::size_t l = 0; l < c.n_list.size(); ++l)
        EXPECT_EQ(level_discrepancy(samples, l, 1, false).value,
                  coupled_discrepancy(y, paths, gs[1], c.n_list[l], m, false));
}

// -----------------------------------------------------------------------------
// parallel_for
// -----------------------------------------------------------------------------

TEST(Parallel, VisitsEveryIndexOnce) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits)
        EXPECT_EQ(h, 1);
    std::vector<int> chunks(1001, 0);
    parallel_chunks(chunks.size(), 3, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            ++chunks[i];
    });
    for (int h : chunks)
        EXPECT_EQ(h, 1);
}

TEST(Parallel, PropagatesExceptions) {
    EXPECT_THROW(parallel_for(10, 2,
                              [](std::size_t i) {
                                  if (i == 7)
                                      throw ValidationError("boom");
                              }),
                 ValidationError);
}
