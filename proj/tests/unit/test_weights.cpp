// Discretized Girsanov weights.
#include <cmath>
#include <gtest/gtest.h>
#include <vector>

#include "picard/error.hpp"
#include "picard/euler.hpp"
#include "picard/noise.hpp"
#include "picard/rng.hpp"
#include "picard/weights.hpp"
#include "test_models.hpp"

using namespace picard;

namespace
{

const VectorField zero_h = [](std::span<const double>, std::span<double> out) {
    for (double& v : out)
        v = 0.0;
};

// Two-dimensional observation of a scalar state.
const VectorField pair_h = [](std::span<const double> x, std::span<double> out) {
    out[0] = std::tanh(x[0]);
    out[1] = std::sin(2.0 * x[0]);
};

} // namespace

TEST(PicardWeight, ZeroObservation) {
    const auto y = sample_increments(TimeGrid(1.0, 8), 1, 1, 0);
    const Matrix x(9, 1, 0.4);
    EXPECT_EQ(picard_log_weight(x, y, zero_h).value, 0.0);
}

TEST(PicardWeight, ConstantObservation) {
    const VectorField two = [](std::span<const double>, std::span<double> out) { out[0] = 2.0; };
    const NoiseTable y(TimeGrid(1.0, 4), Matrix{{0.1}, {0.3}, {-0.2}, {0.3}});
    const Matrix x(5, 1, 0.0);
    // 2 * 0.5 - 0.5 * 4 * 1
    EXPECT_NEAR(picard_log_weight(x, y, two).value, -1.0, 1e-15);
}

TEST(PicardWeight, MatchesDoubleLoop) {
    const auto m = make_ou_model(1, 1, 1, 1);
    const TimeGrid g(1.0, 8);
    const auto x = euler_maruyama(m, sample_increments(g, 1, 3, 0));
    const auto y = sample_increments(g, 2, 4, 0);
    // outer loop over observation components, inner over cells
    double want = 0.0;
    std::vector<double> h(2);
    for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t i = 0; i < g.steps(); ++i)
        {
            pair_h(x.row(i), h);
            want += h[j] * y.row(i)[j] - 0.5 * h[j] * h[j] * g.dt();
        }
    const double got = picard_log_weight(x, y, pair_h).value;
    EXPECT_NEAR(got, want, 1e-15 * std::abs(want));
}

TEST(PicardWeight, RejectsShapeMismatch) {
    const auto y = sample_increments(TimeGrid(1.0, 8), 1, 1, 0);
    EXPECT_THROW(picard_log_weight(Matrix(8, 1), y, zero_h), ValidationError);
}

TEST(ReferenceWeight, CoincidentGrids) {
    const auto m = make_ou_model(1, 1, 1, 1);
    const TimeGrid g(1.0, 16);
    const auto x = euler_maruyama(m, sample_increments(g, 1, 8, 0));
    const auto y = sample_increments(g, 1, 9, 0);
    EXPECT_EQ(reference_log_weight(x, y, m.observe), picard_log_weight(x, y, m.observe));
}

TEST(ReferenceWeight, ZeroObservation) {
    const auto y = sample_increments(TimeGrid(1.0, 64), 1, 1, 0);
    EXPECT_EQ(reference_log_weight(Matrix(65, 1, 0.3), y, zero_h).value, 0.0);
}

TEST(ReferenceWeight, FrozenSignalAgreesOnEveryGrid) {
    const auto m = picard::testing::frozen_model(0.9);
    const TimeGrid fine(1.0, 64);
    const auto x = euler_maruyama(m, sample_increments(fine, 1, 2, 0));
    const auto y = sample_increments(fine, 1, 6, 0);
    const auto h = observation_values(m.observe, 1, x);
    for (std::size_t n : {1, 2, 4, 8, 16, 32, 64})
    {
        const std::size_t f = 64 / n;
        EXPECT_EQ(weight_discretization_gap(h, y, f), 0.0) << "n = " << n;
    }
}

TEST(ReferenceWeight, GapIsDifferenceOfWeights) {
    const auto m = make_ou_model(1, 1, 1, 1);
    const TimeGrid fine(1.0, 64);
    const auto x = euler_maruyama(m, sample_increments(fine, 1, 2, 0));
    const auto y = sample_increments(fine, 1, 6, 0);
    const auto h = observation_values(m.observe, 1, x);
    const double ref = reference_log_weight(x, y, m.observe).value;
    for (std::size_t f : {2, 4, 8})
    {
        const double coarse = picard_log_weight(subsample_nodes(x, f), coarsen_increments(y, f), m.observe).value;
        EXPECT_NEAR(weight_discretization_gap(h, y, f), ref - coarse, 1e-13);
    }
    EXPECT_EQ(weight_discretization_gap(h, y, 1), 0.0);
}

TEST(GirsanovMean, UnitWeights) {
    const std::vector<LogWeight> w(10, LogWeight{0.0});
    const auto est = girsanov_mean(w);
    EXPECT_EQ(est.mean, 1.0);
    EXPECT_EQ(est.standard_error, 0.0);
}

TEST(GirsanovMean, TwoPoint) {
    const std::vector<LogWeight> w{{std::log(2.0)}, {std::log(0.5)}};
    EXPECT_NEAR(girsanov_mean(w).mean, 1.25, 1e-15);
    EXPECT_THROW(girsanov_mean(std::span<const LogWeight>(w).first(1)), ValidationError);
}

TEST(GirsanovMean, MartingaleUnderReferenceMeasure) {
    // Y is a Brownian motion independent of X, so E[exp(weight)] = 1
    const auto m = make_ou_model(1, 1, 1, 1);
    const TimeGrid g(1.0, 32);
    const std::size_t draws = 100000;
    std::vector<LogWeight> w(draws);
    Matrix x;
    for (std::size_t r = 0; r < draws; ++r)
    {
        euler_maruyama_into(m, sample_increments(g, 1, derive_seed(21, Stream::signal_noise), r), x);
        w[r] = picard_log_weight(x, sample_increments(g, 1, derive_seed(21, Stream::observation_noise), r), m.observe);
    }
    const auto est = girsanov_mean(w);
    EXPECT_GT(est.standard_error, 0.0);
    EXPECT_LT(std::abs(est.mean - 1.0), 4.0 * est.standard_error);
}

TEST(MomentWarning, OnlyForUnboundedObservation) {
    EXPECT_FALSE(moment_bound_warning(make_ou_model(1, 1, 1, 1)));
    EXPECT_TRUE(moment_bound_warning(make_linear_model(Matrix{{-0.5}}, Matrix{{1.0}}, Matrix{{1.0}}, {1.0})));
}
