#pragma once

#include <cmath>
#include <span>
#include <utility>

#include "picard/model.hpp"

namespace picard::testing
{

// Scalar model with constant drift b, constant diffusion s and observation h.
template <class H>
FilteringModel constant_model(double b, double s, H h, double x0 = 0.0)
{
    FilteringModel m;
    m.name = "test";
    m.initial_state = {x0};
    m.drift = [b](std::span<const double>, std::span<double> out) { out[0] = b; };
    m.diffusion = [s](std::span<const double>, std::span<double> out) { out[0] = s; };
    m.observe = [h = std::move(h)](std::span<const double> x, std::span<double> out) { out[0] = h(x[0]); };
    m.constant_diffusion = true;
    return m;
}

inline FilteringModel frozen_model(double x0 = 1.0)
{
    return constant_model(0.0, 0.0, [](double x) { return std::tanh(x); }, x0);
}

inline FilteringModel unobserved_model(double x0 = 1.0)
{
    auto m = make_ou_model(1.0, 1.0, 1.0, x0);
    m.observe = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    return m;
}

} // namespace picard::testing
