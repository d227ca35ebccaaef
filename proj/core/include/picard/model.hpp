#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "picard/matrix.hpp"

namespace picard
{

/// f(x, out): writes the image of state x into out.
using VectorField = std::function<void(std::span<const double>, std::span<double>)>;

/// Flat key-value parameters for a model or test-function preset.
using ParamMap = std::map<std::string, std::string>;

/// Matrices behind b(x) = A x, sigma = const, h(x) = H x.
struct LinearGaussianData
{
    Matrix drift;     // A, N x N
    Matrix diffusion; // sigma, N x N
    Matrix observation; // H, d x N
};

/// Signal SDE dX = b(X) dt + sigma(X) dB, observation function h and initial state.
///
/// `diffusion` writes sigma(x) row-major (N x N). When `constant_diffusion` is
/// set the integrator evaluates it once per path.
struct FilteringModel
{
    std::string name;
    std::size_t state_dim = 1;
    std::size_t obs_dim = 1;
    std::vector<double> initial_state;
    VectorField drift;
    VectorField diffusion;
    VectorField observe;
    bool constant_diffusion = false;
    bool h_bounded = false;
    bool linear_gaussian = false;
    std::optional<LinearGaussianData> linear;

    /// Checks dimensions and that every callable is set.
    void validate() const;
};

using ModelFactory = std::function<FilteringModel(const ParamMap&)>;

/// Name -> factory map. Factories reject parameters they do not know.
class ModelRegistry
{
  public:
    struct Entry
    {
        ModelFactory factory;
        std::vector<std::string> params;
        std::string summary;
    };

    void add(const std::string& name, Entry entry);
    FilteringModel make(const std::string& name, const ParamMap& params = {}) const;
    bool contains(const std::string& name) const { return entries_.contains(name); }
    const Entry& entry(const std::string& name) const;
    std::vector<std::string> names() const;

    /// Registry holding "ou", "linear" and "sine".
    static const ModelRegistry& builtin();

  private:
    std::map<std::string, Entry> entries_;
};

/// b(x) = -theta x, sigma const, h(x) = tanh(kappa x); N = d = 1.
FilteringModel make_ou_model(double theta, double sigma, double kappa, double x0);

/// b(x) = -theta x, sigma const, h(x) = alpha sin(x); N = d = 1.
FilteringModel make_sine_model(double theta, double sigma, double alpha, double x0);

/// b(x) = A x, sigma const, h(x) = H x with linear_gaussian set.
FilteringModel make_linear_model(Matrix drift, Matrix diffusion, Matrix observation,
                                 std::vector<double> x0);

/// Comma-separated reals, e.g. "1, -0.5, 2".
std::vector<double> parse_real_list(const std::string& text);
double parse_real(const std::string& text);

} // namespace picard
