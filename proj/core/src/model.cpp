#include "picard/model.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "picard/error.hpp"

namespace picard
{
namespace
{

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

double param_or(const ParamMap& params, const std::string& key, double fallback)
{
    const auto it = params.find(key);
    return it == params.end() ? fallback : parse_real(it->second);
}

void reject_unknown(const ParamMap& params, const std::vector<std::string>& known, const std::string& preset)
{
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, value] : params)
        if (!allowed.contains(key))
            throw ValidationError("unknown parameter '" + key + "' for model preset '" + preset + "'");
}

Matrix square_or_scalar(const std::vector<double>& values, std::size_t n, const char* what)
{
    if (values.size() == 1)
    {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = values[0];
        return m;
    }
    if (values.size() != n * n)
        throw ValidationError(std::string(what) + " must hold 1 or N*N entries");
    return Matrix(n, n, values);
}

FilteringModel scalar_model(std::string name, double theta, double sigma, double x0)
{
    FilteringModel m;
    m.name = std::move(name);
    m.state_dim = 1;
    m.obs_dim = 1;
    m.initial_state = {x0};
    m.drift = [theta](std::span<const double> x, std::span<double> out) { out[0] = -theta * x[0]; };
    m.diffusion = [sigma](std::span<const double>, std::span<double> out) { out[0] = sigma; };
    m.constant_diffusion = true;
    return m;
}

} // namespace

void FilteringModel::validate() const
{
    if (state_dim == 0 || obs_dim == 0)
        throw ValidationError("model dimensions must be positive");
    if (initial_state.size() != state_dim)
        throw ValidationError("initial state length must equal the state dimension");
    if (!drift || !diffusion || !observe)
        throw ValidationError("model '" + name + "' is missing a coefficient function");
    if (linear_gaussian)
    {
        if (!linear)
            throw ValidationError("linear-Gaussian model without stored matrices");
        if (linear->drift.rows() != state_dim || linear->drift.cols() != state_dim ||
            linear->diffusion.rows() != state_dim || linear->diffusion.cols() != state_dim ||
            linear->observation.rows() != obs_dim || linear->observation.cols() != state_dim)
            throw ValidationError("linear-Gaussian matrices have inconsistent shapes");
    }
}

FilteringModel make_ou_model(double theta, double sigma, double kappa, double x0)
{
    auto m = scalar_model("ou", theta, sigma, x0);
    m.observe = [kappa](std::span<const double> x, std::span<double> out) { out[0] = std::tanh(kappa * x[0]); };
    m.h_bounded = true;
    return m;
}

FilteringModel make_sine_model(double theta, double sigma, double alpha, double x0)
{
    auto m = scalar_model("sine", theta, sigma, x0);
    m.observe = [alpha](std::span<const double> x, std::span<double> out) { out[0] = alpha * std::sin(x[0]); };
    m.h_bounded = true;
    return m;
}

FilteringModel make_linear_model(Matrix drift, Matrix diffusion, Matrix observation, std::vector<double> x0)
{
    const std::size_t n = x0.size();
    if (n == 0 || observation.cols() != n || observation.rows() == 0)
        throw ValidationError("linear model: H must be d x N with N = len(x0)");
    FilteringModel m;
    m.name = "linear";
    m.state_dim = n;
    m.obs_dim = observation.rows();
    m.initial_state = std::move(x0);
    m.linear = LinearGaussianData{std::move(drift), std::move(diffusion), std::move(observation)};
    m.linear_gaussian = true;
    m.h_bounded = false;
    m.constant_diffusion = true;

    const auto& lin = *m.linear;
    m.drift = [a = lin.drift](std::span<const double> x, std::span<double> out) {
        for (std::size_t r = 0; r < a.rows(); ++r)
        {
            double s = 0.0;
            for (std::size_t c = 0; c < a.cols(); ++c)
                s += a(r, c) * x[c];
            out[r] = s;
        }
    };
    m.diffusion = [s = lin.diffusion](std::span<const double>, std::span<double> out) {
        const auto src = s.data();
        std::copy(src.begin(), src.end(), out.begin());
    };
    m.observe = [h = lin.observation](std::span<const double> x, std::span<double> out) {
        for (std::size_t r = 0; r < h.rows(); ++r)
        {
            double s = 0.0;
            for (std::size_t c = 0; c < h.cols(); ++c)
                s += h(r, c) * x[c];
            out[r] = s;
        }
    };
    m.validate();
    return m;
}

void ModelRegistry::add(const std::string& name, Entry entry)
{
    if (!entry.factory)
        throw ValidationError("model preset '" + name + "' has no factory");
    entries_[name] = std::move(entry);
}

const ModelRegistry::Entry& ModelRegistry::entry(const std::string& name) const
{
    const auto it = entries_.find(name);
    if (it == entries_.end())
        throw ValidationError("unknown model preset '" + name + "'");
    return it->second;
}

FilteringModel ModelRegistry::make(const std::string& name, const ParamMap& params) const
{
    const auto& e = entry(name);
    reject_unknown(params, e.params, name);
    auto model = e.factory(params);
    model.validate();
    return model;
}

std::vector<std::string> ModelRegistry::names() const
{
    std::vector<std::string> out;
    for (const auto& [name, entry] : entries_)
        out.push_back(name);
    return out;
}

const ModelRegistry& ModelRegistry::builtin()
{
    static const ModelRegistry registry = [] {
        ModelRegistry r;
        r.add("ou", {[](const ParamMap& p) {
                         return make_ou_model(param_or(p, "theta", 1.0), param_or(p, "sigma", 1.0),
                                              param_or(p, "kappa", 1.0), param_or(p, "x0", 1.0));
                     },
                     {"theta", "sigma", "kappa", "x0"},
                     "b(x) = -theta x, sigma const, h(x) = tanh(kappa x)"});
        r.add("sine", {[](const ParamMap& p) {
                           return make_sine_model(param_or(p, "theta", 1.0), param_or(p, "sigma", 1.0),
                                                  param_or(p, "alpha", 1.0), param_or(p, "x0", 1.0));
                       },
                       {"theta", "sigma", "alpha", "x0"},
                       "b(x) = -theta x, sigma const, h(x) = alpha sin(x)"});
        r.add("linear", {[](const ParamMap& p) {
                             auto get = [&](const char* key, const char* fallback) {
                                 const auto it = p.find(key);
                                 return parse_real_list(it == p.end() ? fallback : it->second);
                             };
                             auto x0 = get("x0", "1");
                             const std::size_t n = x0.size();
                             auto h = get("H", "1");
                             if (h.size() % n != 0)
                                 throw ValidationError("linear model: H must hold d*N entries");
                             const std::size_t d = h.size() / n;
                             return make_linear_model(square_or_scalar(get("A", "-0.5"), n, "A"),
                                                      square_or_scalar(get("sigma", "1"), n, "sigma"),
                                                      Matrix(d, n, std::move(h)), std::move(x0));
                         },
                         {"A", "sigma", "H", "x0"},
                         "b(x) = A x, sigma const, h(x) = H x (row-major lists; scalars mean multiples of I)"});
        return r;
    }();
    return registry;
}

double parse_real(const std::string& text)
{
    const auto s = trim(text);
    double value = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(value))
        throw ValidationError("expected a finite real number, got '" + text + "'");
    return value;
}

std::vector<double> parse_real_list(const std::string& text)
{
    std::vector<double> out;
    std::size_t start = 0;
    while (true)
    {
        const auto comma = text.find(',', start);
        out.push_back(parse_real(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return out;
}

} // namespace picard
