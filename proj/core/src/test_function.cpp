#include "picard/test_function.hpp"

#include <cmath>
#include <set>

#include "picard/error.hpp"

namespace picard
{

TestFunction::TestFunction(std::string id, ParamMap params, Fn fn)
    : id_(std::move(id)), params_(std::move(params)), fn_(std::move(fn))
{
    if (!fn_)
        throw ValidationError("test function '" + id_ + "' has no callable");
}

std::vector<std::string> test_function_names() { return {"identity", "indicator", "one", "square", "tanh"}; }

TestFunction make_test_function(const std::string& id, const ParamMap& params)
{
    std::set<std::string> allowed{"coordinate"};
    if (id == "indicator")
        allowed.insert("threshold");
    if (id == "one")
        allowed.clear();
    for (const auto& [key, value] : params)
        if (!allowed.contains(key))
            throw ValidationError("unknown parameter '" + key + "' for test function '" + id + "'");

    std::size_t c = 0;
    if (const auto it = params.find("coordinate"); it != params.end())
    {
        const double v = parse_real(it->second);
        if (v < 0.0 || v != std::floor(v))
            throw ValidationError("test function coordinate must be a non-negative integer");
        c = static_cast<std::size_t>(v);
    }

    if (id == "one")
        return {id, params, [](std::span<const double>) { return 1.0; }};
    if (id == "identity")
        return {id, params, [c](std::span<const double> x) { return x[c]; }};
    if (id == "square")
        return {id, params, [c](std::span<const double> x) { return x[c] * x[c]; }};
    if (id == "tanh")
        return {id, params, [c](std::span<const double> x) { return std::tanh(x[c]); }};
    if (id == "indicator")
    {
        double k = 0.5;
        if (const auto it = params.find("threshold"); it != params.end())
            k = parse_real(it->second);
        return {id, params, [c, k](std::span<const double> x) { return x[c] > k ? 1.0 : 0.0; }};
    }
    throw ValidationError("unknown test function '" + id + "'");
}

} // namespace picard
