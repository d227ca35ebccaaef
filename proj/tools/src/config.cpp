#include "picard/cli/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "picard/error.hpp"

namespace picard::cli
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

std::vector<std::string> split_list(const std::string& v)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true)
    {
        const auto comma = v.find(',', start);
        auto item = trim(v.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (item.empty())
            throw ValidationError("empty list element");
        out.push_back(std::move(item));
        if (comma == std::string::npos)
            return out;
        start = comma + 1;
    }
}

std::uint64_t to_u64(const std::string& v)
{
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
        throw ValidationError("expected a non-negative integer, got '" + v + "'");
    return out;
}

std::size_t to_positive(const std::string& v)
{
    const auto n = to_u64(v);
    if (n == 0)
        throw ValidationError("expected a positive integer, got '" + v + "'");
    return static_cast<std::size_t>(n);
}

bool to_bool(const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw ValidationError("expected true or false, got '" + v + "'");
}

template <class T, class F>
std::string join(const std::vector<T>& items, F&& fmt)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i)
    {
        if (i)
            out += ",";
        out += fmt(items[i]);
    }
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"model.preset", [](RunConfig& c, const std::string& v) { c.experiment.model = v; }},
        {"experiment.T", [](RunConfig& c, const std::string& v) { c.experiment.horizon = parse_real(v); }},
        {"experiment.n_list",
         [](RunConfig& c, const std::string& v) {
             c.experiment.n_list.clear();
             for (const auto& s : split_list(v))
                 c.experiment.n_list.push_back(to_positive(s));
         }},
        {"experiment.n_ref", [](RunConfig& c, const std::string& v) { c.experiment.n_ref = to_positive(v); }},
        {"experiment.p_list", [](RunConfig& c, const std::string& v) { c.experiment.p_list = parse_real_list(v); }},
        {"experiment.M_X", [](RunConfig& c, const std::string& v) { c.experiment.inner_replicas = to_positive(v); }},
        {"experiment.M_Y", [](RunConfig& c, const std::string& v) { c.experiment.outer_replicas = to_positive(v); }},
        {"experiment.g", [](RunConfig& c, const std::string& v) { c.experiment.test_functions = split_list(v); }},
        {"experiment.indicator_threshold",
         [](RunConfig& c, const std::string& v) { c.experiment.indicator_threshold = parse_real(v); }},
        {"experiment.coordinate",
         [](RunConfig& c, const std::string& v) { c.experiment.coordinate = static_cast<std::size_t>(to_u64(v)); }},
        {"experiment.seed",
         [](RunConfig& c, const std::string& v) {
             c.experiment.seed = to_u64(v);
             c.seed_set = true;
         }},
        {"experiment.normalized", [](RunConfig& c, const std::string& v) { c.experiment.normalized = to_bool(v); }},
        {"experiment.n", [](RunConfig& c, const std::string& v) { c.filter_steps = to_positive(v); }},
        {"experiment.substeps", [](RunConfig& c, const std::string& v) { c.substeps = to_positive(v); }},
        {"experiment.M", [](RunConfig& c, const std::string& v) { c.particles = to_positive(v); }},
        {"experiment.resample", [](RunConfig& c, const std::string& v) { c.resample = to_bool(v); }},
        {"experiment.filter_g", [](RunConfig& c, const std::string& v) { c.filter_g = v; }},
        {"experiment.kalman_tolerance",
         [](RunConfig& c, const std::string& v) { c.kalman_tolerance = parse_real(v); }},
        {"output.dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
        {"output.timing", [](RunConfig& c, const std::string& v) { c.output_timing = to_bool(v); }},
    };
    return table;
}

} // namespace

ConfigError::ConfigError(std::size_t line, const std::string& what)
    : std::runtime_error(line ? "config line " + std::to_string(line) + ": " + what : "config: " + what), line_(line)
{
}

std::string format_number(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

RunConfig parse_config(const std::string& text)
{
    RunConfig config;
    std::map<std::string, std::size_t> seen;
    std::map<std::string, std::size_t> model_param_lines;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw))
    {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(line_no, "empty key");
        if (value.empty())
            throw ConfigError(line_no, "key '" + key + "' has no value");
        if (seen.contains(key))
            throw ConfigError(line_no, "key '" + key + "' repeated (first on line " + std::to_string(seen[key]) + ")");
        seen[key] = line_no;

        try
        {
            if (const auto it = setters().find(key); it != setters().end())
                it->second(config, value);
            else if (key.starts_with("model.") && key.size() > 6)
            {
                config.experiment.model_params[key.substr(6)] = value;
                model_param_lines[key.substr(6)] = line_no;
            }
            else
                throw ValidationError("unknown key '" + key + "'");
        }
        catch (const ValidationError& e)
        {
            const std::string msg = e.what();
            throw ConfigError(line_no, msg.find(key) == std::string::npos ? "key '" + key + "': " + msg : msg);
        }
    }

    // Preset parameters are checked against the preset's declared list.
    const auto& registry = ModelRegistry::builtin();
    if (!registry.contains(config.experiment.model))
        throw ConfigError(seen.contains("model.preset") ? seen["model.preset"] : 0,
                          "unknown model preset '" + config.experiment.model + "'");
    const auto& known = registry.entry(config.experiment.model).params;
    for (const auto& [param, line] : model_param_lines)
        if (std::find(known.begin(), known.end(), param) == known.end())
            throw ConfigError(line, "unknown key 'model." + param + "' for preset '" + config.experiment.model + "'");
    try
    {
        (void)registry.make(config.experiment.model, config.experiment.model_params);
    }
    catch (const ValidationError& e)
    {
        throw ConfigError(0, e.what());
    }
    for (const auto& g : config.experiment.test_functions)
    {
        const auto names = test_function_names();
        if (std::find(names.begin(), names.end(), g) == names.end())
            throw ConfigError(seen["experiment.g"], "unknown test function '" + g + "'");
    }
    {
        const auto names = test_function_names();
        if (std::find(names.begin(), names.end(), config.filter_g) == names.end())
            throw ConfigError(seen["experiment.filter_g"], "unknown test function '" + config.filter_g + "'");
    }
    return config;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(0, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string to_config_text(const RunConfig& c)
{
    const auto& e = c.experiment;
    std::ostringstream os;
    os << "model.preset = " << e.model << "\n";
    for (const auto& [key, value] : e.model_params)
        os << "model." << key << " = " << value << "\n";
    os << "experiment.T = " << format_number(e.horizon) << "\n";
    os << "experiment.n_list = " << join(e.n_list, [](std::size_t n) { return std::to_string(n); }) << "\n";
    os << "experiment.n_ref = " << e.n_ref << "\n";
    os << "experiment.p_list = " << join(e.p_list, format_number) << "\n";
    os << "experiment.M_X = " << e.inner_replicas << "\n";
    os << "experiment.M_Y = " << e.outer_replicas << "\n";
    os << "experiment.g = " << join(e.test_functions, [](const std::string& s) { return s; }) << "\n";
    os << "experiment.indicator_threshold = " << format_number(e.indicator_threshold) << "\n";
    os << "experiment.coordinate = " << e.coordinate << "\n";
    if (c.seed_set)
        os << "experiment.seed = " << e.seed << "\n";
    os << "experiment.normalized = " << (e.normalized ? "true" : "false") << "\n";
    os << "experiment.n = " << c.filter_steps << "\n";
    os << "experiment.substeps = " << c.substeps << "\n";
    os << "experiment.M = " << c.particles << "\n";
    os << "experiment.resample = " << (c.resample ? "true" : "false") << "\n";
    os << "experiment.filter_g = " << c.filter_g << "\n";
    os << "experiment.kalman_tolerance = " << format_number(c.kalman_tolerance) << "\n";
    if (!c.output_dir.empty())
        os << "output.dir = " << c.output_dir << "\n";
    os << "output.timing = " << (c.output_timing ? "true" : "false") << "\n";
    return os.str();
}

} // namespace picard::cli
