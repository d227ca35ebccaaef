#include "picard/cli/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "picard/picard.hpp"

namespace picard::cli
{
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace
{

constexpr const char* kSeedEnv = "PICARD_LAB_SEED";

class OutputSink
{
  public:
    explicit OutputSink(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void write(const std::string& name, const std::string& body)
    {
        const fs::path target = dir_ / name;
        std::ofstream out(target, std::ios::binary);
        out << body;
        out.close();
        if (!out)
            throw std::runtime_error("failed to write " + target.string());
        files_.push_back({name, sha256_hex(body)});
    }

    const std::vector<EmittedFile>& files() const { return files_; }
    const fs::path& dir() const { return dir_; }

  private:
    fs::path dir_;
    std::vector<EmittedFile> files_;
};

struct Options
{
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::size_t workers = 1;
    bool normalized = false;
};

RunConfig resolve_config(const Options& opts, std::ostream& err)
{
    RunConfig config = opts.config_path.empty() ? parse_config("") : load_config(opts.config_path);
    if (opts.seed)
    {
        config.experiment.seed = *opts.seed;
    }
    else if (!config.seed_set)
    {
        if (const char* env = std::getenv(kSeedEnv))
        {
            try
            {
                config.experiment.seed = std::stoull(env);
            }
            catch (const std::exception&)
            {
                err << "warning: ignoring non-integer " << kSeedEnv << "='" << env << "'\n";
            }
        }
    }
    config.seed_set = true;
    if (opts.normalized)
        config.experiment.normalized = true;
    if (!opts.out_dir.empty())
        config.output_dir = opts.out_dir;
    if (config.output_dir.empty())
        config.output_dir = ".";
    return config;
}

std::string csv_header_row(const std::string& first, std::size_t n, const std::string& prefix)
{
    std::string out = first;
    for (std::size_t i = 0; i < n; ++i)
        out += "," + prefix + std::to_string(i);
    return out;
}

// Output location is left out so reports do not depend on where they are written.
std::string portable_config_text(RunConfig config)
{
    config.output_dir.clear();
    return to_config_text(config);
}

std::string manifest_json(const RunManifest& m, const RunConfig& config)
{
    ordered_json j;
    j["subcommand"] = m.subcommand;
    j["config_path"] = m.config_path;
    j["seed_override"] = m.seed_override ? ordered_json(*m.seed_override) : ordered_json(nullptr);
    j["seed"] = config.experiment.seed;
    j["config_text"] = portable_config_text(config);
    ordered_json files = ordered_json::array();
    for (const auto& f : m.files)
        files.push_back({{"name", f.name}, {"sha256", f.sha256}});
    j["files"] = files;
    return j.dump(2) + "\n";
}

int cmd_simulate(const RunConfig& config, OutputSink& sink, std::ostream& out)
{
    const auto& e = config.experiment;
    e.validate();
    const FilteringModel model = ModelRegistry::builtin().make(e.model, e.model_params);
    const TimeGrid grid(e.horizon, e.n_ref);
    const ObservedSignal sig = simulate_observed_signal(model, grid, e.seed);
    const Matrix y = sig.y.cumulative();

    std::ostringstream path_csv;
    path_csv << csv_header_row("i,t", model.state_dim, "x") << csv_header_row("", model.obs_dim, "y") << "\n";
    for (std::size_t i = 0; i <= grid.steps(); ++i)
    {
        path_csv << i << "," << format_number(grid.node(i));
        for (double v : sig.path.row(i))
            path_csv << "," << format_number(v);
        for (double v : y.row(i))
            path_csv << "," << format_number(v);
        path_csv << "\n";
    }
    sink.write("signal.csv", path_csv.str());

    std::ostringstream weights_csv;
    weights_csv << "n,log_weight\n";
    std::vector<std::size_t> ns = e.n_list;
    if (std::find(ns.begin(), ns.end(), e.n_ref) == ns.end())
        ns.push_back(e.n_ref);
    for (std::size_t n : ns)
    {
        const std::size_t f = e.n_ref / n;
        const auto w = picard_log_weight(subsample_nodes(sig.path, f), coarsen_increments(sig.y, f), model.observe);
        weights_csv << n << "," << format_number(w.value) << "\n";
    }
    sink.write("weights.csv", weights_csv.str());
    out << "simulate: wrote signal.csv and weights.csv (" << grid.steps() << " steps, seed " << e.seed << ")\n";
    return 0;
}

int cmd_filter(const RunConfig& config, OutputSink& sink, std::size_t workers, std::ostream& out)
{
    const auto& e = config.experiment;
    const FilteringModel model = ModelRegistry::builtin().make(e.model, e.model_params);
    const TimeGrid coarse(e.horizon, config.filter_steps);
    const TimeGrid fine(e.horizon, config.filter_steps * config.substeps);
    const ObservedSignal sig = simulate_observed_signal(model, fine, e.seed);
    const NoiseTable y = coarsen_increments(sig.y, config.substeps);

    ConvergenceConfig gcfg = e;
    gcfg.test_functions = {config.filter_g};
    const TestFunction g = make_test_functions(gcfg).front();
    const auto traj =
        run_recursive_filter(model, y, g, config.particles, e.seed, {config.substeps, workers, config.resample});

    std::ostringstream csv;
    csv << "i,t,unnormalized,normalized,normalized_stderr,signal\n";
    for (const auto& node : traj.nodes)
    {
        csv << node.index << "," << format_number(node.time) << "," << format_number(node.unnormalized) << ","
            << format_number(node.normalized) << "," << format_number(node.normalized_stderr) << ","
            << format_number(sig.path(node.index * config.substeps, e.coordinate)) << "\n";
    }
    sink.write("filter.csv", csv.str());
    if (auto w = moment_bound_warning(model))
        out << "warning: " << *w << "\n";
    out << "filter: wrote filter.csv (" << traj.nodes.size() << " nodes, M = " << config.particles << ")\n";
    return 0;
}

int cmd_converge(const RunConfig& config, OutputSink& sink, std::size_t workers, std::ostream& out)
{
    const ConvergenceReport report = run_convergence(config.experiment, workers);
    for (std::size_t g = 0; g < report.results.size(); ++g)
    {
        const auto& id = report.results[g].test_function;
        sink.write("converge_" + id + ".csv", convergence_csv(report, g));
        sink.write("slopes_" + id + ".csv", slopes_csv(report, g));
    }
    sink.write("report.json", convergence_json(report, config));

    for (const auto& tr : report.results)
        for (const auto& s : tr.slopes)
            if (s.fit)
                out << "converge: g = " << tr.test_function << ", p = " << s.p << ": slope " << s.fit->slope
                    << " +- " << s.fit->slope_halfwidth << "\n";
    for (const auto& w : report.warnings)
        out << "warning: " << w << "\n";
    return 0;
}

int cmd_kalman_check(const RunConfig& config, OutputSink& sink, std::size_t workers, std::ostream& out)
{
    const auto cmp = compare_with_kalman(config, workers);
    std::ostringstream csv;
    csv << "i,t,picard_mean,kalman_mean,abs_diff,mc_stderr,kalman_variance\n";
    for (const auto& r : cmp.rows)
        csv << r.index << "," << format_number(r.time) << "," << format_number(r.picard_mean) << ","
            << format_number(r.kalman_mean) << "," << format_number(r.abs_diff) << "," << format_number(r.mc_stderr)
            << "," << format_number(r.kalman_variance) << "\n";
    sink.write("kalman_check.csv", csv.str());
    const auto& last = cmp.rows.back();
    out << (cmp.passed ? "PASS" : "FAIL") << " kalman-check: |picard - kalman| = " << last.abs_diff
        << " at t = " << last.time << " (tolerance " << cmp.tolerance << ")\n";
    return cmp.passed ? 0 : 1;
}

int cmd_selftest(OutputSink& sink, std::ostream& out)
{
    const auto results = run_selftest();
    std::ostringstream log;
    std::size_t failed = 0;
    for (const auto& r : results)
    {
        log << (r.passed ? "PASS " : "FAIL ") << r.name;
        if (!r.detail.empty())
            log << " (" << r.detail << ")";
        log << "\n";
        failed += r.passed ? 0 : 1;
    }
    log << (results.size() - failed) << "/" << results.size() << " checks passed\n";
    out << log.str();
    sink.write("selftest.txt", log.str());
    return failed == 0 ? 0 : 1;
}

} // namespace

std::string sha256_hex(const std::string& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i)
        os << std::setw(2) << static_cast<int>(digest[i]);
    return os.str();
}

std::string convergence_csv(const ConvergenceReport& report, std::size_t g_index)
{
    const auto& c = report.config;
    std::ostringstream csv;
    csv << "n,p,error,stderr,n_ref,M_X,M_Y,seed\n";
    for (const auto& e : report.results.at(g_index).errors)
        csv << e.n << "," << format_number(e.p) << "," << format_number(e.error) << ","
            << format_number(e.standard_error) << "," << c.n_ref << "," << c.inner_replicas << ","
            << c.outer_replicas << "," << c.seed << "\n";
    return csv.str();
}

std::string slopes_csv(const ConvergenceReport& report, std::size_t g_index)
{
    std::ostringstream csv;
    csv << "p,slope,intercept,slope_halfwidth,residual\n";
    for (const auto& s : report.results.at(g_index).slopes)
    {
        csv << format_number(s.p);
        if (s.fit)
            csv << "," << format_number(s.fit->slope) << "," << format_number(s.fit->intercept) << ","
                << format_number(s.fit->slope_halfwidth) << "," << format_number(s.fit->residual);
        else
            csv << ",nan,nan,nan,nan";
        csv << "\n";
    }
    return csv.str();
}

std::string convergence_json(const ConvergenceReport& report, const RunConfig& config)
{
    const auto& c = report.config;
    ordered_json j;
    ordered_json cfg;
    cfg["model"] = c.model;
    cfg["model_params"] = c.model_params;
    cfg["test_functions"] = c.test_functions;
    cfg["indicator_threshold"] = c.indicator_threshold;
    cfg["coordinate"] = c.coordinate;
    cfg["T"] = c.horizon;
    cfg["n_list"] = c.n_list;
    cfg["n_ref"] = c.n_ref;
    cfg["p_list"] = c.p_list;
    cfg["M_X"] = c.inner_replicas;
    cfg["M_Y"] = c.outer_replicas;
    cfg["seed"] = c.seed;
    cfg["normalized"] = c.normalized;
    j["config"] = cfg;
    j["config_text"] = portable_config_text(config);
    j["normalized"] = report.normalized;

    ordered_json results = ordered_json::array();
    for (const auto& tr : report.results)
    {
        ordered_json r;
        r["test_function"] = tr.test_function;
        ordered_json errors = ordered_json::array();
        for (const auto& e : tr.errors)
            errors.push_back({{"n", e.n}, {"p", e.p}, {"error", e.error}, {"stderr", e.standard_error}});
        r["errors"] = errors;
        ordered_json slopes = ordered_json::array();
        for (const auto& s : tr.slopes)
        {
            ordered_json row{{"p", s.p}};
            if (s.fit)
            {
                row["slope"] = s.fit->slope;
                row["intercept"] = s.fit->intercept;
                row["slope_halfwidth"] = s.fit->slope_halfwidth;
                row["residual"] = s.fit->residual;
            }
            else
                row["diagnostic"] = s.diagnostic;
            slopes.push_back(row);
        }
        r["slopes"] = slopes;
        ordered_json floor = ordered_json::array();
        for (const auto& f : tr.noise_floor)
            floor.push_back({{"p", f.p},
                             {"n", f.n},
                             {"error", f.error},
                             {"inner_stderr", f.inner_stderr},
                             {"passed", f.passed}});
        r["noise_floor"] = floor;
        results.push_back(r);
    }
    j["results"] = results;
    j["warnings"] = report.warnings;
    ordered_json meta{{"seed", c.seed}};
    if (config.output_timing)
        meta["wall_time_seconds"] = report.wall_time_seconds;
    j["metadata"] = meta;
    return j.dump(2) + "\n";
}

KalmanComparison compare_with_kalman(const RunConfig& config, std::size_t workers)
{
    const auto& e = config.experiment;
    const FilteringModel model = ModelRegistry::builtin().make(e.model, e.model_params);
    if (!model.linear_gaussian)
        throw ValidationError("kalman-check needs a linear-Gaussian preset (got '" + e.model + "')");
    if (config.filter_steps == 0 || e.n_ref % config.filter_steps != 0)
        throw ValidationError("kalman-check: experiment.n must divide experiment.n_ref");
    if (e.coordinate >= model.state_dim)
        throw ValidationError("kalman-check: coordinate out of range");

    const TimeGrid fine(e.horizon, e.n_ref);
    const ObservedSignal sig = simulate_observed_signal(model, fine, e.seed);
    const KalmanState kalman = kalman_bucy(model, sig.y);
    const std::size_t factor = e.n_ref / config.filter_steps;
    const NoiseTable y = coarsen_increments(sig.y, factor);

    ConvergenceConfig gcfg = e;
    gcfg.test_functions = {"identity"};
    const TestFunction g = make_test_functions(gcfg).front();
    const auto traj = run_recursive_filter(model, y, g, config.particles, e.seed, {config.substeps, workers, false});

    KalmanComparison cmp;
    const auto c = static_cast<Eigen::Index>(e.coordinate);
    for (const auto& node : traj.nodes)
    {
        const std::size_t fi = node.index * factor;
        const double km = kalman.mean[fi](c);
        cmp.rows.push_back({node.index, node.time, node.normalized, km, std::abs(node.normalized - km),
                            node.normalized_stderr, kalman.covariance[fi](c, c)});
    }
    const auto& last = cmp.rows.back();
    cmp.tolerance = std::max(config.kalman_tolerance, 3.0 * last.mc_stderr);
    cmp.passed = last.abs_diff <= cmp.tolerance;
    return cmp;
}

CommandResult run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"picard_lab: Picard's discrete-time nonlinear filter and its convergence harness"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);
    Options opts;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "config file (key = value lines)")->check(CLI::ExistingFile);
        sub->add_option("--seed", opts.seed, "seed (overrides config and " + std::string(kSeedEnv) + ")");
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--workers", opts.workers, "parallel width; never changes output bits")
            ->check(CLI::PositiveNumber);
    };
    auto* simulate = app.add_subcommand("simulate", "simulate an observed signal; write path and weight CSVs");
    auto* filter = app.add_subcommand("filter", "run the recursive Picard filter; write per-node estimates");
    auto* converge = app.add_subcommand("converge", "measure L^p discretization errors and fit log-log slopes");
    auto* kalman = app.add_subcommand("kalman-check", "compare the Picard filter with Kalman-Bucy on a linear preset");
    auto* selftest = app.add_subcommand("selftest", "run the built-in example checks");
    for (auto* sub : {simulate, filter, converge, kalman, selftest})
        add_common(sub);
    converge->add_flag("--normalized", opts.normalized, "compare normalized (posterior) estimators");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    CommandResult result;
    try
    {
        app.parse(reversed);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e, out, err);
        result.exit_code = code == 0 ? 0 : 2;
        return result;
    }

    CLI::App* chosen = app.get_subcommands().front();
    result.manifest.subcommand = chosen->get_name();
    result.manifest.config_path = opts.config_path;
    result.manifest.seed_override = opts.seed;

    RunConfig config;
    try
    {
        config = resolve_config(opts, err);
        if (chosen != selftest)
            config.experiment.validate();
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << "\n";
        result.exit_code = 2;
        return result;
    }

    try
    {
        OutputSink sink(config.output_dir);
        result.manifest.output_dir = config.output_dir;
        int code = 0;
        if (chosen == simulate)
            code = cmd_simulate(config, sink, out);
        else if (chosen == filter)
            code = cmd_filter(config, sink, opts.workers, out);
        else if (chosen == converge)
            code = cmd_converge(config, sink, opts.workers, out);
        else if (chosen == kalman)
            code = cmd_kalman_check(config, sink, opts.workers, out);
        else
            code = cmd_selftest(sink, out);
        result.manifest.files = sink.files();
        sink.write("manifest.json", manifest_json(result.manifest, config));
        result.exit_code = code;
    }
    catch (const ValidationError& e)
    {
        err << "error: " << e.what() << "\n";
        result.exit_code = 2;
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << "\n";
        result.exit_code = 1;
    }
    return result;
}

} // namespace picard::cli
