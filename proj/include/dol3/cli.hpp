#pragma once

// Command-line front end. run_cli is the whole program minus main(), so tests
// can drive it in-process with captured streams.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error (bad flag, invalid
// configuration).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dol3/config.hpp"
#include "dol3/engine.hpp"
#include "dol3/error.hpp"
#include "dol3/graph.hpp"
#include "dol3/metrics.hpp"
#include "dol3/network.hpp"
#include "dol3/replay.hpp"

namespace dol3
{

enum class LogLevel
{
    Off,
    Error,
    Warn,
    Info,
    Debug,
};

/// Level from DOL3_LOG (off, error, warn, info, debug); info when unset.
inline LogLevel log_level_from_env()
{
    const char* v = std::getenv("DOL3_LOG");
    if (!v) return LogLevel::Info;
    const std::string s = v;
    if (s == "off") return LogLevel::Off;
    if (s == "error") return LogLevel::Error;
    if (s == "warn") return LogLevel::Warn;
    if (s == "debug") return LogLevel::Debug;
    return LogLevel::Info;
}

namespace detail
{

/// Flag values collected before they are merged into the configuration.
struct Overrides
{
    std::optional<std::size_t> consumers, providers, observers;
    std::optional<Tick> iterations;
    std::optional<std::string> reset_period, stock_max, network, model;
    std::optional<double> explore_prob, eta_w, eta_alpha, gamma, epsilon_trust;
    std::optional<std::uint64_t> refill, seed;
    std::optional<std::size_t> runs;

    void bind(CLI::App& app)
    {
        app.add_option("--consumers", consumers, "Number of consumers");
        app.add_option("--providers", providers, "Number of providers");
        app.add_option("--observers", observers, "Number of observers");
        app.add_option("--iterations", iterations, "Interactions per episode");
        app.add_option("--reset-period", reset_period, "Reset period T_p (0 or 'disabled' turns resets off)");
        app.add_option("--explore-prob", explore_prob, "Exploration probability in [0,1]");
        app.add_option("--stock-max", stock_max, "Sales before a provider idles ('unlimited' for none)");
        app.add_option("--refill", refill, "Idle ticks before a provider reactivates");
        app.add_option("--eta-w", eta_w, "Local learning rate");
        app.add_option("--eta-alpha", eta_alpha, "Social learning rate");
        app.add_option("--gamma", gamma, "Discount factor in (0,1]");
        app.add_option("--epsilon-trust", epsilon_trust, "Blind-trust factor in [0,1]");
        app.add_option("--network", network, "Network spec, e.g. watts_strogatz(k=4,beta=0.1)");
        app.add_option("--model", model, "Model or comma-separated models: dol3, random, frequency");
        app.add_option("--seed", seed, "Base seed");
        app.add_option("--runs", runs, "Monte Carlo runs");
    }

    void apply(Json& j) const
    {
        if (consumers) j["consumers"] = *consumers;
        if (providers) j["providers"] = *providers;
        if (observers) j["observers"] = *observers;
        if (iterations) j["iterations"] = *iterations;
        if (reset_period)
        {
            if (*reset_period == "disabled") j["reset_period"] = nullptr;
            else j["reset_period"] = parse_count("--reset-period", *reset_period);
        }
        if (explore_prob) j["explore_prob"] = *explore_prob;
        if (stock_max)
        {
            if (*stock_max == "unlimited") j["stock_max"] = nullptr;
            else j["stock_max"] = parse_count("--stock-max", *stock_max);
        }
        if (refill) j["refill"] = *refill;
        if (eta_w) j["eta_w"] = *eta_w;
        if (eta_alpha) j["eta_alpha"] = *eta_alpha;
        if (gamma) j["gamma"] = *gamma;
        if (epsilon_trust) j["epsilon_trust"] = *epsilon_trust;
        if (network) j["network"] = *network;
        if (model)
        {
            Json models = Json::array();
            std::stringstream ss(*model);
            for (std::string m; std::getline(ss, m, ',');) models.push_back(trim(m));
            j.erase("model");
            j["models"] = models;
        }
        if (seed) j["seed"] = *seed;
        if (runs) j["runs"] = *runs;
    }

    static std::int64_t parse_count(const std::string& flag, const std::string& value)
    {
        const auto v = parse_int(value);
        if (!v || *v < 0) throw ParameterError(flag + ": expected a non-negative integer, got '" + value + "'");
        return *v;
    }
};

inline Json load_config_json(const std::string& path)
{
    if (path.empty()) return Json::object();
    Json j = read_json_file(path);
    if (!j.is_object()) throw SchemaError("'" + path + "' must hold a JSON object");
    return j;
}

/// Parses a grid value: JSON when it parses, otherwise a plain string.
inline Json grid_value(const std::string& text)
{
    try
    {
        return Json::parse(text);
    }
    catch (const nlohmann::json::exception&)
    {
        return Json(text);
    }
}

struct GridAxis
{
    std::string key;
    std::vector<std::string> values;
};

inline GridAxis parse_grid_axis(const std::string& text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == text.size())
    {
        throw ParameterError("--grid: expected key=v1,v2,... got '" + text + "'");
    }
    GridAxis axis;
    axis.key = trim(text.substr(0, eq));
    // Network specs carry commas inside parentheses; split only at depth 0.
    std::string cur;
    int depth = 0;
    for (char ch : text.substr(eq + 1))
    {
        if (ch == '(') ++depth;
        if (ch == ')') --depth;
        if (ch == ',' && depth == 0)
        {
            axis.values.push_back(trim(cur));
            cur.clear();
        }
        else cur += ch;
    }
    axis.values.push_back(trim(cur));
    return axis;
}

inline std::string invalid_config_message(const std::vector<std::string>& errors)
{
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  - " + e;
    return msg;
}

} // namespace detail

/// Usage errors (exit code 2) raised after flag parsing.
class UsageError : public Error
{
public:
    using Error::Error;
};

/// Runs the command line `args` (without the program name).
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    const LogLevel level = log_level_from_env();
    const auto log = [&](LogLevel at, const std::string& msg) {
        if (at <= level) err << msg << '\n';
    };

    CLI::App app{"DOL3 trust-assessment marketplace simulator", "dol3"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output = "-";
    std::string format = "csv";
    std::size_t jobs = 1;
    detail::Overrides ov;

    auto* simulate = app.add_subcommand("simulate", "Run Monte Carlo episodes");
    auto* sweep = app.add_subcommand("sweep", "Run a cartesian parameter grid");
    auto* replay_cmd = app.add_subcommand("replay", "Replay a ratings dataset");
    auto* netgen = app.add_subcommand("netgen", "Generate an observer graph as an edge list");
    auto* validate = app.add_subcommand("validate-config", "Validate and print the effective configuration");

    for (auto* sub : {simulate, sweep, replay_cmd, validate})
    {
        sub->add_option("--config", config_path, "JSON configuration file");
        ov.bind(*sub);
    }
    for (auto* sub : {simulate, sweep, replay_cmd})
    {
        sub->add_option("--output", output, "Output path, '-' for stdout")->capture_default_str();
        sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
        sub->add_option("--jobs", jobs, "Parallel workers")->check(CLI::PositiveNumber)->capture_default_str();
    }
    std::string sales_path;
    simulate->add_option("--sales", sales_path, "Also write the sale-record CSV here");

    std::vector<std::string> grid;
    sweep->add_option("--grid", grid, "key=v1,v2,... (repeatable)")->required();

    std::string data_path;
    std::vector<std::size_t> malicious_counts;
    std::vector<double> noise_rates;
    std::vector<std::string> network_types;
    double sigma = 0;
    replay_cmd->add_option("--data", data_path, "Ratings CSV (overrides the config's dataset key)");
    replay_cmd->add_option("--malicious-counts", malicious_counts, "Sweep: malicious recommender counts")->delimiter(',');
    replay_cmd->add_option("--noise-rates", noise_rates, "Sweep: noise rates")->delimiter(',');
    replay_cmd->add_option("--network-types", network_types, "Sweep: network specs (repeatable)");
    replay_cmd->add_option("--sigma", sigma, "Sweep: faithful recommender noise");

    std::string net_spec;
    std::optional<std::size_t> net_n;
    std::uint64_t net_seed = 1;
    netgen->add_option("--network", net_spec, "Network spec, e.g. watts_strogatz(n=20,k=4,beta=0)")->required();
    netgen->add_option("--n", net_n, "Node count when the spec has none");
    netgen->add_option("--seed", net_seed, "Seed")->capture_default_str();
    netgen->add_option("--output", output, "Output path, '-' for stdout")->capture_default_str();

    try
    {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    }
    catch (const CLI::CallForHelp& e)
    {
        out << app.help();
        return 0;
    }
    catch (const CLI::CallForAllHelp& e)
    {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    }
    catch (const CLI::ParseError& e)
    {
        err << "error: " << e.what() << '\n';
        if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front())
            err << "run '" << sub->get_name() << " --help' for usage\n";
        return 2;
    }

    // Builds the effective simulation config, or throws UsageError.
    const auto effective_json = [&](const Json& base) {
        Json j = base;
        ov.apply(j);
        return j;
    };
    const auto effective_config = [&](const Json& j, const std::set<std::string>& extra = {}) {
        SimConfig c;
        try
        {
            c = sim_config_from_json(j, extra);
        }
        catch (const SchemaError& e)
        {
            throw UsageError(e.what());
        }
        const auto errors = c.validate();
        if (!errors.empty()) throw UsageError(detail::invalid_config_message(errors));
        return c;
    };

    try
    {
        if (netgen->parsed())
        {
            NetworkSpec spec;
            try
            {
                spec = parse_network_spec(net_spec);
            }
            catch (const Error& e)
            {
                throw UsageError(std::string("--network: ") + e.what());
            }
            const auto n = spec.n ? spec.n : net_n;
            if (!n) throw UsageError("--network: node count missing; give n=... in the spec or --n");
            Graph g;
            try
            {
                g = generate_graph(spec, *n, net_seed);
            }
            catch (const ParameterError& e)
            {
                throw UsageError(std::string("--network: ") + e.what());
            }
            with_output(output, [&](std::ostream& os) { write_edge_list(os, g); }, out);
            log(LogLevel::Info, "wrote " + std::to_string(g.edge_count()) + " edges");
            return 0;
        }

        const Json base = detail::load_config_json(config_path);

        if (validate->parsed())
        {
            const auto c = effective_config(effective_json(base));
            out << to_json(c).dump(2) << '\n';
            return 0;
        }

        if (simulate->parsed())
        {
            const auto c = effective_config(effective_json(base));
            log(LogLevel::Info, to_json(c).dump(2));
            const auto mc = monte_carlo(c, c.runs, c.seed, jobs);
            log(LogLevel::Info, to_json(mc, c.models).dump(2));
            if (format == "csv")
            {
                write_results(mc.episodes, output, "csv", out);
            }
            else
            {
                with_output(output, [&](std::ostream& os) {
                    Json doc = results_to_json(mc.episodes);
                    doc["summary"] = to_json(mc, c.models);
                    os << doc.dump(2) << '\n';
                }, out);
            }
            if (!sales_path.empty())
            {
                with_output(sales_path, [&](std::ostream& os) { write_sales_csv(os, mc.episodes); }, out);
            }
            return 0;
        }

        if (sweep->parsed())
        {
            std::vector<detail::GridAxis> axes;
            for (const auto& g : grid)
            {
                try
                {
                    axes.push_back(detail::parse_grid_axis(g));
                }
                catch (const ParameterError& e)
                {
                    throw UsageError(e.what());
                }
            }
            const Json merged = effective_json(base);
            // Validate every cell before running any of them.
            std::vector<Json> cell_params;
            std::vector<SimConfig> cells;
            std::vector<std::size_t> idx(axes.size(), 0);
            while (true)
            {
                Json j = merged;
                Json params = Json::object();
                for (std::size_t a = 0; a < axes.size(); ++a)
                {
                    const Json v = detail::grid_value(axes[a].values[idx[a]]);
                    j[axes[a].key] = v;
                    params[axes[a].key] = v;
                }
                cells.push_back(effective_config(j));
                cell_params.push_back(params);
                std::size_t a = axes.size();
                while (a > 0 && ++idx[a - 1] == axes[a - 1].values.size()) idx[--a] = 0;
                if (a == 0) break;
            }
            log(LogLevel::Info, to_json(effective_config(merged)).dump(2));

            Json doc;
            doc["schema_version"] = kSchemaVersion;
            doc["cells"] = Json::array();
            std::ostringstream csv;
            csv << "cell";
            for (const auto& axis : axes) csv << ',' << axis.key;
            csv << ",run,model,seed,cumulative_reward\n";
            for (std::size_t k = 0; k < cells.size(); ++k)
            {
                const auto& c = cells[k];
                const auto mc = monte_carlo(c, c.runs, c.seed, jobs);
                Json runs = Json::array();
                for (const auto& ep : mc.episodes)
                {
                    csv << k;
                    for (const auto& axis : axes)
                    {
                        const auto& v = cell_params[k][axis.key];
                        csv << ',' << (v.is_string() ? v.get<std::string>() : v.dump());
                    }
                    csv << ',' << ep.run << ',' << ep.model << ',' << ep.seed << ',' << ep.cumulative_reward() << '\n';
                    runs.push_back({{"run", ep.run}, {"model", ep.model}, {"seed", ep.seed},
                                    {"cumulative_reward", ep.cumulative_reward()}});
                }
                doc["cells"].push_back(
                    {{"cell", k}, {"params", cell_params[k]}, {"summary", to_json(mc, c.models)}, {"runs", runs}});
                log(LogLevel::Debug, "cell " + std::to_string(k) + " done");
            }
            with_output(output, [&](std::ostream& os) {
                if (format == "csv") os << csv.str();
                else os << doc.dump(2) << '\n';
            }, out);
            return 0;
        }

        if (replay_cmd->parsed())
        {
            Json j = effective_json(base);
            ReplayConfig rc;
            try
            {
                rc = replay_config_from_json(j);
            }
            catch (const SchemaError& e)
            {
                throw UsageError(e.what());
            }
            const auto errors = rc.validate();
            if (!errors.empty()) throw UsageError(detail::invalid_config_message(errors));
            if (data_path.empty() && j.contains("dataset")) data_path = j.at("dataset").get<std::string>();
            if (data_path.empty()) throw UsageError("replay needs --data or a 'dataset' key in the configuration");
            log(LogLevel::Info, to_json(rc).dump(2));

            const auto table = load_ratings(data_path, rc.columns);
            if (table.skipped > 0) log(LogLevel::Warn, "skipped " + std::to_string(table.skipped) + " malformed rows");

            std::vector<ReplayResult> results;
            const bool swept = !malicious_counts.empty() || !noise_rates.empty() || !network_types.empty();
            if (swept)
            {
                ReplaySweep sw;
                for (const auto& s : network_types)
                {
                    try
                    {
                        sw.networks.push_back(parse_network_spec(s));
                    }
                    catch (const Error& e)
                    {
                        throw UsageError(std::string("--network-types: ") + e.what());
                    }
                }
                if (!malicious_counts.empty()) sw.malicious_counts = malicious_counts;
                else sw.malicious_counts = {rc.malicious_count()};
                if (!noise_rates.empty()) sw.noise_rates = noise_rates;
                else sw.noise_rates = {rc.noise_rate};
                sw.models = rc.sim.models;
                sw.sigma = sigma;
                sw.runs = rc.sim.runs;
                sw.base_seed = rc.sim.seed;
                results = replay_sweep(table, rc, sw, jobs);
            }
            else
            {
                for (std::size_t r = 0; r < rc.sim.runs; ++r)
                {
                    for (auto m : rc.sim.models)
                    {
                        ReplayConfig c = rc;
                        c.sim.models = {m};
                        results.push_back(replay(table, c, rc.sim.seed + r, r));
                    }
                }
            }
            with_output(output, [&](std::ostream& os) {
                if (format == "csv")
                {
                    write_replay_csv(os, results);
                    return;
                }
                Json doc;
                doc["schema_version"] = kSchemaVersion;
                doc["config"] = to_json(rc);
                doc["results"] = Json::array();
                for (const auto& res : results)
                {
                    Json pts = Json::array();
                    for (const auto& p : res.points) pts.push_back({p.t, p.rmse, p.accuracy});
                    doc["results"].push_back({{"model", res.model},
                                              {"network_type", res.network_type},
                                              {"malicious_count", res.malicious_count},
                                              {"noise_rate", res.noise_rate},
                                              {"run", res.run},
                                              {"seed", res.seed},
                                              {"points", pts}});
                }
                os << doc.dump(2) << '\n';
            }, out);
            return 0;
        }
    }
    catch (const UsageError& e)
    {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    catch (const ParameterError& e)
    {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

} // namespace dol3
