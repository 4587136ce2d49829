#pragma once

// Evaluation metrics and the stable CSV/JSON result formats.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dol3/config.hpp"
#include "dol3/engine.hpp"
#include "dol3/error.hpp"

namespace dol3
{

/// Prefix sums of the outcomes, in record order.
inline std::vector<std::uint64_t> cumulative_reward(std::span<const SaleRecord> records)
{
    std::vector<std::uint64_t> out;
    out.reserve(records.size());
    std::uint64_t sum = 0;
    for (const auto& r : records)
    {
        sum += static_cast<std::uint64_t>(r.outcome);
        out.push_back(sum);
    }
    return out;
}

/// Instantaneous regret per interaction: best p among the available providers
/// minus p of the chosen one (0 for an interaction without a sale). Traces are
/// indexed by t - 1 and must cover every record.
inline std::vector<double> regret(std::span<const SaleRecord> records,
                                  const std::vector<std::vector<double>>& quality_trace,
                                  const std::vector<IndexSet>& availability_trace)
{
    if (quality_trace.size() != availability_trace.size())
    {
        throw DataError("quality and availability traces differ in length");
    }
    const std::size_t horizon = quality_trace.size();
    std::vector<double> chosen(horizon, 0.0);
    for (const auto& r : records)
    {
        if (r.t == 0 || r.t > horizon)
        {
            throw DataError("no trace entry for interaction " + std::to_string(r.t));
        }
        const auto& p = quality_trace[r.t - 1];
        if (r.provider >= p.size())
        {
            throw DataError("no quality entry for provider " + std::to_string(r.provider + 1) + " at interaction " +
                            std::to_string(r.t));
        }
        chosen[r.t - 1] = p[r.provider];
    }
    std::vector<double> out(horizon, 0.0);
    for (std::size_t k = 0; k < horizon; ++k)
    {
        double best = 0.0;
        for (auto j : availability_trace[k])
        {
            if (j >= quality_trace[k].size())
            {
                throw DataError("no quality entry for provider " + std::to_string(j + 1) + " at interaction " +
                                std::to_string(k + 1));
            }
            best = std::max(best, quality_trace[k][j]);
        }
        out[k] = best - chosen[k];
    }
    return out;
}

/// Root mean square error over paired ratings.
inline double rmse(std::span<const double> actual, std::span<const double> predicted)
{
    if (actual.size() != predicted.size())
    {
        throw DataError("rmse needs equally long rating lists");
    }
    if (actual.empty())
    {
        throw DataError("rmse needs at least one rating pair");
    }
    double ss = 0.0;
    for (std::size_t k = 0; k < actual.size(); ++k)
    {
        const double e = actual[k] - predicted[k];
        ss += e * e;
    }
    return std::sqrt(ss / static_cast<double>(actual.size()));
}

/// 100 / (1 + rmse).
inline double accuracy(double rmse_value)
{
    if (!(rmse_value >= 0.0))
    {
        throw ParameterError("accuracy needs a non-negative rmse");
    }
    return 100.0 / (1.0 + rmse_value);
}

struct RunMetrics
{
    std::vector<int> reward_series;
    std::vector<std::uint64_t> cumulative_reward;
    std::vector<double> regret_series; // empty unless the episode kept oracle traces
    double rmse = 0.0;
    double accuracy_pct = 100.0;
};

/// Reward series for an episode; regret too when oracle traces were recorded.
/// The rmse treats each interaction's reward as a prediction of a perfect 1.
inline RunMetrics run_metrics(const EpisodeResult& ep)
{
    RunMetrics m;
    m.reward_series = ep.rewards;
    std::uint64_t sum = 0;
    for (int r : ep.rewards)
    {
        sum += static_cast<std::uint64_t>(r);
        m.cumulative_reward.push_back(sum);
    }
    if (!ep.quality_trace.empty())
    {
        m.regret_series = regret(ep.records, ep.quality_trace, ep.availability_trace);
    }
    if (!ep.rewards.empty())
    {
        std::vector<double> ones(ep.rewards.size(), 1.0);
        std::vector<double> got(ep.rewards.begin(), ep.rewards.end());
        m.rmse = rmse(ones, got);
        m.accuracy_pct = accuracy(m.rmse);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Serialisation

enum class OutputFormat
{
    Csv,
    Json,
};

inline OutputFormat output_format_from_string(const std::string& s)
{
    if (s == "csv") return OutputFormat::Csv;
    if (s == "json") return OutputFormat::Json;
    throw ParameterError("unsupported output format '" + s + "' (expected csv or json)");
}

/// Doubles printed so they read back bit-exactly.
inline std::string format_double(double x)
{
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

inline Json to_json(const EpisodeResult& ep)
{
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = ep.seed;
    j["run"] = ep.run;
    j["model"] = ep.model;
    j["config"] = to_json(ep.config);
    Json records = Json::array();
    for (const auto& r : ep.records)
        records.push_back({{"t", r.t}, {"consumer", r.consumer + 1}, {"provider", r.provider + 1}, {"outcome", r.outcome}});
    j["records"] = records;
    j["skipped"] = ep.skipped;
    j["rewards"] = ep.rewards;
    j["cumulative_reward"] = ep.cumulative_reward();
    j["reset_ticks"] = ep.reset_ticks;
    Json mal = Json::array();
    for (auto m : ep.malicious) mal.push_back(m + 1);
    j["malicious"] = mal;
    Json traces = Json::array();
    for (const auto& e : ep.traces)
    {
        Json providers = Json::array();
        for (auto p : e.providers) providers.push_back(p + 1);
        traces.push_back(
            {{"t", e.t}, {"observer", e.observer + 1}, {"reset", e.reset}, {"providers", providers}, {"scores", e.scores}});
    }
    j["traces"] = traces;
    j["quality_trace"] = ep.quality_trace;
    j["availability_trace"] = detail::sets_to_json(ep.availability_trace);
    return j;
}

inline EpisodeResult episode_from_json(const Json& j)
{
    EpisodeResult ep;
    try
    {
        if (j.at("schema_version").get<int>() != kSchemaVersion)
            throw SchemaError("unsupported schema_version " + j.at("schema_version").dump());
        ep.seed = j.at("seed").get<std::uint64_t>();
        ep.run = j.at("run").get<std::size_t>();
        ep.model = j.at("model").get<std::string>();
        ep.config = sim_config_from_json(j.at("config"));
        for (const auto& r : j.at("records"))
        {
            ep.records.push_back({r.at("t").get<Tick>(), detail::index_from_json(r.at("consumer"), "consumer"),
                                  detail::index_from_json(r.at("provider"), "provider"), r.at("outcome").get<int>()});
        }
        ep.skipped = j.at("skipped").get<std::vector<Tick>>();
        ep.rewards = j.at("rewards").get<std::vector<int>>();
        ep.reset_ticks = j.at("reset_ticks").get<std::vector<Tick>>();
        for (const auto& m : j.at("malicious")) ep.malicious.push_back(detail::index_from_json(m, "malicious"));
        for (const auto& e : j.at("traces"))
        {
            TraceEntry t;
            t.t = e.at("t").get<Tick>();
            t.observer = detail::index_from_json(e.at("observer"), "observer");
            t.reset = e.at("reset").get<bool>();
            for (const auto& p : e.at("providers")) t.providers.push_back(detail::index_from_json(p, "provider"));
            t.scores = e.at("scores").get<std::vector<double>>();
            ep.traces.push_back(std::move(t));
        }
        ep.quality_trace = j.at("quality_trace").get<std::vector<std::vector<double>>>();
        ep.availability_trace = detail::sets_from_json(j.at("availability_trace"), "availability");
    }
    catch (const nlohmann::json::exception& e)
    {
        throw SchemaError(std::string("invalid episode document: ") + e.what());
    }
    return ep;
}

inline Json results_to_json(std::span<const EpisodeResult> results)
{
    Json j;
    j["schema_version"] = kSchemaVersion;
    Json eps = Json::array();
    for (const auto& ep : results) eps.push_back(to_json(ep));
    j["episodes"] = eps;
    return j;
}

inline std::vector<EpisodeResult> results_from_json(const Json& j)
{
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kSchemaVersion)
    {
        throw SchemaError("results document lacks schema_version 1");
    }
    std::vector<EpisodeResult> out;
    for (const auto& e : j.at("episodes")) out.push_back(episode_from_json(e));
    return out;
}

inline constexpr const char* kResultsCsvHeader = "run,model,t,consumer,provider,outcome,cum_reward";
inline constexpr const char* kSalesCsvHeader = "t,consumer,provider,outcome,model,run";

/// One row per interaction. Skipped interactions leave `provider` empty.
inline void write_results_csv(std::ostream& out, std::span<const EpisodeResult> results)
{
    out << kResultsCsvHeader << '\n';
    for (const auto& ep : results)
    {
        std::size_t next = 0;
        std::uint64_t cum = 0;
        for (Tick t = 1; t <= ep.rewards.size(); ++t)
        {
            const std::size_t consumer = consumer_at(t, ep.config.consumers);
            out << ep.run << ',' << ep.model << ',' << t << ',' << (consumer + 1) << ',';
            if (next < ep.records.size() && ep.records[next].t == t)
            {
                const auto& r = ep.records[next++];
                cum += static_cast<std::uint64_t>(r.outcome);
                out << (r.provider + 1) << ',' << r.outcome;
            }
            else
            {
                out << ",0";
            }
            out << ',' << cum << '\n';
        }
    }
}

/// Sale-record stream, one row per realised sale.
inline void write_sales_csv(std::ostream& out, std::span<const EpisodeResult> results)
{
    out << kSalesCsvHeader << '\n';
    for (const auto& ep : results)
    {
        for (const auto& r : ep.records)
        {
            out << r.t << ',' << (r.consumer + 1) << ',' << (r.provider + 1) << ',' << r.outcome << ',' << ep.model << ','
                << ep.run << '\n';
        }
    }
}

/// Opens `path` for writing ("-" is `stdout_stream`) and hands the stream to `fn`.
template <typename Fn>
void with_output(const std::string& path, Fn&& fn, std::ostream& stdout_stream = std::cout)
{
    if (path == "-")
    {
        fn(stdout_stream);
        stdout_stream.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
    {
        throw IoError("cannot open '" + path + "' for writing");
    }
    fn(out);
    out.flush();
    if (!out)
    {
        throw IoError("write to '" + path + "' failed");
    }
}

inline void write_results(std::span<const EpisodeResult> results, const std::string& path, const std::string& format,
                          std::ostream& stdout_stream = std::cout)
{
    const auto fmt = output_format_from_string(format);
    with_output(
        path,
        [&](std::ostream& out) {
            if (fmt == OutputFormat::Csv)
                write_results_csv(out, results);
            else
                out << results_to_json(results).dump(2) << '\n';
        },
        stdout_stream);
}

inline Json read_json_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw IoError("cannot open '" + path + "' for reading");
    }
    try
    {
        return Json::parse(in);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw SchemaError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline Json to_json(const MonteCarloResult& mc, const std::vector<ModelKind>& models)
{
    Json stats = Json::array();
    for (const auto& s : mc.stats)
        stats.push_back({{"model", s.model}, {"mean", s.mean}, {"stdev", s.stdev}, {"min", s.min}, {"max", s.max}});
    Json wins = Json::object();
    for (std::size_t a = 0; a < models.size(); ++a)
        for (std::size_t b = 0; b < models.size(); ++b)
            if (a != b) wins[to_string(models[a]) + "_vs_" + to_string(models[b])] = mc.win_rate[a][b];
    return {{"cumulative_reward", stats}, {"win_rate", wins}};
}

} // namespace dol3
