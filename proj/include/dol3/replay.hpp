#pragma once

// Replays a ratings dataset through the observer framework. Recommenders play
// the provider role: each row is one interaction in which every recommender
// predicts the row's rating, the consumer follows its observers' choice, and
// observers score the chosen prediction as a sale outcome.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <unordered_map>
#include <variant>
#include <vector>

#include "dol3/config.hpp"
#include "dol3/engine.hpp"
#include "dol3/error.hpp"
#include "dol3/metrics.hpp"
#include "dol3/random.hpp"

namespace dol3
{

struct ColumnMapping
{
    std::string user = "userId";
    std::string item = "movieId";
    std::string rating = "rating";
    std::string timestamp = "timestamp"; // optional; file order when absent

    bool operator==(const ColumnMapping&) const = default;
};

struct RatingRow
{
    std::string user;
    std::string item;
    double rating = 0; // normalised to [0,1]
    std::optional<std::int64_t> timestamp;

    bool operator==(const RatingRow&) const = default;
};

struct RatingsTable
{
    std::vector<RatingRow> rows;
    double r_min = 0;
    double r_max = 1;
    std::size_t skipped = 0;
};

namespace detail
{

/// Splits one CSV line; double quotes group fields and "" escapes a quote.
inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k)
    {
        const char ch = line[k];
        if (quoted)
        {
            if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') out.back() += '"', ++k;
            else if (ch == '"') quoted = false;
            else out.back() += ch;
        }
        else if (ch == '"') quoted = true;
        else if (ch == ',') out.emplace_back();
        else out.back() += ch;
    }
    return out;
}

inline std::optional<double> parse_double(const std::string& s)
{
    const std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    try
    {
        std::size_t used = 0;
        const double v = std::stod(t, &used);
        if (used != t.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    }
    catch (const std::exception&)
    {
        return std::nullopt;
    }
}

inline std::optional<std::int64_t> parse_int(const std::string& s)
{
    const std::string t = trim(s);
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) return std::nullopt;
    return v;
}

} // namespace detail

/// Reads a ratings CSV and min-max normalises the ratings. Rows whose fields
/// do not parse are skipped and counted.
inline RatingsTable load_ratings(std::istream& in, const ColumnMapping& columns = {})
{
    std::string line;
    if (!std::getline(in, line))
    {
        throw DataError("ratings file is empty");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const auto header = detail::split_csv_line(line);
    const auto find = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (detail::trim(header[k]) == name) return k;
        return std::nullopt;
    };
    const auto c_user = find(columns.user);
    const auto c_item = find(columns.item);
    const auto c_rating = find(columns.rating);
    const auto c_time = find(columns.timestamp);
    for (const auto& [col, name] : {std::pair{c_user, columns.user}, {c_item, columns.item}, {c_rating, columns.rating}})
    {
        if (!col) throw SchemaError("ratings file lacks required column '" + name + "'");
    }

    RatingsTable table;
    std::vector<double> raw;
    while (std::getline(in, line))
    {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != header.size())
        {
            ++table.skipped;
            continue;
        }
        const auto r = detail::parse_double(f[*c_rating]);
        std::optional<std::int64_t> ts;
        if (c_time)
        {
            ts = detail::parse_int(f[*c_time]);
            if (!ts)
            {
                ++table.skipped;
                continue;
            }
        }
        const auto user = detail::trim(f[*c_user]);
        const auto item = detail::trim(f[*c_item]);
        if (!r || user.empty() || item.empty())
        {
            ++table.skipped;
            continue;
        }
        table.rows.push_back({user, item, *r, ts});
        raw.push_back(*r);
    }
    if (table.rows.empty())
    {
        throw DataError("ratings file has no valid rows");
    }
    table.r_min = *std::min_element(raw.begin(), raw.end());
    table.r_max = *std::max_element(raw.begin(), raw.end());
    if (!(table.r_max > table.r_min))
    {
        throw DataError("ratings cannot be normalised: every rating equals " + format_double(table.r_min));
    }
    const double span = table.r_max - table.r_min;
    for (auto& row : table.rows) row.rating = (row.rating - table.r_min) / span;
    return table;
}

inline RatingsTable load_ratings(const std::string& path, const ColumnMapping& columns = {})
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw IoError("cannot open '" + path + "' for reading");
    }
    return load_ratings(in, columns);
}

namespace behavior
{

struct Faithful
{
    double sigma = 0;
    bool operator==(const Faithful&) const = default;
};

/// Predicts 1 - r.
struct Malicious
{
    bool operator==(const Malicious&) const = default;
};

/// Malicious for on_len interactions, then faithful with no noise for off_len.
struct Intermittent
{
    Tick on_len = 1;
    Tick off_len = 1;
    bool operator==(const Intermittent&) const = default;
};

} // namespace behavior

using RecommenderBehavior = std::variant<behavior::Faithful, behavior::Malicious, behavior::Intermittent>;

inline bool is_faithful(const RecommenderBehavior& b) { return std::holds_alternative<behavior::Faithful>(b); }

/// One recommender's prediction of rating `r` at interaction t, in [0,1].
inline double predict(const RecommenderBehavior& b, double r, Tick t, Rng& rng)
{
    double x = r;
    if (const auto* f = std::get_if<behavior::Faithful>(&b))
    {
        if (f->sigma > 0) x = r + f->sigma * standard_normal(rng);
    }
    else if (std::holds_alternative<behavior::Malicious>(b))
    {
        x = 1.0 - r;
    }
    else
    {
        const auto& im = std::get<behavior::Intermittent>(b);
        const Tick cycle = im.on_len + im.off_len;
        if (cycle > 0 && (t - 1) % cycle < im.on_len) x = 1.0 - r;
    }
    return std::clamp(x, 0.0, 1.0);
}

struct ReplayConfig
{
    SimConfig sim; // observers, consumers, network, model and trust parameters
    std::vector<RecommenderBehavior> recommenders{behavior::Faithful{}};
    double match_threshold = 0.25;
    double noise_rate = 0; // chance a row's rating reaches the recommenders as uniform noise
    ColumnMapping columns;
    std::optional<std::size_t> max_rows;

    std::vector<std::string> validate() const
    {
        SimConfig s = sim;
        s.providers = recommenders.size();
        auto errors = s.validate();
        if (recommenders.empty()) errors.push_back("at least one recommender is required");
        if (!s.arrivals.empty()) errors.push_back("replay does not support provider arrivals");
        for (const auto& b : recommenders)
        {
            if (const auto* f = std::get_if<behavior::Faithful>(&b); f && !(f->sigma >= 0.0))
                errors.push_back("faithful sigma must be >= 0");
            if (const auto* im = std::get_if<behavior::Intermittent>(&b); im && im->on_len + im->off_len == 0)
                errors.push_back("intermittent recommender needs on_len + off_len >= 1");
        }
        if (!(match_threshold >= 0.0)) errors.push_back("match_threshold must be >= 0");
        if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) errors.push_back("noise_rate must lie in [0,1]");
        return errors;
    }

    std::size_t malicious_count() const
    {
        return static_cast<std::size_t>(
            std::count_if(recommenders.begin(), recommenders.end(), [](const auto& b) { return !is_faithful(b); }));
    }
};

struct ReplayPoint
{
    Tick t = 0;
    double rmse = 0;
    double accuracy = 100;
    bool operator==(const ReplayPoint&) const = default;
};

struct ReplayResult
{
    std::string model;
    std::string network_type;
    std::size_t malicious_count = 0;
    double noise_rate = 0;
    std::size_t run = 0;
    std::uint64_t seed = 0;
    std::vector<ReplayPoint> points; // running metrics after each interaction
    std::vector<int> outcomes;
    std::vector<std::size_t> chosen;

    double final_rmse() const { return points.empty() ? 0.0 : points.back().rmse; }
    double final_accuracy() const { return points.empty() ? 100.0 : points.back().accuracy; }

    bool operator==(const ReplayResult&) const = default;
};

/// Rows in timestamp order when every row has one, otherwise file order.
inline std::vector<std::size_t> replay_order(const RatingsTable& table)
{
    std::vector<std::size_t> order(table.rows.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    const bool timed = std::all_of(table.rows.begin(), table.rows.end(), [](const auto& r) { return r.timestamp.has_value(); });
    if (timed)
    {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return *table.rows[a].timestamp < *table.rows[b].timestamp; });
    }
    return order;
}

inline ReplayResult replay(const RatingsTable& table, const ReplayConfig& config, std::uint64_t seed, std::size_t run = 0)
{
    if (table.rows.empty())
    {
        throw DataError("cannot replay an empty ratings table");
    }
    const auto errors = config.validate();
    if (!errors.empty())
    {
        std::string msg = "invalid replay configuration:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw ParameterError(msg);
    }
    SimConfig sim = config.sim;
    sim.providers = config.recommenders.size();
    ObserverPool pool(make_network(sim, seed), sim.model_assignment(), sim, seed);

    Rng explore_rng = make_stream(seed, "explore");
    Rng noise_rng = make_stream(seed, "replay.noise");
    std::vector<Rng> rec_rng;
    for (std::size_t j = 0; j < config.recommenders.size(); ++j) rec_rng.push_back(make_stream(seed, "replay.recommender", j));

    ReplayResult out;
    out.model = model_label(sim);
    out.network_type = to_string(sim.network.kind);
    out.malicious_count = config.malicious_count();
    out.noise_rate = config.noise_rate;
    out.run = run;
    out.seed = seed;

    auto order = replay_order(table);
    if (config.max_rows && *config.max_rows < order.size()) order.resize(*config.max_rows);

    std::unordered_map<std::string, std::size_t> users;
    std::vector<double> pred(config.recommenders.size());
    double sq_sum = 0;
    Tick t = 0;
    for (auto k : order)
    {
        const auto& row = table.rows[k];
        ++t;
        const auto [it, fresh] = users.try_emplace(row.user, users.size());
        const std::size_t consumer = it->second % sim.consumers;

        pool.reset_phase(t);
        pool.communicate(t);

        const double u_noise = uniform01(noise_rng);
        const double u_value = uniform01(noise_rng);
        const double seen = u_noise < config.noise_rate ? u_value : row.rating;
        for (std::size_t j = 0; j < pred.size(); ++j) pred[j] = predict(config.recommenders[j], seen, t, rec_rng[j]);

        const double u_explore = uniform01(explore_rng);
        const double u_pick = uniform01(explore_rng);
        const auto& available = pool.reachable(consumer);
        const auto scores = pool.aggregate_scores(consumer, available);
        const std::size_t j = choose_provider(available, scores, sim.explore_prob, u_explore, u_pick);
        const double err = pred[j] - row.rating;
        const int outcome = std::abs(err) <= config.match_threshold ? 1 : 0;
        pool.learn(t, SaleRecord{t, consumer, j, outcome});

        sq_sum += err * err;
        const double r = std::sqrt(sq_sum / static_cast<double>(t));
        out.points.push_back({t, r, accuracy(r)});
        out.outcomes.push_back(outcome);
        out.chosen.push_back(j);
    }
    return out;
}

inline constexpr const char* kReplayCsvHeader = "t,rmse,accuracy,malicious_count,noise_rate,network_type,model,run";

inline void write_replay_csv(std::ostream& out, const std::vector<ReplayResult>& results)
{
    out << kReplayCsvHeader << '\n';
    for (const auto& res : results)
    {
        for (const auto& p : res.points)
        {
            out << p.t << ',' << format_double(p.rmse) << ',' << format_double(p.accuracy) << ',' << res.malicious_count
                << ',' << format_double(res.noise_rate) << ',' << res.network_type << ',' << res.model << ',' << res.run
                << '\n';
        }
    }
}

/// Grid of replays: every (network, malicious count, noise rate, model, run).
/// A malicious count k turns the first k recommenders into inverters and the
/// rest faithful with `sigma`.
struct ReplaySweep
{
    std::vector<NetworkSpec> networks;
    std::vector<std::size_t> malicious_counts{0};
    std::vector<double> noise_rates{0.0};
    std::vector<ModelKind> models{ModelKind::Dol3};
    double sigma = 0;
    std::size_t runs = 1;
    std::uint64_t base_seed = 1;
};

inline std::vector<ReplayResult> replay_sweep(const RatingsTable& table, const ReplayConfig& base, const ReplaySweep& sweep,
                                              std::size_t jobs = 1)
{
    std::vector<ReplayConfig> cells;
    std::vector<std::size_t> cell_run;
    const auto networks = sweep.networks.empty() ? std::vector<NetworkSpec>{base.sim.network} : sweep.networks;
    for (const auto& net : networks)
        for (auto k : sweep.malicious_counts)
            for (double noise : sweep.noise_rates)
                for (auto model : sweep.models)
                {
                    if (k > base.recommenders.size())
                        throw ParameterError("malicious count exceeds the number of recommenders");
                    ReplayConfig c = base;
                    c.sim.network = net;
                    c.sim.models = {model};
                    c.sim.observer_models.clear();
                    c.noise_rate = noise;
                    for (std::size_t j = 0; j < c.recommenders.size(); ++j)
                    {
                        c.recommenders[j] = j < k ? RecommenderBehavior{behavior::Malicious{}}
                                                  : RecommenderBehavior{behavior::Faithful{sweep.sigma}};
                    }
                    for (std::size_t r = 0; r < sweep.runs; ++r)
                    {
                        cells.push_back(c);
                        cell_run.push_back(r);
                    }
                }

    std::vector<ReplayResult> out(cells.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        for (std::size_t idx = next++; idx < cells.size(); idx = next++)
        {
            try
            {
                out[idx] = replay(table, cells[idx], sweep.base_seed + cell_run[idx], cell_run[idx]);
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, cells.size()));
    std::vector<std::thread> threads;
    for (std::size_t k = 1; k < jobs; ++k) threads.emplace_back(worker);
    worker();
    for (auto& th : threads) th.join();
    if (error) std::rethrow_exception(error);
    return out;
}

// ---------------------------------------------------------------------------
// JSON

inline Json to_json(const RecommenderBehavior& b)
{
    if (const auto* f = std::get_if<behavior::Faithful>(&b)) return {{"behavior", "faithful"}, {"sigma", f->sigma}};
    if (std::holds_alternative<behavior::Malicious>(b)) return {{"behavior", "malicious"}};
    const auto& im = std::get<behavior::Intermittent>(b);
    return {{"behavior", "intermittent"}, {"on_len", im.on_len}, {"off_len", im.off_len}};
}

inline RecommenderBehavior recommender_from_json(const Json& j)
{
    const auto kind = j.at("behavior").get<std::string>();
    if (kind == "faithful")
    {
        detail::reject_unknown_keys(j, {"behavior", "sigma"}, "faithful recommender");
        return behavior::Faithful{j.value("sigma", 0.0)};
    }
    if (kind == "malicious")
    {
        detail::reject_unknown_keys(j, {"behavior"}, "malicious recommender");
        return behavior::Malicious{};
    }
    if (kind == "intermittent")
    {
        detail::reject_unknown_keys(j, {"behavior", "on_len", "off_len"}, "intermittent recommender");
        return behavior::Intermittent{j.value("on_len", Tick{1}), j.value("off_len", Tick{1})};
    }
    throw SchemaError("unknown recommender behavior '" + kind + "' (expected faithful, malicious or intermittent)");
}

inline const std::set<std::string>& replay_config_keys()
{
    static const std::set<std::string> keys{"recommenders", "match_threshold", "noise_rate", "columns", "max_rows", "dataset"};
    return keys;
}

inline Json to_json(const ReplayConfig& c)
{
    Json j = to_json(c.sim);
    Json recs = Json::array();
    for (const auto& b : c.recommenders) recs.push_back(to_json(b));
    j["recommenders"] = recs;
    j["match_threshold"] = c.match_threshold;
    j["noise_rate"] = c.noise_rate;
    j["columns"] = {{"user", c.columns.user}, {"item", c.columns.item}, {"rating", c.columns.rating},
                    {"timestamp", c.columns.timestamp}};
    j["max_rows"] = c.max_rows ? Json(*c.max_rows) : Json(nullptr);
    return j;
}

/// A replay document is a simulation configuration plus the replay keys.
/// `providers` is ignored: the recommender list fixes it.
inline ReplayConfig replay_config_from_json(const Json& j)
{
    ReplayConfig c;
    c.sim = sim_config_from_json(j, replay_config_keys());
    try
    {
        if (j.contains("recommenders"))
        {
            c.recommenders.clear();
            for (const auto& r : j.at("recommenders")) c.recommenders.push_back(recommender_from_json(r));
        }
        if (j.contains("match_threshold")) c.match_threshold = j.at("match_threshold").get<double>();
        if (j.contains("noise_rate")) c.noise_rate = j.at("noise_rate").get<double>();
        if (j.contains("columns"))
        {
            const auto& m = j.at("columns");
            detail::reject_unknown_keys(m, {"user", "item", "rating", "timestamp"}, "columns");
            c.columns.user = m.value("user", c.columns.user);
            c.columns.item = m.value("item", c.columns.item);
            c.columns.rating = m.value("rating", c.columns.rating);
            c.columns.timestamp = m.value("timestamp", c.columns.timestamp);
        }
        if (j.contains("max_rows") && !j.at("max_rows").is_null()) c.max_rows = j.at("max_rows").get<std::size_t>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw SchemaError(std::string("invalid replay configuration: ") + e.what());
    }
    c.sim.providers = c.recommenders.size();
    return c;
}

} // namespace dol3
