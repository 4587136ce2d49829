#pragma once

// Simulation configuration and its JSON form. Observer, provider and consumer
// indices are 1-based in JSON and 0-based in memory.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dol3/baselines.hpp"
#include "dol3/error.hpp"
#include "dol3/marketplace.hpp"
#include "dol3/network.hpp"
#include "dol3/trust.hpp"

namespace dol3
{

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Compatibility value for a boolean `explore: true`.
inline constexpr double kDefaultExploreProb = 0.1;

enum class CorruptionMode
{
    Invert,
    Random,
    ConstantHigh,
};

inline std::string to_string(CorruptionMode mode)
{
    switch (mode)
    {
    case CorruptionMode::Invert: return "invert";
    case CorruptionMode::Random: return "random";
    case CorruptionMode::ConstantHigh: return "constant_high";
    }
    return "unknown";
}

inline CorruptionMode corruption_mode_from_string(const std::string& s)
{
    if (s == "invert") return CorruptionMode::Invert;
    if (s == "random") return CorruptionMode::Random;
    if (s == "constant_high") return CorruptionMode::ConstantHigh;
    throw ParameterError("unknown corruption mode '" + s + "' (expected invert, random or constant_high)");
}

struct AdversarySpec
{
    IndexSet malicious;             // explicit malicious observers
    double malicious_fraction = 0;  // plus floor(fraction * N_o) drawn at random
    Tick on_len = 1;                // malicious for on_len interactions ...
    Tick off_len = 0;               // ... then honest for off_len, repeating
    CorruptionMode mode = CorruptionMode::Invert;
    double noisy_data_rate = 0;     // chance any broadcast weight is replaced by noise
    std::uint64_t stream_salt = 0;  // perturbs only the adversary RNG stream

    bool on_phase(Tick t) const
    {
        const Tick cycle = on_len + off_len;
        return cycle > 0 && ((t - 1) % cycle) < on_len;
    }

    bool operator==(const AdversarySpec&) const = default;
};

struct ArrivalSpec
{
    Tick t = 1;
    QualityProcess process = quality::Constant{0.5};
    bool operator==(const ArrivalSpec&) const = default;
};

struct EpsilonOverride
{
    std::size_t observer = 0;
    std::size_t neighbor = 0;
    double value = 0.5;
    bool operator==(const EpsilonOverride&) const = default;
};

struct SimConfig
{
    std::size_t consumers = 10;
    std::size_t providers = 5;
    std::size_t observers = 3;
    Tick iterations = 1000;
    std::optional<Tick> reset_period = 100;
    double explore_prob = kDefaultExploreProb;
    std::uint64_t stock_max = kUnlimitedStock;
    std::uint64_t refill = 0;
    double eta_w = 0.1;
    double eta_alpha = 0.1;
    double gamma = 0.9;
    double epsilon_trust = 0.5;
    std::vector<EpsilonOverride> epsilon_overrides;
    double log_clamp = 50.0;
    NetworkSpec network;
    VisibilityRule visibility;
    ConsumerAttachRule consumer_attach;
    std::vector<QualityProcess> provider_processes; // empty: random constants; one entry: shared
    AdversarySpec adversary;
    std::vector<ArrivalSpec> arrivals;
    std::vector<ModelKind> models{ModelKind::Dol3};
    std::vector<ModelKind> observer_models; // optional per-observer override of models[0]
    std::size_t frequency_window = 0;
    std::uint64_t seed = 1;
    std::size_t runs = 1;
    Tick trace_stride = 0;
    bool record_oracle = false;

    Dol3Params dol3_params(std::size_t observer) const
    {
        Dol3Params p;
        p.gamma = gamma;
        p.eta_w = eta_w;
        p.eta_alpha = eta_alpha;
        p.reset_period = reset_period;
        p.epsilon_default = epsilon_trust;
        p.log_clamp = log_clamp;
        for (const auto& o : epsilon_overrides)
        {
            if (o.observer == observer) p.epsilon[o.neighbor] = o.value;
        }
        return p;
    }

    /// Models each observer runs in an episode.
    std::vector<ModelKind> model_assignment() const
    {
        if (!observer_models.empty()) return observer_models;
        return std::vector<ModelKind>(observers, models.empty() ? ModelKind::Dol3 : models.front());
    }

    /// Every violated constraint, empty when valid.
    std::vector<std::string> validate() const
    {
        std::vector<std::string> errors;
        if (consumers < 1) errors.push_back("consumers must be >= 1");
        if (providers < 1) errors.push_back("providers must be >= 1");
        if (observers < 1) errors.push_back("observers must be >= 1");
        if (iterations < 1) errors.push_back("iterations must be >= 1");
        if (!(explore_prob >= 0.0 && explore_prob <= 1.0)) errors.push_back("explore_prob must lie in [0,1]");
        if (stock_max < 1) errors.push_back("stock_max must be >= 1");
        Dol3Params base = dol3_params(observers);
        for (auto& e : base.validate()) errors.push_back(std::move(e));
        for (const auto& o : epsilon_overrides)
        {
            if (o.observer >= observers || o.neighbor >= observers)
                errors.push_back("epsilon override names an observer beyond the observer count");
            if (!(o.value >= 0.0 && o.value <= 1.0)) errors.push_back("epsilon override value must lie in [0,1]");
        }
        if (network.n && *network.n != observers)
            errors.push_back("network n must equal the observer count when given");
        if (network.kind == NetworkSpec::Kind::WattsStrogatz && (network.k % 2 != 0 || network.k == 0 || network.k >= observers))
            errors.push_back("watts_strogatz k must be even with 0 < k < observers");
        if (network.kind == NetworkSpec::Kind::BarabasiAlbert && (network.m < 1 || network.m >= observers))
            errors.push_back("barabasi_albert m must satisfy 1 <= m < observers");
        if (network.kind == NetworkSpec::Kind::RegularHomophily &&
            ((observers * network.d) % 2 != 0 || network.d >= observers || network.groups < 1))
            errors.push_back("regular_homophily needs observers*d even, d < observers and groups >= 1");
        if (network.kind == NetworkSpec::Kind::ErdosRenyi && !(network.p >= 0.0 && network.p <= 1.0))
            errors.push_back("erdos_renyi p must lie in [0,1]");
        if (network.kind == NetworkSpec::Kind::WattsStrogatz && !(network.beta >= 0.0 && network.beta <= 1.0))
            errors.push_back("watts_strogatz beta must lie in [0,1]");
        if (network.kind == NetworkSpec::Kind::RegularHomophily && !(network.bias >= 0.0 && network.bias <= 1.0))
            errors.push_back("regular_homophily bias must lie in [0,1]");
        for (const auto& [u, v] : network.edges)
        {
            if (u >= observers || v >= observers || u == v)
            {
                errors.push_back("custom network edge out of range or self-loop");
                break;
            }
        }
        if (const auto* r = std::get_if<VisibilityRule::Random>(&visibility.rule); r && r->k < 1)
            errors.push_back("random visibility k must be >= 1");
        if (const auto* e = std::get_if<VisibilityRule::Explicit>(&visibility.rule); e && e->sets.size() != observers)
            errors.push_back("explicit visibility needs one provider list per observer");
        if (const auto* e = std::get_if<ConsumerAttachRule::Explicit>(&consumer_attach.rule);
            e && e->sets.size() != observers)
            errors.push_back("explicit consumer attachment needs one consumer list per observer");
        if (!provider_processes.empty() && provider_processes.size() != 1 && provider_processes.size() != providers)
            errors.push_back("provider_processes must be empty, a single entry or one entry per provider");
        for (const auto& q : provider_processes)
            for (auto& e : validate_process(q)) errors.push_back(std::move(e));
        for (auto m : adversary.malicious)
            if (m >= observers) errors.push_back("malicious observer index beyond the observer count");
        if (!(adversary.malicious_fraction >= 0.0 && adversary.malicious_fraction <= 1.0))
            errors.push_back("adversary malicious_fraction must lie in [0,1]");
        if (!(adversary.noisy_data_rate >= 0.0 && adversary.noisy_data_rate <= 1.0))
            errors.push_back("adversary noisy_data_rate must lie in [0,1]");
        Tick last = 0;
        for (const auto& a : arrivals)
        {
            if (a.t < 1 || a.t <= last) errors.push_back("arrival times must be >= 1 and strictly increasing");
            last = a.t;
            for (auto& e : validate_process(a.process)) errors.push_back(std::move(e));
        }
        if (models.empty()) errors.push_back("at least one model must be configured");
        if (!observer_models.empty() && observer_models.size() != observers)
            errors.push_back("observer_models must list one model per observer");
        if (runs < 1) errors.push_back("runs must be >= 1");
        return errors;
    }

    bool operator==(const SimConfig&) const = default;
};

// ---------------------------------------------------------------------------
// JSON

namespace detail
{

inline Json sets_to_json(const std::vector<IndexSet>& sets)
{
    Json out = Json::array();
    for (const auto& s : sets)
    {
        Json row = Json::array();
        for (auto v : s) row.push_back(v + 1);
        out.push_back(row);
    }
    return out;
}

inline std::vector<IndexSet> sets_from_json(const Json& j, const char* what)
{
    std::vector<IndexSet> out;
    for (const auto& row : j)
    {
        IndexSet s;
        for (const auto& v : row)
        {
            const auto x = v.get<std::int64_t>();
            if (x < 1) throw SchemaError(std::string(what) + " indices are 1-based");
            s.push_back(static_cast<std::size_t>(x - 1));
        }
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        out.push_back(std::move(s));
    }
    return out;
}

inline void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where,
                                const std::set<std::string>& extra = {})
{
    for (const auto& [key, _] : j.items())
    {
        bool ok = extra.count(key) > 0;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw SchemaError("unknown key '" + key + "' in " + where);
    }
}

inline std::size_t index_from_json(const Json& j, const char* what)
{
    const auto x = j.get<std::int64_t>();
    if (x < 1) throw SchemaError(std::string(what) + " indices are 1-based");
    return static_cast<std::size_t>(x - 1);
}

} // namespace detail

inline Json to_json(const QualityProcess& process)
{
    return std::visit(
        [](const auto& q) -> Json {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, quality::Constant>)
                return {{"type", "constant"}, {"p", q.p}};
            else if constexpr (std::is_same_v<T, quality::PeriodicSwitch>)
                return {{"type", "periodic_switch"}, {"period", q.period}, {"levels", q.levels}};
            else if constexpr (std::is_same_v<T, quality::RandomWalk>)
                return {{"type", "random_walk"}, {"p0", q.p0}, {"sigma", q.sigma}};
            else
                return {{"type", "intermittent"},
                        {"p_honest", q.p_honest},
                        {"p_deceptive", q.p_deceptive},
                        {"on_len", q.on_len},
                        {"off_len", q.off_len}};
        },
        process);
}

inline QualityProcess quality_process_from_json(const Json& j)
{
    if (j.is_number())
    {
        return quality::Constant{j.get<double>()};
    }
    const auto type = j.at("type").get<std::string>();
    if (type == "constant")
    {
        detail::reject_unknown_keys(j, {"type", "p"}, "constant process");
        return quality::Constant{j.at("p").get<double>()};
    }
    if (type == "periodic_switch")
    {
        detail::reject_unknown_keys(j, {"type", "period", "levels"}, "periodic_switch process");
        return quality::PeriodicSwitch{j.at("period").get<Tick>(), j.at("levels").get<std::vector<double>>()};
    }
    if (type == "random_walk")
    {
        detail::reject_unknown_keys(j, {"type", "p0", "sigma"}, "random_walk process");
        return quality::RandomWalk{j.at("p0").get<double>(), j.at("sigma").get<double>()};
    }
    if (type == "intermittent" || type == "intermittent_malicious")
    {
        detail::reject_unknown_keys(j, {"type", "p_honest", "p_deceptive", "on_len", "off_len"}, "intermittent process");
        return quality::IntermittentMalicious{j.at("p_honest").get<double>(), j.at("p_deceptive").get<double>(),
                                              j.at("on_len").get<Tick>(), j.at("off_len").get<Tick>()};
    }
    throw SchemaError("unknown quality process type '" + type + "'");
}

inline Json to_json(const NetworkSpec& spec)
{
    Json j = {{"type", to_string(spec.kind)}};
    if (spec.n) j["n"] = *spec.n;
    switch (spec.kind)
    {
    case NetworkSpec::Kind::ErdosRenyi: j["p"] = spec.p; break;
    case NetworkSpec::Kind::WattsStrogatz:
        j["k"] = spec.k;
        j["beta"] = spec.beta;
        break;
    case NetworkSpec::Kind::BarabasiAlbert: j["m"] = spec.m; break;
    case NetworkSpec::Kind::RegularHomophily:
        j["d"] = spec.d;
        j["groups"] = spec.groups;
        j["bias"] = spec.bias;
        break;
    case NetworkSpec::Kind::Custom: {
        Json edges = Json::array();
        for (const auto& [u, v] : spec.edges) edges.push_back({u + 1, v + 1});
        j["edges"] = edges;
        break;
    }
    default: break;
    }
    return j;
}

inline NetworkSpec network_spec_from_json(const Json& j)
{
    if (j.is_string())
    {
        return parse_network_spec(j.get<std::string>());
    }
    detail::reject_unknown_keys(j, {"type", "n", "p", "k", "beta", "m", "d", "groups", "bias", "edges"}, "network");
    NetworkSpec spec;
    spec.kind = network_kind_from_string(j.at("type").get<std::string>());
    if (j.contains("n")) spec.n = j.at("n").get<std::size_t>();
    if (j.contains("p")) spec.p = j.at("p").get<double>();
    if (j.contains("k")) spec.k = j.at("k").get<std::size_t>();
    if (j.contains("beta")) spec.beta = j.at("beta").get<double>();
    if (j.contains("m")) spec.m = j.at("m").get<std::size_t>();
    if (j.contains("d")) spec.d = j.at("d").get<std::size_t>();
    if (j.contains("groups")) spec.groups = j.at("groups").get<std::size_t>();
    if (j.contains("bias")) spec.bias = j.at("bias").get<double>();
    if (j.contains("edges"))
    {
        for (const auto& e : j.at("edges"))
        {
            if (!e.is_array() || e.size() != 2) throw SchemaError("network edges must be [u, v] pairs");
            spec.edges.emplace_back(detail::index_from_json(e[0], "edge"), detail::index_from_json(e[1], "edge"));
        }
    }
    return spec;
}

inline Json to_json(const VisibilityRule& rule)
{
    if (std::holds_alternative<VisibilityRule::Full>(rule.rule)) return "full";
    if (const auto* r = std::get_if<VisibilityRule::Random>(&rule.rule)) return {{"type", "random"}, {"k", r->k}};
    return {{"type", "explicit"}, {"sets", detail::sets_to_json(std::get<VisibilityRule::Explicit>(rule.rule).sets)}};
}

inline VisibilityRule visibility_from_json(const Json& j)
{
    VisibilityRule rule;
    const std::string type = j.is_string() ? j.get<std::string>() : j.at("type").get<std::string>();
    if (type == "full") rule.rule = VisibilityRule::Full{};
    else if (type == "random") rule.rule = VisibilityRule::Random{j.at("k").get<std::size_t>()};
    else if (type == "explicit") rule.rule = VisibilityRule::Explicit{detail::sets_from_json(j.at("sets"), "visibility")};
    else throw SchemaError("unknown visibility rule '" + type + "'");
    return rule;
}

inline Json to_json(const ConsumerAttachRule& rule)
{
    if (std::holds_alternative<ConsumerAttachRule::RoundRobin>(rule.rule)) return "round_robin";
    if (std::holds_alternative<ConsumerAttachRule::Random>(rule.rule)) return "random";
    return {{"type", "explicit"},
            {"sets", detail::sets_to_json(std::get<ConsumerAttachRule::Explicit>(rule.rule).sets)}};
}

inline ConsumerAttachRule consumer_attach_from_json(const Json& j)
{
    ConsumerAttachRule rule;
    const std::string type = j.is_string() ? j.get<std::string>() : j.at("type").get<std::string>();
    if (type == "round_robin") rule.rule = ConsumerAttachRule::RoundRobin{};
    else if (type == "random") rule.rule = ConsumerAttachRule::Random{};
    else if (type == "explicit")
        rule.rule = ConsumerAttachRule::Explicit{detail::sets_from_json(j.at("sets"), "consumer_attach")};
    else throw SchemaError("unknown consumer_attach rule '" + type + "'");
    return rule;
}

inline Json to_json(const AdversarySpec& a)
{
    Json mal = Json::array();
    for (auto m : a.malicious) mal.push_back(m + 1);
    return {{"malicious", mal},
            {"malicious_fraction", a.malicious_fraction},
            {"on_len", a.on_len},
            {"off_len", a.off_len},
            {"mode", to_string(a.mode)},
            {"noisy_data_rate", a.noisy_data_rate},
            {"stream_salt", a.stream_salt}};
}

inline AdversarySpec adversary_from_json(const Json& j)
{
    detail::reject_unknown_keys(j, {"malicious", "malicious_fraction", "on_len", "off_len", "mode", "noisy_data_rate", "stream_salt"},
                                "adversary");
    AdversarySpec a;
    if (j.contains("malicious"))
    {
        for (const auto& m : j.at("malicious")) a.malicious.push_back(detail::index_from_json(m, "malicious observer"));
        std::sort(a.malicious.begin(), a.malicious.end());
        a.malicious.erase(std::unique(a.malicious.begin(), a.malicious.end()), a.malicious.end());
    }
    if (j.contains("malicious_fraction")) a.malicious_fraction = j.at("malicious_fraction").get<double>();
    if (j.contains("on_len")) a.on_len = j.at("on_len").get<Tick>();
    if (j.contains("off_len")) a.off_len = j.at("off_len").get<Tick>();
    if (j.contains("mode")) a.mode = corruption_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("noisy_data_rate")) a.noisy_data_rate = j.at("noisy_data_rate").get<double>();
    if (j.contains("stream_salt")) a.stream_salt = j.at("stream_salt").get<std::uint64_t>();
    return a;
}

inline Json to_json(const SimConfig& c)
{
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["consumers"] = c.consumers;
    j["providers"] = c.providers;
    j["observers"] = c.observers;
    j["iterations"] = c.iterations;
    j["reset_period"] = c.reset_period ? Json(*c.reset_period) : Json(nullptr);
    j["explore_prob"] = c.explore_prob;
    j["stock_max"] = c.stock_max == kUnlimitedStock ? Json(nullptr) : Json(c.stock_max);
    j["refill"] = c.refill;
    j["eta_w"] = c.eta_w;
    j["eta_alpha"] = c.eta_alpha;
    j["gamma"] = c.gamma;
    j["epsilon_trust"] = c.epsilon_trust;
    Json eps = Json::array();
    for (const auto& o : c.epsilon_overrides)
        eps.push_back({{"observer", o.observer + 1}, {"neighbor", o.neighbor + 1}, {"value", o.value}});
    j["epsilon_overrides"] = eps;
    j["log_clamp"] = c.log_clamp;
    j["network"] = to_json(c.network);
    j["visibility"] = to_json(c.visibility);
    j["consumer_attach"] = to_json(c.consumer_attach);
    Json procs = Json::array();
    for (const auto& q : c.provider_processes) procs.push_back(to_json(q));
    j["provider_processes"] = procs;
    j["adversary"] = to_json(c.adversary);
    Json arrivals = Json::array();
    for (const auto& a : c.arrivals) arrivals.push_back({{"t", a.t}, {"process", to_json(a.process)}});
    j["arrivals"] = arrivals;
    Json models = Json::array();
    for (auto m : c.models) models.push_back(to_string(m));
    j["models"] = models;
    Json obs_models = Json::array();
    for (auto m : c.observer_models) obs_models.push_back(to_string(m));
    j["observer_models"] = obs_models;
    j["frequency_window"] = c.frequency_window;
    j["seed"] = c.seed;
    j["runs"] = c.runs;
    j["trace_stride"] = c.trace_stride;
    j["record_oracle"] = c.record_oracle;
    return j;
}

/// Parses a configuration. Keys listed in `extra_keys` are tolerated (and
/// ignored) so that documents embedding a SimConfig can carry their own keys.
inline SimConfig sim_config_from_json(const Json& j, const std::set<std::string>& extra_keys = {})
{
    if (!j.is_object()) throw SchemaError("configuration must be a JSON object");
    detail::reject_unknown_keys(
        j,
        {"schema_version", "consumers", "providers", "observers", "iterations", "reset_period", "n_reset",
         "explore_prob", "explore", "stock_max", "refill", "eta_w", "eta_alpha", "eta", "gamma", "epsilon_trust",
         "epsilon_overrides", "log_clamp", "network", "visibility", "consumer_attach", "provider_processes",
         "adversary", "arrivals", "models", "model", "observer_models", "frequency_window", "seed", "runs",
         "trace_stride", "record_oracle"},
        "configuration", extra_keys);
    SimConfig c;
    try
    {
        if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion)
            throw SchemaError("unsupported schema_version " + j.at("schema_version").dump());
        if (j.contains("consumers")) c.consumers = j.at("consumers").get<std::size_t>();
        if (j.contains("providers")) c.providers = j.at("providers").get<std::size_t>();
        if (j.contains("observers")) c.observers = j.at("observers").get<std::size_t>();
        if (j.contains("iterations")) c.iterations = j.at("iterations").get<Tick>();
        for (const char* key : {"reset_period", "n_reset"})
        {
            if (!j.contains(key)) continue;
            const auto& v = j.at(key);
            if (v.is_null() || (v.is_string() && v.get<std::string>() == "disabled")) c.reset_period.reset();
            else
            {
                const auto x = v.get<std::int64_t>();
                if (x < 0) throw SchemaError("reset_period must be >= 1, 0 or null to disable");
                c.reset_period = x == 0 ? std::nullopt : std::optional<Tick>(static_cast<Tick>(x));
            }
        }
        if (j.contains("explore"))
        {
            const auto& v = j.at("explore");
            c.explore_prob = v.is_boolean() ? (v.get<bool>() ? kDefaultExploreProb : 0.0) : v.get<double>();
        }
        if (j.contains("explore_prob")) c.explore_prob = j.at("explore_prob").get<double>();
        if (j.contains("stock_max"))
        {
            const auto& v = j.at("stock_max");
            if (v.is_null() || (v.is_string() && v.get<std::string>() == "unlimited")) c.stock_max = kUnlimitedStock;
            else
            {
                const auto x = v.get<std::int64_t>();
                if (x < 1) throw SchemaError("stock_max must be >= 1 or null for unlimited");
                c.stock_max = static_cast<std::uint64_t>(x);
            }
        }
        if (j.contains("refill")) c.refill = j.at("refill").get<std::uint64_t>();
        if (j.contains("eta")) c.eta_w = j.at("eta").get<double>();
        if (j.contains("eta_w")) c.eta_w = j.at("eta_w").get<double>();
        c.eta_alpha = c.eta_w;
        if (j.contains("eta_alpha")) c.eta_alpha = j.at("eta_alpha").get<double>();
        if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
        if (j.contains("epsilon_trust")) c.epsilon_trust = j.at("epsilon_trust").get<double>();
        if (j.contains("epsilon_overrides"))
        {
            for (const auto& o : j.at("epsilon_overrides"))
            {
                detail::reject_unknown_keys(o, {"observer", "neighbor", "value"}, "epsilon_overrides entry");
                c.epsilon_overrides.push_back({detail::index_from_json(o.at("observer"), "observer"),
                                               detail::index_from_json(o.at("neighbor"), "neighbor"),
                                               o.at("value").get<double>()});
            }
        }
        if (j.contains("log_clamp")) c.log_clamp = j.at("log_clamp").get<double>();
        if (j.contains("network")) c.network = network_spec_from_json(j.at("network"));
        if (j.contains("visibility")) c.visibility = visibility_from_json(j.at("visibility"));
        if (j.contains("consumer_attach")) c.consumer_attach = consumer_attach_from_json(j.at("consumer_attach"));
        if (j.contains("provider_processes"))
            for (const auto& q : j.at("provider_processes")) c.provider_processes.push_back(quality_process_from_json(q));
        if (j.contains("adversary")) c.adversary = adversary_from_json(j.at("adversary"));
        if (j.contains("arrivals"))
        {
            for (const auto& a : j.at("arrivals"))
            {
                detail::reject_unknown_keys(a, {"t", "process"}, "arrival");
                c.arrivals.push_back({a.at("t").get<Tick>(), quality_process_from_json(a.at("process"))});
            }
        }
        if (j.contains("model")) c.models = {model_kind_from_string(j.at("model").get<std::string>())};
        if (j.contains("models"))
        {
            c.models.clear();
            for (const auto& m : j.at("models")) c.models.push_back(model_kind_from_string(m.get<std::string>()));
        }
        if (j.contains("observer_models"))
            for (const auto& m : j.at("observer_models"))
                c.observer_models.push_back(model_kind_from_string(m.get<std::string>()));
        if (j.contains("frequency_window")) c.frequency_window = j.at("frequency_window").get<std::size_t>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("runs")) c.runs = j.at("runs").get<std::size_t>();
        if (j.contains("trace_stride")) c.trace_stride = j.at("trace_stride").get<Tick>();
        if (j.contains("record_oracle")) c.record_oracle = j.at("record_oracle").get<bool>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw SchemaError(std::string("invalid configuration: ") + e.what());
    }
    catch (const ParameterError& e)
    {
        throw SchemaError(e.what());
    }
    return c;
}

} // namespace dol3
