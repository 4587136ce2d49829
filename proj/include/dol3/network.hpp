#pragma once

// Tripartite interaction network: which providers each observer watches (Ω),
// which observers talk to each other (Λ) and which consumers each observer
// advises (Γ). Indices are 0-based here; configuration files are 1-based.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dol3/error.hpp"
#include "dol3/graph.hpp"
#include "dol3/random.hpp"

namespace dol3
{

using IndexSet = std::vector<std::size_t>; // sorted, unique

/// Observer graph topology and its parameters.
struct NetworkSpec
{
    enum class Kind
    {
        Empty,
        Complete,
        ErdosRenyi,
        WattsStrogatz,
        BarabasiAlbert,
        RegularHomophily,
        Custom,
    };

    Kind kind = Kind::Complete;
    std::optional<std::size_t> n; // overrides the observer count for netgen
    double p = 0.1;               // erdos_renyi
    std::size_t k = 2;            // watts_strogatz
    double beta = 0.1;            // watts_strogatz
    std::size_t m = 1;            // barabasi_albert
    std::size_t d = 2;            // regular_homophily
    std::size_t groups = 2;       // regular_homophily
    double bias = 0.5;            // regular_homophily
    std::vector<Edge> edges;      // custom, 0-based

    bool operator==(const NetworkSpec&) const = default;
};

inline std::string to_string(NetworkSpec::Kind kind)
{
    switch (kind)
    {
    case NetworkSpec::Kind::Empty: return "empty";
    case NetworkSpec::Kind::Complete: return "complete";
    case NetworkSpec::Kind::ErdosRenyi: return "erdos_renyi";
    case NetworkSpec::Kind::WattsStrogatz: return "watts_strogatz";
    case NetworkSpec::Kind::BarabasiAlbert: return "barabasi_albert";
    case NetworkSpec::Kind::RegularHomophily: return "regular_homophily";
    case NetworkSpec::Kind::Custom: return "custom";
    }
    return "unknown";
}

inline NetworkSpec::Kind network_kind_from_string(const std::string& name)
{
    static const std::map<std::string, NetworkSpec::Kind> names = {
        {"empty", NetworkSpec::Kind::Empty},
        {"complete", NetworkSpec::Kind::Complete},
        {"erdos_renyi", NetworkSpec::Kind::ErdosRenyi},
        {"random", NetworkSpec::Kind::ErdosRenyi},
        {"watts_strogatz", NetworkSpec::Kind::WattsStrogatz},
        {"small_world", NetworkSpec::Kind::WattsStrogatz},
        {"barabasi_albert", NetworkSpec::Kind::BarabasiAlbert},
        {"scale_free", NetworkSpec::Kind::BarabasiAlbert},
        {"regular_homophily", NetworkSpec::Kind::RegularHomophily},
        {"homophily", NetworkSpec::Kind::RegularHomophily},
        {"custom", NetworkSpec::Kind::Custom},
    };
    const auto it = names.find(name);
    if (it == names.end())
    {
        throw ParameterError("unknown network type '" + name + "'");
    }
    return it->second;
}

namespace detail
{

inline std::string trim(std::string s)
{
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

} // namespace detail

/// Parses the compact form `name(key=value,...)`, e.g. `watts_strogatz(n=20,k=4,beta=0)`.
inline NetworkSpec parse_network_spec(const std::string& text)
{
    const std::string s = detail::trim(text);
    const auto open = s.find('(');
    NetworkSpec spec;
    spec.kind = network_kind_from_string(detail::trim(s.substr(0, open)));
    if (spec.kind == NetworkSpec::Kind::Custom)
    {
        throw ParameterError("custom networks can only be given in a JSON config");
    }
    if (open == std::string::npos)
    {
        return spec;
    }
    if (s.back() != ')')
    {
        throw ParameterError("network spec '" + text + "' is missing ')'");
    }
    const std::string body = s.substr(open + 1, s.size() - open - 2);
    std::size_t start = 0;
    while (start < body.size())
    {
        auto comma = body.find(',', start);
        if (comma == std::string::npos)
        {
            comma = body.size();
        }
        const std::string item = detail::trim(body.substr(start, comma - start));
        start = comma + 1;
        if (item.empty())
        {
            continue;
        }
        const auto eq = item.find('=');
        if (eq == std::string::npos)
        {
            throw ParameterError("network parameter '" + item + "' must be key=value");
        }
        const std::string key = detail::trim(item.substr(0, eq));
        const std::string value = detail::trim(item.substr(eq + 1));
        try
        {
            if (key == "n") spec.n = std::stoul(value);
            else if (key == "p") spec.p = std::stod(value);
            else if (key == "k") spec.k = std::stoul(value);
            else if (key == "beta") spec.beta = std::stod(value);
            else if (key == "m") spec.m = std::stoul(value);
            else if (key == "d") spec.d = std::stoul(value);
            else if (key == "groups") spec.groups = std::stoul(value);
            else if (key == "bias") spec.bias = std::stod(value);
            else throw ParameterError("unknown network parameter '" + key + "'");
        }
        catch (const std::logic_error&)
        {
            throw ParameterError("bad value for network parameter '" + key + "': " + value);
        }
    }
    return spec;
}

/// Builds the observer graph on `n` nodes.
inline Graph generate_graph(const NetworkSpec& spec, std::size_t n, std::uint64_t seed)
{
    switch (spec.kind)
    {
    case NetworkSpec::Kind::Empty:
        detail::require_nodes(n);
        return Graph(n);
    case NetworkSpec::Kind::Complete:
        return gen_random(n, 1.0, seed);
    case NetworkSpec::Kind::ErdosRenyi:
        return gen_random(n, spec.p, seed);
    case NetworkSpec::Kind::WattsStrogatz:
        return gen_small_world(n, spec.k, spec.beta, seed);
    case NetworkSpec::Kind::BarabasiAlbert:
        return gen_scale_free(n, spec.m, seed);
    case NetworkSpec::Kind::RegularHomophily:
        return gen_regular_homophily(n, spec.d, spec.groups, spec.bias, seed);
    case NetworkSpec::Kind::Custom: {
        detail::require_nodes(n);
        Graph g(n);
        for (const auto& [u, v] : spec.edges)
        {
            if (!g.add_edge(u, v) && u == v)
            {
                throw ParameterError("custom network contains a self-loop");
            }
        }
        return g;
    }
    }
    throw ParameterError("unhandled network kind");
}

struct VisibilityRule
{
    struct Full
    {
        bool operator==(const Full&) const = default;
    };
    struct Random
    {
        std::size_t k = 1;
        bool operator==(const Random&) const = default;
    };
    struct Explicit
    {
        std::vector<IndexSet> sets; // per observer
        bool operator==(const Explicit&) const = default;
    };
    std::variant<Full, Random, Explicit> rule = Full{};
    bool operator==(const VisibilityRule&) const = default;
};

struct ConsumerAttachRule
{
    struct RoundRobin
    {
        bool operator==(const RoundRobin&) const = default;
    };
    struct Random
    {
        bool operator==(const Random&) const = default;
    };
    struct Explicit
    {
        std::vector<IndexSet> sets; // per observer
        bool operator==(const Explicit&) const = default;
    };
    std::variant<RoundRobin, Random, Explicit> rule = RoundRobin{};
    bool operator==(const ConsumerAttachRule&) const = default;
};

struct InteractionNetwork
{
    std::size_t n_observers = 0;
    std::size_t n_providers = 0;
    std::size_t n_consumers = 0;
    std::vector<IndexSet> omega;     // providers watched by each observer
    std::vector<IndexSet> lambda;    // neighbouring observers
    std::vector<IndexSet> gamma_set; // consumers advised by each observer

    bool observes(std::size_t observer, std::size_t provider) const
    {
        return std::binary_search(omega[observer].begin(), omega[observer].end(), provider);
    }

    IndexSet observers_of_consumer(std::size_t consumer) const
    {
        IndexSet out;
        for (std::size_t i = 0; i < n_observers; ++i)
        {
            if (std::binary_search(gamma_set[i].begin(), gamma_set[i].end(), consumer))
            {
                out.push_back(i);
            }
        }
        return out;
    }

    /// Ω_i together with Ω_l of every neighbour l.
    IndexSet known_providers(std::size_t observer) const
    {
        IndexSet out = omega[observer];
        for (auto l : lambda[observer])
        {
            out.insert(out.end(), omega[l].begin(), omega[l].end());
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    bool operator==(const InteractionNetwork&) const = default;
};

namespace detail
{

inline void insert_sorted(IndexSet& set, std::size_t value)
{
    const auto it = std::lower_bound(set.begin(), set.end(), value);
    if (it == set.end() || *it != value)
    {
        set.insert(it, value);
    }
}

inline IndexSet sample_without_replacement(std::size_t population, std::size_t k, Rng& rng)
{
    std::vector<std::size_t> pool(population);
    for (std::size_t i = 0; i < population; ++i)
    {
        pool[i] = i;
    }
    k = std::min(k, population);
    for (std::size_t i = 0; i < k; ++i)
    {
        const auto j = i + uniform_below(rng, population - i);
        std::swap(pool[i], pool[j]);
    }
    IndexSet out(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace detail

inline InteractionNetwork build_interaction_network(std::size_t n_observers, std::size_t n_providers,
                                                    std::size_t n_consumers, const Graph& observer_graph,
                                                    const VisibilityRule& visibility,
                                                    const ConsumerAttachRule& consumer_attach, std::uint64_t seed)
{
    if (n_observers == 0 || n_providers == 0 || n_consumers == 0)
    {
        throw ParameterError("observer, provider and consumer counts must all be >= 1");
    }
    if (observer_graph.node_count() != n_observers)
    {
        throw ParameterError("observer graph has " + std::to_string(observer_graph.node_count()) +
                             " nodes but there are " + std::to_string(n_observers) + " observers");
    }
    Rng rng{stream_seed(seed, "network.interaction")};

    InteractionNetwork net;
    net.n_observers = n_observers;
    net.n_providers = n_providers;
    net.n_consumers = n_consumers;
    net.lambda = observer_graph.adjacency();
    net.omega.assign(n_observers, {});
    net.gamma_set.assign(n_observers, {});

    if (std::holds_alternative<VisibilityRule::Full>(visibility.rule))
    {
        for (auto& set : net.omega)
        {
            for (std::size_t j = 0; j < n_providers; ++j)
            {
                set.push_back(j);
            }
        }
    }
    else if (const auto* random = std::get_if<VisibilityRule::Random>(&visibility.rule))
    {
        for (auto& set : net.omega)
        {
            set = detail::sample_without_replacement(n_providers, random->k, rng);
        }
    }
    else
    {
        const auto& sets = std::get<VisibilityRule::Explicit>(visibility.rule).sets;
        if (sets.size() != n_observers)
        {
            throw ParameterError("explicit visibility needs one provider set per observer");
        }
        for (std::size_t i = 0; i < n_observers; ++i)
        {
            for (auto j : sets[i])
            {
                if (j >= n_providers)
                {
                    throw ParameterError("explicit visibility names provider " + std::to_string(j + 1) +
                                         " beyond the provider count");
                }
                detail::insert_sorted(net.omega[i], j);
            }
        }
    }

    if (std::holds_alternative<ConsumerAttachRule::RoundRobin>(consumer_attach.rule))
    {
        for (std::size_t c = 0; c < n_consumers; ++c)
        {
            net.gamma_set[c % n_observers].push_back(c);
        }
    }
    else if (std::holds_alternative<ConsumerAttachRule::Random>(consumer_attach.rule))
    {
        for (std::size_t c = 0; c < n_consumers; ++c)
        {
            detail::insert_sorted(net.gamma_set[uniform_below(rng, n_observers)], c);
        }
    }
    else
    {
        const auto& sets = std::get<ConsumerAttachRule::Explicit>(consumer_attach.rule).sets;
        if (sets.size() != n_observers)
        {
            throw ParameterError("explicit consumer attachment needs one consumer set per observer");
        }
        for (std::size_t i = 0; i < n_observers; ++i)
        {
            for (auto c : sets[i])
            {
                if (c >= n_consumers)
                {
                    throw ParameterError("explicit consumer attachment names consumer " + std::to_string(c + 1) +
                                         " beyond the consumer count");
                }
                detail::insert_sorted(net.gamma_set[i], c);
            }
        }
    }

    // Coverage pass: nobody is left without an observer.
    std::vector<char> provider_seen(n_providers, 0);
    std::vector<char> consumer_seen(n_consumers, 0);
    for (std::size_t i = 0; i < n_observers; ++i)
    {
        for (auto j : net.omega[i]) provider_seen[j] = 1;
        for (auto c : net.gamma_set[i]) consumer_seen[c] = 1;
    }
    for (std::size_t j = 0; j < n_providers; ++j)
    {
        if (!provider_seen[j])
        {
            detail::insert_sorted(net.omega[uniform_below(rng, n_observers)], j);
        }
    }
    for (std::size_t c = 0; c < n_consumers; ++c)
    {
        if (!consumer_seen[c])
        {
            detail::insert_sorted(net.gamma_set[uniform_below(rng, n_observers)], c);
        }
    }
    return net;
}

/// Appends a provider arriving mid-episode and returns its index. Under full
/// visibility every observer watches it; otherwise each observer watches it
/// with probability k / n_providers and at least one observer always does.
inline std::size_t add_provider(InteractionNetwork& net, const VisibilityRule& visibility, Rng& rng)
{
    const std::size_t j = net.n_providers++;
    bool attached = false;
    if (std::holds_alternative<VisibilityRule::Full>(visibility.rule))
    {
        for (auto& set : net.omega)
        {
            set.push_back(j);
        }
        attached = true;
    }
    else if (const auto* random = std::get_if<VisibilityRule::Random>(&visibility.rule))
    {
        const double prob = std::min(1.0, static_cast<double>(random->k) / static_cast<double>(j));
        for (auto& set : net.omega)
        {
            if (uniform01(rng) < prob)
            {
                set.push_back(j);
                attached = true;
            }
        }
    }
    if (!attached)
    {
        net.omega[uniform_below(rng, net.n_observers)].push_back(j);
    }
    return j;
}

} // namespace dol3
