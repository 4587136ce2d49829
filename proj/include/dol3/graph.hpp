#pragma once

// Random undirected graph generators used to wire observers together.
//
// Every generator is a pure function of its parameters and seed. Nodes are
// 0-based; the edge-list text format written by write_edge_list is 1-based.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dol3/error.hpp"
#include "dol3/random.hpp"

namespace dol3
{

using Edge = std::pair<std::size_t, std::size_t>;

/// Simple undirected graph. Edges are stored normalised (first < second), so
/// self-loops and duplicates cannot be represented.
class Graph
{
public:
    Graph() = default;
    explicit Graph(std::size_t node_count) : node_count_(node_count) {}

    std::size_t node_count() const noexcept { return node_count_; }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    const std::set<Edge>& edges() const noexcept { return edges_; }

    /// Inserts {u, v}. Returns false for a self-loop or an edge already present.
    bool add_edge(std::size_t u, std::size_t v)
    {
        if (u >= node_count_ || v >= node_count_)
        {
            throw IndexError("edge endpoint out of range: " + std::to_string(std::max(u, v)));
        }
        if (u == v)
        {
            return false;
        }
        return edges_.insert(normalise(u, v)).second;
    }

    bool remove_edge(std::size_t u, std::size_t v) { return edges_.erase(normalise(u, v)) > 0; }

    bool has_edge(std::size_t u, std::size_t v) const
    {
        return u != v && edges_.count(normalise(u, v)) > 0;
    }

    std::vector<std::size_t> degrees() const
    {
        std::vector<std::size_t> deg(node_count_, 0);
        for (const auto& [u, v] : edges_)
        {
            ++deg[u];
            ++deg[v];
        }
        return deg;
    }

    std::vector<std::vector<std::size_t>> adjacency() const
    {
        std::vector<std::vector<std::size_t>> adj(node_count_);
        for (const auto& [u, v] : edges_)
        {
            adj[u].push_back(v);
            adj[v].push_back(u);
        }
        for (auto& row : adj)
        {
            std::sort(row.begin(), row.end());
        }
        return adj;
    }

    std::size_t connected_components() const
    {
        std::vector<std::size_t> parent(node_count_);
        std::iota(parent.begin(), parent.end(), std::size_t{0});
        auto find = [&](std::size_t x) {
            while (parent[x] != x)
            {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            return x;
        };
        std::size_t components = node_count_;
        for (const auto& [u, v] : edges_)
        {
            const auto ru = find(u);
            const auto rv = find(v);
            if (ru != rv)
            {
                parent[ru] = rv;
                --components;
            }
        }
        return components;
    }

    bool operator==(const Graph&) const = default;

private:
    static Edge normalise(std::size_t u, std::size_t v) { return u < v ? Edge{u, v} : Edge{v, u}; }

    std::size_t node_count_ = 0;
    std::set<Edge> edges_;
};

namespace detail
{

inline void require_probability(double p, const char* name)
{
    if (!(p >= 0.0 && p <= 1.0))
    {
        throw ParameterError(std::string(name) + " must lie in [0,1]");
    }
}

inline void require_nodes(std::size_t n)
{
    if (n == 0)
    {
        throw ParameterError("node count must be >= 1");
    }
}

} // namespace detail

/// Erdős–Rényi G(n, p): every pair is an edge independently with probability p_edge.
inline Graph gen_random(std::size_t n, double p_edge, std::uint64_t seed)
{
    detail::require_nodes(n);
    detail::require_probability(p_edge, "p_edge");
    Rng rng{stream_seed(seed, "graph.erdos_renyi")};
    Graph g(n);
    for (std::size_t u = 0; u < n; ++u)
    {
        for (std::size_t v = u + 1; v < n; ++v)
        {
            if (uniform01(rng) < p_edge)
            {
                g.add_edge(u, v);
            }
        }
    }
    return g;
}

/// Watts–Strogatz small world: ring lattice of even degree k, then each lattice
/// edge (u, u+j) has its far endpoint rewired with probability beta. Rewiring
/// redraws until it hits neither u nor an existing neighbour, so the edge count
/// stays n*k/2.
inline Graph gen_small_world(std::size_t n, std::size_t k, double beta, std::uint64_t seed)
{
    detail::require_nodes(n);
    detail::require_probability(beta, "beta");
    if (k % 2 != 0 || k == 0 || k >= n)
    {
        throw ParameterError("small world degree k must be even with 0 < k < n");
    }
    Graph g(n);
    for (std::size_t u = 0; u < n; ++u)
    {
        for (std::size_t j = 1; j <= k / 2; ++j)
        {
            g.add_edge(u, (u + j) % n);
        }
    }
    if (beta == 0.0)
    {
        return g;
    }

    Rng rng{stream_seed(seed, "graph.watts_strogatz")};
    for (std::size_t j = 1; j <= k / 2; ++j)
    {
        for (std::size_t u = 0; u < n; ++u)
        {
            const std::size_t v = (u + j) % n;
            if (uniform01(rng) >= beta || !g.has_edge(u, v))
            {
                continue;
            }
            // u already adjacent to everyone: nothing to rewire to.
            std::size_t deg_u = 0;
            for (std::size_t w = 0; w < n; ++w)
            {
                deg_u += g.has_edge(u, w) ? 1 : 0;
            }
            if (deg_u >= n - 1)
            {
                continue;
            }
            std::size_t w;
            do
            {
                w = static_cast<std::size_t>(uniform_below(rng, n));
            } while (w == u || g.has_edge(u, w));
            g.remove_edge(u, v);
            g.add_edge(u, w);
        }
    }
    return g;
}

/// Barabási–Albert preferential attachment from a complete seed graph on m+1
/// nodes. Each new node links to m distinct existing nodes drawn proportionally
/// to degree.
inline Graph gen_scale_free(std::size_t n, std::size_t m, std::uint64_t seed)
{
    detail::require_nodes(n);
    if (m < 1 || m >= n)
    {
        throw ParameterError("scale free attachment count m must satisfy 1 <= m < n");
    }
    Graph g(n);
    // Each node appears once per incident edge endpoint.
    std::vector<std::size_t> endpoints;
    for (std::size_t u = 0; u <= m; ++u)
    {
        for (std::size_t v = u + 1; v <= m; ++v)
        {
            g.add_edge(u, v);
            endpoints.push_back(u);
            endpoints.push_back(v);
        }
    }

    Rng rng{stream_seed(seed, "graph.barabasi_albert")};
    for (std::size_t node = m + 1; node < n; ++node)
    {
        std::vector<std::size_t> targets;
        while (targets.size() < m)
        {
            const auto pick = endpoints[uniform_below(rng, endpoints.size())];
            if (std::find(targets.begin(), targets.end(), pick) == targets.end())
            {
                targets.push_back(pick);
            }
        }
        for (auto target : targets)
        {
            g.add_edge(node, target);
            endpoints.push_back(node);
            endpoints.push_back(target);
        }
    }
    return g;
}

/// Group of a node in the homophily generator (round-robin partition).
inline std::size_t homophily_group(std::size_t node, std::size_t n_groups) { return node % n_groups; }

/// Random d-regular graph with homophily. Stubs are paired one at a time; a
/// partner stub in the same group has weight 1 and one in another group has
/// weight 1 - bias. Pairs that would create a loop or duplicate edge have
/// weight 0. When every admissible partner is cross-group and bias = 1 the
/// cross-group partners are used uniformly. A dead end restarts the attempt.
inline Graph gen_regular_homophily(std::size_t n, std::size_t d, std::size_t n_groups, double bias,
                                   std::uint64_t seed, std::size_t max_attempts = 1000)
{
    detail::require_nodes(n);
    detail::require_probability(bias, "bias");
    if (n_groups < 1)
    {
        throw ParameterError("n_groups must be >= 1");
    }
    if ((n * d) % 2 != 0)
    {
        throw ParameterError("n*d must be even for a d-regular graph");
    }
    if (d >= n)
    {
        throw ParameterError("degree d must be < n");
    }

    Rng rng{stream_seed(seed, "graph.regular_homophily")};
    std::vector<double> weights;
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt)
    {
        std::vector<std::size_t> stubs;
        stubs.reserve(n * d);
        for (std::size_t u = 0; u < n; ++u)
        {
            stubs.insert(stubs.end(), d, u);
        }
        Graph g(n);
        bool stuck = false;
        while (!stubs.empty())
        {
            const auto first_pos = uniform_below(rng, stubs.size());
            const std::size_t u = stubs[first_pos];
            stubs[first_pos] = stubs.back();
            stubs.pop_back();

            weights.assign(stubs.size(), 0.0);
            double same_total = 0.0;
            double cross_total = 0.0;
            for (std::size_t s = 0; s < stubs.size(); ++s)
            {
                const std::size_t v = stubs[s];
                if (v == u || g.has_edge(u, v))
                {
                    continue;
                }
                if (homophily_group(u, n_groups) == homophily_group(v, n_groups))
                {
                    weights[s] = 1.0;
                    same_total += 1.0;
                }
                else
                {
                    weights[s] = 1.0 - bias;
                    cross_total += 1.0;
                }
            }
            double total = same_total + cross_total * (1.0 - bias);
            if (total <= 0.0 && cross_total > 0.0)
            {
                for (std::size_t s = 0; s < stubs.size(); ++s)
                {
                    const std::size_t v = stubs[s];
                    if (v != u && !g.has_edge(u, v))
                    {
                        weights[s] = 1.0;
                    }
                }
                total = cross_total;
            }
            if (total <= 0.0)
            {
                stuck = true;
                break;
            }
            double r = uniform01(rng) * total;
            std::size_t chosen = stubs.size();
            for (std::size_t s = 0; s < stubs.size(); ++s)
            {
                if (weights[s] <= 0.0)
                {
                    continue;
                }
                chosen = s;
                if (r < weights[s])
                {
                    break;
                }
                r -= weights[s];
            }
            const std::size_t v = stubs[chosen];
            stubs[chosen] = stubs.back();
            stubs.pop_back();
            g.add_edge(u, v);
        }
        if (!stuck)
        {
            return g;
        }
    }
    throw ConstructionError("regular homophily pairing failed after " + std::to_string(max_attempts) +
                            " attempts");
}

/// Writes `# nodes=<n>` followed by one 1-based `u v` pair per line.
inline void write_edge_list(std::ostream& out, const Graph& g)
{
    out << "# nodes=" << g.node_count() << '\n';
    for (const auto& [u, v] : g.edges())
    {
        out << (u + 1) << ' ' << (v + 1) << '\n';
    }
}

inline Graph read_edge_list(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("# nodes=", 0) != 0)
    {
        throw DataError("edge list must start with '# nodes=<n>'");
    }
    std::size_t n = 0;
    try
    {
        n = std::stoul(line.substr(8));
    }
    catch (const std::exception&)
    {
        throw DataError("malformed edge-list header: " + line);
    }
    Graph g(n);
    std::size_t line_no = 1;
    while (std::getline(in, line))
    {
        ++line_no;
        if (line.empty() || line[0] == '#')
        {
            continue;
        }
        std::istringstream fields(line);
        std::size_t u = 0, v = 0;
        if (!(fields >> u >> v) || u == 0 || v == 0 || u > n || v > n)
        {
            throw DataError("bad edge on line " + std::to_string(line_no) + ": " + line);
        }
        g.add_edge(u - 1, v - 1);
    }
    return g;
}

} // namespace dol3
