#pragma once

// Providers, their service-quality processes and the active/idle stock model,
// plus the fixed consumer purchase schedule.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "dol3/error.hpp"
#include "dol3/network.hpp"
#include "dol3/random.hpp"

namespace dol3
{

/// Global interaction count, starting at 1.
using Tick = std::uint64_t;

inline constexpr std::uint64_t kUnlimitedStock = std::numeric_limits<std::uint64_t>::max();

/// Consumer (0-based) that purchases at interaction t: the i with t = (n-1)*N_c + i.
inline std::size_t consumer_at(Tick t, std::size_t n_consumers)
{
    if (t == 0 || n_consumers == 0)
    {
        throw ParameterError("consumer_at needs t >= 1 and at least one consumer");
    }
    return static_cast<std::size_t>((t - 1) % n_consumers);
}

namespace quality
{

struct Constant
{
    double p = 0.5;
    bool operator==(const Constant&) const = default;
};

/// Cycles through `levels`, holding each for `period` interactions.
struct PeriodicSwitch
{
    Tick period = 100;
    std::vector<double> levels{0.9, 0.1};
    bool operator==(const PeriodicSwitch&) const = default;
};

/// Gaussian random walk clamped to [0, 1], starting at p0.
struct RandomWalk
{
    double p0 = 0.5;
    double sigma = 0.05;
    bool operator==(const RandomWalk&) const = default;
};

/// Honest for on_len interactions, then deceptive for off_len, repeating.
struct IntermittentMalicious
{
    double p_honest = 0.9;
    double p_deceptive = 0.1;
    Tick on_len = 50;
    Tick off_len = 50;
    bool operator==(const IntermittentMalicious&) const = default;
};

} // namespace quality

using QualityProcess =
    std::variant<quality::Constant, quality::PeriodicSwitch, quality::RandomWalk, quality::IntermittentMalicious>;

inline std::vector<std::string> validate_process(const QualityProcess& process)
{
    std::vector<std::string> errors;
    auto prob = [&](double p, const char* what) {
        if (!(p >= 0.0 && p <= 1.0))
        {
            errors.push_back(std::string(what) + " must lie in [0,1]");
        }
    };
    std::visit(
        [&](const auto& q) {
            using T = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<T, quality::Constant>)
            {
                prob(q.p, "constant p");
            }
            else if constexpr (std::is_same_v<T, quality::PeriodicSwitch>)
            {
                if (q.period == 0) errors.push_back("periodic_switch period must be >= 1");
                if (q.levels.empty()) errors.push_back("periodic_switch needs at least one level");
                for (double p : q.levels) prob(p, "periodic_switch level");
            }
            else if constexpr (std::is_same_v<T, quality::RandomWalk>)
            {
                prob(q.p0, "random_walk p0");
                if (!(q.sigma >= 0.0)) errors.push_back("random_walk sigma must be >= 0");
            }
            else
            {
                prob(q.p_honest, "intermittent p_honest");
                prob(q.p_deceptive, "intermittent p_deceptive");
                if (q.on_len + q.off_len == 0) errors.push_back("intermittent cycle length must be >= 1");
            }
        },
        process);
    return errors;
}

/// Evaluates p_j(t) for one provider. Random walks own their RNG stream and
/// advance exactly once per interaction count, so the value is a function of t
/// alone for a given seed. Queries must be non-decreasing in t.
class QualitySource
{
public:
    QualitySource(QualityProcess process, Rng rng) : process_(std::move(process)), rng_(rng)
    {
        if (const auto* walk = std::get_if<quality::RandomWalk>(&process_))
        {
            value_ = walk->p0;
        }
    }

    double at(Tick t)
    {
        if (t == 0)
        {
            throw ParameterError("quality_at needs t >= 1");
        }
        return std::visit([&](const auto& q) { return eval(q, t); }, process_);
    }

    const QualityProcess& process() const noexcept { return process_; }

private:
    double eval(const quality::Constant& q, Tick) { return q.p; }

    double eval(const quality::PeriodicSwitch& q, Tick t)
    {
        return q.levels[static_cast<std::size_t>(((t - 1) / q.period) % q.levels.size())];
    }

    double eval(const quality::RandomWalk& q, Tick t)
    {
        if (t < last_t_)
        {
            throw ParameterError("random walk quality queried backwards in time");
        }
        while (last_t_ < t)
        {
            ++last_t_;
            if (last_t_ > 1)
            {
                value_ = std::clamp(value_ + q.sigma * standard_normal(rng_), 0.0, 1.0);
            }
        }
        return value_;
    }

    double eval(const quality::IntermittentMalicious& q, Tick t)
    {
        const Tick cycle = q.on_len + q.off_len;
        return ((t - 1) % cycle) < q.on_len ? q.p_honest : q.p_deceptive;
    }

    QualityProcess process_;
    Rng rng_;
    double value_ = 0.0;
    Tick last_t_ = 0;
};

/// p_j(t) for a single query. For random walks, prefer a long-lived QualitySource.
inline double quality_at(const QualityProcess& process, Tick t, Rng& rng)
{
    QualitySource source(process, rng);
    return source.at(t);
}

/// Realises the binary promise quotient: 1 with probability p.
inline int sample_sale(double p, Rng& rng)
{
    if (!(p >= 0.0 && p <= 1.0))
    {
        throw ParameterError("sale probability must lie in [0,1]");
    }
    return uniform01(rng) < p ? 1 : 0;
}

/// Same as sample_sale with a pre-drawn uniform, so every model in a Monte Carlo
/// comparison sees the same outcome noise.
inline int sample_sale_with(double p, double u)
{
    if (!(p >= 0.0 && p <= 1.0))
    {
        throw ParameterError("sale probability must lie in [0,1]");
    }
    return u < p ? 1 : 0;
}

enum class ProviderMode
{
    Active,
    Idle,
};

struct ProviderState
{
    std::size_t id = 0;
    ProviderMode mode = ProviderMode::Active;
    std::uint64_t sales = 0;      // since the provider last became active
    std::uint64_t idle_steps = 0; // ticks spent idle in the current refill
    std::uint64_t stock_max = kUnlimitedStock;
    std::uint64_t refill = 0; // ticks needed to restock
    Tick active_since = 1;

    bool active() const noexcept { return mode == ProviderMode::Active; }
    bool operator==(const ProviderState&) const = default;
};

/// Counts a sale. Reaching stock_max sends the provider idle; a zero refill
/// reactivates it immediately.
inline ProviderState record_sale(ProviderState state, Tick t)
{
    if (state.mode != ProviderMode::Active)
    {
        throw StateError("provider " + std::to_string(state.id + 1) + " cannot sell while idle");
    }
    ++state.sales;
    if (state.sales >= state.stock_max)
    {
        state.mode = ProviderMode::Idle;
        state.idle_steps = 0;
        state.sales = 0;
        if (state.refill == 0)
        {
            state.mode = ProviderMode::Active;
            state.active_since = t + 1;
        }
    }
    return state;
}

/// One idle tick; reactivates once the refill time has elapsed. No-op when active.
inline ProviderState tick_idle(ProviderState state, Tick t = 0)
{
    if (state.mode != ProviderMode::Idle)
    {
        return state;
    }
    ++state.idle_steps;
    if (state.idle_steps >= state.refill)
    {
        state.mode = ProviderMode::Active;
        state.sales = 0;
        state.idle_steps = 0;
        state.active_since = t + 1;
    }
    return state;
}

inline IndexSet active_providers(const std::vector<ProviderState>& states, const IndexSet& allowed)
{
    IndexSet out;
    for (auto j : allowed)
    {
        if (j < states.size() && states[j].active())
        {
            out.push_back(j);
        }
    }
    return out;
}

} // namespace dol3
