#pragma once

// Per-observer trust learning: periodic reset, message exchange, social trust
// update, weighted fusion and multiplicative local learning.
//
// All weights are held as natural logarithms. A local weight w = exp(lambda)
// never drops below 1 (lambda >= 0) and is capped at exp(log_clamp); social
// weights lie in [0, 1] with 0 represented by -infinity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dol3/error.hpp"
#include "dol3/marketplace.hpp"
#include "dol3/network.hpp"
#include "dol3/random.hpp"

namespace dol3
{

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Dol3Params
{
    double gamma = 0.9;     // discount factor, (0, 1]
    double eta_w = 0.1;     // local learning rate
    double eta_alpha = 0.1; // social learning rate
    std::optional<Tick> reset_period = 100;
    double epsilon_default = 0.5;             // blind trust toward any neighbour
    std::map<std::size_t, double> epsilon;    // per-neighbour overrides
    double log_clamp = 50.0;

    /// Blind-trust factor observer `self` grants contributor `l`; always 1 for itself.
    double blind_trust(std::size_t self, std::size_t l) const
    {
        if (l == self)
        {
            return 1.0;
        }
        const auto it = epsilon.find(l);
        return it == epsilon.end() ? epsilon_default : it->second;
    }

    /// Largest weight an honest observer can hold: exp(min(log_clamp, eta_w / (1 - gamma))).
    double weight_bound() const
    {
        const double limit = gamma < 1.0 ? std::min(log_clamp, eta_w / (1.0 - gamma)) : log_clamp;
        return std::exp(limit);
    }

    std::vector<std::string> validate() const
    {
        std::vector<std::string> errors;
        if (!(gamma > 0.0 && gamma <= 1.0)) errors.push_back("gamma must satisfy gamma ∈ (0,1]");
        if (!(eta_w > 0.0)) errors.push_back("eta_w must be > 0");
        if (!(eta_alpha > 0.0)) errors.push_back("eta_alpha must be > 0");
        if (reset_period && *reset_period == 0) errors.push_back("reset_period must be >= 1 or disabled");
        if (!(epsilon_default >= 0.0 && epsilon_default <= 1.0))
            errors.push_back("epsilon_trust must lie in [0,1]");
        for (const auto& [l, e] : epsilon)
        {
            if (!(e >= 0.0 && e <= 1.0))
                errors.push_back("epsilon_trust override for observer " + std::to_string(l + 1) + " must lie in [0,1]");
        }
        if (!(log_clamp > 0.0 && log_clamp < 700.0)) errors.push_back("log_clamp must lie in (0,700)");
        return errors;
    }

    bool operator==(const Dol3Params&) const = default;
};

/// Broadcast of one local weight {t, sender, provider, w}.
struct TrustMessage
{
    Tick t = 0;
    std::size_t sender = 0;
    std::size_t provider = 0;
    double w = 1.0;

    bool operator==(const TrustMessage&) const = default;
};

/// Trace form `t,sender,provider,w` with 1-based indices and w at 17 significant digits.
inline std::string to_csv_row(const TrustMessage& msg)
{
    std::ostringstream os;
    os << msg.t << ',' << (msg.sender + 1) << ',' << (msg.provider + 1) << ','
       << std::setprecision(17) << msg.w;
    return os.str();
}

inline TrustMessage trust_message_from_csv(const std::string& row)
{
    std::istringstream is(row);
    TrustMessage msg;
    char c1 = 0, c2 = 0, c3 = 0;
    std::size_t sender = 0, provider = 0;
    if (!(is >> msg.t >> c1 >> sender >> c2 >> provider >> c3 >> msg.w) || c1 != ',' || c2 != ',' || c3 != ',' ||
        sender == 0 || provider == 0)
    {
        throw DataError("malformed trust message row: " + row);
    }
    msg.sender = sender - 1;
    msg.provider = provider - 1;
    return msg;
}

/// Fused trust of one observer over every provider it knows about.
struct FusedScores
{
    IndexSet providers;
    std::vector<double> raw;        // weighted sum of own and neighbour weights
    std::vector<double> normalized; // raw / sum(raw), or all zero

    /// Normalised score of provider j; 0 for providers the observer does not know.
    double score(std::size_t j) const
    {
        const auto it = std::lower_bound(providers.begin(), providers.end(), j);
        if (it == providers.end() || *it != j)
        {
            return 0.0;
        }
        return normalized[static_cast<std::size_t>(it - providers.begin())];
    }
};

namespace detail
{

inline double log_sum_exp(std::span<const double> xs)
{
    double m = kNegInf;
    for (double x : xs) m = std::max(m, x);
    if (m == kNegInf)
    {
        return kNegInf;
    }
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

} // namespace detail

class ObserverTrustState
{
public:
    struct Neighbour
    {
        std::size_t id = 0;
        IndexSet omega; // providers that neighbour observes
    };

    ObserverTrustState() = default;

    ObserverTrustState(std::size_t id, IndexSet omega, std::vector<Neighbour> neighbours)
        : id_(id)
    {
        std::sort(neighbours.begin(), neighbours.end(),
                  [](const Neighbour& a, const Neighbour& b) { return a.id < b.id; });
        contributors_.push_back(id);
        std::vector<IndexSet> sets{std::move(omega)};
        for (auto& nb : neighbours)
        {
            if (nb.id == id)
            {
                throw ParameterError("an observer cannot be its own neighbour");
            }
            contributors_.push_back(nb.id);
            sets.push_back(std::move(nb.omega));
        }
        for (auto& s : sets)
        {
            std::sort(s.begin(), s.end());
            s.erase(std::unique(s.begin(), s.end()), s.end());
            known_.insert(known_.end(), s.begin(), s.end());
        }
        std::sort(known_.begin(), known_.end());
        known_.erase(std::unique(known_.begin(), known_.end()), known_.end());

        const std::size_t cells = contributors_.size() * known_.size();
        observes_.assign(cells, 0);
        log_alpha_.assign(cells, 0.0);
        cache_.assign(cells, 0.0);
        has_cache_.assign(cells, 0);
        local_logw_.assign(known_.size(), 0.0);
        for (std::size_t r = 0; r < sets.size(); ++r)
        {
            for (auto j : sets[r])
            {
                observes_[cell(r, slot_of(j))] = 1;
            }
        }
    }

    std::size_t id() const noexcept { return id_; }
    const IndexSet& known_providers() const noexcept { return known_; }

    IndexSet own_providers() const
    {
        IndexSet out;
        for (std::size_t k = 0; k < known_.size(); ++k)
        {
            if (observes_[cell(0, k)]) out.push_back(known_[k]);
        }
        return out;
    }

    IndexSet neighbours() const { return IndexSet(contributors_.begin() + 1, contributors_.end()); }

    bool observes(std::size_t contributor, std::size_t j) const
    {
        const auto r = find_contributor(contributor);
        const auto k = find_slot(j);
        return r && k && observes_[cell(*r, *k)];
    }

    double log_local_weight(std::size_t j) const { return local_logw_[own_slot(j)]; }
    double local_weight(std::size_t j) const { return std::exp(log_local_weight(j)); }

    double log_social_weight(std::size_t l, std::size_t j) const { return log_alpha_[checked_cell(l, j)]; }
    double social_weight(std::size_t l, std::size_t j) const { return std::exp(log_social_weight(l, j)); }

    std::optional<double> cached_weight(std::size_t l, std::size_t j) const
    {
        const auto c = checked_cell(l, j);
        return has_cache_[c] ? std::optional<double>(cache_[c]) : std::nullopt;
    }

    /// Re-initialises every weight to 1 and drops cached neighbour weights.
    void reset()
    {
        std::fill(local_logw_.begin(), local_logw_.end(), 0.0);
        std::fill(log_alpha_.begin(), log_alpha_.end(), 0.0);
        std::fill(cache_.begin(), cache_.end(), 0.0);
        std::fill(has_cache_.begin(), has_cache_.end(), 0);
    }

    /// Resets when the reset period divides t. Returns whether it did.
    bool reset_if_due(Tick t, const Dol3Params& params)
    {
        if (params.reset_period && *params.reset_period > 0 && t % *params.reset_period == 0)
        {
            reset();
            return true;
        }
        return false;
    }

    std::vector<TrustMessage> emit_messages(Tick t) const
    {
        std::vector<TrustMessage> out;
        for (std::size_t k = 0; k < known_.size(); ++k)
        {
            if (observes_[cell(0, k)])
            {
                out.push_back({t, id_, known_[k], std::exp(local_logw_[k])});
            }
        }
        return out;
    }

    /// lambda <- clamp(gamma * lambda + eta_w * k * s, 0, log_clamp).
    void local_update(std::size_t j, int s, unsigned k, const Dol3Params& params)
    {
        if (s != 0 && s != 1)
        {
            throw ParameterError("sale outcome must be 0 or 1");
        }
        auto& lambda = local_logw_[own_slot(j)];
        lambda = std::clamp(params.gamma * lambda + params.eta_w * static_cast<double>(k) * s, 0.0,
                            params.log_clamp);
    }

    /// Learning phase over all of Ω_i: the sold provider (if observed) gets k = 1,
    /// every other provider only the discount.
    void learn(std::optional<std::pair<std::size_t, int>> sale, const Dol3Params& params)
    {
        for (std::size_t k = 0; k < known_.size(); ++k)
        {
            if (!observes_[cell(0, k)])
            {
                continue;
            }
            const bool sold = sale && sale->first == known_[k];
            local_update(known_[k], sold ? sale->second : 0, sold ? 1U : 0U, params);
        }
    }

    /// Stores neighbour weights in the cache. Rejects senders outside Λ_i and
    /// providers the sender is not known to observe.
    void ingest(std::span<const TrustMessage> msgs)
    {
        for (const auto& msg : msgs)
        {
            const auto r = find_contributor(msg.sender);
            if (!r || *r == 0)
            {
                throw ProtocolError("observer " + std::to_string(id_ + 1) + " received a message from non-neighbour " +
                                    std::to_string(msg.sender + 1));
            }
            const auto k = find_slot(msg.provider);
            if (!k || !observes_[cell(*r, *k)])
            {
                throw ProtocolError("observer " + std::to_string(msg.sender + 1) + " reported provider " +
                                    std::to_string(msg.provider + 1) + " it does not observe");
            }
            if (!(msg.w > 0.0) || !std::isfinite(msg.w))
            {
                throw ProtocolError("trust message weight must be finite and > 0");
            }
            cache_[cell(*r, *k)] = msg.w;
            has_cache_[cell(*r, *k)] = 1;
        }
    }

    /// Social trust update over every (contributor, known provider) pair:
    ///  - epsilon_l when l = i observes j itself, or only neighbour l observes j;
    ///  - alpha^gamma * exp(-eta_alpha |w_ij - w_lj|) when both observe j;
    ///  - 0 otherwise.
    /// A shared pair with no cached neighbour weight keeps its previous value.
    void update_social(const Dol3Params& params)
    {
        for (std::size_t k = 0; k < known_.size(); ++k)
        {
            const bool own = observes_[cell(0, k)];
            log_alpha_[cell(0, k)] = own ? 0.0 : kNegInf;
            for (std::size_t r = 1; r < contributors_.size(); ++r)
            {
                const auto c = cell(r, k);
                if (!observes_[c])
                {
                    log_alpha_[c] = kNegInf;
                }
                else if (!own)
                {
                    log_alpha_[c] = std::log(params.blind_trust(id_, contributors_[r]));
                }
                else if (has_cache_[c])
                {
                    const double mismatch = std::abs(std::exp(local_logw_[k]) - cache_[c]);
                    log_alpha_[c] = params.gamma * log_alpha_[c] - params.eta_alpha * mismatch;
                }
            }
        }
    }

    void ingest_and_update_social(std::span<const TrustMessage> msgs, const Dol3Params& params)
    {
        ingest(msgs);
        update_social(params);
    }

    /// Normalised social weights for provider j, one (contributor, alpha) pair
    /// per member of Λ_i ∪ {i}. All zero when every raw weight is zero.
    std::vector<std::pair<std::size_t, double>> normalize_social(std::size_t j) const
    {
        const auto k = find_slot(j);
        if (!k)
        {
            throw IndexError("provider " + std::to_string(j + 1) + " is unknown to observer " + std::to_string(id_ + 1));
        }
        std::vector<double> logs(contributors_.size());
        for (std::size_t r = 0; r < contributors_.size(); ++r) logs[r] = log_alpha_[cell(r, *k)];
        const double denom = detail::log_sum_exp(logs);
        std::vector<std::pair<std::size_t, double>> out;
        for (std::size_t r = 0; r < contributors_.size(); ++r)
        {
            out.emplace_back(contributors_[r], denom == kNegInf ? 0.0 : std::exp(logs[r] - denom));
        }
        return out;
    }

    /// Weighted fusion of own and neighbour weights. Neighbours with no cached
    /// weight contribute 0 but keep their share of the normalisation.
    FusedScores fuse() const
    {
        FusedScores out;
        out.providers = known_;
        out.raw.assign(known_.size(), 0.0);
        out.normalized.assign(known_.size(), 0.0);
        std::vector<double> log_z(known_.size(), kNegInf);
        std::vector<double> alphas(contributors_.size());
        std::vector<double> terms;
        terms.reserve(contributors_.size());
        double max_log_z = kNegInf;
        for (std::size_t k = 0; k < known_.size(); ++k)
        {
            terms.clear();
            for (std::size_t r = 0; r < contributors_.size(); ++r)
            {
                const auto c = cell(r, k);
                alphas[r] = log_alpha_[c];
                if (r == 0 ? observes_[c] != 0 : has_cache_[c] != 0)
                {
                    const double log_w = r == 0 ? local_logw_[k] : std::log(cache_[c]);
                    terms.push_back(log_alpha_[c] + log_w);
                }
            }
            const double denom = detail::log_sum_exp(alphas);
            if (denom == kNegInf)
            {
                continue;
            }
            log_z[k] = detail::log_sum_exp(terms) - denom;
            max_log_z = std::max(max_log_z, log_z[k]);
        }
        if (max_log_z == kNegInf)
        {
            return out;
        }
        double total = 0.0;
        for (std::size_t k = 0; k < known_.size(); ++k)
        {
            out.raw[k] = std::exp(log_z[k]);
            out.normalized[k] = std::exp(log_z[k] - max_log_z);
            total += out.normalized[k];
        }
        for (auto& z : out.normalized) z /= total;
        return out;
    }

    /// Registers a provider that joined mid-episode with all its weights at 1.
    void add_provider(std::size_t j, bool self_observes, const IndexSet& neighbours_observing)
    {
        if (!self_observes && neighbours_observing.empty())
        {
            return;
        }
        const auto pos = std::lower_bound(known_.begin(), known_.end(), j);
        const bool fresh = pos == known_.end() || *pos != j;
        if (fresh)
        {
            const auto k_new = static_cast<std::size_t>(pos - known_.begin());
            const std::size_t old_k = known_.size();
            known_.insert(pos, j);
            auto widen = [&](auto& v, auto fill) {
                using V = std::decay_t<decltype(v)>;
                V wide(contributors_.size() * known_.size(), fill);
                for (std::size_t r = 0; r < contributors_.size(); ++r)
                {
                    for (std::size_t k = 0; k < old_k; ++k)
                    {
                        wide[r * known_.size() + (k < k_new ? k : k + 1)] = v[r * old_k + k];
                    }
                }
                v = std::move(wide);
            };
            widen(observes_, char{0});
            widen(log_alpha_, 0.0);
            widen(cache_, 0.0);
            widen(has_cache_, char{0});
            local_logw_.insert(local_logw_.begin() + static_cast<std::ptrdiff_t>(k_new), 0.0);
        }
        const auto k = *find_slot(j);
        if (self_observes)
        {
            observes_[cell(0, k)] = 1;
        }
        for (auto l : neighbours_observing)
        {
            const auto r = find_contributor(l);
            if (!r || *r == 0)
            {
                throw IndexError("observer " + std::to_string(l + 1) + " is not a neighbour of " + std::to_string(id_ + 1));
            }
            observes_[cell(*r, k)] = 1;
        }
    }

    bool operator==(const ObserverTrustState&) const = default;

private:
    std::size_t cell(std::size_t r, std::size_t k) const noexcept { return r * known_.size() + k; }

    std::optional<std::size_t> find_slot(std::size_t j) const
    {
        const auto it = std::lower_bound(known_.begin(), known_.end(), j);
        if (it == known_.end() || *it != j)
        {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - known_.begin());
    }

    std::size_t slot_of(std::size_t j) const { return *find_slot(j); }

    std::optional<std::size_t> find_contributor(std::size_t l) const
    {
        if (l == id_)
        {
            return 0;
        }
        const auto it = std::lower_bound(contributors_.begin() + 1, contributors_.end(), l);
        if (it == contributors_.end() || *it != l)
        {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - contributors_.begin());
    }

    std::size_t own_slot(std::size_t j) const
    {
        const auto k = find_slot(j);
        if (!k || !observes_[cell(0, *k)])
        {
            throw IndexError("provider " + std::to_string(j + 1) + " is not observed by observer " +
                             std::to_string(id_ + 1));
        }
        return *k;
    }

    std::size_t checked_cell(std::size_t l, std::size_t j) const
    {
        const auto r = find_contributor(l);
        const auto k = find_slot(j);
        if (!r || !k)
        {
            throw IndexError("no social weight for observer " + std::to_string(l + 1) + " and provider " +
                             std::to_string(j + 1));
        }
        return cell(*r, *k);
    }

    std::size_t id_ = 0;
    std::vector<std::size_t> contributors_; // self first, then sorted Λ_i
    IndexSet known_;
    std::vector<char> observes_;    // contributor x provider: j ∈ Ω_l
    std::vector<double> local_logw_; // per known provider; meaningful where observes_(0, k)
    std::vector<double> log_alpha_;  // contributor x provider
    std::vector<double> cache_;      // last weight received from each neighbour
    std::vector<char> has_cache_;
};

inline ObserverTrustState init_state(std::size_t id, IndexSet omega, std::vector<ObserverTrustState::Neighbour> neighbours)
{
    return ObserverTrustState(id, std::move(omega), std::move(neighbours));
}

/// Observer i's fresh state as laid out by an interaction network.
inline ObserverTrustState init_state(const InteractionNetwork& net, std::size_t i)
{
    std::vector<ObserverTrustState::Neighbour> nbs;
    for (auto l : net.lambda[i])
    {
        nbs.push_back({l, net.omega[l]});
    }
    return ObserverTrustState(i, net.omega[i], std::move(nbs));
}

/// Index of the highest score among `available`, lowest index on ties.
template <typename ScoreFn>
std::size_t argmax_lowest(std::span<const std::size_t> available, ScoreFn&& score)
{
    std::size_t best = available.front();
    double best_score = score(best);
    for (auto j : available.subspan(1))
    {
        const double s = score(j);
        if (s > best_score || (s == best_score && j < best))
        {
            best = j;
            best_score = s;
        }
    }
    return best;
}

/// With probability explore_prob a uniform member of `available`, otherwise
/// its argmax under the fused scores (lowest index on ties).
inline std::size_t recommend(const FusedScores& scores, std::span<const std::size_t> available, double explore_prob,
                             Rng& rng)
{
    if (available.empty())
    {
        throw AvailabilityError("no provider available to recommend");
    }
    if (explore_prob > 0.0 && uniform01(rng) < explore_prob)
    {
        return available[uniform_below(rng, available.size())];
    }
    return argmax_lowest(available, [&](std::size_t j) { return scores.score(j); });
}

} // namespace dol3
