#pragma once

// Pluggable per-observer trust models. DOL3 is one implementation; the
// randomized and expert-opinion (empirical frequency) baselines are the others.
// Further reputation models can be added by implementing TrustModel.

#include <cstddef>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dol3/error.hpp"
#include "dol3/marketplace.hpp"
#include "dol3/network.hpp"
#include "dol3/random.hpp"
#include "dol3/trust.hpp"

namespace dol3
{

struct SaleRecord
{
    Tick t = 0;
    std::size_t consumer = 0;
    std::size_t provider = 0;
    int outcome = 0;

    bool operator==(const SaleRecord&) const = default;
};

/// Behavioural contract every observer model satisfies. One instance serves one
/// observer; the engine drives the phases in order each interaction.
class TrustModel
{
public:
    virtual ~TrustModel() = default;

    virtual std::string_view name() const = 0;

    /// Periodic reset phase. Returns true when the model reset its state.
    virtual bool begin_interaction(Tick) { return false; }

    /// Communication phase: summaries broadcast to neighbours.
    virtual std::vector<TrustMessage> emit(Tick) const { return {}; }

    /// Fusion phase: digest neighbour summaries.
    virtual void exchange(Tick, std::span<const TrustMessage>) {}

    /// Learning phase. `sale` is the interaction's sale when this observer
    /// watches the sold provider, otherwise empty.
    virtual void observe(Tick t, const std::optional<SaleRecord>& sale) = 0;

    /// Non-negative, finite score for a provider (0 if unknown).
    virtual double score(std::size_t provider) const = 0;

    virtual std::size_t recommend(std::span<const std::size_t> available, Rng& rng) const = 0;

    /// A provider joined the market.
    virtual void add_provider(std::size_t /*provider*/, bool /*self_observes*/,
                              const IndexSet& /*neighbours_observing*/)
    {
    }
};

enum class ModelKind
{
    Dol3,
    Random,
    Frequency,
};

inline std::string to_string(ModelKind kind)
{
    switch (kind)
    {
    case ModelKind::Dol3: return "dol3";
    case ModelKind::Random: return "random";
    case ModelKind::Frequency: return "frequency";
    }
    return "unknown";
}

inline ModelKind model_kind_from_string(std::string_view name)
{
    if (name == "dol3") return ModelKind::Dol3;
    if (name == "random") return ModelKind::Random;
    if (name == "frequency" || name == "expert") return ModelKind::Frequency;
    throw ParameterError("unknown model '" + std::string(name) + "' (expected dol3, random or frequency)");
}

/// Uniform draw from `available`.
inline std::size_t random_recommend(std::span<const std::size_t> available, Rng& rng)
{
    if (available.empty())
    {
        throw AvailabilityError("no provider available to recommend");
    }
    return available[uniform_below(rng, available.size())];
}

class Dol3Model final : public TrustModel
{
public:
    Dol3Model(ObserverTrustState state, Dol3Params params, double explore_prob = 0.0)
        : state_(std::move(state)), params_(std::move(params)), explore_prob_(explore_prob)
    {
        scores_ = state_.fuse();
    }

    std::string_view name() const override { return "dol3"; }

    bool begin_interaction(Tick t) override { return state_.reset_if_due(t, params_); }

    std::vector<TrustMessage> emit(Tick t) const override { return state_.emit_messages(t); }

    void exchange(Tick, std::span<const TrustMessage> received) override
    {
        state_.ingest_and_update_social(received, params_);
        scores_ = state_.fuse();
    }

    void observe(Tick, const std::optional<SaleRecord>& sale) override
    {
        if (sale)
        {
            state_.learn(std::pair{sale->provider, sale->outcome}, params_);
        }
        else
        {
            state_.learn(std::nullopt, params_);
        }
    }

    double score(std::size_t provider) const override { return scores_.score(provider); }

    std::size_t recommend(std::span<const std::size_t> available, Rng& rng) const override
    {
        return dol3::recommend(scores_, available, explore_prob_, rng);
    }

    void add_provider(std::size_t provider, bool self_observes, const IndexSet& neighbours_observing) override
    {
        state_.add_provider(provider, self_observes, neighbours_observing);
        scores_ = state_.fuse();
    }

    const ObserverTrustState& state() const noexcept { return state_; }
    const FusedScores& scores() const noexcept { return scores_; }
    const Dol3Params& params() const noexcept { return params_; }

private:
    ObserverTrustState state_;
    Dol3Params params_;
    double explore_prob_;
    FusedScores scores_;
};

/// Randomised baseline: fresh uniform scores every interaction, so ranking by
/// score is a uniform draw.
class RandomModel final : public TrustModel
{
public:
    RandomModel(std::size_t n_providers, Rng rng) : rng_(rng), scores_(n_providers, 0.0) {}

    std::string_view name() const override { return "random"; }

    bool begin_interaction(Tick) override
    {
        for (auto& s : scores_) s = uniform01(rng_);
        return false;
    }

    void observe(Tick, const std::optional<SaleRecord>&) override {}

    double score(std::size_t provider) const override
    {
        return provider < scores_.size() ? scores_[provider] : 0.0;
    }

    std::size_t recommend(std::span<const std::size_t> available, Rng& rng) const override
    {
        return random_recommend(available, rng);
    }

    void add_provider(std::size_t provider, bool, const IndexSet&) override
    {
        if (provider >= scores_.size()) scores_.resize(provider + 1, 0.0);
    }

private:
    Rng rng_;
    std::vector<double> scores_;
};

/// Expert-opinion baseline: per-provider empirical success rate of the sales
/// this observer witnessed, optionally over a sliding window of the last W.
class FrequencyModel final : public TrustModel
{
public:
    static constexpr double kPrior = 0.5;

    explicit FrequencyModel(std::size_t n_providers = 0, std::size_t window = 0)
        : window_(window), stats_(n_providers)
    {
    }

    std::string_view name() const override { return "frequency"; }

    void observe(Tick, const std::optional<SaleRecord>& sale) override
    {
        if (sale) freq_observe(*sale);
    }

    void freq_observe(const SaleRecord& record)
    {
        if (record.outcome != 0 && record.outcome != 1)
        {
            throw ParameterError("sale outcome must be 0 or 1");
        }
        if (record.provider >= stats_.size()) stats_.resize(record.provider + 1);
        auto& st = stats_[record.provider];
        ++st.trials;
        st.successes += static_cast<std::uint64_t>(record.outcome);
        if (window_ > 0)
        {
            st.recent.push_back(record.outcome);
            if (st.recent.size() > window_)
            {
                st.successes -= static_cast<std::uint64_t>(st.recent.front());
                st.recent.pop_front();
                --st.trials;
            }
        }
    }

    std::uint64_t successes(std::size_t provider) const
    {
        return provider < stats_.size() ? stats_[provider].successes : 0;
    }
    std::uint64_t trials(std::size_t provider) const { return provider < stats_.size() ? stats_[provider].trials : 0; }

    double mean(std::size_t provider) const
    {
        const auto n = trials(provider);
        return n == 0 ? kPrior : static_cast<double>(successes(provider)) / static_cast<double>(n);
    }

    double score(std::size_t provider) const override { return mean(provider); }

    std::size_t freq_recommend(std::span<const std::size_t> available) const
    {
        if (available.empty())
        {
            throw AvailabilityError("no provider available to recommend");
        }
        return argmax_lowest(available, [&](std::size_t j) { return mean(j); });
    }

    std::size_t recommend(std::span<const std::size_t> available, Rng&) const override
    {
        return freq_recommend(available);
    }

    void add_provider(std::size_t provider, bool, const IndexSet&) override
    {
        if (provider >= stats_.size()) stats_.resize(provider + 1);
    }

private:
    struct Stats
    {
        std::uint64_t successes = 0;
        std::uint64_t trials = 0;
        std::deque<int> recent;
    };

    std::size_t window_;
    std::vector<Stats> stats_;
};

} // namespace dol3
