#pragma once

// Episode orchestration. Each interaction t runs, in order:
//   0. arrivals due at t join the market
//   1. periodic reset on every observer
//   2. communication: emit, adversarial corruption, delivery along Λ
//   3. trust fusion: social update, normalisation, fused scores
//   4. purchase by consumer_at(t) on the aggregated scores of its observers
//   5. learning on every observer
//   6. idle ticks and stock bookkeeping
//
// Randomness comes from independent named streams (outcome, explore,
// adversary, netgen, quality.<j>, model.<i>), so outcome draws do not depend on
// what the adversary or the models do.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <exception>
#include <map>
#include <mutex>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dol3/baselines.hpp"
#include "dol3/config.hpp"
#include "dol3/error.hpp"
#include "dol3/graph.hpp"
#include "dol3/marketplace.hpp"
#include "dol3/network.hpp"
#include "dol3/random.hpp"
#include "dol3/trust.hpp"

namespace dol3
{

/// Adversarial rewrite of a broadcast weight. The schedule gate (on/off phase)
/// is applied by the caller.
inline TrustMessage corrupt_message(TrustMessage msg, CorruptionMode mode, Rng& rng, double w_bound)
{
    switch (mode)
    {
    case CorruptionMode::Invert: msg.w = w_bound / msg.w; break;
    case CorruptionMode::Random: msg.w = (1.0 - uniform01(rng)) * w_bound; break;
    case CorruptionMode::ConstantHigh: msg.w = w_bound; break;
    }
    return msg;
}

/// Sampled snapshot of one observer's scores.
struct TraceEntry
{
    Tick t = 0;
    std::size_t observer = 0;
    bool reset = false;
    IndexSet providers;
    std::vector<double> scores;

    bool operator==(const TraceEntry&) const = default;
};

struct EpisodeResult
{
    SimConfig config;
    std::uint64_t seed = 0;
    std::size_t run = 0;
    std::string model;
    std::vector<SaleRecord> records; // one per interaction that had a reachable active provider
    std::vector<Tick> skipped;       // interactions without one
    std::vector<int> rewards;        // per interaction, 0 when skipped
    std::vector<Tick> reset_ticks;   // interactions at which observers reset
    IndexSet malicious;
    std::vector<TraceEntry> traces;
    std::vector<std::vector<double>> quality_trace; // p_j(t), when record_oracle
    std::vector<IndexSet> availability_trace;       // reachable active providers, when record_oracle

    std::uint64_t cumulative_reward() const
    {
        return static_cast<std::uint64_t>(std::accumulate(rewards.begin(), rewards.end(), std::int64_t{0}));
    }

    bool operator==(const EpisodeResult&) const = default;
};

/// Optional instrumentation called during an episode.
struct EpisodeHooks
{
    /// After the fusion phase of every observer.
    std::function<void(Tick, std::size_t observer, const TrustModel&)> after_fusion;
};

/// Observers, their models and the message plumbing between them. Shared by
/// the marketplace engine and the ratings replay.
class ObserverPool
{
public:
    ObserverPool(InteractionNetwork net, const std::vector<ModelKind>& kinds, const SimConfig& config,
                 std::uint64_t seed)
        : net_(std::move(net)), config_(config), adversary_rng_(make_stream(seed, "adversary", 0, config.adversary.stream_salt))
    {
        if (kinds.size() != net_.n_observers)
        {
            throw ParameterError("need exactly one model per observer");
        }
        for (std::size_t i = 0; i < net_.n_observers; ++i)
        {
            params_.push_back(config.dol3_params(i));
            switch (kinds[i])
            {
            case ModelKind::Dol3:
                models_.push_back(std::make_unique<Dol3Model>(init_state(net_, i), params_.back(), 0.0));
                break;
            case ModelKind::Random:
                models_.push_back(std::make_unique<RandomModel>(net_.n_providers, make_stream(seed, "model", i)));
                break;
            case ModelKind::Frequency:
                models_.push_back(std::make_unique<FrequencyModel>(net_.n_providers, config.frequency_window));
                break;
            }
        }
        malicious_.assign(net_.n_observers, 0);
        for (auto m : config.adversary.malicious) malicious_[m] = 1;
        const auto extra = static_cast<std::size_t>(
            std::floor(config.adversary.malicious_fraction * static_cast<double>(net_.n_observers) + 1e-9));
        if (extra > 0)
        {
            for (auto m : detail::sample_without_replacement(net_.n_observers, extra, adversary_rng_))
            {
                malicious_[m] = 1;
            }
        }
        refresh_reach();
    }

    const InteractionNetwork& network() const noexcept { return net_; }
    std::size_t size() const noexcept { return models_.size(); }
    const TrustModel& model(std::size_t i) const { return *models_.at(i); }
    TrustModel& model(std::size_t i) { return *models_.at(i); }

    IndexSet malicious() const
    {
        IndexSet out;
        for (std::size_t i = 0; i < malicious_.size(); ++i)
            if (malicious_[i]) out.push_back(i);
        return out;
    }

    /// Phase 1. Returns whether any observer reset.
    bool reset_phase(Tick t)
    {
        bool any = false;
        for (auto& m : models_) any = m->begin_interaction(t) || any;
        return any;
    }

    /// Phases 2 and 3.
    void communicate(Tick t, const EpisodeHooks* hooks = nullptr)
    {
        std::vector<std::vector<TrustMessage>> outbox(models_.size());
        const auto& adv = config_.adversary;
        for (std::size_t i = 0; i < models_.size(); ++i)
        {
            outbox[i] = models_[i]->emit(t);
            const double bound = params_[i].weight_bound();
            const bool corrupt = malicious_[i] && adv.on_phase(t);
            for (auto& msg : outbox[i])
            {
                if (corrupt)
                {
                    msg = corrupt_message(msg, adv.mode, adversary_rng_, bound);
                }
                if (adv.noisy_data_rate > 0.0 && uniform01(adversary_rng_) < adv.noisy_data_rate)
                {
                    msg = corrupt_message(msg, CorruptionMode::Random, adversary_rng_, bound);
                }
            }
        }
        std::vector<TrustMessage> inbox;
        for (std::size_t i = 0; i < models_.size(); ++i)
        {
            inbox.clear();
            for (auto l : net_.lambda[i])
            {
                inbox.insert(inbox.end(), outbox[l].begin(), outbox[l].end());
            }
            models_[i]->exchange(t, inbox);
            if (hooks && hooks->after_fusion)
            {
                hooks->after_fusion(t, i, *models_[i]);
            }
        }
    }

    const IndexSet& serving(std::size_t consumer) const { return serving_.at(consumer); }
    const IndexSet& reachable(std::size_t consumer) const { return reachable_.at(consumer); }

    /// Mean score of the consumer's observers for each provider in `available`.
    std::vector<double> aggregate_scores(std::size_t consumer, const IndexSet& available) const
    {
        std::vector<double> agg(available.size(), 0.0);
        const auto& obs = serving_.at(consumer);
        for (auto i : obs)
        {
            for (std::size_t a = 0; a < available.size(); ++a)
            {
                agg[a] += models_[i]->score(available[a]);
            }
        }
        for (auto& x : agg) x /= static_cast<double>(obs.size());
        return agg;
    }

    /// Phase 5: every observer learns; only those watching the sold provider see the sale.
    void learn(Tick t, const std::optional<SaleRecord>& sale)
    {
        for (std::size_t i = 0; i < models_.size(); ++i)
        {
            const bool sees = sale && net_.observes(i, sale->provider);
            models_[i]->observe(t, sees ? sale : std::nullopt);
        }
    }

    /// Adds a provider to the network and to every model. Returns its index.
    std::size_t add_provider(const VisibilityRule& visibility, Rng& rng)
    {
        const std::size_t j = dol3::add_provider(net_, visibility, rng);
        for (std::size_t i = 0; i < models_.size(); ++i)
        {
            IndexSet nbs;
            for (auto l : net_.lambda[i])
                if (net_.observes(l, j)) nbs.push_back(l);
            models_[i]->add_provider(j, net_.observes(i, j), nbs);
        }
        refresh_reach();
        return j;
    }

private:
    void refresh_reach()
    {
        serving_.assign(net_.n_consumers, {});
        reachable_.assign(net_.n_consumers, {});
        std::vector<IndexSet> known(net_.n_observers);
        for (std::size_t i = 0; i < net_.n_observers; ++i) known[i] = net_.known_providers(i);
        for (std::size_t i = 0; i < net_.n_observers; ++i)
        {
            for (auto c : net_.gamma_set[i])
            {
                serving_[c].push_back(i);
                auto& r = reachable_[c];
                r.insert(r.end(), known[i].begin(), known[i].end());
            }
        }
        for (auto& r : reachable_)
        {
            std::sort(r.begin(), r.end());
            r.erase(std::unique(r.begin(), r.end()), r.end());
        }
    }

    InteractionNetwork net_;
    SimConfig config_;
    std::vector<Dol3Params> params_;
    std::vector<std::unique_ptr<TrustModel>> models_;
    std::vector<char> malicious_;
    Rng adversary_rng_;
    std::vector<IndexSet> serving_;
    std::vector<IndexSet> reachable_;
};

/// Consumer-side choice: explore with probability explore_prob (u_explore),
/// else argmax of the aggregated scores (lowest index on ties). All-zero scores
/// fall back to a uniform pick. `u_pick` in [0,1) selects the uniform member.
inline std::size_t choose_provider(const IndexSet& available, const std::vector<double>& scores,
                                   double explore_prob, double u_explore, double u_pick)
{
    if (available.empty())
    {
        throw AvailabilityError("no provider available to recommend");
    }
    const auto uniform = [&] {
        return available[std::min(available.size() - 1,
                                  static_cast<std::size_t>(u_pick * static_cast<double>(available.size())))];
    };
    if (u_explore < explore_prob)
    {
        return uniform();
    }
    std::size_t best = 0;
    for (std::size_t a = 1; a < available.size(); ++a)
    {
        if (scores[a] > scores[best]) best = a;
    }
    if (!(scores[best] > 0.0))
    {
        return uniform();
    }
    return available[best];
}

inline InteractionNetwork make_network(const SimConfig& config, std::uint64_t seed)
{
    const auto netgen = stream_seed(seed, "netgen");
    const Graph g = generate_graph(config.network, config.observers, netgen);
    return build_interaction_network(config.observers, config.providers, config.consumers, g, config.visibility,
                                     config.consumer_attach, netgen);
}

inline std::string model_label(const SimConfig& config)
{
    if (!config.observer_models.empty()) return "mixed";
    return to_string(config.models.empty() ? ModelKind::Dol3 : config.models.front());
}

/// A running episode. run_episode drives one to completion; tests may step it.
class Episode
{
public:
    Episode(const SimConfig& config, std::uint64_t seed, EpisodeHooks hooks = {})
        : config_(config),
          seed_(seed),
          hooks_(std::move(hooks)),
          pool_(checked_network(config, seed), config.model_assignment(), config, seed),
          outcome_rng_(make_stream(seed, "outcome")),
          explore_rng_(make_stream(seed, "explore")),
          arrivals_rng_(make_stream(seed, "netgen", 1))
    {
        Rng init_rng = make_stream(seed, "quality.init");
        for (std::size_t j = 0; j < config.providers; ++j)
        {
            QualityProcess process;
            if (config.provider_processes.empty()) process = quality::Constant{uniform01(init_rng)};
            else if (config.provider_processes.size() == 1) process = config.provider_processes.front();
            else process = config.provider_processes[j];
            add_provider_state(j, std::move(process), 1);
        }
        result_.config = config;
        result_.seed = seed;
        result_.model = model_label(config);
        result_.malicious = pool_.malicious();
        result_.rewards.reserve(config.iterations);
    }

    Tick next_tick() const noexcept { return t_ + 1; }
    bool done() const noexcept { return t_ >= config_.iterations; }
    const ObserverPool& observers() const noexcept { return pool_; }
    const std::vector<ProviderState>& providers() const noexcept { return providers_; }
    const EpisodeResult& result() const noexcept { return result_; }

    /// Admits every arrival scheduled at t.
    void process_arrivals(Tick t)
    {
        while (next_arrival_ < config_.arrivals.size() && config_.arrivals[next_arrival_].t <= t)
        {
            const auto& a = config_.arrivals[next_arrival_++];
            const std::size_t j = pool_.add_provider(config_.visibility, arrivals_rng_);
            add_provider_state(j, a.process, t);
        }
    }

    void step()
    {
        const Tick t = ++t_;
        process_arrivals(t);

        if (pool_.reset_phase(t))
        {
            result_.reset_ticks.push_back(t);
        }
        pool_.communicate(t, &hooks_);

        std::vector<double> p(providers_.size());
        for (std::size_t j = 0; j < providers_.size(); ++j) p[j] = quality_[j].at(t);

        const std::size_t consumer = consumer_at(t, config_.consumers);
        const IndexSet available = active_providers(providers_, pool_.reachable(consumer));
        const double u_outcome = uniform01(outcome_rng_);
        const double u_explore = uniform01(explore_rng_);
        const double u_pick = uniform01(explore_rng_);

        std::optional<SaleRecord> sale;
        if (available.empty())
        {
            result_.skipped.push_back(t);
            result_.rewards.push_back(0);
        }
        else
        {
            const auto scores = pool_.aggregate_scores(consumer, available);
            const auto j = choose_provider(available, scores, config_.explore_prob, u_explore, u_pick);
            sale = SaleRecord{t, consumer, j, sample_sale_with(p[j], u_outcome)};
            result_.records.push_back(*sale);
            result_.rewards.push_back(sale->outcome);
        }
        if (config_.record_oracle)
        {
            result_.quality_trace.push_back(p);
            result_.availability_trace.push_back(available);
        }

        pool_.learn(t, sale);

        for (auto& st : providers_)
        {
            st = tick_idle(st, t);
        }
        if (sale)
        {
            providers_[sale->provider] = record_sale(providers_[sale->provider], t);
        }

        if (config_.trace_stride > 0 && t % config_.trace_stride == 0)
        {
            const bool reset = !result_.reset_ticks.empty() && result_.reset_ticks.back() == t;
            for (std::size_t i = 0; i < pool_.size(); ++i)
            {
                TraceEntry e{t, i, reset, pool_.network().known_providers(i), {}};
                for (auto j : e.providers) e.scores.push_back(pool_.model(i).score(j));
                result_.traces.push_back(std::move(e));
            }
        }
    }

    EpisodeResult run()
    {
        while (!done()) step();
        return result_;
    }

private:
    static InteractionNetwork checked_network(const SimConfig& config, std::uint64_t seed)
    {
        const auto errors = config.validate();
        if (!errors.empty())
        {
            std::string msg = "invalid configuration:";
            for (const auto& e : errors) msg += "\n  - " + e;
            throw ParameterError(msg);
        }
        return make_network(config, seed);
    }

    void add_provider_state(std::size_t j, QualityProcess process, Tick since)
    {
        ProviderState st;
        st.id = j;
        st.stock_max = config_.stock_max;
        st.refill = config_.refill;
        st.active_since = since;
        providers_.push_back(st);
        quality_.emplace_back(std::move(process), make_stream(seed_, "quality", j));
    }

    SimConfig config_;
    std::uint64_t seed_;
    EpisodeHooks hooks_;
    ObserverPool pool_;
    std::vector<ProviderState> providers_;
    std::vector<QualitySource> quality_;
    Rng outcome_rng_;
    Rng explore_rng_;
    Rng arrivals_rng_;
    std::size_t next_arrival_ = 0;
    Tick t_ = 0;
    EpisodeResult result_;
};

inline EpisodeResult run_episode(const SimConfig& config, std::uint64_t seed, EpisodeHooks hooks = {})
{
    return Episode(config, seed, std::move(hooks)).run();
}

struct AggregateStats
{
    std::string model;
    double mean = 0;
    double stdev = 0; // sample standard deviation; 0 for a single run
    double min = 0;
    double max = 0;

    bool operator==(const AggregateStats&) const = default;
};

struct MonteCarloResult
{
    std::vector<EpisodeResult> episodes; // run-major, then model order
    std::vector<AggregateStats> stats;   // one per model
    /// win_rate[a][b]: share of runs where model a beat model b, ties count half.
    std::vector<std::vector<double>> win_rate;
};

inline AggregateStats summarize(const std::string& model, const std::vector<double>& values)
{
    AggregateStats s;
    s.model = model;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    if (values.size() > 1)
    {
        double ss = 0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stdev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

/// Share of paired entries where a beats b; ties count half.
inline double win_rate(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size() || a.empty())
    {
        throw DataError("win rate needs two equally long, non-empty series");
    }
    double wins = 0;
    for (std::size_t r = 0; r < a.size(); ++r)
    {
        wins += a[r] > b[r] ? 1.0 : (a[r] == b[r] ? 0.5 : 0.0);
    }
    return wins / static_cast<double>(a.size());
}

/// Runs every configured model on seeds base_seed + r for r in [0, runs).
/// Episodes are independent; `jobs` worker threads share them and results are
/// stored by index, so the output does not depend on scheduling.
inline MonteCarloResult monte_carlo(const SimConfig& config, std::size_t runs, std::uint64_t base_seed,
                                    std::size_t jobs = 1)
{
    if (runs < 1)
    {
        throw ParameterError("runs must be >= 1");
    }
    const std::size_t n_models = config.models.size();
    std::vector<SimConfig> per_model;
    for (auto m : config.models)
    {
        SimConfig c = config;
        c.models = {m};
        per_model.push_back(std::move(c));
    }
    MonteCarloResult out;
    out.episodes.resize(runs * n_models);

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        for (std::size_t idx = next++; idx < out.episodes.size(); idx = next++)
        {
            const std::size_t r = idx / n_models;
            const std::size_t m = idx % n_models;
            try
            {
                auto ep = run_episode(per_model[m], base_seed + r);
                ep.run = r;
                out.episodes[idx] = std::move(ep);
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, out.episodes.size()));
    std::vector<std::thread> threads;
    for (std::size_t k = 1; k < jobs; ++k) threads.emplace_back(worker);
    worker();
    for (auto& th : threads) th.join();
    if (error) std::rethrow_exception(error);

    std::vector<std::vector<double>> rewards(n_models, std::vector<double>(runs));
    for (std::size_t r = 0; r < runs; ++r)
        for (std::size_t m = 0; m < n_models; ++m)
            rewards[m][r] = static_cast<double>(out.episodes[r * n_models + m].cumulative_reward());
    for (std::size_t m = 0; m < n_models; ++m) out.stats.push_back(summarize(to_string(config.models[m]), rewards[m]));
    out.win_rate.assign(n_models, std::vector<double>(n_models, 0.5));
    for (std::size_t a = 0; a < n_models; ++a)
        for (std::size_t b = 0; b < n_models; ++b) out.win_rate[a][b] = win_rate(rewards[a], rewards[b]);
    return out;
}

} // namespace dol3
