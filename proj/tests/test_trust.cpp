#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "dol3/trust.hpp"
#include "oracle.hpp"

using namespace dol3;

namespace
{

Dol3Params params(double gamma, double eta_w, double eta_alpha = 0.1, double eps = 0.5)
{
    Dol3Params p;
    p.gamma = gamma;
    p.eta_w = eta_w;
    p.eta_alpha = eta_alpha;
    p.epsilon_default = eps;
    p.reset_period = std::nullopt;
    return p;
}

// Observer 0 sees {0,1}; neighbour 1 sees {0,2}.
ObserverTrustState pair_state() { return init_state(0, {0, 1}, {{1, {0, 2}}}); }

} // namespace

TEST(InitState, AllWeightsOne)
{
    const auto s = pair_state();
    EXPECT_EQ(s.known_providers(), (IndexSet{0, 1, 2}));
    for (auto j : s.own_providers()) EXPECT_EQ(s.local_weight(j), 1.0);
    for (auto l : {0u, 1u})
        for (auto j : {0u, 1u, 2u}) EXPECT_EQ(s.social_weight(l, j), 1.0);
    EXPECT_FALSE(s.cached_weight(1, 0).has_value());
}

TEST(InitState, NoNeighboursOnlySelfEntries)
{
    const auto s = init_state(3, {4, 1}, {});
    EXPECT_TRUE(s.neighbours().empty());
    EXPECT_EQ(s.normalize_social(1).size(), 1u);
    EXPECT_THROW(s.social_weight(0, 1), IndexError);
}

TEST(Reset, DueAtPeriod)
{
    auto p = params(0.9, 0.5);
    p.reset_period = 10;
    auto s = pair_state();
    s.local_update(0, 1, 1, p);
    EXPECT_FALSE(s.reset_if_due(9, p));
    EXPECT_NE(s, pair_state());
    EXPECT_TRUE(s.reset_if_due(10, p));
    EXPECT_EQ(s, pair_state());
}

TEST(Reset, DisabledNeverResets)
{
    const auto p = params(0.9, 0.5);
    auto s = pair_state();
    s.local_update(0, 1, 1, p);
    const auto before = s;
    for (Tick t = 1; t <= 500; ++t) EXPECT_FALSE(s.reset_if_due(t, p));
    EXPECT_EQ(s, before);
}

TEST(Reset, AfterDivergenceEqualsFresh)
{
    auto p = params(0.95, 0.3, 0.2, 0.4);
    p.reset_period = 20;
    auto s = pair_state();
    Rng rng(2);
    for (Tick t = 1; t < 40; ++t)
    {
        s.reset_if_due(t, p);
        s.ingest_and_update_social(std::vector<TrustMessage>{{t, 1, 0, 1.0 + uniform01(rng)}, {t, 1, 2, 2.0}}, p);
        s.learn(std::pair<std::size_t, int>{uniform_below(rng, 2), static_cast<int>(uniform_below(rng, 2))}, p);
    }
    EXPECT_TRUE(s.reset_if_due(40, p));
    EXPECT_EQ(s, pair_state());
}

TEST(Emit, OneMessagePerOwnProvider)
{
    const auto s = init_state(0, {0, 1, 2}, {});
    const auto msgs = s.emit_messages(5);
    ASSERT_EQ(msgs.size(), 3u);
    for (const auto& m : msgs)
    {
        EXPECT_EQ(m.w, 1.0);
        EXPECT_EQ(m.t, 5u);
        EXPECT_EQ(m.sender, 0u);
    }
}

TEST(Emit, CarriesUpdatedWeight)
{
    auto s = init_state(0, {0}, {});
    s.local_update(0, 1, 1, params(1.0, 0.5));
    EXPECT_NEAR(s.emit_messages(1)[0].w, 1.6487212707001282, 1e-15);
}

TEST(TrustMessage, CsvRoundTrip)
{
    const TrustMessage m{7, 2, 4, 1.0 / 3.0};
    EXPECT_EQ(to_csv_row(m), "7,3,5,0.33333333333333331");
    EXPECT_EQ(trust_message_from_csv(to_csv_row(m)), m);
    EXPECT_THROW(trust_message_from_csv("7;3;5;1"), DataError);
}

TEST(LocalUpdate, NeutralFixedPoint)
{
    auto s = init_state(0, {0}, {});
    s.local_update(0, 0, 1, params(0.7, 0.4));
    EXPECT_EQ(s.log_local_weight(0), 0.0);
}

TEST(LocalUpdate, SingleSale)
{
    auto s = init_state(0, {0}, {});
    s.local_update(0, 1, 1, params(1.0, 0.5));
    EXPECT_NEAR(s.local_weight(0), 1.6487212707001282, 1e-15);
}

TEST(LocalUpdate, GeometricLimit)
{
    auto s = init_state(0, {0}, {});
    const auto p = params(0.9, 0.1);
    for (int k = 0; k < 150; ++k) s.local_update(0, 1, 1, p);
    EXPECT_NEAR(s.log_local_weight(0), 1.0, 1e-6);
}

TEST(LocalUpdate, RejectsUnobservedProvider)
{
    auto s = pair_state();
    EXPECT_THROW(s.local_update(2, 1, 1, params(0.9, 0.1)), IndexError);
    EXPECT_THROW(s.local_update(7, 1, 1, params(0.9, 0.1)), IndexError);
}

TEST(LocalUpdate, ClampBinds)
{
    auto s = init_state(0, {0}, {});
    auto p = params(1.0, 1.0);
    p.log_clamp = 5.0;
    for (int k = 0; k < 10; ++k) s.local_update(0, 1, 1, p);
    EXPECT_EQ(s.log_local_weight(0), 5.0);
}

TEST(Social, SelfIsOne)
{
    auto s = pair_state();
    s.update_social(params(0.9, 0.1));
    EXPECT_EQ(s.social_weight(0, 0), 1.0);
    EXPECT_EQ(s.social_weight(0, 1), 1.0);
}

TEST(Social, BlindTrustForUnverifiable)
{
    auto p = params(0.9, 0.1, 0.1, 0.5);
    p.epsilon[1] = 0.4;
    auto s = pair_state();
    s.update_social(p);
    EXPECT_DOUBLE_EQ(s.social_weight(1, 2), 0.4);
    EXPECT_EQ(s.social_weight(0, 2), 0.0);
    EXPECT_EQ(s.social_weight(1, 1), 0.0);
}

TEST(Social, MismatchDecay)
{
    auto s = init_state(0, {0}, {{1, {0}}});
    const auto p = params(1.0, 0.1, 1.0);
    s.ingest_and_update_social(std::vector<TrustMessage>{{1, 1, 0, 2.0}}, p);
    EXPECT_NEAR(s.social_weight(1, 0), 0.36787944117144233, 1e-15);
}

TEST(Social, AgreementFixedPoint)
{
    auto s = init_state(0, {0, 1}, {{1, {0, 1}}});
    auto p = params(1.0, 0.2, 0.7);
    for (Tick t = 1; t <= 30; ++t)
    {
        std::vector<TrustMessage> msgs;
        for (auto j : {0u, 1u}) msgs.push_back({t, 1, j, s.local_weight(j)});
        s.ingest_and_update_social(msgs, p);
        s.learn(std::pair<std::size_t, int>{t % 2, 1}, p);
    }
    EXPECT_EQ(s.social_weight(1, 0), 1.0);
    EXPECT_EQ(s.social_weight(1, 1), 1.0);
}

TEST(Social, RejectsNonNeighbour)
{
    auto s = pair_state();
    const auto p = params(0.9, 0.1);
    EXPECT_THROW(s.ingest_and_update_social(std::vector<TrustMessage>{{1, 2, 0, 1.0}}, p), ProtocolError);
    EXPECT_THROW(s.ingest_and_update_social(std::vector<TrustMessage>{{1, 1, 1, 1.0}}, p), ProtocolError);
    EXPECT_THROW(s.ingest_and_update_social(std::vector<TrustMessage>{{1, 1, 0, 0.0}}, p), ProtocolError);
}

TEST(Normalize, SingleContributor)
{
    const auto s = init_state(0, {0}, {});
    const auto a = s.normalize_social(0);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].second, 1.0);
}

TEST(Normalize, TwoContributors)
{
    auto s = init_state(0, {0}, {{1, {0}}});
    s.ingest_and_update_social(std::vector<TrustMessage>{{1, 1, 0, 2.0}}, params(1.0, 0.1, 1.0));
    const auto a = s.normalize_social(0);
    EXPECT_NEAR(a[0].second, 0.7310585786300049, 1e-12);
    EXPECT_NEAR(a[1].second, 0.2689414213699951, 1e-12);
}

TEST(Normalize, AllZero)
{
    auto p = params(0.9, 0.1, 0.1, 0.0);
    auto s = init_state(0, {0}, {{1, {1}}});
    s.update_social(p);
    for (const auto& [l, a] : s.normalize_social(1)) EXPECT_EQ(a, 0.0);
    const auto z = s.fuse();
    EXPECT_EQ(z.score(1), 0.0);
    EXPECT_EQ(z.score(0), 1.0);
}

TEST(Fuse, SelfOnlyIsWeightShare)
{
    auto s = init_state(0, {0, 1, 2}, {});
    const auto p = params(1.0, 0.5);
    s.local_update(0, 1, 1, p);
    s.local_update(1, 1, 1, p);
    s.local_update(1, 1, 1, p);
    const auto z = s.fuse();
    const double w0 = std::exp(0.5), w1 = std::exp(1.0), total = w0 + w1 + 1.0;
    EXPECT_NEAR(z.score(0), w0 / total, 1e-15);
    EXPECT_NEAR(z.score(1), w1 / total, 1e-15);
    EXPECT_NEAR(z.score(2), 1.0 / total, 1e-15);
}

TEST(Fuse, IdenticalNeighbourMatchesSingle)
{
    const auto p = params(1.0, 0.5, 0.3);
    auto pairwise = init_state(0, {0, 1}, {{1, {0, 1}}});
    auto single = init_state(0, {0, 1}, {});
    for (auto* s : {&pairwise, &single}) s->local_update(0, 1, 1, p);
    pairwise.ingest_and_update_social(
        std::vector<TrustMessage>{{1, 1, 0, pairwise.local_weight(0)}, {1, 1, 1, pairwise.local_weight(1)}}, p);
    const auto a = pairwise.fuse(), b = single.fuse();
    EXPECT_NEAR(a.score(0), b.score(0), 1e-15);
    EXPECT_NEAR(a.score(1), b.score(1), 1e-15);
}

TEST(Fuse, HandEvaluation)
{
    // Own weight 2 and neighbour report 4 for provider 1 at equal social
    // weight; both report 1 for provider 2.
    auto s = init_state(0, {0, 1}, {{1, {0, 1}}});
    s.local_update(0, 1, 1, params(1.0, std::log(2.0)));
    s.ingest(std::vector<TrustMessage>{{1, 1, 0, 4.0}, {1, 1, 1, 1.0}});
    const auto z = s.fuse();
    EXPECT_NEAR(z.raw[0], 3.0, 1e-14);
    EXPECT_NEAR(z.raw[1], 1.0, 1e-14);
    EXPECT_NEAR(z.score(0), 0.75, 1e-15);
    EXPECT_NEAR(z.score(1), 0.25, 1e-15);
}

TEST(Fuse, MissingCacheContributesZero)
{
    // Neighbour-only provider with no report yet: blind trust but no weight.
    auto s = pair_state();
    s.update_social(params(0.9, 0.1));
    const auto z = s.fuse();
    EXPECT_EQ(z.raw[2], 0.0);
    EXPECT_GT(z.raw[0], 0.0);
}

TEST(Recommend, Argmax)
{
    FusedScores z{{0, 1, 2}, {}, {0.2, 0.7, 0.1}};
    Rng rng(1);
    const IndexSet all{0, 1, 2};
    EXPECT_EQ(recommend(z, all, 0.0, rng), 1u);
}

TEST(Recommend, TieGoesToLowestIndex)
{
    FusedScores z{{0, 1}, {}, {0.5, 0.5}};
    Rng rng(1);
    const IndexSet avail{1, 0};
    EXPECT_EQ(recommend(z, avail, 0.0, rng), 0u);
}

TEST(Recommend, EmptyAvailable)
{
    FusedScores z;
    Rng rng(1);
    EXPECT_THROW(recommend(z, IndexSet{}, 0.0, rng), AvailabilityError);
}

TEST(Recommend, FullExplorationIsUniform)
{
    FusedScores z{{0, 1, 2, 3}, {}, {0.1, 0.6, 0.2, 0.1}};
    Rng rng(9);
    const IndexSet all{0, 1, 2, 3};
    std::vector<int> hits(4, 0);
    const int n = 100000;
    for (int k = 0; k < n; ++k) ++hits[recommend(z, all, 1.0, rng)];
    const double sd = std::sqrt(n * 0.25 * 0.75);
    for (int h : hits) EXPECT_NEAR(h, n / 4.0, 3 * sd);
}

TEST(Properties, BoundednessAndScaleMonotonicity)
{
    // Provider 0's outcomes dominate provider 1's at every interaction.
    const auto p = params(0.9, 0.1);
    auto s = init_state(0, {0, 1}, {});
    Rng rng(4);
    for (int t = 0; t < 2000; ++t)
    {
        const int s1 = uniform01(rng) < 0.3 ? 1 : 0;
        const int s0 = std::max(s1, uniform01(rng) < 0.6 ? 1 : 0);
        s.local_update(0, s0, 1, p);
        s.local_update(1, s1, 1, p);
        ASSERT_GE(s.log_local_weight(0), s.log_local_weight(1));
        ASSERT_LE(s.log_local_weight(0), 0.1 / (1 - 0.9) + 1e-12);
        ASSERT_GE(s.log_local_weight(1), 0.0);
        const IndexSet both{0, 1};
        ASSERT_EQ(argmax_lowest(std::span<const std::size_t>(both), [&](std::size_t j) { return s.fuse().score(j); }), 0u);
    }
}

TEST(Properties, NormalizationSumsToOne)
{
    Rng meta(77);
    for (int trial = 0; trial < 200; ++trial)
    {
        const auto p = params(0.5 + 0.5 * uniform01(meta), 0.05 + uniform01(meta), 0.05 + uniform01(meta), uniform01(meta));
        auto s = init_state(0, {0, 1, 2}, {{1, {1, 2, 3}}, {2, {0, 4}}});
        for (Tick t = 1; t <= 20; ++t)
        {
            std::vector<TrustMessage> msgs;
            for (auto j : {1u, 2u, 3u}) msgs.push_back({t, 1, j, 1.0 + 3 * uniform01(meta)});
            if (uniform01(meta) < 0.5) msgs.push_back({t, 2, 4, 1.0 + uniform01(meta)});
            s.ingest_and_update_social(msgs, p);
            for (auto j : s.known_providers())
            {
                double sum = 0;
                for (const auto& [l, a] : s.normalize_social(j)) sum += a;
                if (sum != 0.0) ASSERT_NEAR(sum, 1.0, 1e-9);
            }
            const auto z = s.fuse();
            const double total = std::accumulate(z.normalized.begin(), z.normalized.end(), 0.0);
            ASSERT_NEAR(total, 1.0, 1e-9);
            s.learn(std::pair<std::size_t, int>{uniform_below(meta, 3), static_cast<int>(uniform_below(meta, 2))}, p);
        }
    }
}

TEST(Properties, MatchesDirectEvaluation)
{
    Rng meta(2024);
    for (int trial = 0; trial < 500; ++trial)
    {
        const double gamma = 0.5 + 0.5 * uniform01(meta);
        const double eta_w = 0.05 + 0.5 * uniform01(meta);
        const double eta_a = 0.05 + 0.5 * uniform01(meta);
        const double eps = 0.05 + 0.9 * uniform01(meta);
        const auto p = params(gamma, eta_w, eta_a, eps);
        auto s = init_state(0, {0, 1, 2}, {{1, {1, 2, 3}}, {2, {0, 3}}});
        oracle::DirectObserver o(0, {0, 1, 2}, {{1, {1, 2, 3}}, {2, {0, 3}}}, gamma, eta_w, eta_a, eps);
        for (Tick t = 1; t <= 15; ++t)
        {
            std::vector<TrustMessage> msgs;
            for (auto [l, j] : {std::pair{1u, 1u}, {1u, 2u}, {1u, 3u}, {2u, 0u}, {2u, 3u}})
            {
                if (uniform01(meta) < 0.8)
                {
                    const double w = 1.0 + 2.0 * uniform01(meta);
                    msgs.push_back({t, l, j, w});
                    o.receive(l, j, w);
                }
            }
            s.ingest_and_update_social(msgs, p);
            o.update_social();
            const auto z = s.fuse();
            const auto [raw, norm] = o.fuse();
            for (std::size_t k = 0; k < raw.size(); ++k)
            {
                ASSERT_TRUE(oracle::close_rel(z.raw[k], raw[k], 1e-9)) << z.raw[k] << " vs " << raw[k];
                ASSERT_TRUE(oracle::close_rel(z.normalized[k], norm[k], 1e-9));
            }
            const std::pair<std::size_t, int> sale{uniform_below(meta, 4), static_cast<int>(uniform_below(meta, 2))};
            const bool seen = sale.first <= 2;
            s.learn(seen ? std::optional(sale) : std::nullopt, p);
            o.learn(seen ? std::optional(sale) : std::nullopt);
            for (auto j : {0u, 1u, 2u}) ASSERT_TRUE(oracle::close_rel(s.local_weight(j), o.w.at(j), 1e-9));
        }
    }
}

TEST(AddProvider, FreshWeightsAtOne)
{
    auto s = pair_state();
    s.local_update(0, 1, 1, params(1.0, 0.5));
    s.add_provider(5, true, {1});
    EXPECT_EQ(s.known_providers(), (IndexSet{0, 1, 2, 5}));
    EXPECT_EQ(s.local_weight(5), 1.0);
    EXPECT_EQ(s.social_weight(1, 5), 1.0);
    EXPECT_NEAR(s.local_weight(0), std::exp(0.5), 1e-15);
    EXPECT_TRUE(s.observes(1, 5));
    EXPECT_THROW(s.add_provider(6, false, {3}), IndexError);
}
