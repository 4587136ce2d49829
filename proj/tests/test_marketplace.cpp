#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "dol3/marketplace.hpp"

using namespace dol3;

TEST(ConsumerAt, Schedule)
{
    EXPECT_EQ(consumer_at(1, 3), 0u);
    EXPECT_EQ(consumer_at(5, 3), 1u);
    EXPECT_EQ(consumer_at(6, 3), 2u);
    EXPECT_THROW(consumer_at(0, 3), ParameterError);
}

TEST(ConsumerAt, EveryConsumerOncePerPeriod)
{
    for (std::size_t n = 1; n <= 9; ++n)
    {
        for (Tick start = 1; start <= 3 * n; start += n)
        {
            std::vector<int> hits(n, 0);
            for (Tick t = start; t < start + n; ++t) ++hits[consumer_at(t, n)];
            for (int h : hits) EXPECT_EQ(h, 1);
        }
    }
}

TEST(Quality, Constant)
{
    Rng rng(1);
    EXPECT_EQ(quality_at(quality::Constant{0.7}, 999, rng), 0.7);
}

TEST(Quality, PeriodicSwitch)
{
    Rng rng(1);
    const quality::PeriodicSwitch q{100, {0.9, 0.1}};
    EXPECT_EQ(quality_at(q, 150, rng), 0.1);
    EXPECT_EQ(quality_at(q, 100, rng), 0.9);
    EXPECT_EQ(quality_at(q, 101, rng), 0.1);
    EXPECT_EQ(quality_at(q, 201, rng), 0.9);
}

TEST(Quality, RandomWalkStaysInUnitInterval)
{
    QualitySource src(quality::RandomWalk{0.5, 0.05}, Rng(3));
    for (Tick t = 1; t <= 100000; ++t)
    {
        const double p = src.at(t);
        ASSERT_GE(p, 0.0);
        ASSERT_LE(p, 1.0);
    }
}

TEST(Quality, RandomWalkIsFunctionOfTime)
{
    // Skipping queries must not change later values.
    QualitySource dense(quality::RandomWalk{0.5, 0.1}, Rng(8));
    QualitySource sparse(quality::RandomWalk{0.5, 0.1}, Rng(8));
    std::vector<double> all;
    for (Tick t = 1; t <= 50; ++t) all.push_back(dense.at(t));
    EXPECT_EQ(sparse.at(1), 0.5);
    EXPECT_EQ(sparse.at(17), all[16]);
    EXPECT_EQ(sparse.at(50), all[49]);
}

TEST(Quality, IntermittentPhases)
{
    Rng rng(1);
    const quality::IntermittentMalicious q{0.9, 0.2, 3, 2};
    const std::vector<double> want{0.9, 0.9, 0.9, 0.2, 0.2, 0.9};
    for (Tick t = 1; t <= 6; ++t) EXPECT_EQ(quality_at(q, t, rng), want[t - 1]) << t;
}

TEST(Quality, ValidationListsProblems)
{
    EXPECT_TRUE(validate_process(quality::Constant{0.3}).empty());
    EXPECT_FALSE(validate_process(quality::Constant{1.3}).empty());
    EXPECT_EQ(validate_process(quality::PeriodicSwitch{0, {2.0}}).size(), 2u);
}

TEST(SampleSale, Extremes)
{
    Rng rng(5);
    for (int k = 0; k < 1000; ++k)
    {
        EXPECT_EQ(sample_sale(1.0, rng), 1);
        EXPECT_EQ(sample_sale(0.0, rng), 0);
    }
    EXPECT_THROW(sample_sale(1.5, rng), ParameterError);
    EXPECT_THROW(sample_sale(-0.1, rng), ParameterError);
}

TEST(SampleSale, EmpiricalMeanHalf)
{
    Rng rng(6);
    int sum = 0;
    for (int k = 0; k < 100000; ++k) sum += sample_sale(0.5, rng);
    EXPECT_NEAR(sum / 100000.0, 0.5, 0.01);
}

TEST(SampleSale, EmpiricalFrequencyThreeSigma)
{
    Rng rng(7);
    long sum = 0;
    for (int k = 0; k < 1000000; ++k) sum += sample_sale(0.3, rng);
    const double f = static_cast<double>(sum) / 1e6;
    EXPECT_GE(f, 0.2986);
    EXPECT_LE(f, 0.3014);
}

namespace
{
ProviderState provider(std::uint64_t stock, std::uint64_t refill)
{
    ProviderState s;
    s.stock_max = stock;
    s.refill = refill;
    return s;
}
} // namespace

TEST(RecordSale, Threshold)
{
    auto s = record_sale(provider(2, 3), 1);
    EXPECT_EQ(s.sales, 1u);
    EXPECT_TRUE(s.active());
    s = record_sale(s, 2);
    EXPECT_EQ(s.mode, ProviderMode::Idle);
    EXPECT_EQ(s.idle_steps, 0u);
    EXPECT_EQ(s.sales, 0u);
    EXPECT_THROW(record_sale(s, 3), StateError);
}

TEST(TickIdle, CounterTrace)
{
    auto s = record_sale(provider(1, 3), 1);
    ASSERT_EQ(s.mode, ProviderMode::Idle);
    s = tick_idle(s);
    s = tick_idle(s);
    EXPECT_EQ(s.mode, ProviderMode::Idle);
    EXPECT_EQ(s.idle_steps, 2u);
    s = tick_idle(s);
    EXPECT_TRUE(s.active());
    EXPECT_EQ(tick_idle(s), s);
}

TEST(TickIdle, ZeroRefillReactivatesSameTick)
{
    const auto s = record_sale(provider(1, 0), 4);
    EXPECT_TRUE(s.active());
    EXPECT_EQ(s.sales, 0u);
}

TEST(ActiveIdle, FullTrace)
{
    // Per tick: purchase if active, then idle ticks, then the sale is booked.
    auto s = provider(2, 3);
    std::string trace;
    for (Tick t = 1; t <= 12; ++t)
    {
        const bool sells = s.active();
        trace += sells ? 'A' : 'I';
        s = tick_idle(s, t);
        if (sells) s = record_sale(s, t);
    }
    EXPECT_EQ(trace, "AAIIIAAIIIAA");
}

TEST(ActiveProviders, Intersection)
{
    std::vector<ProviderState> st(3);
    EXPECT_EQ(active_providers(st, {0, 1, 2}), (IndexSet{0, 1, 2}));
    st[1].mode = ProviderMode::Idle;
    EXPECT_EQ(active_providers(st, {1, 2}), (IndexSet{2}));
    for (auto& s : st) s.mode = ProviderMode::Idle;
    EXPECT_TRUE(active_providers(st, {0, 1, 2}).empty());
}
