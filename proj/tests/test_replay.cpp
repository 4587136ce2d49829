#include <gtest/gtest.h>

#include <sstream>

#include "dol3/replay.hpp"

using namespace dol3;

namespace
{

const std::string kFixture = std::string(DOL3_TEST_DATA_DIR) + "/ratings_fixture.csv";

RatingsTable table_from(const std::string& text, const ColumnMapping& cols = {})
{
    std::istringstream in(text);
    return load_ratings(in, cols);
}

ReplayConfig base_config(std::vector<RecommenderBehavior> recs)
{
    ReplayConfig c;
    c.sim.observers = 1;
    c.sim.consumers = 1;
    c.sim.explore_prob = 0.0;
    c.recommenders = std::move(recs);
    return c;
}

} // namespace

TEST(LoadRatings, MinMaxNormalisation)
{
    const auto t = table_from("userId,movieId,rating,timestamp\n1,1,1,10\n1,2,2,11\n2,1,3,12\n2,2,4,13\n3,3,5,14\n");
    ASSERT_EQ(t.rows.size(), 5u);
    const std::vector<double> want{0, 0.25, 0.5, 0.75, 1};
    for (std::size_t k = 0; k < 5; ++k) EXPECT_DOUBLE_EQ(t.rows[k].rating, want[k]);
    EXPECT_EQ(t.r_min, 1.0);
    EXPECT_EQ(t.r_max, 5.0);
}

TEST(LoadRatings, DegenerateRange)
{
    EXPECT_THROW(table_from("userId,movieId,rating\n1,1,3\n2,2,3\n"), DataError);
}

TEST(LoadRatings, SkipsMalformedRows)
{
    const auto t = table_from("userId,movieId,rating\n1,1,1\n2,2,oops\n3,3,5\n4,4,2\n");
    EXPECT_EQ(t.rows.size(), 3u);
    EXPECT_EQ(t.skipped, 1u);
}

TEST(LoadRatings, MissingColumnAndEmptyFile)
{
    EXPECT_THROW(table_from("user,movieId,rating\n1,1,1\n"), SchemaError);
    EXPECT_THROW(table_from(""), DataError);
    EXPECT_THROW(table_from("userId,movieId,rating\n"), DataError);
    EXPECT_THROW(load_ratings(std::string("/nonexistent/ratings.csv")), IoError);
}

TEST(LoadRatings, CustomColumnsAndQuotes)
{
    ColumnMapping m;
    m.user = "u";
    m.item = "i";
    m.rating = "score";
    const auto t = table_from("i,score,u\r\n\"A, the\",0,x\r\nB,10,y\r\n", m);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0].item, "A, the");
    EXPECT_EQ(t.rows[1].rating, 1.0);
    EXPECT_FALSE(t.rows[0].timestamp.has_value());
}

TEST(LoadRatings, Fixture)
{
    const auto t = load_ratings(kFixture);
    EXPECT_EQ(t.rows.size(), 200u);
    EXPECT_EQ(t.skipped, 0u);
}

TEST(ReplayOrder, TimestampThenFileOrder)
{
    const auto timed = table_from("userId,movieId,rating,timestamp\n1,1,1,30\n1,2,2,10\n2,1,3,20\n");
    EXPECT_EQ(replay_order(timed), (std::vector<std::size_t>{1, 2, 0}));
    const auto untimed = table_from("userId,movieId,rating\n1,1,1\n1,2,2\n2,1,3\n");
    EXPECT_EQ(replay_order(untimed), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Predict, Behaviours)
{
    Rng rng(1);
    EXPECT_EQ(predict(behavior::Faithful{0}, 0.3, 1, rng), 0.3);
    EXPECT_EQ(predict(behavior::Malicious{}, 0.3, 1, rng), 0.7);
    const behavior::Intermittent im{2, 1};
    EXPECT_EQ(predict(im, 0.2, 1, rng), 0.8);
    EXPECT_EQ(predict(im, 0.2, 2, rng), 0.8);
    EXPECT_EQ(predict(im, 0.2, 3, rng), 0.2);
    for (int k = 0; k < 10000; ++k)
    {
        const double x = predict(behavior::Faithful{0.5}, 0.9, 1, rng);
        ASSERT_GE(x, 0.0);
        ASSERT_LE(x, 1.0);
    }
}

TEST(Replay, FaithfulIsPerfect)
{
    const auto t = load_ratings(kFixture);
    for (auto model : {ModelKind::Dol3, ModelKind::Random, ModelKind::Frequency})
    {
        auto c = base_config({behavior::Faithful{0}, behavior::Faithful{0}, behavior::Faithful{0}});
        c.sim.models = {model};
        c.sim.observers = 3;
        c.sim.consumers = 4;
        const auto r = replay(t, c, 1);
        EXPECT_EQ(r.final_rmse(), 0.0);
        EXPECT_EQ(r.final_accuracy(), 100.0);
        EXPECT_EQ(r.points.size(), 200u);
    }
}

TEST(Replay, SingleInverterOnBinaryRatings)
{
    std::string csv = "userId,movieId,rating\n";
    for (int k = 0; k < 100; ++k) csv += std::to_string(k % 7) + ",1," + std::to_string(k % 2) + "\n";
    const auto t = table_from(csv);
    const auto r = replay(t, base_config({behavior::Malicious{}}), 3);
    for (const auto& p : r.points)
    {
        EXPECT_EQ(p.rmse, 1.0);
        EXPECT_EQ(p.accuracy, 50.0);
    }
}

TEST(Replay, Deterministic)
{
    const auto t = load_ratings(kFixture);
    auto c = base_config({behavior::Malicious{}, behavior::Faithful{0.1}, behavior::Intermittent{10, 10}});
    c.sim.observers = 3;
    c.noise_rate = 0.2;
    EXPECT_EQ(replay(t, c, 8), replay(t, c, 8));
    EXPECT_NE(replay(t, c, 8).points, replay(t, c, 9).points);
}

// DOL3 exploits greedily; with inverters at the lowest indices it needs
// enough exploration to find the faithful recommender before it locks in.
int dol3_wins(std::vector<RecommenderBehavior> recs, double explore, std::optional<Tick> reset)
{
    const auto t = load_ratings(kFixture);
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed)
    {
        auto c = base_config(recs);
        c.sim.explore_prob = explore;
        c.sim.reset_period = reset;
        c.sim.models = {ModelKind::Dol3};
        const double dol3 = replay(t, c, seed).final_accuracy();
        c.sim.models = {ModelKind::Random};
        const double rnd = replay(t, c, seed).final_accuracy();
        if (dol3 > rnd) ++wins;
    }
    return wins;
}

TEST(Replay, Dol3BeatsRandomWithInverters)
{
    EXPECT_GE(dol3_wins({behavior::Faithful{0}, behavior::Malicious{}, behavior::Malicious{}}, 0.05, 100), 45);
    EXPECT_GE(dol3_wins({behavior::Malicious{}, behavior::Malicious{}, behavior::Faithful{0}}, 0.2, std::nullopt), 45);
}

TEST(Replay, AccuracyFallsWithNoise)
{
    const auto t = load_ratings(kFixture);
    std::vector<double> mean_acc;
    for (double sigma : {0.0, 0.2, 0.5})
    {
        double sum = 0;
        for (std::uint64_t seed = 1; seed <= 30; ++seed)
        {
            auto c = base_config({behavior::Faithful{sigma}, behavior::Faithful{sigma}});
            sum += replay(t, c, seed).final_accuracy();
        }
        mean_acc.push_back(sum / 30);
    }
    EXPECT_GE(mean_acc[0], mean_acc[1]);
    EXPECT_GE(mean_acc[1], mean_acc[2]);
}

TEST(ReplaySweep, GridShapeAndCsv)
{
    const auto t = load_ratings(kFixture);
    auto base = base_config({behavior::Faithful{0}, behavior::Faithful{0}, behavior::Faithful{0}});
    base.sim.observers = 4;
    ReplaySweep sw;
    sw.networks = {parse_network_spec("complete"), parse_network_spec("small_world(k=2,beta=0.1)")};
    sw.malicious_counts = {0, 2};
    sw.noise_rates = {0.0, 0.3};
    sw.models = {ModelKind::Dol3, ModelKind::Random};
    sw.runs = 2;
    const auto serial = replay_sweep(t, base, sw, 1);
    EXPECT_EQ(serial.size(), 2u * 2 * 2 * 2 * 2);
    EXPECT_EQ(replay_sweep(t, base, sw, 3), serial);
    std::ostringstream os;
    write_replay_csv(os, serial);
    EXPECT_EQ(os.str().rfind("t,rmse,accuracy,malicious_count,noise_rate,network_type,model,run\n1,", 0), 0u);
    sw.malicious_counts = {4};
    EXPECT_THROW(replay_sweep(t, base, sw), ParameterError);
}

TEST(ReplayConfig, JsonRoundTrip)
{
    auto c = base_config({behavior::Malicious{}, behavior::Faithful{0.1}, behavior::Intermittent{3, 4}});
    c.match_threshold = 0.1;
    c.noise_rate = 0.05;
    c.columns.rating = "stars";
    c.max_rows = 50;
    c.sim.providers = 3;
    const auto back = replay_config_from_json(to_json(c));
    EXPECT_EQ(back.recommenders, c.recommenders);
    EXPECT_EQ(back.match_threshold, 0.1);
    EXPECT_EQ(back.columns, c.columns);
    EXPECT_EQ(back.max_rows, c.max_rows);
    EXPECT_EQ(back.sim, c.sim);
    EXPECT_THROW(replay_config_from_json(Json::parse(R"({"recommenders":[{"behavior":"sneaky"}]})")), SchemaError);
}
