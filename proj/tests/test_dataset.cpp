#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "inmo/dataset.hpp"
#include "inmo/error.hpp"
#include "inmo/synthetic.hpp"
#include "test_util.hpp"

using namespace inmo;

namespace {

void expect_transpose_consistent(const InteractionDataset& ds) {
    std::size_t via_items = 0;
    for (Index u = 0; u < ds.num_users(); ++u) {
        const auto items = ds.items_of(u);
        EXPECT_TRUE(std::is_sorted(items.begin(), items.end()));
        EXPECT_EQ(std::adjacent_find(items.begin(), items.end()), items.end());
        for (Index i : items) {
            ASSERT_LT(i, ds.num_items());
            const auto users = ds.users_of(i);
            EXPECT_TRUE(std::binary_search(users.begin(), users.end(), u));
        }
    }
    for (Index i = 0; i < ds.num_items(); ++i) {
        const auto users = ds.users_of(i);
        EXPECT_TRUE(std::is_sorted(users.begin(), users.end()));
        via_items += users.size();
        for (Index u : users) EXPECT_TRUE(ds.contains(u, i));
    }
    EXPECT_EQ(via_items, ds.num_edges());
}

std::set<Edge> edge_set(const InteractionDataset& ds) {
    const auto e = ds.edges();
    return {e.begin(), e.end()};
}

}  // namespace

TEST(LoadInteractions, ParsesTsvTriples) {
    std::istringstream in("a\tx\na\ty\nb\tx\n");
    const auto raw = parse_interactions(in, FileFormat::Tsv);
    ASSERT_EQ(raw.records.size(), 3u);
    std::set<std::string> users;
    for (const auto& r : raw.records) users.insert(r.user);
    EXPECT_EQ(users.size(), 2u);
    EXPECT_FALSE(raw.records[0].rating.has_value());
}

TEST(LoadInteractions, ParsesRatingAndTimestampAndSkipsComments) {
    std::istringstream in("# header\nu1,i1,4.5,1700000000\n\nu2,i2,2\n");
    const auto raw = parse_interactions(in, FileFormat::Csv);
    ASSERT_EQ(raw.records.size(), 2u);
    EXPECT_DOUBLE_EQ(*raw.records[0].rating, 4.5);
    EXPECT_EQ(*raw.records[0].timestamp, 1700000000);
    EXPECT_DOUBLE_EQ(*raw.records[1].rating, 2.0);
    EXPECT_FALSE(raw.records[1].timestamp.has_value());
}

TEST(LoadInteractions, EmptyInputGivesNoRecords) {
    std::istringstream in("");
    EXPECT_TRUE(parse_interactions(in, FileFormat::Tsv).records.empty());
}

TEST(LoadInteractions, SingleFieldLineIsMalformedWithLineNumber) {
    std::istringstream in("a\n");
    try {
        parse_interactions(in, FileFormat::Tsv);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
    }
}

TEST(LoadInteractions, MissingFileIsDataError) {
    EXPECT_THROW(load_interactions("/nonexistent/file.tsv", FileFormat::Tsv), DataError);
}

TEST(Preprocess, StrictRatingThresholdCanEmptyTheDataset) {
    RawInteractions raw;
    for (int u = 0; u < 3; ++u)
        for (int i = 0; i < 3; ++i) raw.records.push_back({std::to_string(u), std::to_string(i), 3.0, std::nullopt});
    EXPECT_THROW(preprocess(raw, {3.0, 1}), DataError);
}

TEST(Preprocess, DenseTwelveByTwelveSurvivesKCore) {
    RawInteractions raw;
    for (int u = 0; u < 12; ++u)
        for (int i = 0; i < 12; ++i)
            raw.records.push_back({"u" + std::to_string(u), "i" + std::to_string(i), 5.0, std::nullopt});
    const auto ds = preprocess(raw, {3.0, 10});
    EXPECT_EQ(ds.num_users(), 12u);
    EXPECT_EQ(ds.num_items(), 12u);
    EXPECT_EQ(ds.num_edges(), 144u);
    EXPECT_EQ((*ds.user_keys())[0], "u0");
}

TEST(Preprocess, KCoreIteratesToFixpoint) {
    // u0..u3 rate i0..i2; u3 and u4 also rate i3, u4 rates i4. With min_degree 3 the
    // first pass drops i3, i4 and u4; the second pass confirms the fixpoint.
    RawInteractions raw;
    for (int u = 0; u < 4; ++u)
        for (int i = 0; i < 3; ++i) raw.records.push_back({"u" + std::to_string(u), "i" + std::to_string(i), {}, {}});
    raw.records.push_back({"u3", "i3", {}, {}});
    raw.records.push_back({"u4", "i3", {}, {}});
    raw.records.push_back({"u4", "i4", {}, {}});
    raw.records.push_back({"u0", "i0", {}, {}});  // duplicate
    const auto ds = preprocess(raw, {3.0, 3});
    EXPECT_EQ(ds.num_users(), 4u);
    EXPECT_EQ(ds.num_items(), 3u);
    EXPECT_EQ(ds.num_edges(), 12u);
    EXPECT_FALSE(ds.has_isolated_entities());
    for (Index u = 0; u < ds.num_users(); ++u) EXPECT_GE(ds.user_degree(u), 3u);
}

TEST(Preprocess, RatinglessRecordsAlwaysPass) {
    RawInteractions raw;
    raw.records.push_back({"a", "x", std::nullopt, std::nullopt});
    raw.records.push_back({"a", "y", 1.0, std::nullopt});
    const auto ds = preprocess(raw, {3.0, 1});
    EXPECT_EQ(ds.num_edges(), 1u);
}

TEST(InteractionDataset, TransposeConsistencyOnRandomGraphs) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto ds = fixtures::random_dataset(40 + seed, 30, 0.1, seed);
        expect_transpose_consistent(ds);
        expect_transpose_consistent(ds.transposed());
        EXPECT_EQ(ds.transposed().transposed(), ds);
    }
}

TEST(Split, CountsFollowRatiosWithTrainFirstRemainders) {
    const SplitRatios r;
    EXPECT_EQ(split_counts(10, r), (std::array<std::size_t, 3>{7, 1, 2}));
    EXPECT_EQ(split_counts(1, r), (std::array<std::size_t, 3>{1, 0, 0}));
    EXPECT_EQ(split_counts(2, r), (std::array<std::size_t, 3>{2, 0, 0}));
    EXPECT_EQ(split_counts(8, r), (std::array<std::size_t, 3>{6, 1, 1}));
    for (std::size_t k = 1; k < 200; ++k) {
        const auto c = split_counts(k, r);
        EXPECT_EQ(c[0] + c[1] + c[2], k);
        EXPECT_GE(c[0], 1u);
    }
}

TEST(Split, ConservationDisjointnessAndDeterminism) {
    const auto ds = fixtures::random_dataset(60, 40, 0.15, 3);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = split_per_user(ds, {}, seed);
        EXPECT_EQ(s.train.num_edges() + s.valid.num_edges() + s.test.num_edges(), ds.num_edges());
        auto all = edge_set(s.train);
        for (const auto& e : s.valid.edges()) EXPECT_TRUE(all.insert(e).second);
        for (const auto& e : s.test.edges()) EXPECT_TRUE(all.insert(e).second);
        EXPECT_EQ(all, edge_set(ds));
        for (Index u = 0; u < ds.num_users(); ++u) EXPECT_GE(s.train.user_degree(u), 1u);
        expect_transpose_consistent(s.train);

        const auto again = split_per_user(ds, {}, seed);
        EXPECT_EQ(again.train, s.train);
        EXPECT_EQ(again.valid, s.valid);
        EXPECT_EQ(again.test, s.test);
    }
}

TEST(Split, PerUserExactCounts) {
    std::vector<Edge> edges;
    for (Index i = 0; i < 10; ++i) edges.push_back({0, i});
    edges.push_back({1, 0});
    const auto ds = InteractionDataset::from_edges(2, 10, edges);
    const auto s = split_per_user(ds, {}, 42);
    EXPECT_EQ(s.train.user_degree(0), 7u);
    EXPECT_EQ(s.valid.user_degree(0), 1u);
    EXPECT_EQ(s.test.user_degree(0), 2u);
    EXPECT_EQ(s.train.user_degree(1), 1u);
    EXPECT_EQ(s.valid.user_degree(1), 0u);
    EXPECT_EQ(s.test.user_degree(1), 0u);
}

TEST(Split, RejectsBadRatios) {
    const auto ds = fixtures::random_dataset(5, 5, 0.5, 1);
    EXPECT_THROW(split_per_user(ds, {0.5, 0.1, 0.1}, 0), ConfigError);
    EXPECT_THROW(split_per_user(ds, {0.9, 0.0, 0.1}, 0), ConfigError);
}

TEST(NewInteractionsScenario, HoldsOutTwentyPercentPerUser) {
    std::vector<Edge> edges;
    for (Index i = 0; i < 15; ++i) edges.push_back({0, i});
    const auto ds = InteractionDataset::from_edges(1, 15, edges);
    DatasetSplit split{ds, ds.with_edges({}), ds.with_edges({}), 0, {}};
    // 10 train edges for the user, the other five go to test.
    std::vector<Edge> train, test;
    for (Index i = 0; i < 10; ++i) train.push_back({0, i});
    for (Index i = 10; i < 15; ++i) test.push_back({0, i});
    split.train = ds.with_edges(train);
    split.test = ds.with_edges(test);
    const auto sc = make_new_interactions_scenario(split, 0.2, 9);
    EXPECT_EQ(sc.train_view.user_degree(0), 8u);
    EXPECT_EQ(sc.test_observed, split.train);
    EXPECT_THROW(make_new_interactions_scenario(split, 0.0, 9), ConfigError);
    EXPECT_THROW(make_new_interactions_scenario(split, 1.0, 9), ConfigError);
}

TEST(NewInteractionsScenario, ConservationAndTargetDisjointness) {
    const auto ds = fixtures::random_dataset(50, 40, 0.2, 11);
    const auto split = split_per_user(ds, {}, 5);
    const auto sc = make_new_interactions_scenario(split, 0.2, 6);
    for (Index u = 0; u < ds.num_users(); ++u) {
        const auto kept = sc.train_view.items_of(u);
        for (Index i : kept) EXPECT_TRUE(split.train.contains(u, i));
        EXPECT_EQ(split.train.user_degree(u) - kept.size(), fraction_count(0.2, split.train.user_degree(u)));
        for (Index i : sc.test_targets.items_of(u)) EXPECT_FALSE(sc.test_observed.contains(u, i));
    }
    expect_transpose_consistent(sc.train_view);
}

TEST(NewUsersItemsScenario, CountsAndRemoval) {
    const auto ds = make_block_dataset({10, 10, 2, 0.8, 0.1, 3});
    const auto split = split_per_user(ds, {}, 1);
    const auto sc = make_new_users_items_scenario(split, 0.2, 4);
    EXPECT_EQ(sc.new_user_ids.size(), 2u);
    EXPECT_EQ(sc.new_item_ids.size(), 2u);
    for (Index u : sc.new_user_ids) {
        EXPECT_EQ(sc.train_view.user_degree(u), 0u);
        EXPECT_EQ(sc.valid_view.user_degree(u), 0u);
    }
    for (Index i : sc.new_item_ids) EXPECT_EQ(sc.train_view.item_degree(i), 0u);
    EXPECT_EQ(sc.test_targets, split.test);
    for (const auto& e : sc.test_targets.edges()) EXPECT_FALSE(sc.test_observed.contains(e.user, e.item));
    EXPECT_THROW(make_new_users_items_scenario(split, 0.0, 4), ConfigError);
}

namespace {

// Independent replay of the seeded removal: own Fisher-Yates over raw mt19937_64 draws.
std::vector<Index> replay_pick(std::mt19937_64& rng, std::size_t count, double frac) {
    std::vector<Index> ids(count);
    for (std::size_t k = 0; k < count; ++k) ids[k] = static_cast<Index>(k);
    for (std::size_t i = count; i > 1; --i) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % i;
        std::uint64_t x;
        do x = rng();
        while (x >= limit);
        std::swap(ids[i - 1], ids[x % i]);
    }
    ids.resize(static_cast<std::size_t>(frac * static_cast<double>(count) + 1e-9));
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace

TEST(NewUsersItemsScenario, FiveByFiveSeedSevenReplaysExactly) {
    std::vector<Edge> edges;
    for (Index u = 0; u < 5; ++u)
        for (Index i = 0; i < 5; ++i)
            if ((u + i) % 2 == 0 || u == i + 1) edges.push_back({u, i});
    const auto ds = InteractionDataset::from_edges(5, 5, edges);
    const auto split = split_per_user(ds, {}, 3);
    const auto sc = make_new_users_items_scenario(split, 0.4, 7);

    std::mt19937_64 rng(7);
    const auto users = replay_pick(rng, 5, 0.4);
    const auto items = replay_pick(rng, 5, 0.4);
    EXPECT_EQ(sc.new_user_ids, users);
    EXPECT_EQ(sc.new_item_ids, items);
    std::vector<Edge> expected;
    for (const auto& e : split.train.edges())
        if (std::find(users.begin(), users.end(), e.user) == users.end() &&
            std::find(items.begin(), items.end(), e.item) == items.end())
            expected.push_back(e);
    EXPECT_EQ(sc.train_view.edges(), expected);
}

TEST(EdgeDump, RoundTrip) {
    const auto ds = fixtures::random_dataset(20, 15, 0.2, 8);
    std::stringstream buf;
    write_edges(buf, ds);
    EXPECT_EQ(read_edges(buf, 20, 15), ds);
}

TEST(BlockDataset, NoIsolatedEntitiesAndDeterministic) {
    const BlockSpec spec{200, 150, 4, 0.3, 0.02, 5};
    const auto a = make_block_dataset(spec);
    EXPECT_FALSE(a.has_isolated_entities());
    EXPECT_EQ(a, make_block_dataset(spec));
}
