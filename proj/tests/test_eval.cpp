#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "inmo/eval.hpp"
#include "inmo/random.hpp"
#include "test_util.hpp"

using namespace inmo;

namespace {

// One-dimensional representations whose item scores are given directly.
Representations fixed_scores(std::size_t n_users, const std::vector<double>& item_scores) {
    Representations r;
    r.r_u = Matrix(n_users, 1, 1.0);
    r.r_i = Matrix(item_scores.size(), 1);
    for (std::size_t i = 0; i < item_scores.size(); ++i) r.r_i(i, 0) = item_scores[i];
    return r;
}

}  // namespace

TEST(Metrics, SingleTargetAtRankOne) {
    const std::vector<Index> ranked{4, 1, 2}, targets{4};
    const auto m = recall_precision_ndcg(ranked, targets, 20);
    EXPECT_EQ(m.recall, 1.0);
    EXPECT_EQ(m.precision, 0.05);
    EXPECT_EQ(m.ndcg, 1.0);
}

TEST(Metrics, SingleTargetAtRankTwo) {
    const std::vector<Index> ranked{4, 1, 2}, targets{1};
    EXPECT_NEAR(recall_precision_ndcg(ranked, targets, 20).ndcg, 1.0 / std::log2(3.0), 1e-12);
}

TEST(Metrics, NoHits) {
    const std::vector<Index> ranked{0, 1, 2}, targets{7, 9};
    const auto m = recall_precision_ndcg(ranked, targets, 3);
    EXPECT_EQ(m.recall, 0.0);
    EXPECT_EQ(m.precision, 0.0);
    EXPECT_EQ(m.ndcg, 0.0);
}

TEST(Metrics, IdealDcgUsesMinOfKAndTargets) {
    const std::vector<Index> ranked{5, 6, 0}, targets{5, 6, 7};
    const auto m = recall_precision_ndcg(ranked, targets, 2);
    EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3.0);
    EXPECT_EQ(m.precision, 1.0);
    EXPECT_DOUBLE_EQ(m.ndcg, 1.0);
    // hits at ranks 1 and 3 of k = 3: (1 + 1/2) / (1 + 1/log2 3 + 1/2)
    const std::vector<Index> r2{5, 0, 6};
    EXPECT_NEAR(recall_precision_ndcg(r2, targets, 3).ndcg, 1.5 / (1.5 + 1.0 / std::log2(3.0)), 1e-15);
}

TEST(Metrics, EmptyTargetsRejected) {
    const std::vector<Index> ranked{0};
    EXPECT_THROW(recall_precision_ndcg(ranked, {}, 20), std::invalid_argument);
}

TEST(Metrics, PermutationBelowTopKIsIrrelevant) {
    const std::vector<Index> targets{2, 8};
    const std::vector<Index> a{2, 0, 1, 8, 9, 5}, b{2, 0, 1, 5, 9, 8};
    const auto ma = recall_precision_ndcg(a, targets, 3), mb = recall_precision_ndcg(b, targets, 3);
    EXPECT_EQ(ma.ndcg, mb.ndcg);
    EXPECT_EQ(ma.recall, mb.recall);
}

TEST(Metrics, AppendingAHitNeverLowersNdcg) {
    const std::vector<Index> targets{1, 3, 5, 7};
    std::vector<Index> ranked{1, 0, 2};
    double prev = recall_precision_ndcg(ranked, targets, 20).ndcg;
    for (Index extra : {4, 3, 6, 7}) {
        ranked.push_back(extra);
        const double next = recall_precision_ndcg(ranked, targets, 20).ndcg;
        EXPECT_GE(next, prev);
        prev = next;
    }
}

TEST(Evaluate, OracleModelAchievesRecallUpperBound) {
    const auto full = fixtures::random_dataset(30, 40, 0.3, 2);
    const auto split = split_per_user(full, {0.7, 0.1, 0.2}, 3);
    // Each user's own test items score 1, everything else 0.
    for (std::size_t k : {2u, 20u}) {
        double expected = 0.0;
        std::size_t users = 0;
        double got = 0.0;
        for (Index u = 0; u < 30; ++u) {
            const auto tgt = split.test.items_of(u);
            if (tgt.empty()) continue;
            Representations r;
            r.r_u = Matrix(30, 40);
            r.r_i = Matrix(40, 40);
            for (Index i = 0; i < 40; ++i) r.r_i(i, i) = 1.0;
            for (Index i : tgt) r.r_u(u, i) = 1.0;
            const auto ranked = top_k(u, r, split.train.items_of(u), k);
            got += recall_precision_ndcg(ranked, tgt, k).recall;
            expected += static_cast<double>(std::min(k, tgt.size())) / static_cast<double>(tgt.size());
            ++users;
        }
        EXPECT_NEAR(got / users, expected / users, 1e-12);
    }
}

TEST(Evaluate, RandomScoresRecallMatchesExpectation) {
    // 2000 users, 100 items, 5 targets each, no exclusions: E[recall@20] = 20/100.
    const std::size_t n = 2000, m = 100;
    Rng rng(5);
    std::vector<Edge> targets;
    for (Index u = 0; u < n; ++u) {
        std::vector<Index> items(m);
        std::iota(items.begin(), items.end(), 0);
        shuffle(items, rng);
        for (int t = 0; t < 5; ++t) targets.push_back({u, items[t]});
    }
    const auto tgt = InteractionDataset::from_edges(n, m, targets);
    Representations r;
    r.r_u = Matrix(n, m);
    r.r_i = Matrix::identity(m);
    for (double& v : r.r_u.data()) v = uniform_real(rng);
    const auto report = evaluate(r, InteractionDataset::from_edges(n, m, {}), tgt, "random");
    EXPECT_NEAR(report.groups.at("all").mean.recall, 0.2, 0.01);
    EXPECT_NEAR(report.groups.at("all").mean.precision, 0.05, 0.0025);
}

TEST(Evaluate, UsersWithoutTargetsAreExcluded) {
    const auto observed = InteractionDataset::from_edges(3, 4, {{0, 0}, {1, 1}, {2, 2}});
    const auto targets = InteractionDataset::from_edges(3, 4, {{0, 1}});
    const auto report = evaluate(fixed_scores(3, {4, 3, 2, 1}), observed, targets, "t");
    EXPECT_EQ(report.groups.at("all").n_users, 1u);
    EXPECT_EQ(report.groups.at("all").mean.ndcg, 1.0);  // item 0 is excluded, so item 1 ranks first
}

TEST(Evaluate, ExclusionFlag) {
    const auto observed = InteractionDataset::from_edges(1, 3, {{0, 0}});
    const auto targets = InteractionDataset::from_edges(1, 3, {{0, 1}});
    EvalOptions opts;
    opts.exclude_observed = false;
    const auto r = evaluate(fixed_scores(1, {3, 2, 1}), observed, targets, "t", opts);
    EXPECT_NEAR(r.groups.at("all").mean.ndcg, 1.0 / std::log2(3.0), 1e-15);
}

TEST(Evaluate, NewUserAndNewItemGroups) {
    // user 0 old, user 1 new; item 3 is new. Scores 4 > 3 > 2 > 1 by item index.
    const auto observed = InteractionDataset::from_edges(2, 4, {{0, 0}, {1, 1}});
    const auto targets = InteractionDataset::from_edges(2, 4, {{0, 2}, {0, 3}, {1, 2}});
    const auto r = evaluate(fixed_scores(2, {4, 3, 2, 1}), observed, targets, "new-users-items", {}, {1}, {3});
    const auto& all = r.groups.at("all");
    const auto& nu = r.groups.at("new_user");
    const auto& ni = r.groups.at("new_item");
    EXPECT_EQ(all.n_users, 2u);
    EXPECT_EQ(nu.n_users, 1u);
    EXPECT_EQ(ni.n_users, 1u);
    // user 1 ranking (excluding 1): 0, 2, 3 → target 2 at rank 2
    EXPECT_NEAR(nu.mean.ndcg, 1.0 / std::log2(3.0), 1e-15);
    // among new items only, user 0 ranks item 3 first
    EXPECT_EQ(ni.mean.ndcg, 1.0);
    EXPECT_EQ(ni.mean.recall, 1.0);
}

TEST(Evaluate, IsDeterministic) {
    const auto full = fixtures::random_dataset(20, 15, 0.3, 1);
    const auto split = split_per_user(full, {0.7, 0.1, 0.2}, 1);
    Representations r;
    r.r_u = fixtures::random_matrix(20, 4, 1);
    r.r_i = fixtures::random_matrix(15, 4, 2);
    const auto a = evaluate(r, split.train, split.test, "t"), b = evaluate(r, split.train, split.test, "t");
    EXPECT_EQ(nlohmann::json(a).dump(), nlohmann::json(b).dump());
}

TEST(PopularBaseline, RanksByDegreeThenIndex) {
    const auto train = InteractionDataset::from_edges(3, 3, {{0, 0}, {1, 0}, {2, 0}, {0, 2}, {1, 2}, {2, 1}});
    EXPECT_EQ(top_k(0, popular_baseline(train), {}, 3), (std::vector<Index>{0, 2, 1}));
    const auto flat = InteractionDataset::from_edges(2, 3, {{0, 0}, {0, 1}, {1, 2}});
    EXPECT_EQ(top_k(0, popular_baseline(flat), {}, 3), (std::vector<Index>{0, 1, 2}));
}

TEST(Display, PercentFormatting) {
    EXPECT_EQ(format_percent(0.2017), "20.17");
    EXPECT_EQ(format_percent(0.05), "5.00");
    EXPECT_EQ(format_percent(1.0), "100.00");
    EXPECT_EQ(format_percent(0.0), "0.00");
}

TEST(Display, CsvRows) {
    EvalReport r;
    r.scenario = "transductive";
    r.k = 20;
    r.groups["all"].mean = {0.2017, 0.0625, 0.17};
    r.groups["all"].n_users = 12;
    std::ostringstream out;
    write_report_csv(out, r);
    EXPECT_EQ(out.str(), "scenario,group,k,recall,precision,ndcg,n_users\ntransductive,all,20,20.17,6.25,17.00,12\n");
}
