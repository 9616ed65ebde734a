#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <numeric>

#include "inmo/backbone.hpp"
#include "test_util.hpp"

using namespace inmo;

namespace {

Eigen::MatrixXd stacked(const Matrix& a, const Matrix& b) {
    Eigen::MatrixXd e(a.rows() + b.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) e(r, c) = a(r, c);
    for (std::size_t r = 0; r < b.rows(); ++r)
        for (std::size_t c = 0; c < b.cols(); ++c) e(a.rows() + r, c) = b(r, c);
    return e;
}

// (1/(K+1)) Σ_l Âˡ E over the joint (n+m)-node graph; isolated nodes carry a unit self-weight.
Eigen::MatrixXd dense_oracle(const InteractionDataset& ds, const Eigen::MatrixXd& e, int layers) {
    const auto n = static_cast<Eigen::Index>(ds.num_users());
    const auto m = static_cast<Eigen::Index>(ds.num_items());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + m, n + m);
    for (const auto& edge : ds.edges()) {
        const double w = 1.0 / std::sqrt(static_cast<double>(ds.user_degree(edge.user) * ds.item_degree(edge.item)));
        a(edge.user, n + edge.item) = w;
        a(n + edge.item, edge.user) = w;
    }
    for (Index u = 0; u < n; ++u)
        if (ds.user_degree(u) == 0) a(u, u) = 1.0;
    for (Index i = 0; i < m; ++i)
        if (ds.item_degree(i) == 0) a(n + i, n + i) = 1.0;
    Eigen::MatrixXd power = e, sum = e;
    for (int l = 0; l < layers; ++l) {
        power = a * power;
        sum += power;
    }
    return sum / static_cast<double>(layers + 1);
}

}  // namespace

TEST(MfForward, IsIdentity) {
    const Matrix eu = fixtures::random_matrix(4, 3, 1), ei = fixtures::random_matrix(5, 3, 2);
    const auto r = mf_forward(eu, ei);
    EXPECT_EQ(r.r_u, eu);
    EXPECT_EQ(r.r_i, ei);
    const auto z = mf_forward(Matrix(4, 3), Matrix(5, 3));
    EXPECT_EQ(max_abs(z.r_u), 0.0);
    EXPECT_THROW(mf_forward(eu, Matrix(5, 2)), std::invalid_argument);
}

TEST(LightGcn, ZeroLayersMatchesMf) {
    const auto ds = fixtures::random_dataset(6, 5, 0.4, 1);
    const Matrix eu = fixtures::random_matrix(6, 3, 1), ei = fixtures::random_matrix(5, 3, 2);
    const auto r = lightgcn_forward(eu, ei, ds, 0);
    EXPECT_EQ(r.r_u, eu);
    EXPECT_EQ(r.r_i, ei);
}

TEST(LightGcn, SingleEdgeOneLayer) {
    const auto ds = InteractionDataset::from_edges(1, 1, {{0, 0}});
    Matrix eu(1, 2), ei(1, 2);
    eu(0, 0) = 1, eu(0, 1) = -2;
    ei(0, 0) = 3, ei(0, 1) = 5;
    const auto r = lightgcn_forward(eu, ei, ds, 1);
    EXPECT_DOUBLE_EQ(r.r_u(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(r.r_u(0, 1), 1.5);
    EXPECT_EQ(r.r_u, r.r_i);
}

TEST(LightGcn, MatchesDenseNormalizedAdjacencyPowers) {
    // 5-node toy graph: 2 users, 3 items.
    const auto toy = InteractionDataset::from_edges(2, 3, {{0, 0}, {0, 1}, {1, 1}, {1, 2}});
    std::vector<InteractionDataset> graphs{toy};
    for (std::uint64_t seed = 0; seed < 5; ++seed) graphs.push_back(fixtures::random_dataset(9, 7, 0.3, seed));
    // A graph with an isolated user and item.
    graphs.push_back(InteractionDataset::from_edges(3, 3, {{0, 0}, {0, 1}, {1, 1}}));
    for (std::size_t g = 0; g < graphs.size(); ++g) {
        const auto& ds = graphs[g];
        const Matrix eu = fixtures::random_matrix(ds.num_users(), 4, 10 + g);
        const Matrix ei = fixtures::random_matrix(ds.num_items(), 4, 20 + g);
        const auto r = lightgcn_forward(eu, ei, ds, 3);
        const Eigen::MatrixXd oracle = dense_oracle(ds, stacked(eu, ei), 3);
        EXPECT_LE((stacked(r.r_u, r.r_i) - oracle).cwiseAbs().maxCoeff(), 1e-10) << "graph " << g;
    }
}

TEST(LightGcn, LinearityAndZeroInput) {
    const auto ds = fixtures::random_dataset(20, 15, 0.2, 3);
    const Matrix eu1 = fixtures::random_matrix(20, 5, 1), ei1 = fixtures::random_matrix(15, 5, 2);
    const Matrix eu2 = fixtures::random_matrix(20, 5, 3), ei2 = fixtures::random_matrix(15, 5, 4);
    const double a = 1.7, b = -0.3;
    const auto lhs = lightgcn_forward(a * eu1 + b * eu2, a * ei1 + b * ei2, ds, 3);
    const auto r1 = lightgcn_forward(eu1, ei1, ds, 3);
    const auto r2 = lightgcn_forward(eu2, ei2, ds, 3);
    EXPECT_LE(max_abs(lhs.r_u - (a * r1.r_u + b * r2.r_u)), 1e-9);
    EXPECT_LE(max_abs(lhs.r_i - (a * r1.r_i + b * r2.r_i)), 1e-9);
    const auto z = lightgcn_forward(Matrix(20, 5), Matrix(15, 5), ds, 3);
    EXPECT_EQ(max_abs(z.r_u), 0.0);
    EXPECT_EQ(max_abs(z.r_i), 0.0);
}

TEST(LightGcn, BackwardIsAdjoint) {
    // <forward(E), G> = <E, backward(G)> for a linear map and its adjoint.
    const auto ds = fixtures::random_dataset(10, 8, 0.3, 7);
    const Matrix eu = fixtures::random_matrix(10, 3, 1), ei = fixtures::random_matrix(8, 3, 2);
    const Matrix gu = fixtures::random_matrix(10, 3, 3), gi = fixtures::random_matrix(8, 3, 4);
    const auto f = lightgcn_forward(eu, ei, ds, 3);
    const auto b = lightgcn_backward(gu, gi, ds, 3);
    const double lhs = dot(f.r_u.data(), gu.data()) + dot(f.r_i.data(), gi.data());
    const double rhs = dot(eu.data(), b.r_u.data()) + dot(ei.data(), b.r_i.data());
    EXPECT_NEAR(lhs, rhs, 1e-12);
}

TEST(Score, DotProduct) {
    EXPECT_EQ(score(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
    EXPECT_EQ(score(std::vector<double>(64, 1.0), std::vector<double>(64, 1.0)), 64.0);
    EXPECT_DOUBLE_EQ(score(std::vector<double>{0.5, -2, 3}, std::vector<double>{4, 1, -1}), 2.0 - 2.0 - 3.0);
    EXPECT_THROW(score(std::vector<double>{1}, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST(TopK, TiesBreakByIndex) {
    const std::vector<double> scores(10, 1.0);
    const std::vector<Index> exclude{1, 3};
    EXPECT_EQ(top_k(scores, exclude, 4), (std::vector<Index>{0, 2, 4, 5}));
}

TEST(TopK, AllButOneExcluded) {
    const std::vector<double> scores{0.3, 0.9, 0.1, 0.5};
    const std::vector<Index> exclude{0, 1, 3};
    EXPECT_EQ(top_k(scores, exclude, 3), (std::vector<Index>{2}));
}

TEST(TopK, MatchesFullSortOracle) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix s = fixtures::random_matrix(1, 10, seed);
        const std::vector<double> scores = s.data();
        const std::vector<Index> exclude{static_cast<Index>(seed % 10)};
        std::vector<Index> all(10);
        std::iota(all.begin(), all.end(), 0);
        std::sort(all.begin(), all.end(), [&](Index a, Index b) { return scores[a] > scores[b]; });
        std::erase(all, exclude[0]);
        all.resize(5);
        EXPECT_EQ(top_k(scores, exclude, 5), all);
    }
}

TEST(TopK, RestrictedCandidates) {
    const std::vector<double> scores{5, 4, 3, 2, 1};
    const std::vector<Index> candidates{1, 3, 4};
    const std::vector<Index> exclude{3};
    EXPECT_EQ(top_k(scores, exclude, 5, candidates), (std::vector<Index>{1, 4}));
}
