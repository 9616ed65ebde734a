#include "inmo/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "inmo/error.hpp"

namespace inmo {

std::string to_string(BackboneKind kind) { return kind == BackboneKind::MF ? "mf" : "lightgcn"; }

BackboneKind parse_backbone(const std::string& name) {
    if (name == "mf" || name == "MF") return BackboneKind::MF;
    if (name == "lightgcn" || name == "LightGCN" || name == "lgcn") return BackboneKind::LightGCN;
    throw ConfigError("unknown backbone '" + name + "' (expected mf or lightgcn)");
}

Representations mf_forward(const Matrix& e_u, const Matrix& e_i) {
    if (e_u.cols() != e_i.cols()) throw std::invalid_argument("user and item embeddings differ in dimension");
    return {e_u, e_i, BackboneKind::MF, 0};
}

Representations lightgcn_forward(const Matrix& e_u, const Matrix& e_i, const InteractionDataset& view, int layers) {
    if (layers < 0) throw ConfigError("LightGCN layer count must be nonnegative");
    if (e_u.cols() != e_i.cols()) throw std::invalid_argument("user and item embeddings differ in dimension");
    if (e_u.rows() != view.num_users() || e_i.rows() != view.num_items())
        throw std::invalid_argument("embedding rows do not match the propagation graph");
    const std::size_t d = e_u.cols();

    std::vector<double> inv_sqrt_u(view.num_users()), inv_sqrt_i(view.num_items());
    for (Index u = 0; u < view.num_users(); ++u)
        inv_sqrt_u[u] = view.user_degree(u) ? 1.0 / std::sqrt(static_cast<double>(view.user_degree(u))) : 0.0;
    for (Index i = 0; i < view.num_items(); ++i)
        inv_sqrt_i[i] = view.item_degree(i) ? 1.0 / std::sqrt(static_cast<double>(view.item_degree(i))) : 0.0;

    Matrix cur_u = e_u, cur_i = e_i;
    Matrix sum_u = e_u, sum_i = e_i;
    Matrix next_u(e_u.rows(), d), next_i(e_i.rows(), d);
    for (int l = 0; l < layers; ++l) {
        for (Index u = 0; u < view.num_users(); ++u) {
            auto out = next_u.row(u);
            const auto items = view.items_of(u);
            if (items.empty()) {
                std::copy(cur_u.row(u).begin(), cur_u.row(u).end(), out.begin());
                continue;
            }
            std::fill(out.begin(), out.end(), 0.0);
            for (Index i : items) axpy(inv_sqrt_u[u] * inv_sqrt_i[i], cur_i.row(i), out);
        }
        for (Index i = 0; i < view.num_items(); ++i) {
            auto out = next_i.row(i);
            const auto users = view.users_of(i);
            if (users.empty()) {
                std::copy(cur_i.row(i).begin(), cur_i.row(i).end(), out.begin());
                continue;
            }
            std::fill(out.begin(), out.end(), 0.0);
            for (Index u : users) axpy(inv_sqrt_i[i] * inv_sqrt_u[u], cur_u.row(u), out);
        }
        std::swap(cur_u, next_u);
        std::swap(cur_i, next_i);
        for (std::size_t k = 0; k < sum_u.size(); ++k) sum_u.data()[k] += cur_u.data()[k];
        for (std::size_t k = 0; k < sum_i.size(); ++k) sum_i.data()[k] += cur_i.data()[k];
    }
    const double scale = 1.0 / static_cast<double>(layers + 1);
    for (double& v : sum_u.data()) v *= scale;
    for (double& v : sum_i.data()) v *= scale;
    return {std::move(sum_u), std::move(sum_i), BackboneKind::LightGCN, layers};
}

Representations lightgcn_backward(const Matrix& grad_r_u, const Matrix& grad_r_i, const InteractionDataset& view,
                                  int layers) {
    return lightgcn_forward(grad_r_u, grad_r_i, view, layers);
}

double score(std::span<const double> r_u, std::span<const double> r_i) {
    if (r_u.size() != r_i.size()) throw std::invalid_argument("score: dimension mismatch");
    return dot(r_u, r_i);
}

std::vector<double> score_all(Index u, const Representations& reps) {
    std::vector<double> scores(reps.r_i.rows());
    const auto ru = reps.r_u.row(u);
    for (Index i = 0; i < reps.r_i.rows(); ++i) scores[i] = dot(ru, reps.r_i.row(i));
    return scores;
}

std::vector<Index> top_k(const std::vector<double>& scores, std::span<const Index> exclude, std::size_t k,
                         std::span<const Index> candidates) {
    if (k == 0) throw std::invalid_argument("top_k: k must be at least 1");
    std::vector<Index> pool;
    auto excluded = [&](Index i) { return std::binary_search(exclude.begin(), exclude.end(), i); };
    if (candidates.empty()) {
        pool.reserve(scores.size());
        for (Index i = 0; i < scores.size(); ++i)
            if (!excluded(i)) pool.push_back(i);
    } else {
        for (Index i : candidates)
            if (!excluded(i)) pool.push_back(i);
    }
    auto better = [&](Index a, Index b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); };
    const std::size_t take = std::min(k, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(), better);
    pool.resize(take);
    return pool;
}

std::vector<Index> top_k(Index u, const Representations& reps, std::span<const Index> exclude, std::size_t k) {
    return top_k(score_all(u, reps), exclude, k);
}

}  // namespace inmo
