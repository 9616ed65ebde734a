#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "inmo/dataset.hpp"
#include "inmo/matrix.hpp"

namespace inmo::fixtures {

/// Bernoulli(p) 0/1 edges; every row and column gets at least one edge.
inline InteractionDataset random_dataset(std::size_t n, std::size_t m, double p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(p);
    std::vector<Edge> edges;
    std::vector<bool> col_hit(m, false);
    for (std::size_t u = 0; u < n; ++u) {
        bool any = false;
        for (std::size_t i = 0; i < m; ++i)
            if (coin(rng)) {
                edges.push_back({static_cast<Index>(u), static_cast<Index>(i)});
                any = true;
                col_hit[i] = true;
            }
        if (!any) {
            const auto i = static_cast<Index>(rng() % m);
            edges.push_back({static_cast<Index>(u), i});
            col_hit[i] = true;
        }
    }
    for (std::size_t i = 0; i < m; ++i)
        if (!col_hit[i]) edges.push_back({static_cast<Index>(rng() % n), static_cast<Index>(i)});
    return InteractionDataset::from_edges(n, m, std::move(edges));
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    Matrix a(rows, cols);
    for (double& v : a.data()) v = normal(rng);
    return a;
}

}  // namespace inmo::fixtures
