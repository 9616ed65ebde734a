#include "inmo/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "inmo/error.hpp"
#include "inmo/random.hpp"

namespace inmo {

InteractionDataset make_block_dataset(const BlockSpec& spec) {
    if (spec.n_blocks == 0 || spec.n_blocks > spec.n_users || spec.n_blocks > spec.n_items)
        throw ConfigError("block count must be in [1, min(n_users, n_items)]");
    Rng rng(spec.seed);
    auto user_block = [&](std::size_t u) { return u * spec.n_blocks / spec.n_users; };
    auto item_block = [&](std::size_t i) { return i * spec.n_blocks / spec.n_items; };

    std::vector<Edge> edges;
    std::vector<std::size_t> idegree(spec.n_items, 0);
    for (std::size_t u = 0; u < spec.n_users; ++u) {
        std::size_t deg = 0;
        for (std::size_t i = 0; i < spec.n_items; ++i) {
            const double p = user_block(u) == item_block(i) ? spec.p_in : spec.p_out;
            if (uniform_real(rng) < p) {
                edges.push_back({static_cast<Index>(u), static_cast<Index>(i)});
                ++deg;
                ++idegree[i];
            }
        }
        if (deg == 0) {
            const std::size_t b = user_block(u);
            const std::size_t lo = (b * spec.n_items + spec.n_blocks - 1) / spec.n_blocks;
            const std::size_t hi = ((b + 1) * spec.n_items + spec.n_blocks - 1) / spec.n_blocks;
            const auto i = static_cast<Index>(lo + uniform_index(rng, hi - lo));
            edges.push_back({static_cast<Index>(u), i});
            ++idegree[i];
        }
    }
    for (std::size_t i = 0; i < spec.n_items; ++i) {
        if (idegree[i] != 0) continue;
        const std::size_t b = item_block(i);
        const std::size_t lo = (b * spec.n_users + spec.n_blocks - 1) / spec.n_blocks;
        const std::size_t hi = ((b + 1) * spec.n_users + spec.n_blocks - 1) / spec.n_blocks;
        edges.push_back({static_cast<Index>(lo + uniform_index(rng, hi - lo)), static_cast<Index>(i)});
    }
    return InteractionDataset::from_edges(spec.n_users, spec.n_items, std::move(edges));
}

namespace {

std::size_t sample_cumulative(const std::vector<double>& cumulative, Rng& rng) {
    const double x = uniform_real(rng) * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

}  // namespace

RawInteractions make_checkin_records(const CheckinSpec& spec) {
    if (spec.n_communities == 0) throw ConfigError("n_communities must be positive");
    Rng rng(spec.seed);

    std::vector<std::size_t> rank(spec.n_items);
    std::iota(rank.begin(), rank.end(), 0);
    shuffle(rank, rng);
    std::vector<double> weight(spec.n_items);
    for (std::size_t i = 0; i < spec.n_items; ++i)
        weight[i] = 1.0 / std::pow(static_cast<double>(rank[i] + 1), spec.popularity_exponent);

    std::vector<std::vector<std::size_t>> members(spec.n_communities);
    std::vector<std::vector<double>> member_cum(spec.n_communities);
    for (std::size_t i = 0; i < spec.n_items; ++i) {
        const std::size_t c = i % spec.n_communities;
        members[c].push_back(i);
        member_cum[c].push_back((member_cum[c].empty() ? 0.0 : member_cum[c].back()) + weight[i]);
    }
    std::vector<double> all_cum(spec.n_items);
    std::partial_sum(weight.begin(), weight.end(), all_cum.begin());

    RawInteractions raw;
    for (std::size_t u = 0; u < spec.n_users; ++u) {
        const std::size_t c = uniform_index(rng, spec.n_communities);
        // log-normal activity with the requested mean
        const double sigma = 0.8;
        const double mu = std::log(spec.mean_activity) - 0.5 * sigma * sigma;
        const auto activity = static_cast<std::size_t>(std::lround(std::exp(mu + sigma * standard_normal(rng))));
        for (std::size_t k = 0; k < activity; ++k) {
            std::size_t item;
            if (uniform_real(rng) < spec.in_community && !members[c].empty())
                item = members[c][sample_cumulative(member_cum[c], rng)];
            else
                item = sample_cumulative(all_cum, rng);
            raw.records.push_back({std::to_string(u), std::to_string(item), std::nullopt, std::nullopt});
        }
    }
    return raw;
}

}  // namespace inmo
