#pragma once

#include <cstdint>

#include "inmo/dataset.hpp"

namespace inmo {

/// Users and items are partitioned into equal contiguous blocks; a user interacts with
/// an item of its own block with probability `p_in` and with any other item with `p_out`.
struct BlockSpec {
    std::size_t n_users = 200;
    std::size_t n_items = 150;
    std::size_t n_blocks = 4;
    double p_in = 0.3;
    double p_out = 0.02;
    std::uint64_t seed = 0;
};

/// Every user and item ends up with degree ≥ 1 (isolated entities get one in-block edge).
InteractionDataset make_block_dataset(const BlockSpec& spec);

/// Check-in style raw records: community structure plus Zipf-like item popularity and
/// heavy-tailed user activity. Keys are decimal strings, ratings absent.
struct CheckinSpec {
    std::size_t n_users = 1500;
    std::size_t n_items = 1200;
    std::size_t n_communities = 8;
    double mean_activity = 30.0;
    double in_community = 0.75;
    double popularity_exponent = 0.8;
    std::uint64_t seed = 0;
};

RawInteractions make_checkin_records(const CheckinSpec& spec);

}  // namespace inmo
