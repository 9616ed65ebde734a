#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "inmo/matrix.hpp"

namespace inmo {

using Index = std::uint32_t;

struct Edge {
    Index user = 0;
    Index item = 0;
    auto operator<=>(const Edge&) const = default;
};

struct RawRecord {
    std::string user;
    std::string item;
    std::optional<double> rating;
    std::optional<std::int64_t> timestamp;
};

struct RawInteractions {
    std::vector<RawRecord> records;
};

enum class FileFormat { Tsv, Csv };

FileFormat parse_file_format(const std::string& name);

/// Parses `user<sep>item[<sep>rating[<sep>timestamp]]` lines; `#` lines and blank lines are skipped.
/// Throws DataError naming the offending line.
RawInteractions parse_interactions(std::istream& in, FileFormat format);
RawInteractions load_interactions(const std::filesystem::path& path, FileFormat format);

/// Immutable bipartite 0/1 interaction store kept in both CSR directions.
///
/// Views (train/valid/test, scenario graphs) share the index space of the dataset they
/// were carved from, so an entity may have degree zero inside a view.
class InteractionDataset {
public:
    using Keys = std::shared_ptr<const std::vector<std::string>>;

    InteractionDataset() = default;

    /// Builds both adjacency directions; duplicate edges collapse. Throws on out-of-range indices.
    static InteractionDataset from_edges(std::size_t n_users, std::size_t n_items, std::vector<Edge> edges,
                                         Keys user_keys = nullptr, Keys item_keys = nullptr);

    std::size_t num_users() const { return n_users_; }
    std::size_t num_items() const { return n_items_; }
    std::size_t num_edges() const { return user_items_.size(); }

    std::span<const Index> items_of(Index u) const {
        return {user_items_.data() + user_offsets_[u], user_offsets_[u + 1] - user_offsets_[u]};
    }
    std::span<const Index> users_of(Index i) const {
        return {item_users_.data() + item_offsets_[i], item_offsets_[i + 1] - item_offsets_[i]};
    }
    std::size_t user_degree(Index u) const { return user_offsets_[u + 1] - user_offsets_[u]; }
    std::size_t item_degree(Index i) const { return item_offsets_[i + 1] - item_offsets_[i]; }

    bool contains(Index u, Index i) const;

    /// All edges ordered by (user, item).
    std::vector<Edge> edges() const;

    /// Same edges with the user and item roles swapped (Yᵀ).
    InteractionDataset transposed() const;

    /// Keeps the index space, replaces the edge set.
    InteractionDataset with_edges(std::vector<Edge> edges) const;

    Matrix to_dense() const;

    const Keys& user_keys() const { return user_keys_; }
    const Keys& item_keys() const { return item_keys_; }

    bool has_isolated_entities() const;

    bool operator==(const InteractionDataset& other) const;

private:
    std::size_t n_users_ = 0;
    std::size_t n_items_ = 0;
    std::vector<std::size_t> user_offsets_{0};
    std::vector<Index> user_items_;
    std::vector<std::size_t> item_offsets_{0};
    std::vector<Index> item_users_;
    Keys user_keys_;
    Keys item_keys_;
};

struct PreprocessOptions {
    double rating_threshold = 3.0;
    std::size_t min_degree = 10;
};

/// Rating filter (strictly greater than the threshold; records without a rating always pass),
/// pair deduplication, iterative degree filtering to a k-core fixpoint, and dense reindexing
/// in order of first appearance.
InteractionDataset preprocess(const RawInteractions& raw, const PreprocessOptions& options = {});

struct SplitRatios {
    double train = 0.7;
    double valid = 0.1;
    double test = 0.2;
};

struct DatasetSplit {
    InteractionDataset train;
    InteractionDataset valid;
    InteractionDataset test;
    std::uint64_t seed = 0;
    SplitRatios ratios;
};

/// Per-user counts for a split of `degree` edges: floors first, leftover edges handed out
/// one at a time in train, valid, test order.
std::array<std::size_t, 3> split_counts(std::size_t degree, const SplitRatios& ratios);

DatasetSplit split_per_user(const InteractionDataset& ds, const SplitRatios& ratios, std::uint64_t seed);

enum class ScenarioKind { Transductive, NewInteractions, NewUsersItems };

std::string to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(const std::string& name);

/// Everything needed to train on one graph and evaluate on another.
struct InductiveScenario {
    ScenarioKind kind = ScenarioKind::Transductive;
    InteractionDataset train_view;     // graph seen during training
    InteractionDataset valid_view;     // validation targets used for early stopping
    InteractionDataset test_observed;  // N^{test-ob}: graph available at inference
    InteractionDataset test_targets;   // held-out edges to rank
    std::vector<Index> new_user_ids;
    std::vector<Index> new_item_ids;
};

InductiveScenario make_transductive_scenario(const DatasetSplit& split);
InductiveScenario make_new_interactions_scenario(const DatasetSplit& split, double hold_frac, std::uint64_t seed);
InductiveScenario make_new_users_items_scenario(const DatasetSplit& split, double entity_frac, std::uint64_t seed);

/// floor(frac·count) guarded against representation error just below an integer.
std::size_t fraction_count(double frac, std::size_t count);

/// One `user\titem` line per edge with dense indices.
void write_edges(std::ostream& out, const InteractionDataset& ds);
InteractionDataset read_edges(std::istream& in, std::size_t n_users, std::size_t n_items);

}  // namespace inmo
