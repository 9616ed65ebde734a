#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "inmo/backbone.hpp"
#include "inmo/dataset.hpp"
#include "json.hpp"

namespace inmo {

struct Metrics {
    double recall = 0.0;
    double precision = 0.0;
    double ndcg = 0.0;
};

/// Metrics of the first k entries of `ranked` against the sorted target list.
/// Throws std::invalid_argument on empty targets; such users are left out of averages.
Metrics recall_precision_ndcg(std::span<const Index> ranked, std::span<const Index> targets, std::size_t k);

struct GroupMetrics {
    Metrics mean;
    std::size_t n_users = 0;
    std::vector<Index> users;             // evaluated users
    std::vector<Metrics> per_user;        // aligned with `users`
};

struct EvalReport {
    std::string scenario;
    std::size_t k = 20;
    std::map<std::string, GroupMetrics> groups;  // "all", "new_user", "new_item"
};

struct EvalOptions {
    std::size_t k = 20;
    bool exclude_observed = true;
    bool keep_per_user = false;
};

/// Ranks items for every user with at least one target, excluding the user's observed items.
/// "new_user" restricts the rows to `new_users`; "new_item" ranks only new items that are
/// not observed and scores against the targets among them.
EvalReport evaluate(const Representations& reps, const InteractionDataset& observed, const InteractionDataset& targets,
                    const std::string& scenario, const EvalOptions& options = {},
                    const std::vector<Index>& new_users = {}, const std::vector<Index>& new_items = {});

EvalReport evaluate(const Representations& reps, const InductiveScenario& scenario, const EvalOptions& options = {});

/// Static ranking by training degree (ties by index) as a one-dimensional representation.
Representations popular_baseline(const InteractionDataset& train_view);

/// 0.2017 → "20.17"
std::string format_percent(double value);

/// `scenario,group,k,recall,precision,ndcg,n_users` rows with metrics ×100.
void write_report_csv(std::ostream& out, const EvalReport& report, bool header = true);

void to_json(nlohmann::json& j, const Metrics& m);
void to_json(nlohmann::json& j, const EvalReport& r);

}  // namespace inmo
