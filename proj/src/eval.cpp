#include "inmo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace inmo {

namespace {

void accumulate(GroupMetrics& g, Index u, const Metrics& m, bool keep) {
    g.mean.recall += m.recall;
    g.mean.precision += m.precision;
    g.mean.ndcg += m.ndcg;
    ++g.n_users;
    if (keep) {
        g.users.push_back(u);
        g.per_user.push_back(m);
    }
}

void finish(GroupMetrics& g) {
    if (g.n_users == 0) return;
    const double n = static_cast<double>(g.n_users);
    g.mean.recall /= n;
    g.mean.precision /= n;
    g.mean.ndcg /= n;
}

}  // namespace

Metrics recall_precision_ndcg(std::span<const Index> ranked, std::span<const Index> targets, std::size_t k) {
    if (k == 0) throw std::invalid_argument("metrics: k must be at least 1");
    if (targets.empty()) throw std::invalid_argument("metrics: empty target set");
    const std::size_t depth = std::min(k, ranked.size());
    std::size_t hits = 0;
    double dcg = 0.0;
    for (std::size_t p = 0; p < depth; ++p) {
        if (!std::binary_search(targets.begin(), targets.end(), ranked[p])) continue;
        ++hits;
        dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    }
    double idcg = 0.0;
    for (std::size_t p = 0; p < std::min(k, targets.size()); ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    Metrics m;
    m.recall = static_cast<double>(hits) / static_cast<double>(targets.size());
    m.precision = static_cast<double>(hits) / static_cast<double>(k);
    m.ndcg = dcg / idcg;
    return m;
}

EvalReport evaluate(const Representations& reps, const InteractionDataset& observed, const InteractionDataset& targets,
                    const std::string& scenario, const EvalOptions& options, const std::vector<Index>& new_users,
                    const std::vector<Index>& new_items) {
    if (reps.r_u.rows() != targets.num_users() || reps.r_i.rows() != targets.num_items())
        throw std::invalid_argument("representations do not match the evaluation data");
    EvalReport report;
    report.scenario = scenario;
    report.k = options.k;
    GroupMetrics all, new_user, new_item;
    std::vector<bool> is_new_user(targets.num_users(), false);
    for (Index u : new_users) is_new_user.at(u) = true;
    std::vector<Index> sorted_new_items = new_items;
    std::sort(sorted_new_items.begin(), sorted_new_items.end());

    const std::span<const Index> nothing;
    std::vector<Index> new_targets;
    for (Index u = 0; u < targets.num_users(); ++u) {
        const auto tgt = targets.items_of(u);
        if (tgt.empty()) continue;
        const auto scores = score_all(u, reps);
        const auto exclude = options.exclude_observed ? observed.items_of(u) : nothing;
        const auto ranked = top_k(scores, exclude, options.k);
        const Metrics m = recall_precision_ndcg(ranked, tgt, options.k);
        accumulate(all, u, m, options.keep_per_user);
        if (is_new_user[u]) accumulate(new_user, u, m, options.keep_per_user);

        if (sorted_new_items.empty()) continue;
        new_targets.clear();
        std::set_intersection(tgt.begin(), tgt.end(), sorted_new_items.begin(), sorted_new_items.end(),
                              std::back_inserter(new_targets));
        if (new_targets.empty()) continue;
        const auto ranked_new = top_k(scores, exclude, options.k, sorted_new_items);
        accumulate(new_item, u, recall_precision_ndcg(ranked_new, new_targets, options.k), options.keep_per_user);
    }
    finish(all);
    report.groups["all"] = std::move(all);
    if (!new_users.empty()) {
        finish(new_user);
        report.groups["new_user"] = std::move(new_user);
    }
    if (!new_items.empty()) {
        finish(new_item);
        report.groups["new_item"] = std::move(new_item);
    }
    return report;
}

EvalReport evaluate(const Representations& reps, const InductiveScenario& scenario, const EvalOptions& options) {
    return evaluate(reps, scenario.test_observed, scenario.test_targets, to_string(scenario.kind), options,
                    scenario.new_user_ids, scenario.new_item_ids);
}

Representations popular_baseline(const InteractionDataset& train_view) {
    Representations reps;
    reps.r_u = Matrix(train_view.num_users(), 1, 1.0);
    reps.r_i = Matrix(train_view.num_items(), 1);
    for (Index i = 0; i < train_view.num_items(); ++i) reps.r_i(i, 0) = static_cast<double>(train_view.item_degree(i));
    return reps;
}

std::string format_percent(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", value * 100.0);
    return buf;
}

void write_report_csv(std::ostream& out, const EvalReport& report, bool header) {
    if (header) out << "scenario,group,k,recall,precision,ndcg,n_users\n";
    for (const char* name : {"all", "new_user", "new_item"}) {
        const auto it = report.groups.find(name);
        if (it == report.groups.end()) continue;
        const auto& g = it->second;
        out << report.scenario << ',' << name << ',' << report.k << ',' << format_percent(g.mean.recall) << ','
            << format_percent(g.mean.precision) << ',' << format_percent(g.mean.ndcg) << ',' << g.n_users << '\n';
    }
}

void to_json(nlohmann::json& j, const Metrics& m) {
    j = {{"recall", m.recall}, {"precision", m.precision}, {"ndcg", m.ndcg}};
}

void to_json(nlohmann::json& j, const EvalReport& r) {
    j = {{"scenario", r.scenario}, {"k", r.k}, {"groups", nlohmann::json::object()}};
    for (const auto& [name, g] : r.groups) {
        nlohmann::json gj = g.mean;
        gj["n_users"] = g.n_users;
        if (!g.per_user.empty()) {
            gj["users"] = g.users;
            gj["per_user"] = g.per_user;
        }
        j["groups"][name] = gj;
    }
}

}  // namespace inmo
