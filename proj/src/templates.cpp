#include "inmo/templates.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "inmo/error.hpp"

namespace inmo {

std::string to_string(Indicator indicator) {
    switch (indicator) {
        case Indicator::Degree: return "degree";
        case Indicator::PageRank: return "pagerank";
        case Indicator::ErrorSortExact: return "error-sort-exact";
        case Indicator::ErrorSortSimplified: return "error-sort";
    }
    return "unknown";
}

Indicator parse_indicator(const std::string& name) {
    if (name == "degree") return Indicator::Degree;
    if (name == "pagerank") return Indicator::PageRank;
    if (name == "error-sort-exact") return Indicator::ErrorSortExact;
    if (name == "error-sort" || name == "error-sort-simplified") return Indicator::ErrorSortSimplified;
    throw ConfigError("unknown template indicator '" + name +
                      "' (expected degree, pagerank, error-sort or error-sort-exact)");
}

std::vector<double> degree_indicator(const InteractionDataset& ds, Side side) {
    if (side == Side::User) {
        std::vector<double> s(ds.num_users());
        for (Index u = 0; u < ds.num_users(); ++u) s[u] = static_cast<double>(ds.user_degree(u));
        return s;
    }
    std::vector<double> s(ds.num_items());
    for (Index i = 0; i < ds.num_items(); ++i) s[i] = static_cast<double>(ds.item_degree(i));
    return s;
}

std::vector<double> pagerank_all(const InteractionDataset& ds, const PageRankOptions& options) {
    if (!(options.damping > 0.0 && options.damping < 1.0)) throw ConfigError("pagerank damping must lie in (0, 1)");
    const std::size_t n = ds.num_users();
    const std::size_t total = n + ds.num_items();
    if (total == 0) return {};
    const double inv_total = 1.0 / static_cast<double>(total);

    std::vector<double> rank(total, inv_total), next(total);
    for (int iter = 0; iter < options.max_iters; ++iter) {
        double dangling = 0.0;
        for (Index u = 0; u < n; ++u)
            if (ds.user_degree(u) == 0) dangling += rank[u];
        for (Index i = 0; i < ds.num_items(); ++i)
            if (ds.item_degree(i) == 0) dangling += rank[n + i];
        const double base = (1.0 - options.damping) * inv_total + options.damping * dangling * inv_total;
        std::fill(next.begin(), next.end(), base);
        for (Index u = 0; u < n; ++u) {
            const auto items = ds.items_of(u);
            if (items.empty()) continue;
            const double share = options.damping * rank[u] / static_cast<double>(items.size());
            for (Index i : items) next[n + i] += share;
        }
        for (Index i = 0; i < ds.num_items(); ++i) {
            const auto users = ds.users_of(i);
            if (users.empty()) continue;
            const double share = options.damping * rank[n + i] / static_cast<double>(users.size());
            for (Index u : users) next[u] += share;
        }
        double change = 0.0;
        for (std::size_t k = 0; k < total; ++k) change += std::abs(next[k] - rank[k]);
        rank.swap(next);
        if (change < options.tol) break;
    }
    return rank;
}

std::vector<double> pagerank_indicator(const InteractionDataset& ds, Side side, const PageRankOptions& options) {
    const auto all = pagerank_all(ds, options);
    const auto n = static_cast<std::ptrdiff_t>(ds.num_users());
    if (side == Side::User) return {all.begin(), all.begin() + n};
    return {all.begin() + n, all.end()};
}

std::vector<double> error_sort_exact(const InteractionDataset& ds, const SvdFactors& factors, Side side) {
    const bool users = side == Side::User;
    const Matrix& basis = users ? factors.u : factors.v;
    const std::size_t count = users ? ds.num_users() : ds.num_items();
    std::vector<double> scores(count);
    for (Index j = 0; j < count; ++j) {
        // Column j of P = B·Bᵀ has squared norm P_jj = ‖row j of B‖² because P is an orthogonal projector.
        const auto row = basis.row(j);
        const double s_norm_sq = dot(row, row);
        double neighbour_degrees = 0.0;
        if (users) {
            for (Index i : ds.items_of(j)) neighbour_degrees += static_cast<double>(ds.item_degree(i));
        } else {
            for (Index u : ds.users_of(j)) neighbour_degrees += static_cast<double>(ds.user_degree(u));
        }
        scores[j] = s_norm_sq * neighbour_degrees;
    }
    return scores;
}

std::vector<double> error_sort_exact(const InteractionDataset& ds, std::size_t d, Side side, std::size_t dense_cap) {
    check_dense_cap(ds.num_users(), ds.num_items(), dense_cap);
    return error_sort_exact(ds, truncated_svd(ds.to_dense(), d, dense_cap), side);
}

std::vector<double> error_sort_simplified(const InteractionDataset& ds, Side side) {
    if (side == Side::User) {
        std::vector<double> s(ds.num_users(), 0.0);
        for (Index u = 0; u < ds.num_users(); ++u)
            for (Index i : ds.items_of(u)) s[u] += 1.0 / static_cast<double>(ds.item_degree(i));
        return s;
    }
    std::vector<double> s(ds.num_items(), 0.0);
    for (Index i = 0; i < ds.num_items(); ++i)
        for (Index u : ds.users_of(i)) s[i] += 1.0 / static_cast<double>(ds.user_degree(u));
    return s;
}

std::vector<double> indicator_scores(const InteractionDataset& ds, Indicator indicator, Side side,
                                     const IndicatorOptions& options) {
    switch (indicator) {
        case Indicator::Degree: return degree_indicator(ds, side);
        case Indicator::PageRank: return pagerank_indicator(ds, side, options.pagerank);
        case Indicator::ErrorSortExact: return error_sort_exact(ds, options.svd_dim, side, options.dense_cap);
        case Indicator::ErrorSortSimplified: return error_sort_simplified(ds, side);
    }
    return {};
}

std::vector<Index> rank_by_score(const std::vector<double>& scores, const std::vector<bool>& eligible) {
    std::vector<Index> order;
    order.reserve(scores.size());
    for (Index k = 0; k < scores.size(); ++k)
        if (eligible.empty() || eligible[k]) order.push_back(k);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores[a] > scores[b]; });
    return order;
}

namespace {

std::size_t ceil_count(double frac, std::size_t count) {
    return std::min(count, static_cast<std::size_t>(std::ceil(frac * static_cast<double>(count) - 1e-9)));
}

void fill_side(const std::vector<double>& scores, double frac, const std::vector<bool>& eligible,
               std::vector<Index>& selected, std::vector<Index>& rank_of) {
    if (!(frac > 0.0 && frac <= 1.0)) throw ConfigError("template fraction must lie in (0, 1]");
    if (!eligible.empty() && eligible.size() != scores.size())
        throw std::invalid_argument("eligibility mask size mismatch");
    auto order = rank_by_score(scores, eligible);
    order.resize(ceil_count(frac, order.size()));
    std::sort(order.begin(), order.end());
    selected = std::move(order);
    rank_of.assign(scores.size(), TemplateSet::kNotTemplate);
    for (Index pos = 0; pos < selected.size(); ++pos) rank_of[selected[pos]] = pos;
}

}  // namespace

TemplateSet select_templates(const std::vector<double>& scores_users, const std::vector<double>& scores_items,
                             double user_frac, double item_frac, std::string indicator_name,
                             const std::vector<bool>& eligible_users, const std::vector<bool>& eligible_items) {
    TemplateSet t;
    fill_side(scores_users, user_frac, eligible_users, t.template_users, t.user_rank_of);
    fill_side(scores_items, item_frac, eligible_items, t.template_items, t.item_rank_of);
    t.indicator_name = std::move(indicator_name);
    t.user_frac = user_frac;
    t.item_frac = item_frac;
    t.scores_users = scores_users;
    t.scores_items = scores_items;
    return t;
}

TemplateSet select_templates(const InteractionDataset& train, Indicator indicator, double user_frac,
                             double item_frac, const IndicatorOptions& options) {
    std::vector<double> su, si;
    if (indicator == Indicator::ErrorSortExact) {
        check_dense_cap(train.num_users(), train.num_items(), options.dense_cap);
        const auto factors = truncated_svd(train.to_dense(), options.svd_dim, options.dense_cap);
        su = error_sort_exact(train, factors, Side::User);
        si = error_sort_exact(train, factors, Side::Item);
    } else {
        su = indicator_scores(train, indicator, Side::User, options);
        si = indicator_scores(train, indicator, Side::Item, options);
    }
    std::vector<bool> eu(train.num_users()), ei(train.num_items());
    for (Index u = 0; u < train.num_users(); ++u) eu[u] = train.user_degree(u) > 0;
    for (Index i = 0; i < train.num_items(); ++i) ei[i] = train.item_degree(i) > 0;
    return select_templates(su, si, user_frac, item_frac, to_string(indicator), eu, ei);
}

void to_json(nlohmann::json& j, const TemplateSet& t) {
    j = nlohmann::json{{"indicator", t.indicator_name},
                       {"user_frac", t.user_frac},
                       {"item_frac", t.item_frac},
                       {"num_users", t.num_users()},
                       {"num_items", t.num_items()},
                       {"template_users", t.template_users},
                       {"template_items", t.template_items},
                       {"scores_users", t.scores_users},
                       {"scores_items", t.scores_items}};
}

void from_json(const nlohmann::json& j, TemplateSet& t) {
    t.indicator_name = j.at("indicator").get<std::string>();
    t.user_frac = j.at("user_frac").get<double>();
    t.item_frac = j.at("item_frac").get<double>();
    t.template_users = j.at("template_users").get<std::vector<Index>>();
    t.template_items = j.at("template_items").get<std::vector<Index>>();
    t.scores_users = j.value("scores_users", std::vector<double>{});
    t.scores_items = j.value("scores_items", std::vector<double>{});
    const auto n = j.at("num_users").get<std::size_t>();
    const auto m = j.at("num_items").get<std::size_t>();
    auto rebuild = [](const std::vector<Index>& sel, std::size_t count, std::vector<Index>& rank_of) {
        if (!std::is_sorted(sel.begin(), sel.end()) || std::adjacent_find(sel.begin(), sel.end()) != sel.end())
            throw DataError("template index list must be strictly ascending");
        rank_of.assign(count, TemplateSet::kNotTemplate);
        for (Index pos = 0; pos < sel.size(); ++pos) {
            if (sel[pos] >= count) throw DataError("template index out of range");
            rank_of[sel[pos]] = pos;
        }
    };
    rebuild(t.template_users, n, t.user_rank_of);
    rebuild(t.template_items, m, t.item_rank_of);
}

namespace {

// Squared Frobenius norm of Bᵀ·L·Y_side as entities are moved to the non-template set one at a
// time, lowest-ranked first. Since B has orthonormal columns, ‖B·Bᵀ·L·Y‖_F = ‖Bᵀ·L·Y‖_F.
std::vector<double> side_curve(const InteractionDataset& ds, const Matrix& basis, bool users,
                               const std::vector<double>& scores, const std::vector<std::size_t>& counts) {
    const std::size_t d = basis.cols();
    const std::size_t other = users ? ds.num_items() : ds.num_users();
    Matrix acc(other, d);  // row c holds Σ_{j non-template, c ∈ N_j} b_j
    auto order = rank_by_score(scores);
    std::reverse(order.begin(), order.end());

    std::vector<double> out;
    std::size_t added = 0;
    for (std::size_t target : counts) {
        for (; added < target; ++added) {
            const Index j = order[added];
            const auto neighbours = users ? ds.items_of(j) : ds.users_of(j);
            for (Index c : neighbours) axpy(1.0, basis.row(j), acc.row(c));
        }
        out.push_back(frobenius_sq(acc));
    }
    return out;
}

}  // namespace

std::vector<ErrorCurvePoint> error_curve(const InteractionDataset& ds, const SvdFactors& factors,
                                         const std::vector<double>& user_scores,
                                         const std::vector<double>& item_scores,
                                         const std::vector<double>& fractions) {
    std::vector<std::size_t> order(fractions.size());
    std::iota(order.begin(), order.end(), 0);
    for (double f : fractions)
        if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("error-curve fractions must lie in [0, 1]");
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fractions[a] < fractions[b]; });

    std::vector<std::size_t> ucounts, icounts;
    for (std::size_t k : order) {
        ucounts.push_back(fraction_count(fractions[k], ds.num_users()));
        icounts.push_back(fraction_count(fractions[k], ds.num_items()));
    }
    ucounts.push_back(ds.num_users());
    icounts.push_back(ds.num_items());
    const auto uerr = side_curve(ds, factors.u, true, user_scores, ucounts);
    const auto ierr = side_curve(ds, factors.v, false, item_scores, icounts);
    const double unorm = uerr.back();
    const double inorm = ierr.back();

    std::vector<ErrorCurvePoint> points(fractions.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        auto& p = points[order[k]];
        p.fraction = fractions[order[k]];
        p.user_ratio = unorm > 0.0 ? uerr[k] / unorm : 0.0;
        p.item_ratio = inorm > 0.0 ? ierr[k] / inorm : 0.0;
    }
    return points;
}

std::vector<ErrorCurvePoint> error_curve(const InteractionDataset& ds, std::size_t d, Indicator indicator,
                                         const std::vector<double>& fractions, const IndicatorOptions& options) {
    check_dense_cap(ds.num_users(), ds.num_items(), options.dense_cap);
    const auto factors = truncated_svd(ds.to_dense(), d, options.dense_cap);
    std::vector<double> su, si;
    if (indicator == Indicator::ErrorSortExact) {
        su = error_sort_exact(ds, factors, Side::User);
        si = error_sort_exact(ds, factors, Side::Item);
    } else {
        su = indicator_scores(ds, indicator, Side::User, options);
        si = indicator_scores(ds, indicator, Side::Item, options);
    }
    return error_curve(ds, factors, su, si, fractions);
}

void write_error_curve_csv(std::ostream& out, const std::vector<ErrorCurvePoint>& points,
                           const std::string& indicator_name, bool header) {
    if (header) out << "fraction,user_ratio,item_ratio,indicator\n";
    const auto flags = out.flags();
    const auto prec = out.precision();
    out << std::setprecision(10);
    for (const auto& p : points)
        out << p.fraction << ',' << p.user_ratio << ',' << p.item_ratio << ',' << indicator_name << '\n';
    out.flags(flags);
    out.precision(prec);
}

}  // namespace inmo
