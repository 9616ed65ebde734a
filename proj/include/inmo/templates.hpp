#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "inmo/dataset.hpp"
#include "inmo/svd.hpp"
#include "json.hpp"

namespace inmo {

enum class Side { User, Item };

enum class Indicator { Degree, PageRank, ErrorSortExact, ErrorSortSimplified };

std::string to_string(Indicator indicator);
Indicator parse_indicator(const std::string& name);

struct PageRankOptions {
    double damping = 0.85;
    int max_iters = 100;
    double tol = 1e-10;
};

/// Score = degree.
std::vector<double> degree_indicator(const InteractionDataset& ds, Side side);

/// Stationary distribution over all n + m nodes of the undirected bipartite graph
/// (users first, then items) with uniform teleport; sums to 1.
std::vector<double> pagerank_all(const InteractionDataset& ds, const PageRankOptions& options = {});
std::vector<double> pagerank_indicator(const InteractionDataset& ds, Side side, const PageRankOptions& options = {});

/// ‖s_j‖² · Σ_{i∈N_j} |N_i| where s_j is column j of Uᵈ(Uᵈ)ᵀ (Vᵈ(Vᵈ)ᵀ for items).
std::vector<double> error_sort_exact(const InteractionDataset& ds, std::size_t d, Side side,
                                     std::size_t dense_cap = kDefaultDenseCap);
/// Same scores from precomputed factors.
std::vector<double> error_sort_exact(const InteractionDataset& ds, const SvdFactors& factors, Side side);

/// Σ_{i∈N_u} 1/|N_i| (and symmetrically for items).
std::vector<double> error_sort_simplified(const InteractionDataset& ds, Side side);

struct IndicatorOptions {
    std::size_t svd_dim = 64;  // only for ErrorSortExact
    std::size_t dense_cap = kDefaultDenseCap;
    PageRankOptions pagerank;
};

std::vector<double> indicator_scores(const InteractionDataset& ds, Indicator indicator, Side side,
                                     const IndicatorOptions& options = {});

/// Selected template users and items with their selection scores.
struct TemplateSet {
    static constexpr Index kNotTemplate = std::numeric_limits<Index>::max();

    std::vector<Index> template_users;  // ascending
    std::vector<Index> template_items;  // ascending
    std::vector<Index> user_rank_of;    // user -> row of T_u, or kNotTemplate
    std::vector<Index> item_rank_of;    // item -> row of T_i, or kNotTemplate
    std::string indicator_name;
    double user_frac = 1.0;
    double item_frac = 1.0;
    std::vector<double> scores_users;
    std::vector<double> scores_items;

    std::size_t n_t() const { return template_users.size(); }
    std::size_t m_t() const { return template_items.size(); }
    std::size_t num_users() const { return user_rank_of.size(); }
    std::size_t num_items() const { return item_rank_of.size(); }
};

/// Entity order used for selection: score descending, index ascending on ties.
/// Entities flagged ineligible are left out of the order.
std::vector<Index> rank_by_score(const std::vector<double>& scores, const std::vector<bool>& eligible = {});

/// Top ⌈frac · #eligible⌉ entities per side. Empty eligibility vectors mean "all eligible".
TemplateSet select_templates(const std::vector<double>& scores_users, const std::vector<double>& scores_items,
                             double user_frac, double item_frac, std::string indicator_name,
                             const std::vector<bool>& eligible_users = {},
                             const std::vector<bool>& eligible_items = {});

/// Scores entities of the training graph with `indicator` and selects templates among those
/// with at least one training interaction.
TemplateSet select_templates(const InteractionDataset& train, Indicator indicator, double user_frac,
                             double item_frac, const IndicatorOptions& options = {});

void to_json(nlohmann::json& j, const TemplateSet& t);
void from_json(const nlohmann::json& j, TemplateSet& t);

struct ErrorCurvePoint {
    double fraction = 0.0;  // share of entities treated as non-template
    double user_ratio = 0.0;
    double item_ratio = 0.0;
};

/// ‖Uᵈ(Uᵈ)ᵀ L_u Y‖²_F (and ‖Y L_i Vᵈ(Vᵈ)ᵀ‖²_F) where L marks the lowest-ranked entities
/// as non-template, divided by the value with every entity non-template.
std::vector<ErrorCurvePoint> error_curve(const InteractionDataset& ds, std::size_t d, Indicator indicator,
                                         const std::vector<double>& fractions, const IndicatorOptions& options = {});
std::vector<ErrorCurvePoint> error_curve(const InteractionDataset& ds, const SvdFactors& factors,
                                         const std::vector<double>& user_scores,
                                         const std::vector<double>& item_scores,
                                         const std::vector<double>& fractions);

/// `fraction,user_ratio,item_ratio,indicator` rows after a header line.
void write_error_curve_csv(std::ostream& out, const std::vector<ErrorCurvePoint>& points,
                           const std::string& indicator_name, bool header = true);

}  // namespace inmo
