#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "inmo/dataset.hpp"
#include "inmo/matrix.hpp"
#include "inmo/svd.hpp"
#include "json.hpp"

namespace inmo {

/// 0/1 matrix to a dataset with an edge per nonzero entry.
InteractionDataset dataset_from_dense(const Matrix& y);

struct Theorem1Report {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t d_requested = 0;
    std::size_t d_used = 0;  // lowered to the numerical rank when σ_d = 0
    double inmo_error = 0.0;
    double eps_min = 0.0;
    bool degenerate = false;
    bool pass = false;
    std::optional<std::uint64_t> seed;
};

/// Builds T_u = Uᵈ(Sᵈ)⁻¹, T_i = Vᵈ, E_u = Y·T_i, E_i = Yᵀ·T_u and compares ‖Y − E_u·E_iᵀ‖_F with ε_min.
Theorem1Report theorem1_check(const Matrix& y, std::size_t d, std::size_t dense_cap = kDefaultDenseCap);

struct InequalityStep {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool equality = false;  // lhs = rhs rather than lhs ≤ rhs
    bool holds = false;
};

struct Theorem2Report {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t d_requested = 0;
    std::size_t d_used = 0;
    std::size_t n_templates = 0;
    double true_error = 0.0;        // ‖Y − E_u·E_iᵀ‖_F
    double eps_min = 0.0;
    double additional_error = 0.0;  // ‖Uᵈ(Uᵈ)ᵀ L_u Y‖²_F
    double bound = 0.0;             // Σ_{j non-template} ‖s_j‖² Σ_{i∈N_j} |N_i|
    std::vector<InequalityStep> chain;
    bool degenerate = false;
    bool pass = false;
    std::optional<std::uint64_t> seed;
};

inline constexpr double kChainSlack = 1e-8;

/// Item side all-template; `template_users` selects the rows kept in T_u.
Theorem2Report theorem2_check(const Matrix& y, std::size_t d, const std::vector<Index>& template_users,
                              std::size_t dense_cap = kDefaultDenseCap);

/// Σ over non-template users of the exact error-sort score.
double error_sort_bound(const InteractionDataset& ds, const SvdFactors& factors,
                        const std::vector<Index>& template_users);

struct FaithfulnessReport {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t d = 0;
    std::optional<double> spearman;  // empty when either score vector is constant
    bool degenerate = false;
    std::vector<double> exact;
    std::vector<double> simplified;
};

/// Spearman rank correlation (average ranks on ties) of exact and simplified error-sort user scores.
FaithfulnessReport indicator_faithfulness(const Matrix& y, std::size_t d, std::size_t dense_cap = kDefaultDenseCap);

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> average_ranks(const std::vector<double>& values);

/// `user,exact,simplified` rows.
void write_faithfulness_csv(std::ostream& out, const FaithfulnessReport& report);

void to_json(nlohmann::json& j, const Theorem1Report& r);
void to_json(nlohmann::json& j, const InequalityStep& s);
void to_json(nlohmann::json& j, const Theorem2Report& r);
void to_json(nlohmann::json& j, const FaithfulnessReport& r);

}  // namespace inmo
