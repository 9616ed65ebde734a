#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "inmo/dataset.hpp"
#include "inmo/matrix.hpp"
#include "inmo/random.hpp"
#include "inmo/templates.hpp"
#include "json.hpp"

namespace inmo {

/// Template vectors, global templates and the self-enhanced diagonal.
struct ModelParams {
    std::size_t d = 0;
    Matrix t_u;                   // n_t×d
    Matrix t_i;                   // m_t×d
    std::vector<double> t_user;   // d
    std::vector<double> t_item;   // d
    std::vector<double> w_s;      // d

    std::size_t n_t() const { return t_u.rows(); }
    std::size_t m_t() const { return t_i.rows(); }
    /// (n_t + m_t + 2)·d + d
    std::size_t param_count() const;

    /// Zero tensors with the given shapes.
    static ModelParams zeros(std::size_t n_t, std::size_t m_t, std::size_t d);
    static ModelParams zeros_like(const ModelParams& p) { return zeros(p.n_t(), p.m_t(), p.d); }
    /// Template vectors i.i.d. N(0, std²), W_s = 1.
    static ModelParams initialize(std::size_t n_t, std::size_t m_t, std::size_t d, Rng& rng, double std = 0.1);

    /// Views of every tensor in a fixed order: T_u, T_i, t_user, t_item, W_s.
    std::vector<std::span<double>> tensors();
    std::vector<std::span<const double>> tensors() const;

    bool all_finite() const;
    bool operator==(const ModelParams& other) const = default;
};

/// e_u = (Σ_{i∈N_u∩I_tem} t_i + t_user) / (|N_u∩I_tem| + 1)^α, written into `out`.
void user_embedding(std::span<const Index> observed_items, const ModelParams& params, const TemplateSet& templates,
                    double alpha, std::span<double> out);
std::vector<double> user_embedding(std::span<const Index> observed_items, const ModelParams& params,
                                   const TemplateSet& templates, double alpha);

/// e_i = (Σ_{u∈N_i∩U_tem} t_u + t_item) / (|N_i∩U_tem| + 1)^α.
void item_embedding(std::span<const Index> observed_users, const ModelParams& params, const TemplateSet& templates,
                    double alpha, std::span<double> out);
std::vector<double> item_embedding(std::span<const Index> observed_users, const ModelParams& params,
                                   const TemplateSet& templates, double alpha);

struct Embeddings {
    Matrix e_u;  // n×d
    Matrix e_i;  // m×d
};

/// Row u is user_embedding(N_u) and row i is item_embedding(N_i) over `view`.
Embeddings batch_embeddings(const InteractionDataset& view, const ModelParams& params, const TemplateSet& templates,
                            double alpha);

/// Pulls gradients w.r.t. E_u and E_i back onto T_i, t_user (users) and T_u, t_item (items);
/// accumulates into `grads`.
void embedding_backward(const InteractionDataset& view, const TemplateSet& templates, double alpha,
                        const Matrix& grad_e_u, const Matrix& grad_e_i, ModelParams& grads);

/// Model artifact: header (d, n_t, m_t, indicator, template lists) and row-major tensors.
nlohmann::json params_to_json(const ModelParams& params, const TemplateSet& templates);
/// Reads an artifact; throws DataError on shape mismatches.
std::pair<ModelParams, TemplateSet> params_from_json(const nlohmann::json& j);

}  // namespace inmo
