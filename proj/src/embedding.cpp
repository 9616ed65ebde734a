#include "inmo/embedding.hpp"

#include <cmath>
#include <stdexcept>

#include "inmo/error.hpp"

namespace inmo {

namespace {

void aggregate(std::span<const Index> observed, const std::vector<Index>& rank_of, const Matrix& templates,
               std::span<const double> global, double alpha, std::span<double> out) {
    if (out.size() != global.size()) throw std::invalid_argument("embedding output has wrong dimension");
    std::fill(out.begin(), out.end(), 0.0);
    std::size_t count = 0;
    for (Index x : observed) {
        const Index r = rank_of.at(x);
        if (r == TemplateSet::kNotTemplate) continue;
        axpy(1.0, templates.row(r), out);
        ++count;
    }
    axpy(1.0, global, out);
    const double denom = std::pow(static_cast<double>(count + 1), alpha);
    for (double& v : out) v /= denom;
}

std::size_t template_count(std::span<const Index> observed, const std::vector<Index>& rank_of) {
    std::size_t count = 0;
    for (Index x : observed)
        if (rank_of[x] != TemplateSet::kNotTemplate) ++count;
    return count;
}

void backward_side(const InteractionDataset& view, bool users, const std::vector<Index>& rank_of, double alpha,
                   const Matrix& grad, Matrix& grad_templates, std::vector<double>& grad_global) {
    const std::size_t count = users ? view.num_users() : view.num_items();
    for (Index e = 0; e < count; ++e) {
        const auto observed = users ? view.items_of(e) : view.users_of(e);
        const double denom = std::pow(static_cast<double>(template_count(observed, rank_of) + 1), alpha);
        const auto g = grad.row(e);
        for (Index x : observed) {
            const Index r = rank_of[x];
            if (r == TemplateSet::kNotTemplate) continue;
            axpy(1.0 / denom, g, grad_templates.row(r));
        }
        axpy(1.0 / denom, g, grad_global);
    }
}

nlohmann::json matrix_rows(const Matrix& a) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto row = a.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
}

Matrix rows_matrix(const nlohmann::json& rows, std::size_t expect_rows, std::size_t d) {
    if (rows.size() != expect_rows) throw DataError("model artifact tensor has wrong row count");
    Matrix a(expect_rows, d);
    for (std::size_t r = 0; r < expect_rows; ++r) {
        const auto row = rows[r].get<std::vector<double>>();
        if (row.size() != d) throw DataError("model artifact tensor has wrong width");
        std::copy(row.begin(), row.end(), a.row(r).begin());
    }
    return a;
}

std::vector<double> vector_of(const nlohmann::json& j, std::size_t d) {
    auto v = j.get<std::vector<double>>();
    if (v.size() != d) throw DataError("model artifact vector has wrong length");
    return v;
}

}  // namespace

std::size_t ModelParams::param_count() const {
    return t_u.size() + t_i.size() + t_user.size() + t_item.size() + w_s.size();
}

ModelParams ModelParams::zeros(std::size_t n_t, std::size_t m_t, std::size_t d) {
    ModelParams p;
    p.d = d;
    p.t_u = Matrix(n_t, d);
    p.t_i = Matrix(m_t, d);
    p.t_user.assign(d, 0.0);
    p.t_item.assign(d, 0.0);
    p.w_s.assign(d, 0.0);
    return p;
}

ModelParams ModelParams::initialize(std::size_t n_t, std::size_t m_t, std::size_t d, Rng& rng, double std) {
    if (d == 0) throw ConfigError("embedding dimension must be at least 1");
    ModelParams p = zeros(n_t, m_t, d);
    for (double& v : p.t_u.data()) v = std * standard_normal(rng);
    for (double& v : p.t_i.data()) v = std * standard_normal(rng);
    for (double& v : p.t_user) v = std * standard_normal(rng);
    for (double& v : p.t_item) v = std * standard_normal(rng);
    std::fill(p.w_s.begin(), p.w_s.end(), 1.0);
    return p;
}

std::vector<std::span<double>> ModelParams::tensors() {
    return {t_u.data(), t_i.data(), t_user, t_item, w_s};
}

std::vector<std::span<const double>> ModelParams::tensors() const {
    return {t_u.data(), t_i.data(), t_user, t_item, w_s};
}

bool ModelParams::all_finite() const {
    for (auto t : tensors())
        for (double v : t)
            if (!std::isfinite(v)) return false;
    return true;
}

void user_embedding(std::span<const Index> observed_items, const ModelParams& params, const TemplateSet& templates,
                    double alpha, std::span<double> out) {
    aggregate(observed_items, templates.item_rank_of, params.t_i, params.t_user, alpha, out);
}

std::vector<double> user_embedding(std::span<const Index> observed_items, const ModelParams& params,
                                   const TemplateSet& templates, double alpha) {
    std::vector<double> out(params.d);
    user_embedding(observed_items, params, templates, alpha, out);
    return out;
}

void item_embedding(std::span<const Index> observed_users, const ModelParams& params, const TemplateSet& templates,
                    double alpha, std::span<double> out) {
    aggregate(observed_users, templates.user_rank_of, params.t_u, params.t_item, alpha, out);
}

std::vector<double> item_embedding(std::span<const Index> observed_users, const ModelParams& params,
                                   const TemplateSet& templates, double alpha) {
    std::vector<double> out(params.d);
    item_embedding(observed_users, params, templates, alpha, out);
    return out;
}

Embeddings batch_embeddings(const InteractionDataset& view, const ModelParams& params, const TemplateSet& templates,
                            double alpha) {
    if (templates.num_users() != view.num_users() || templates.num_items() != view.num_items())
        throw std::invalid_argument("template set and interaction view disagree on entity counts");
    Embeddings e{Matrix(view.num_users(), params.d), Matrix(view.num_items(), params.d)};
    for (Index u = 0; u < view.num_users(); ++u) user_embedding(view.items_of(u), params, templates, alpha, e.e_u.row(u));
    for (Index i = 0; i < view.num_items(); ++i) item_embedding(view.users_of(i), params, templates, alpha, e.e_i.row(i));
    return e;
}

void embedding_backward(const InteractionDataset& view, const TemplateSet& templates, double alpha,
                        const Matrix& grad_e_u, const Matrix& grad_e_i, ModelParams& grads) {
    backward_side(view, true, templates.item_rank_of, alpha, grad_e_u, grads.t_i, grads.t_user);
    backward_side(view, false, templates.user_rank_of, alpha, grad_e_i, grads.t_u, grads.t_item);
}

nlohmann::json params_to_json(const ModelParams& params, const TemplateSet& templates) {
    return {{"format", "inmo-model"},
            {"version", 1},
            {"d", params.d},
            {"n_t", params.n_t()},
            {"m_t", params.m_t()},
            {"indicator", templates.indicator_name},
            {"templates", templates},
            {"T_u", matrix_rows(params.t_u)},
            {"T_i", matrix_rows(params.t_i)},
            {"t_user", params.t_user},
            {"t_item", params.t_item},
            {"W_s", params.w_s}};
}

std::pair<ModelParams, TemplateSet> params_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "inmo-model" || j.at("version") != 1) throw DataError("not an inmo model artifact");
        TemplateSet templates = j.at("templates").get<TemplateSet>();
        const auto d = j.at("d").get<std::size_t>();
        const auto n_t = j.at("n_t").get<std::size_t>();
        const auto m_t = j.at("m_t").get<std::size_t>();
        if (n_t != templates.n_t() || m_t != templates.m_t())
            throw DataError("model artifact header disagrees with its template lists");
        ModelParams p;
        p.d = d;
        p.t_u = rows_matrix(j.at("T_u"), n_t, d);
        p.t_i = rows_matrix(j.at("T_i"), m_t, d);
        p.t_user = vector_of(j.at("t_user"), d);
        p.t_item = vector_of(j.at("t_item"), d);
        p.w_s = vector_of(j.at("W_s"), d);
        return {std::move(p), std::move(templates)};
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model artifact: ") + e.what());
    }
}

}  // namespace inmo
