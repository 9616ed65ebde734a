#include "inmo/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "inmo/templates.hpp"

namespace inmo {

namespace {

// Factors with σ_d > 0: d is lowered to the numerical rank when the requested one runs past it.
SvdFactors nonsingular_factors(const Matrix& y, std::size_t d, std::size_t dense_cap, std::size_t& d_used,
                               bool& degenerate) {
    SvdFactors f = truncated_svd(y, d, dense_cap);
    d_used = std::min(d, f.numerical_rank);
    if (d_used < d) f = truncated_svd(y, d_used, dense_cap);
    degenerate = f.degenerate();
    return f;
}

Matrix scale_columns(const Matrix& a, const std::vector<double>& s, bool invert) {
    Matrix out = a;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = invert ? out(r, c) / s[c] : out(r, c) * s[c];
    return out;
}

bool within(double lhs, double rhs, bool equality) {
    const double slack = kChainSlack * std::max(1.0, std::abs(rhs));
    return equality ? std::abs(lhs - rhs) <= slack : lhs <= rhs + slack;
}

InequalityStep step(std::string name, double lhs, double rhs, bool equality) {
    return {std::move(name), lhs, rhs, equality, within(lhs, rhs, equality)};
}

void put_seed(nlohmann::json& j, const std::optional<std::uint64_t>& seed) {
    j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
}

}  // namespace

InteractionDataset dataset_from_dense(const Matrix& y) {
    std::vector<Edge> edges;
    for (std::size_t u = 0; u < y.rows(); ++u)
        for (std::size_t i = 0; i < y.cols(); ++i)
            if (y(u, i) != 0.0) edges.push_back({static_cast<Index>(u), static_cast<Index>(i)});
    return InteractionDataset::from_edges(y.rows(), y.cols(), std::move(edges));
}

Theorem1Report theorem1_check(const Matrix& y, std::size_t d, std::size_t dense_cap) {
    Theorem1Report report;
    report.rows = y.rows();
    report.cols = y.cols();
    report.d_requested = d;
    const SvdFactors f = nonsingular_factors(y, d, dense_cap, report.d_used, report.degenerate);

    const Matrix t_u = scale_columns(f.u, f.s, true);
    const Matrix& t_i = f.v;
    const Matrix e_u = matmul(y, t_i);
    const Matrix e_i = matmul_tn(y, t_u);
    report.inmo_error = frobenius(y - matmul(e_u, transpose(e_i)));
    report.eps_min = f.eps_min;
    report.pass = std::abs(report.inmo_error - report.eps_min) <= 1e-6 * std::max(1.0, report.eps_min);
    return report;
}

double error_sort_bound(const InteractionDataset& ds, const SvdFactors& factors,
                        const std::vector<Index>& template_users) {
    const auto scores = error_sort_exact(ds, factors, Side::User);
    std::vector<bool> is_template(ds.num_users(), false);
    for (Index u : template_users) is_template.at(u) = true;
    double bound = 0.0;
    for (Index u = 0; u < ds.num_users(); ++u)
        if (!is_template[u]) bound += scores[u];
    return bound;
}

Theorem2Report theorem2_check(const Matrix& y, std::size_t d, const std::vector<Index>& template_users,
                              std::size_t dense_cap) {
    const std::size_t n = y.rows();
    const std::size_t m = y.cols();
    check_dense_cap(n, n, dense_cap);
    std::vector<bool> is_template(n, false);
    for (Index u : template_users) {
        if (u >= n) throw std::invalid_argument("template user index out of range");
        is_template[u] = true;
    }

    Theorem2Report report;
    report.rows = n;
    report.cols = m;
    report.d_requested = d;
    report.n_templates = static_cast<std::size_t>(std::count(is_template.begin(), is_template.end(), true));
    const SvdFactors f = nonsingular_factors(y, d, dense_cap, report.d_used, report.degenerate);
    report.eps_min = f.eps_min;

    // T_u keeps only template rows of Uᵈ(Sᵈ)⁻¹; every item is a template so E_u = Y·Vᵈ.
    Matrix t_u = scale_columns(f.u, f.s, true);
    for (std::size_t u = 0; u < n; ++u)
        if (!is_template[u])
            for (std::size_t k = 0; k < t_u.cols(); ++k) t_u(u, k) = 0.0;
    const Matrix e_u = matmul(y, f.v);
    const Matrix e_i = matmul_tn(y, t_u);
    report.true_error = frobenius(y - matmul(e_u, transpose(e_i)));

    const Matrix residual = y - matmul(scale_columns(f.u, f.s, false), transpose(f.v));
    const Matrix p = matmul(f.u, transpose(f.u));
    Matrix l_y = y;
    for (std::size_t u = 0; u < n; ++u)
        if (is_template[u])
            for (std::size_t i = 0; i < m; ++i) l_y(u, i) = 0.0;
    const Matrix additional = matmul(p, l_y);
    const double additional_norm = frobenius(additional);
    report.additional_error = additional_norm * additional_norm;

    // Per-item sums over non-template neighbours, with s_j read off the explicit projector.
    std::vector<double> col_norm_sq(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) col_norm_sq[j] += p(k, j) * p(k, j);
    std::vector<double> item_degree(m, 0.0);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t i = 0; i < m; ++i) item_degree[i] += y(u, i);

    double column_sum = 0.0, cauchy = 0.0;
    std::vector<double> acc(n);
    for (std::size_t i = 0; i < m; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        double count = 0.0, norms = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (is_template[j] || y(j, i) == 0.0) continue;
            for (std::size_t k = 0; k < n; ++k) acc[k] += p(k, j);
            count += 1.0;
            norms += col_norm_sq[j];
        }
        for (double a : acc) column_sum += a * a;
        cauchy += count * norms;
    }
    double relaxed = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (is_template[j]) continue;
        double nb = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            if (y(j, i) != 0.0) nb += item_degree[i];
        relaxed += col_norm_sq[j] * nb;
    }
    report.bound = relaxed;

    const double via_scores = error_sort_bound(dataset_from_dense(y), f, template_users);

    report.chain = {
        step("eckart-young residual", frobenius(residual), f.eps_min, true),
        step("error decomposition", report.true_error, frobenius(residual + additional), true),
        step("triangle inequality", report.true_error, f.eps_min + additional_norm, false),
        step("column expansion", report.additional_error, column_sum, true),
        step("cauchy-schwarz", column_sum, cauchy, false),
        step("degree relaxation", cauchy, relaxed, false),
        step("error-sort score sum", via_scores, relaxed, true),
    };
    report.pass = std::all_of(report.chain.begin(), report.chain.end(), [](const InequalityStep& s) { return s.holds; });
    return report;
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t lo = 0; lo < order.size();) {
        std::size_t hi = lo;
        while (hi + 1 < order.size() && values[order[hi + 1]] == values[order[lo]]) ++hi;
        const double avg = 0.5 * static_cast<double>(lo + hi) + 1.0;
        for (std::size_t k = lo; k <= hi; ++k) ranks[order[k]] = avg;
        lo = hi + 1;
    }
    return ranks;
}

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
    if (a.size() < 2) return std::nullopt;
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double mean = 0.5 * static_cast<double>(a.size() + 1);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        cov += (ra[k] - mean) * (rb[k] - mean);
        va += (ra[k] - mean) * (ra[k] - mean);
        vb += (rb[k] - mean) * (rb[k] - mean);
    }
    if (va == 0.0 || vb == 0.0) return std::nullopt;
    return cov / std::sqrt(va * vb);
}

FaithfulnessReport indicator_faithfulness(const Matrix& y, std::size_t d, std::size_t dense_cap) {
    FaithfulnessReport report;
    report.rows = y.rows();
    report.cols = y.cols();
    report.d = d;
    const auto ds = dataset_from_dense(y);
    report.exact = error_sort_exact(ds, truncated_svd(y, d, dense_cap), Side::User);
    report.simplified = error_sort_simplified(ds, Side::User);
    report.spearman = spearman(report.exact, report.simplified);
    report.degenerate = !report.spearman.has_value();
    return report;
}

void write_faithfulness_csv(std::ostream& out, const FaithfulnessReport& report) {
    const auto old = out.precision(17);
    out << "user,exact,simplified\n";
    for (std::size_t u = 0; u < report.exact.size(); ++u)
        out << u << ',' << report.exact[u] << ',' << report.simplified[u] << '\n';
    out.precision(old);
}

void to_json(nlohmann::json& j, const Theorem1Report& r) {
    j = {{"check", "theorem1"}, {"rows", r.rows}, {"cols", r.cols}, {"d_requested", r.d_requested},
         {"d_used", r.d_used}, {"inmo_error", r.inmo_error}, {"eps_min", r.eps_min},
         {"degenerate_spectrum", r.degenerate}, {"pass", r.pass}};
    put_seed(j, r.seed);
}

void to_json(nlohmann::json& j, const InequalityStep& s) {
    j = {{"name", s.name}, {"lhs", s.lhs}, {"rhs", s.rhs}, {"relation", s.equality ? "=" : "<="}, {"holds", s.holds}};
}

void to_json(nlohmann::json& j, const Theorem2Report& r) {
    j = {{"check", "theorem2"}, {"rows", r.rows}, {"cols", r.cols}, {"d_requested", r.d_requested},
         {"d_used", r.d_used}, {"n_templates", r.n_templates}, {"true_error", r.true_error},
         {"eps_min", r.eps_min}, {"additional_error", r.additional_error}, {"bound", r.bound},
         {"chain", r.chain}, {"slack", kChainSlack}, {"degenerate_spectrum", r.degenerate}, {"pass", r.pass}};
    put_seed(j, r.seed);
}

void to_json(nlohmann::json& j, const FaithfulnessReport& r) {
    j = {{"check", "indicator_faithfulness"}, {"rows", r.rows}, {"cols", r.cols}, {"d", r.d},
         {"spearman", r.spearman ? nlohmann::json(*r.spearman) : nlohmann::json(nullptr)},
         {"degenerate", r.degenerate}};
}

}  // namespace inmo
