#include "inmo/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "inmo/error.hpp"

namespace inmo {

namespace {

// −ln σ(x) without overflow.
double softplus_neg(double x) { return x < 0.0 ? -x + std::log1p(std::exp(x)) : std::log1p(std::exp(-x)); }

// d/dx of −ln σ(x) = −σ(−x)
double softplus_neg_grad(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return -e / (1.0 + e);
    }
    return -1.0 / (1.0 + std::exp(x));
}

template <typename T>
bool in_set(const std::vector<T>& grid, T value) {
    return std::find(grid.begin(), grid.end(), value) != grid.end();
}

void add_scaled(ModelParams& into, const ModelParams& from, double s) {
    auto dst = into.tensors();
    const auto src = from.tensors();
    for (std::size_t t = 0; t < dst.size(); ++t) axpy(s, src[t], dst[t]);
}

}  // namespace

void TrainConfig::validate() const {
    if (d == 0) throw ConfigError("d must be at least 1");
    if (!(lr >= 0.0)) throw ConfigError("lr must be nonnegative");
    if (!(l2_lambda >= 0.0)) throw ConfigError("l2_lambda must be nonnegative");
    if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw ConfigError("drop_rate must lie in [0, 1)");
    if (!(beta >= 0.0)) throw ConfigError("beta must be nonnegative");
    if (layers < 0) throw ConfigError("layers must be nonnegative");
    if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
    if (max_epochs < 0) throw ConfigError("max_epochs must be nonnegative");
    if (patience < 1) throw ConfigError("patience must be at least 1");
    if (!(0.0 <= alpha_init && alpha_init <= alpha_final && alpha_final <= 1.0))
        throw ConfigError("need 0 <= alpha_init <= alpha_final <= 1");
    if (anneal_epochs < 0) throw ConfigError("anneal_epochs must be nonnegative");
    if (!(init_std > 0.0)) throw ConfigError("init_std must be positive");
    if (eval_k == 0) throw ConfigError("eval_k must be at least 1");
}

std::vector<std::string> TrainConfig::grid_warnings() const {
    std::vector<std::string> out;
    auto note = [&](const std::string& key, double value) {
        std::ostringstream msg;
        msg << key << " = " << value << " is outside the usual tuning grid";
        out.push_back(msg.str());
    };
    if (!in_set<double>({1e-4, 1e-3, 1e-2}, lr)) note("lr", lr);
    if (!in_set<double>({0.0, 1e-5, 1e-4, 1e-3, 1e-2}, l2_lambda)) note("l2_lambda", l2_lambda);
    if (!in_set<double>({0.0, 0.1, 0.3, 0.5, 0.7, 0.9}, drop_rate)) note("drop_rate", drop_rate);
    return out;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"d", c.d},
         {"lr", c.lr},
         {"l2_lambda", c.l2_lambda},
         {"drop_rate", c.drop_rate},
         {"beta", c.beta},
         {"layers", c.layers},
         {"batch_size", c.batch_size},
         {"max_epochs", c.max_epochs},
         {"patience", c.patience},
         {"alpha_init", c.alpha_init},
         {"alpha_final", c.alpha_final},
         {"anneal_epochs", c.anneal_epochs},
         {"seed", c.seed},
         {"backbone", to_string(c.backbone)},
         {"init_std", c.init_std},
         {"eval_k", c.eval_k}};
}

BprSampler::BprSampler(const InteractionDataset& train) : train_(&train) {
    edge_users_.reserve(train.num_edges());
    edge_items_.reserve(train.num_edges());
    for (Index u = 0; u < train.num_users(); ++u)
        for (Index i : train.items_of(u)) {
            edge_users_.push_back(u);
            edge_items_.push_back(i);
        }
}

std::vector<Triple> BprSampler::sample(std::size_t batch_size, Rng& rng) const {
    if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
    std::vector<Triple> batch;
    if (edge_users_.empty()) return batch;
    batch.reserve(batch_size);
    const std::size_t m = train_->num_items();
    for (std::size_t b = 0; b < batch_size; ++b) {
        const std::size_t e = uniform_index(rng, edge_users_.size());
        const Index u = edge_users_[e];
        for (int attempt = 0; attempt < kNegativeSampleCap; ++attempt) {
            const auto neg = static_cast<Index>(uniform_index(rng, m));
            if (train_->contains(u, neg)) continue;
            batch.push_back({u, edge_items_[e], neg});
            break;
        }
    }
    return batch;
}

std::vector<Triple> sample_bpr_batch(const InteractionDataset& train, std::size_t batch_size, Rng& rng) {
    return BprSampler(train).sample(batch_size, rng);
}

std::vector<Triple> sample_se_triples(const std::vector<Triple>& batch, const InteractionDataset& train,
                                      const TemplateSet& templates, Rng& rng) {
    std::vector<Triple> out;
    if (templates.template_items.empty()) return out;
    for (const Triple& t : batch) {
        if (templates.user_rank_of[t.user] == TemplateSet::kNotTemplate) continue;
        if (templates.item_rank_of[t.pos] == TemplateSet::kNotTemplate) continue;
        for (int attempt = 0; attempt < kNegativeSampleCap; ++attempt) {
            const Index neg = templates.template_items[uniform_index(rng, templates.template_items.size())];
            if (train.contains(t.user, neg)) continue;
            out.push_back({t.user, t.pos, neg});
            break;
        }
    }
    return out;
}

double anneal_alpha(int epoch, const TrainConfig& cfg) {
    if (cfg.anneal_epochs <= 0 || epoch >= cfg.anneal_epochs) return cfg.alpha_final;
    const double a =
        cfg.alpha_init + (cfg.alpha_final - cfg.alpha_init) * static_cast<double>(epoch) / cfg.anneal_epochs;
    return std::min(cfg.alpha_final, a);
}

InteractionDataset drop_interactions(const InteractionDataset& view, double drop_rate, Rng& rng) {
    if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw ConfigError("drop_rate must lie in [0, 1)");
    if (drop_rate == 0.0) return view;
    std::vector<Edge> kept;
    kept.reserve(view.num_edges());
    for (Index u = 0; u < view.num_users(); ++u)
        for (Index i : view.items_of(u))
            if (uniform_real(rng) >= drop_rate) kept.push_back({u, i});
    return view.with_edges(std::move(kept));
}

ForwardPass model_forward(const ModelParams& params, const TemplateSet& templates, const InteractionDataset& view,
                          double alpha, BackboneKind backbone, int layers) {
    ForwardPass f;
    f.embeddings = batch_embeddings(view, params, templates, alpha);
    f.reps = backbone == BackboneKind::MF ? mf_forward(f.embeddings.e_u, f.embeddings.e_i)
                                          : lightgcn_forward(f.embeddings.e_u, f.embeddings.e_i, view, layers);
    return f;
}

BprOutput bpr_loss(const std::vector<Triple>& batch, const Representations& reps, const ModelParams& params,
                   double l2_lambda) {
    BprOutput out;
    out.grad_r_u = Matrix(reps.r_u.rows(), reps.r_u.cols());
    out.grad_r_i = Matrix(reps.r_i.rows(), reps.r_i.cols());
    if (!batch.empty()) {
        const double inv_b = 1.0 / static_cast<double>(batch.size());
        const std::size_t d = reps.r_u.cols();
        std::vector<double> diff(d);
        for (const Triple& t : batch) {
            const auto ru = reps.r_u.row(t.user);
            const auto rp = reps.r_i.row(t.pos);
            const auto rn = reps.r_i.row(t.neg);
            for (std::size_t k = 0; k < d; ++k) diff[k] = rp[k] - rn[k];
            const double x = dot(ru, diff);
            out.ranking += softplus_neg(x);
            const double g = softplus_neg_grad(x) * inv_b;
            axpy(g, diff, out.grad_r_u.row(t.user));
            axpy(g, ru, out.grad_r_i.row(t.pos));
            axpy(-g, ru, out.grad_r_i.row(t.neg));
        }
        out.ranking *= inv_b;
    }
    out.grad_l2 = ModelParams::zeros_like(params);
    double reg = 0.0;
    const auto src = params.tensors();
    auto dst = out.grad_l2.tensors();
    for (std::size_t t = 0; t < 4; ++t) {  // W_s is not regularized
        reg += dot(src[t], src[t]);
        axpy(2.0 * l2_lambda, src[t], dst[t]);
    }
    out.loss = out.ranking + l2_lambda * reg;
    return out;
}

SeOutput self_enhanced_loss(const std::vector<Triple>& triples, const ModelParams& params,
                            const TemplateSet& templates) {
    SeOutput out;
    out.grads = ModelParams::zeros_like(params);
    if (triples.empty()) return out;
    const std::size_t d = params.d;
    const double inv = 1.0 / static_cast<double>(triples.size());
    std::vector<double> diff(d), w_diff(d), w_tu(d);
    for (const Triple& t : triples) {
        const Index ru = templates.user_rank_of.at(t.user);
        const Index rp = templates.item_rank_of.at(t.pos);
        const Index rn = templates.item_rank_of.at(t.neg);
        if (ru == TemplateSet::kNotTemplate || rp == TemplateSet::kNotTemplate || rn == TemplateSet::kNotTemplate)
            throw std::invalid_argument("self-enhanced triple outside the template sets");
        const auto tu = params.t_u.row(ru);
        const auto tp = params.t_i.row(rp);
        const auto tn = params.t_i.row(rn);
        double x = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            diff[k] = tp[k] - tn[k];
            w_diff[k] = params.w_s[k] * diff[k];
            w_tu[k] = params.w_s[k] * tu[k];
            x += tu[k] * w_diff[k];
        }
        out.loss += softplus_neg(x);
        const double g = softplus_neg_grad(x) * inv;
        axpy(g, w_diff, out.grads.t_u.row(ru));
        axpy(g, w_tu, out.grads.t_i.row(rp));
        axpy(-g, w_tu, out.grads.t_i.row(rn));
        for (std::size_t k = 0; k < d; ++k) out.grads.w_s[k] += g * tu[k] * diff[k];
    }
    out.loss *= inv;
    return out;
}

LossResult loss_and_gradients(const ModelParams& params, const TemplateSet& templates, const InteractionDataset& view,
                              double alpha, BackboneKind backbone, int layers, const std::vector<Triple>& batch,
                              const std::vector<Triple>& se_triples, double l2_lambda, double beta) {
    const ForwardPass f = model_forward(params, templates, view, alpha, backbone, layers);
    BprOutput b = bpr_loss(batch, f.reps, params, l2_lambda);

    LossResult r;
    r.bpr = b.loss;
    r.grads = std::move(b.grad_l2);
    if (backbone == BackboneKind::MF) {
        embedding_backward(view, templates, alpha, b.grad_r_u, b.grad_r_i, r.grads);
    } else {
        const Representations g = lightgcn_backward(b.grad_r_u, b.grad_r_i, view, layers);
        embedding_backward(view, templates, alpha, g.r_u, g.r_i, r.grads);
    }
    r.total = r.bpr;
    if (beta != 0.0) {
        const SeOutput se = self_enhanced_loss(se_triples, params, templates);
        r.se = se.loss;
        r.total = r.bpr + beta * r.se;
        add_scaled(r.grads, se.grads, beta);
    }
    return r;
}

AdamState AdamState::for_params(const ModelParams& p) {
    AdamState s;
    s.m = ModelParams::zeros_like(p);
    s.v = ModelParams::zeros_like(p);
    return s;
}

void adam_step(ModelParams& params, AdamState& state, const ModelParams& grads, double lr) {
    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    auto p = params.tensors();
    auto m = state.m.tensors();
    auto v = state.v.tensors();
    const auto g = grads.tensors();
    for (std::size_t t = 0; t < p.size(); ++t) {
        if (g[t].size() != p[t].size()) throw std::invalid_argument("adam: gradient shape mismatch");
        for (std::size_t k = 0; k < p[t].size(); ++k) {
            const double gk = g[t][k];
            if (!std::isfinite(gk)) throw DivergenceError("non-finite gradient in Adam update");
            m[t][k] = state.beta1 * m[t][k] + (1.0 - state.beta1) * gk;
            v[t][k] = state.beta2 * v[t][k] + (1.0 - state.beta2) * gk * gk;
            const double m_hat = m[t][k] / c1;
            const double v_hat = v[t][k] / c2;
            p[t][k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
            if (!std::isfinite(p[t][k])) throw DivergenceError("non-finite parameter after Adam update");
        }
    }
}

nlohmann::json to_log_json(const EpochRecord& r) {
    return {{"epoch", r.epoch},
            {"alpha", r.alpha},
            {"train_loss", r.train_loss},
            {"bpr", r.bpr},
            {"se", r.se},
            {"val_recall@20", r.val.recall},
            {"val_precision@20", r.val.precision},
            {"val_ndcg@20", r.val.ndcg}};
}

Metrics validation_metrics(const ModelParams& params, const TemplateSet& templates, const DatasetSplit& split,
                           const TrainConfig& cfg) {
    const auto f = model_forward(params, templates, split.train, cfg.alpha_final, cfg.backbone, cfg.layers);
    EvalOptions opts;
    opts.k = cfg.eval_k;
    const auto report = evaluate(f.reps, split.train, split.valid, "validation", opts);
    return report.groups.at("all").mean;
}

TrainResult train(const DatasetSplit& split, const TemplateSet& templates, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
    cfg.validate();
    const InteractionDataset& train_view = split.train;
    if (templates.num_users() != train_view.num_users() || templates.num_items() != train_view.num_items())
        throw ConfigError("template set does not match the training data");

    Rng rng(cfg.seed);
    ModelParams params = ModelParams::initialize(templates.n_t(), templates.m_t(), cfg.d, rng, cfg.init_std);
    AdamState adam = AdamState::for_params(params);
    const BprSampler sampler(train_view);
    const std::size_t batches =
        std::max<std::size_t>(1, (train_view.num_edges() + cfg.batch_size - 1) / cfg.batch_size);

    TrainResult result;
    result.params = params;
    const auto start = std::chrono::steady_clock::now();
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        rec.alpha = anneal_alpha(epoch, cfg);
        for (std::size_t b = 0; b < batches; ++b) {
            const auto batch = sampler.sample(cfg.batch_size, rng);
            const auto se_triples =
                cfg.beta != 0.0 ? sample_se_triples(batch, train_view, templates, rng) : std::vector<Triple>{};
            const InteractionDataset view = drop_interactions(train_view, cfg.drop_rate, rng);
            const LossResult loss = loss_and_gradients(params, templates, view, rec.alpha, cfg.backbone, cfg.layers,
                                                       batch, se_triples, cfg.l2_lambda, cfg.beta);
            if (!std::isfinite(loss.total)) {
                std::ostringstream msg;
                msg << "non-finite loss at epoch " << epoch << ", batch " << b;
                throw DivergenceError(msg.str());
            }
            try {
                adam_step(params, adam, loss.grads, cfg.lr);
            } catch (const DivergenceError& e) {
                std::ostringstream msg;
                msg << e.what() << " at epoch " << epoch << ", batch " << b;
                throw DivergenceError(msg.str());
            }
            rec.train_loss += loss.total;
            rec.bpr += loss.bpr;
            rec.se += loss.se;
        }
        rec.train_loss /= static_cast<double>(batches);
        rec.bpr /= static_cast<double>(batches);
        rec.se /= static_cast<double>(batches);
        rec.val = validation_metrics(params, templates, split, cfg);
        rec.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.log.push_back(rec);
        result.epochs_run = epoch + 1;
        if (on_epoch) on_epoch(rec);

        if (result.best_epoch < 0 || rec.val.ndcg > result.best_val_ndcg) {
            result.best_epoch = epoch;
            result.best_val_ndcg = rec.val.ndcg;
            result.params = params;
        } else if (epoch - result.best_epoch >= cfg.patience) {
            result.early_stopped = true;
            break;
        }
    }
    return result;
}

}  // namespace inmo
