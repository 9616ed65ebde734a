#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "inmo/backbone.hpp"
#include "inmo/dataset.hpp"
#include "inmo/embedding.hpp"
#include "inmo/eval.hpp"
#include "inmo/random.hpp"
#include "inmo/templates.hpp"
#include "json.hpp"

namespace inmo {

struct TrainConfig {
    std::size_t d = 64;
    double lr = 1e-3;
    double l2_lambda = 1e-4;
    double drop_rate = 0.1;
    double beta = 0.1;
    int layers = 3;
    std::size_t batch_size = 2048;
    int max_epochs = 1000;
    int patience = 50;
    double alpha_init = 0.5;
    double alpha_final = 1.0;
    int anneal_epochs = 100;
    std::uint64_t seed = 0;
    BackboneKind backbone = BackboneKind::MF;
    double init_std = 0.1;
    std::size_t eval_k = 20;

    /// Throws ConfigError on values outside the valid domain.
    void validate() const;
    /// Human-readable notes for values outside the usual tuning grids.
    std::vector<std::string> grid_warnings() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);

struct Triple {
    Index user = 0;
    Index pos = 0;
    Index neg = 0;
    bool operator==(const Triple&) const = default;
};

inline constexpr int kNegativeSampleCap = 1000;

/// Edge-proportional BPR sampling with rejection-sampled negatives.
class BprSampler {
public:
    explicit BprSampler(const InteractionDataset& train);
    /// Triples whose user has no negative within the rejection cap are skipped.
    std::vector<Triple> sample(std::size_t batch_size, Rng& rng) const;

private:
    const InteractionDataset* train_;
    std::vector<Index> edge_users_;
    std::vector<Index> edge_items_;
};

std::vector<Triple> sample_bpr_batch(const InteractionDataset& train, std::size_t batch_size, Rng& rng);

/// For each triple whose user and positive are templates, one negative drawn uniformly from
/// I_tem \ N_u; users without such a negative within the cap are skipped.
std::vector<Triple> sample_se_triples(const std::vector<Triple>& batch, const InteractionDataset& train,
                                      const TemplateSet& templates, Rng& rng);

double anneal_alpha(int epoch, const TrainConfig& cfg);

/// Each edge kept independently with probability 1 − drop_rate.
InteractionDataset drop_interactions(const InteractionDataset& view, double drop_rate, Rng& rng);

struct ForwardPass {
    Embeddings embeddings;
    Representations reps;
};

ForwardPass model_forward(const ModelParams& params, const TemplateSet& templates, const InteractionDataset& view,
                          double alpha, BackboneKind backbone, int layers);

struct BprOutput {
    double loss = 0.0;         // mean −ln σ(ŷ_pos − ŷ_neg) + λ‖Θ‖²
    double ranking = 0.0;      // mean −ln σ(ŷ_pos − ŷ_neg)
    Matrix grad_r_u;
    Matrix grad_r_i;
    ModelParams grad_l2;       // 2λΘ over T_u, T_i, t_user, t_item
};

BprOutput bpr_loss(const std::vector<Triple>& batch, const Representations& reps, const ModelParams& params,
                   double l2_lambda);

struct SeOutput {
    double loss = 0.0;  // mean −ln σ(t_uᵀ W_s t_pos − t_uᵀ W_s t_neg), 0 without triples
    ModelParams grads;
};

SeOutput self_enhanced_loss(const std::vector<Triple>& triples, const ModelParams& params,
                            const TemplateSet& templates);

struct LossResult {
    double total = 0.0;
    double bpr = 0.0;
    double se = 0.0;
    ModelParams grads;
};

/// L = L_BPR + β·L_SE with gradients through the embedding normalization and the backbone.
LossResult loss_and_gradients(const ModelParams& params, const TemplateSet& templates, const InteractionDataset& view,
                              double alpha, BackboneKind backbone, int layers, const std::vector<Triple>& batch,
                              const std::vector<Triple>& se_triples, double l2_lambda, double beta);

struct AdamState {
    ModelParams m;
    ModelParams v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_params(const ModelParams& p);
};

/// Bias-corrected Adam with per-tensor moments; throws DivergenceError on non-finite values.
void adam_step(ModelParams& params, AdamState& state, const ModelParams& grads, double lr);

struct EpochRecord {
    int epoch = 0;
    double alpha = 0.0;
    double train_loss = 0.0;
    double bpr = 0.0;
    double se = 0.0;
    Metrics val;
    double elapsed = 0.0;  // seconds since training started
};

/// Every field except `elapsed`.
nlohmann::json to_log_json(const EpochRecord& r);

struct TrainResult {
    ModelParams params;  // snapshot from the best validation epoch
    int best_epoch = -1;
    double best_val_ndcg = 0.0;
    int epochs_run = 0;
    bool early_stopped = false;
    std::vector<EpochRecord> log;
};

/// Validation NDCG@k on split.valid with α = alpha_final, the full train graph and train items excluded.
Metrics validation_metrics(const ModelParams& params, const TemplateSet& templates, const DatasetSplit& split,
                           const TrainConfig& cfg);

TrainResult train(const DatasetSplit& split, const TemplateSet& templates, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace inmo
