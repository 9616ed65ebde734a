#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "inmo/dataset.hpp"
#include "inmo/matrix.hpp"

namespace inmo {

enum class BackboneKind { MF, LightGCN };

std::string to_string(BackboneKind kind);
BackboneKind parse_backbone(const std::string& name);

struct Representations {
    Matrix r_u;  // n×d
    Matrix r_i;  // m×d
    BackboneKind backbone = BackboneKind::MF;
    int layers = 0;
};

/// Identity pass-through.
Representations mf_forward(const Matrix& e_u, const Matrix& e_i);

/// Mean of layers 0..K with r_u⁽ˡ⁺¹⁾ = Σ_{i∈N_u} r_i⁽ˡ⁾ / √(|N_u||N_i|); entities with no
/// neighbours in `view` keep their layer-0 vector.
Representations lightgcn_forward(const Matrix& e_u, const Matrix& e_i, const InteractionDataset& view, int layers = 3);

/// Gradient of a scalar w.r.t. the LightGCN inputs given its gradient w.r.t. the outputs.
/// The propagation is a symmetric linear map, so this is the forward pass applied to the gradient.
Representations lightgcn_backward(const Matrix& grad_r_u, const Matrix& grad_r_i, const InteractionDataset& view,
                                  int layers = 3);

double score(std::span<const double> r_u, std::span<const double> r_i);

/// Scores of user u against every item.
std::vector<double> score_all(Index u, const Representations& reps);

/// Up to k items by (score desc, index asc) among `candidates` (all items when empty),
/// skipping the sorted list `exclude`.
std::vector<Index> top_k(const std::vector<double>& scores, std::span<const Index> exclude, std::size_t k,
                         std::span<const Index> candidates = {});
std::vector<Index> top_k(Index u, const Representations& reps, std::span<const Index> exclude, std::size_t k);

}  // namespace inmo
