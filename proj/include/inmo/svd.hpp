#pragma once

#include <cstddef>
#include <vector>

#include "inmo/matrix.hpp"

namespace inmo {

/// Dense computations refuse matrices with more than this many entries.
inline constexpr std::size_t kDefaultDenseCap = 4'000'000;

struct SymmetricEigen {
    std::vector<double> values;  // descending
    Matrix vectors;              // column k pairs with values[k]
};

/// Householder tridiagonalization followed by implicit QL with shifts.
SymmetricEigen symmetric_eigen(const Matrix& a);

/// Rank-d truncation Y ≈ U·diag(S)·Vᵀ.
struct SvdFactors {
    Matrix u;                           // n×d, orthonormal columns (zero columns past the numerical rank)
    std::vector<double> s;              // d values, descending, zero past the numerical rank
    Matrix v;                           // m×d, orthonormal columns
    double eps_min = 0.0;               // ‖Y − U·S·Vᵀ‖_F
    std::vector<double> spectrum;       // all min(n, m) singular values, descending
    std::size_t numerical_rank = 0;

    std::size_t dim() const { return s.size(); }
    /// σ_d = σ_{d+1}: the truncation is not unique, ε_min still is.
    bool degenerate() const;
};

/// Eigendecomposition of the smaller Gram matrix; singular vector signs are fixed by making
/// the largest-magnitude entry of each right singular vector positive.
/// Throws SizeCapError when n·m exceeds `dense_cap`, std::invalid_argument when d > min(n, m).
SvdFactors truncated_svd(const Matrix& y, std::size_t d, std::size_t dense_cap = kDefaultDenseCap);

void check_dense_cap(std::size_t rows, std::size_t cols, std::size_t dense_cap);

}  // namespace inmo
