#include "inmo/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "inmo/error.hpp"

namespace inmo {

namespace {

// Householder reduction of the symmetric matrix held in v to tridiagonal form (diagonal d,
// sub-diagonal e); v is overwritten with the accumulated orthogonal transform.
void tridiagonalize(Matrix& v, std::vector<double>& d, std::vector<double>& e) {
    const std::size_t n = v.rows();
    for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);

    for (std::size_t i = n - 1; i > 0; --i) {
        double scale = 0.0;
        double h = 0.0;
        for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
        if (scale == 0.0) {
            e[i] = d[i - 1];
            for (std::size_t j = 0; j < i; ++j) {
                d[j] = v(i - 1, j);
                v(i, j) = 0.0;
                v(j, i) = 0.0;
            }
        } else {
            for (std::size_t k = 0; k < i; ++k) {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            double f = d[i - 1];
            double g = std::sqrt(h);
            if (f > 0) g = -g;
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;
            for (std::size_t j = 0; j < i; ++j) {
                f = d[j];
                v(j, i) = f;
                g = e[j] + v(j, j) * f;
                for (std::size_t k = j + 1; k + 1 <= i; ++k) {
                    g += v(k, j) * d[k];
                    e[k] += v(k, j) * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for (std::size_t j = 0; j < i; ++j) {
                e[j] /= h;
                f += e[j] * d[j];
            }
            const double hh = f / (h + h);
            for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
            for (std::size_t j = 0; j < i; ++j) {
                f = d[j];
                g = e[j];
                for (std::size_t k = j; k + 1 <= i; ++k) v(k, j) -= (f * e[k] + g * d[k]);
                d[j] = v(i - 1, j);
                v(i, j) = 0.0;
            }
        }
        d[i] = h;
    }

    for (std::size_t i = 0; i + 1 < n; ++i) {
        v(n - 1, i) = v(i, i);
        v(i, i) = 1.0;
        const double h = d[i + 1];
        if (h != 0.0) {
            for (std::size_t k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
            for (std::size_t j = 0; j <= i; ++j) {
                double g = 0.0;
                for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
                for (std::size_t k = 0; k <= i; ++k) v(k, j) -= g * d[k];
            }
        }
        for (std::size_t k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
    }
    for (std::size_t j = 0; j < n; ++j) {
        d[j] = v(n - 1, j);
        v(n - 1, j) = 0.0;
    }
    v(n - 1, n - 1) = 1.0;
    e[0] = 0.0;
}

// Implicit QL on the tridiagonal (d, e). `w` holds the transform transposed, so each
// rotation touches two contiguous rows.
void ql_implicit(Matrix& w, std::vector<double>& d, std::vector<double>& e) {
    const std::size_t n = d.size();
    for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;

    double f = 0.0;
    double tst1 = 0.0;
    const double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t l = 0; l < n; ++l) {
        tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
        std::size_t m = l;
        while (m < n) {
            if (std::abs(e[m]) <= eps * tst1) break;
            ++m;
        }
        if (m > l) {
            int iter = 0;
            do {
                if (++iter > 100) throw std::runtime_error("symmetric_eigen: QL iteration did not converge");
                double g = d[l];
                double p = (d[l + 1] - g) / (2.0 * e[l]);
                double r = std::hypot(p, 1.0);
                if (p < 0) r = -r;
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                const double dl1 = d[l + 1];
                double h = g - d[l];
                for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
                f += h;

                p = d[m];
                double c = 1.0, c2 = 1.0, c3 = 1.0;
                const double el1 = e[l + 1];
                double s = 0.0, s2 = 0.0;
                for (std::size_t ii = m; ii-- > l;) {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[ii];
                    h = c * p;
                    r = std::hypot(p, e[ii]);
                    e[ii + 1] = s * r;
                    s = e[ii] / r;
                    c = p / r;
                    p = c * d[ii] - s * g;
                    d[ii + 1] = h + s * (c * g + s * d[ii]);
                    auto lo = w.row(ii);
                    auto hi = w.row(ii + 1);
                    for (std::size_t k = 0; k < n; ++k) {
                        const double t = hi[k];
                        hi[k] = s * lo[k] + c * t;
                        lo[k] = c * lo[k] - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
            } while (std::abs(e[l]) > eps * tst1);
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

}  // namespace

SymmetricEigen symmetric_eigen(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("symmetric_eigen: matrix must be square");
    const std::size_t n = a.rows();
    SymmetricEigen out;
    if (n == 0) return out;

    Matrix v = a;
    std::vector<double> d(n), e(n);
    tridiagonalize(v, d, e);
    Matrix w = transpose(v);
    ql_implicit(w, d, e);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return d[x] > d[y]; });
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = d[order[k]];
        const auto src = w.row(order[k]);
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = src[r];
    }
    return out;
}

void check_dense_cap(std::size_t rows, std::size_t cols, std::size_t dense_cap) {
    if (rows * cols > dense_cap)
        throw SizeCapError("dense matrix of " + std::to_string(rows) + "x" + std::to_string(cols) +
                           " exceeds the cap of " + std::to_string(dense_cap) +
                           " entries; use the simplified error-sort indicator instead");
}

bool SvdFactors::degenerate() const {
    const std::size_t d = s.size();
    if (d == 0 || d >= spectrum.size()) return false;
    const double scale = std::max(1.0, spectrum.front());
    return std::abs(spectrum[d - 1] - spectrum[d]) <= 1e-9 * scale;
}

SvdFactors truncated_svd(const Matrix& y, std::size_t d, std::size_t dense_cap) {
    const std::size_t n = y.rows();
    const std::size_t m = y.cols();
    check_dense_cap(n, m, dense_cap);
    const std::size_t p = std::min(n, m);
    if (d > p) throw std::invalid_argument("truncated_svd: d exceeds min(n, m)");

    // Right-side Gram when there are at least as many rows as columns.
    const bool right = n >= m;
    const Matrix gram = right ? matmul_tn(y, y) : matmul(y, transpose(y));
    const SymmetricEigen eig = symmetric_eigen(gram);

    SvdFactors f;
    const double lambda_max = std::max(0.0, eig.values.empty() ? 0.0 : eig.values.front());
    const double lambda_tol = lambda_max * static_cast<double>(p) * 1e-13;
    f.spectrum.resize(p);
    for (std::size_t k = 0; k < p; ++k) {
        const double lambda = eig.values[k];
        f.spectrum[k] = lambda > lambda_tol ? std::sqrt(lambda) : 0.0;
        if (f.spectrum[k] > 0.0) ++f.numerical_rank;
    }

    f.s.assign(f.spectrum.begin(), f.spectrum.begin() + static_cast<std::ptrdiff_t>(d));
    f.u = Matrix(n, d);
    f.v = Matrix(m, d);
    Matrix& gram_side = right ? f.v : f.u;
    Matrix& derived_side = right ? f.u : f.v;
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t r = 0; r < gram_side.rows(); ++r) gram_side(r, k) = eig.vectors(r, k);

    for (std::size_t k = 0; k < d; ++k) {
        if (f.s[k] == 0.0) continue;
        // derived column = Y·v / σ (or Yᵀ·u / σ)
        for (std::size_t r = 0; r < derived_side.rows(); ++r) {
            double acc = 0.0;
            if (right) {
                for (std::size_t c = 0; c < m; ++c) acc += y(r, c) * gram_side(c, k);
            } else {
                for (std::size_t c = 0; c < n; ++c) acc += y(c, r) * gram_side(c, k);
            }
            derived_side(r, k) = acc / f.s[k];
        }
    }

    for (std::size_t k = 0; k < d; ++k) {
        std::size_t arg = 0;
        for (std::size_t r = 1; r < m; ++r)
            if (std::abs(f.v(r, k)) > std::abs(f.v(arg, k))) arg = r;
        if (f.v(arg, k) < 0) {
            for (std::size_t r = 0; r < m; ++r) f.v(r, k) = -f.v(r, k);
            for (std::size_t r = 0; r < n; ++r) f.u(r, k) = -f.u(r, k);
        }
    }

    Matrix us = f.u;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < d; ++k) us(r, k) *= f.s[k];
    f.eps_min = frobenius(y - matmul(us, transpose(f.v)));
    return f;
}

}  // namespace inmo
