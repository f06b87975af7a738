#pragma once

// Shared test utilities and independent brute-force oracles. The oracles
// compute everything from explicit multi-index loops so they never share a
// code path with the library functions they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "cata/rng.hpp"
#include "cata/tensor.hpp"

namespace testutil {

inline cata::Matrix matmul(const cata::Matrix& a, const cata::Matrix& b) {
    cata::Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

inline cata::Matrix transpose(const cata::Matrix& a) {
    cata::Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    }
    return out;
}

inline cata::Matrix random_matrix(cata::Rng& rng, std::size_t rows, std::size_t cols,
                                  double sigma = 1.0) {
    cata::Matrix m(rows, cols);
    for (double& x : m.values()) x = rng.normal(sigma);
    return m;
}

inline cata::DenseTensor random_tensor(cata::Rng& rng, const std::vector<std::size_t>& shape,
                                       double sigma = 1.0) {
    cata::DenseTensor t(shape);
    for (double& x : t.values()) x = rng.normal(sigma);
    return t;
}

inline std::vector<double> random_vector(cata::Rng& rng, std::size_t n, double sigma = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal(sigma);
    return v;
}

/// Row-major flat offset of a multi-index (last mode varies fastest).
inline std::size_t flat_index(const std::vector<std::size_t>& shape,
                              const std::vector<std::size_t>& idx) {
    std::size_t flat = 0;
    for (std::size_t d = 0; d < shape.size(); ++d) flat = flat * shape[d] + idx[d];
    return flat;
}

/// Advances a row-major multi-index; returns false after the last one.
inline bool next_index(const std::vector<std::size_t>& shape, std::vector<std::size_t>& idx) {
    for (std::size_t d = shape.size(); d-- > 0;) {
        if (++idx[d] < shape[d]) return true;
        idx[d] = 0;
    }
    return false;
}

/// Definition-level n-mode product: y[.., j, ..] = sum_i x[.., i, ..] u(j, i).
inline cata::DenseTensor mode_n_oracle(const cata::DenseTensor& x, const cata::Matrix& u,
                                       std::size_t n) {
    std::vector<std::size_t> out_shape = x.shape();
    out_shape[n] = u.rows();
    cata::DenseTensor y(out_shape);
    std::vector<std::size_t> idx(out_shape.size(), 0);
    do {
        double s = 0.0;
        std::vector<std::size_t> src = idx;
        for (std::size_t i = 0; i < x.shape()[n]; ++i) {
            src[n] = i;
            s += x[flat_index(x.shape(), src)] * u(idx[n], i);
        }
        y[flat_index(out_shape, idx)] = s;
    } while (next_index(out_shape, idx));
    return y;
}

/// Definition-level Tucker reconstruction: elementwise sum over all core
/// indices of g[r] * prod_n factors[n](i_n, r_n).
inline cata::DenseTensor tucker_oracle(const cata::DenseTensor& g,
                                       const std::vector<cata::Matrix>& factors) {
    std::vector<std::size_t> out_shape;
    for (const auto& f : factors) out_shape.push_back(f.rows());
    cata::DenseTensor y(out_shape);
    std::vector<std::size_t> idx(out_shape.size(), 0);
    do {
        double s = 0.0;
        std::vector<std::size_t> r(g.modes(), 0);
        do {
            double term = g[flat_index(g.shape(), r)];
            for (std::size_t n = 0; n < factors.size(); ++n) term *= factors[n](idx[n], r[n]);
            s += term;
        } while (next_index(g.shape(), r));
        y[flat_index(out_shape, idx)] = s;
    } while (next_index(out_shape, idx));
    return y;
}

/// Max |a-b| over two equally sized buffers.
inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Relative error with an absolute floor of 1.
inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, rel_err(a[i], b[i]));
    return m;
}

}  // namespace testutil
