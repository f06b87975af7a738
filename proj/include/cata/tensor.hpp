#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cata {

inline constexpr std::size_t kMaxTensorModes = 8;

/// Dense N-mode array, row-major flat storage (last mode varies fastest).
/// Shape is validated eagerly: every extent >= 1, 1 <= modes <= 8, and
/// product(shape) == data length.
class DenseTensor {
public:
    explicit DenseTensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(checked_size(shape_), 0.0) {}

    DenseTensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (checked_size(shape_) != data_.size()) {
            throw std::invalid_argument(
                "DenseTensor: data length " + std::to_string(data_.size()) +
                " does not match shape product " + std::to_string(checked_size(shape_)));
        }
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t modes() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }

    double operator[](std::size_t flat) const { return data_[flat]; }
    double& operator[](std::size_t flat) { return data_[flat]; }

    const std::vector<double>& values() const { return data_; }
    std::vector<double>& values() { return data_; }

private:
    static std::size_t checked_size(const std::vector<std::size_t>& shape) {
        if (shape.empty()) {
            throw std::invalid_argument("DenseTensor: at least one mode required");
        }
        if (shape.size() > kMaxTensorModes) {
            throw std::invalid_argument("DenseTensor: more than " +
                                        std::to_string(kMaxTensorModes) +
                                        " modes not supported");
        }
        std::size_t n = 1;
        for (std::size_t e : shape) {
            if (e == 0) {
                throw std::invalid_argument("DenseTensor: every extent must be >= 1");
            }
            n *= e;
        }
        return n;
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Dense matrix, row-major.
class Matrix {
public:
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(checked_size(rows, cols), 0.0) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (checked_size(rows_, cols_) != data_.size()) {
            throw std::invalid_argument(
                "Matrix: data length " + std::to_string(data_.size()) +
                " does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
        }
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

    const std::vector<double>& values() const { return data_; }
    std::vector<double>& values() { return data_; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

private:
    static std::size_t checked_size(std::size_t rows, std::size_t cols) {
        if (rows == 0 || cols == 0) {
            throw std::invalid_argument("Matrix: rows and cols must be >= 1");
        }
        return rows * cols;
    }

    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

/// Outer product of N vectors; element (i1,...,iN) = prod_n v_n[i_n].
inline DenseTensor outer_product(const std::vector<std::vector<double>>& vectors) {
    if (vectors.empty()) {
        throw std::invalid_argument("outer_product: empty vector list");
    }
    std::vector<std::size_t> shape;
    shape.reserve(vectors.size());
    for (const auto& v : vectors) shape.push_back(v.size());
    DenseTensor out(shape);  // validates nonempty vectors via extent >= 1

    // Build up mode by mode; mode 0 ends up slowest, matching row-major order.
    std::vector<double> buf{1.0};
    for (const auto& v : vectors) {
        std::vector<double> next(buf.size() * v.size());
        std::size_t p = 0;
        for (double b : buf) {
            for (double x : v) next[p++] = b * x;
        }
        buf = std::move(next);
    }
    out.values() = std::move(buf);
    return out;
}

/// Sum of elementwise products over two identically shaped tensors.
inline double inner_product(const DenseTensor& a, const DenseTensor& b) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument("inner_product: shape mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Kronecker product: (IK)x(JL) with block (i,j) = x(i,j) * Y.
inline Matrix kronecker(const Matrix& x, const Matrix& y) {
    Matrix out(x.rows() * y.rows(), x.cols() * y.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double xij = x(i, j);
            for (std::size_t k = 0; k < y.rows(); ++k) {
                for (std::size_t l = 0; l < y.cols(); ++l) {
                    out(i * y.rows() + k, j * y.cols() + l) = xij * y(k, l);
                }
            }
        }
    }
    return out;
}

/// Columnwise Kronecker product; requires matching column counts.
inline Matrix khatri_rao(const Matrix& x, const Matrix& y) {
    if (x.cols() != y.cols()) {
        throw std::invalid_argument("khatri_rao: column-count mismatch");
    }
    Matrix out(x.rows() * y.rows(), x.cols());
    for (std::size_t k = 0; k < x.cols(); ++k) {
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < y.rows(); ++j) {
                out(i * y.rows() + j, k) = x(i, k) * y(j, k);
            }
        }
    }
    return out;
}

/// n-mode product: contracts mode n of x against the columns of u.
/// Result shape equals x.shape() with mode n replaced by u.rows().
inline DenseTensor mode_n_product(const DenseTensor& x, const Matrix& u, std::size_t n) {
    const auto& shape = x.shape();
    if (n >= shape.size()) {
        throw std::invalid_argument("mode_n_product: mode " + std::to_string(n) +
                                    " out of range for " + std::to_string(shape.size()) +
                                    "-mode tensor");
    }
    if (u.cols() != shape[n]) {
        throw std::invalid_argument("mode_n_product: matrix has " +
                                    std::to_string(u.cols()) + " cols, mode extent is " +
                                    std::to_string(shape[n]));
    }
    std::size_t outer = 1, inner = 1;
    for (std::size_t m = 0; m < n; ++m) outer *= shape[m];
    for (std::size_t m = n + 1; m < shape.size(); ++m) inner *= shape[m];
    const std::size_t extent = shape[n];

    std::vector<std::size_t> out_shape = shape;
    out_shape[n] = u.rows();
    DenseTensor y(out_shape);

    const double* xd = x.values().data();
    double* yd = y.values().data();
    for (std::size_t o = 0; o < outer; ++o) {
        const double* xo = xd + o * extent * inner;
        double* yo = yd + o * u.rows() * inner;
        for (std::size_t j = 0; j < u.rows(); ++j) {
            double* yj = yo + j * inner;
            for (std::size_t i = 0; i < extent; ++i) {
                const double uij = u(j, i);
                const double* xi = xo + i * inner;
                for (std::size_t k = 0; k < inner; ++k) yj[k] += uij * xi[k];
            }
        }
    }
    return y;
}

/// Mode-n unfolding: rows indexed by mode n, columns by the remaining modes
/// with the lower mode index varying faster.
inline Matrix matricize(const DenseTensor& x, std::size_t n) {
    const auto& shape = x.shape();
    if (n >= shape.size()) {
        throw std::invalid_argument("matricize: mode " + std::to_string(n) +
                                    " out of range");
    }
    Matrix m(shape[n], x.size() / shape[n]);

    // Precompute column strides: lowest remaining mode gets stride 1.
    std::vector<std::size_t> col_stride(shape.size(), 0);
    std::size_t stride = 1;
    for (std::size_t d = 0; d < shape.size(); ++d) {
        if (d == n) continue;
        col_stride[d] = stride;
        stride *= shape[d];
    }

    std::vector<std::size_t> idx(shape.size(), 0);
    for (std::size_t flat = 0; flat < x.size(); ++flat) {
        std::size_t col = 0;
        for (std::size_t d = 0; d < shape.size(); ++d) {
            if (d != n) col += idx[d] * col_stride[d];
        }
        m(idx[n], col) = x[flat];
        for (std::size_t d = shape.size(); d-- > 0;) {  // row-major odometer
            if (++idx[d] < shape[d]) break;
            idx[d] = 0;
        }
    }
    return m;
}

/// Sequential n-mode products of a core against one factor per mode.
/// factors[n].cols() must equal g.shape()[n]; result extent n is factors[n].rows().
inline DenseTensor tucker_reconstruct(const DenseTensor& g, const std::vector<Matrix>& factors) {
    if (factors.size() != g.modes()) {
        throw std::invalid_argument("tucker_reconstruct: expected " +
                                    std::to_string(g.modes()) + " factors, got " +
                                    std::to_string(factors.size()));
    }
    for (std::size_t n = 0; n < factors.size(); ++n) {
        if (factors[n].cols() != g.shape()[n]) {
            throw std::invalid_argument("tucker_reconstruct: factor " + std::to_string(n) +
                                        " has " + std::to_string(factors[n].cols()) +
                                        " cols, core extent is " +
                                        std::to_string(g.shape()[n]));
        }
    }
    DenseTensor x = g;
    for (std::size_t n = 0; n < factors.size(); ++n) {
        x = mode_n_product(x, factors[n], n);
    }
    return x;
}

/// Full contraction of g against one vector per mode (vecs[n] has length
/// shape[n]); reduces the trailing mode first.
inline double contract_all(const DenseTensor& g, const std::vector<std::vector<double>>& vecs) {
    if (vecs.size() != g.modes()) {
        throw std::invalid_argument("contract_all: expected one vector per mode");
    }
    for (std::size_t m = 0; m < vecs.size(); ++m) {
        if (vecs[m].size() != g.shape()[m]) {
            throw std::invalid_argument("contract_all: vector " + std::to_string(m) +
                                        " length mismatch");
        }
    }
    std::vector<double> buf(g.values());
    std::size_t len = buf.size();
    for (std::size_t m = g.modes(); m-- > 0;) {
        const auto& v = vecs[m];
        const std::size_t extent = v.size();
        const std::size_t outer = len / extent;
        for (std::size_t o = 0; o < outer; ++o) {
            const double* row = buf.data() + o * extent;
            double s = 0.0;
            for (std::size_t i = 0; i < extent; ++i) s += row[i] * v[i];
            buf[o] = s;
        }
        len = outer;
    }
    return buf[0];
}

/// Contraction over every mode except `keep` (vecs[keep] is ignored);
/// returns the length-shape[keep] result vector.
inline std::vector<double> contract_all_but(const DenseTensor& g,
                                            const std::vector<std::vector<double>>& vecs,
                                            std::size_t keep) {
    if (keep >= g.modes()) {
        throw std::invalid_argument("contract_all_but: mode out of range");
    }
    if (vecs.size() != g.modes()) {
        throw std::invalid_argument("contract_all_but: expected one vector per mode");
    }
    for (std::size_t m = 0; m < vecs.size(); ++m) {
        if (m != keep && vecs[m].size() != g.shape()[m]) {
            throw std::invalid_argument("contract_all_but: vector " + std::to_string(m) +
                                        " length mismatch");
        }
    }
    std::vector<double> buf(g.values());
    std::size_t len = buf.size();
    // Trailing modes first (innermost dot products)...
    for (std::size_t m = g.modes(); m-- > keep + 1;) {
        const auto& v = vecs[m];
        const std::size_t extent = v.size();
        const std::size_t outer = len / extent;
        for (std::size_t o = 0; o < outer; ++o) {
            const double* row = buf.data() + o * extent;
            double s = 0.0;
            for (std::size_t i = 0; i < extent; ++i) s += row[i] * v[i];
            buf[o] = s;
        }
        len = outer;
    }
    // ...then leading modes, which stride across the remaining block.
    for (std::size_t m = 0; m < keep; ++m) {
        const auto& v = vecs[m];
        const std::size_t extent = v.size();
        const std::size_t rest = len / extent;
        for (std::size_t l = 0; l < rest; ++l) {
            double s = 0.0;
            for (std::size_t i = 0; i < extent; ++i) s += v[i] * buf[i * rest + l];
            buf[l] = s;
        }
        len = rest;
    }
    buf.resize(len);
    return buf;
}

}  // namespace cata
