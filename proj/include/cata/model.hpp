#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "cata/tensor.hpp"

namespace cata {

/// Sparse feature vector: parallel (index, value) arrays over a declared
/// dimensionality. Indices must be strictly increasing and values finite.
struct SparseVec {
    std::vector<std::size_t> indices;
    std::vector<double> values;

    std::size_t nnz() const { return indices.size(); }

    void validate(std::size_t dim) const {
        if (indices.size() != values.size()) {
            throw std::invalid_argument("SparseVec: index/value length mismatch");
        }
        for (std::size_t k = 0; k < indices.size(); ++k) {
            if (indices[k] >= dim) {
                throw std::invalid_argument("SparseVec: index " +
                                            std::to_string(indices[k]) +
                                            " out of range for dim " + std::to_string(dim));
            }
            if (k > 0 && indices[k] <= indices[k - 1]) {
                throw std::invalid_argument("SparseVec: indices must be strictly increasing");
            }
            if (!std::isfinite(values[k])) {
                throw std::invalid_argument("SparseVec: non-finite value");
            }
        }
    }

    std::vector<double> densify(std::size_t dim) const {
        std::vector<double> out(dim, 0.0);
        for (std::size_t k = 0; k < indices.size(); ++k) out[indices[k]] = values[k];
        return out;
    }

    bool operator==(const SparseVec&) const = default;
};

/// Problem dimensions: V feature views of dims I_v, C categories, and
/// V+1 latent ranks (ranks[0] for the category mode, ranks[1..V] per view).
struct ModelDims {
    std::size_t view_count = 0;
    std::size_t category_count = 0;
    std::vector<std::size_t> view_dims;
    std::vector<std::size_t> ranks;

    std::size_t total_feature_dim() const {
        return std::accumulate(view_dims.begin(), view_dims.end(), std::size_t{0});
    }

    /// Row offset of view v inside the concatenated feature vector.
    std::size_t view_offset(std::size_t v) const {
        std::size_t off = 0;
        for (std::size_t u = 0; u < v; ++u) off += view_dims[u];
        return off;
    }

    void validate() const {
        if (view_count == 0) throw std::invalid_argument("ModelDims: view_count must be >= 1");
        if (category_count == 0) {
            throw std::invalid_argument("ModelDims: category_count must be >= 1");
        }
        if (view_dims.size() != view_count) {
            throw std::invalid_argument("ModelDims: need one view dim per view");
        }
        if (ranks.size() != view_count + 1) {
            throw std::invalid_argument("ModelDims: need view_count + 1 ranks, got " +
                                        std::to_string(ranks.size()));
        }
        for (std::size_t d : view_dims) {
            if (d == 0) throw std::invalid_argument("ModelDims: view dims must be >= 1");
        }
        for (std::size_t r : ranks) {
            if (r == 0) throw std::invalid_argument("ModelDims: ranks must be >= 1");
        }
    }

    bool operator==(const ModelDims&) const = default;
};

/// One rating instance: a category id, one sparse vector per view, a rating.
struct RatingRecord {
    std::size_t category = 0;
    std::vector<SparseVec> views;
    double rating = 0.0;

    void validate(std::size_t view_count, std::size_t category_count,
                  const std::vector<std::size_t>& view_dims) const {
        if (category >= category_count) {
            throw std::invalid_argument("RatingRecord: category " +
                                        std::to_string(category) + " out of range");
        }
        if (views.size() != view_count) {
            throw std::invalid_argument("RatingRecord: expected " +
                                        std::to_string(view_count) + " views, got " +
                                        std::to_string(views.size()));
        }
        for (std::size_t v = 0; v < views.size(); ++v) views[v].validate(view_dims[v]);
        if (!std::isfinite(rating)) {
            throw std::invalid_argument("RatingRecord: non-finite rating");
        }
    }

    void validate(const ModelDims& dims) const {
        validate(dims.view_count, dims.category_count, dims.view_dims);
    }

    bool operator==(const RatingRecord&) const = default;
};

/// CATA parameters: a (V+1)-mode core with the category mode first,
/// category factors (C x R_0), per-view factors ((1+I_v) x R_v, row 0 is the
/// bias row), and direct per-category weights on raw features (I x C).
struct CataModel {
    ModelDims dims;
    DenseTensor core;
    Matrix category_factors;
    std::vector<Matrix> view_factors;
    Matrix direct_weights;

    static CataModel zeros(const ModelDims& dims) {
        dims.validate();
        std::vector<Matrix> theta;
        theta.reserve(dims.view_count);
        for (std::size_t v = 0; v < dims.view_count; ++v) {
            theta.emplace_back(1 + dims.view_dims[v], dims.ranks[v + 1]);
        }
        return CataModel{dims,
                         DenseTensor(dims.ranks),
                         Matrix(dims.category_count, dims.ranks[0]),
                         std::move(theta),
                         Matrix(dims.total_feature_dim(), dims.category_count)};
    }

    void validate() const {
        dims.validate();
        if (core.shape() != dims.ranks) {
            throw std::invalid_argument("CataModel: core shape does not match ranks");
        }
        if (category_factors.rows() != dims.category_count ||
            category_factors.cols() != dims.ranks[0]) {
            throw std::invalid_argument("CataModel: category factor shape mismatch");
        }
        if (view_factors.size() != dims.view_count) {
            throw std::invalid_argument("CataModel: need one factor matrix per view");
        }
        for (std::size_t v = 0; v < view_factors.size(); ++v) {
            if (view_factors[v].rows() != 1 + dims.view_dims[v] ||
                view_factors[v].cols() != dims.ranks[v + 1]) {
                throw std::invalid_argument("CataModel: view factor " + std::to_string(v) +
                                            " shape mismatch");
            }
        }
        if (direct_weights.rows() != dims.total_feature_dim() ||
            direct_weights.cols() != dims.category_count) {
            throw std::invalid_argument("CataModel: direct weight shape mismatch");
        }
        auto check_finite = [](const std::vector<double>& xs, const char* what) {
            for (double x : xs) {
                if (!std::isfinite(x)) {
                    throw std::invalid_argument(std::string("CataModel: non-finite entry in ") +
                                                what);
                }
            }
        };
        check_finite(core.values(), "core");
        check_finite(category_factors.values(), "category factors");
        for (const auto& t : view_factors) check_finite(t.values(), "view factors");
        check_finite(direct_weights.values(), "direct weights");
    }
};

/// z^T Theta for z = [1; x] without materializing z: the bias row plus the
/// sparse combination of feature rows. Indices are range-checked.
inline std::vector<double> project_view(const Matrix& theta, const SparseVec& x,
                                        std::size_t view_dim) {
    std::vector<double> t(theta.cols());
    for (std::size_t r = 0; r < theta.cols(); ++r) t[r] = theta(0, r);
    for (std::size_t k = 0; k < x.indices.size(); ++k) {
        const std::size_t i = x.indices[k];
        if (i >= view_dim) {
            throw std::invalid_argument("predict: feature index " + std::to_string(i) +
                                        " out of range for view dim " +
                                        std::to_string(view_dim));
        }
        const double val = x.values[k];
        for (std::size_t r = 0; r < theta.cols(); ++r) t[r] += val * theta(1 + i, r);
    }
    return t;
}

/// x^T d_c over the concatenated raw (unaugmented) feature vector.
inline double direct_term(const CataModel& m, const std::vector<SparseVec>& views,
                          std::size_t category) {
    double s = 0.0;
    std::size_t offset = 0;
    for (std::size_t v = 0; v < views.size(); ++v) {
        for (std::size_t k = 0; k < views[v].indices.size(); ++k) {
            s += views[v].values[k] * m.direct_weights(offset + views[v].indices[k], category);
        }
        offset += m.dims.view_dims[v];
    }
    return s;
}

namespace detail {

/// Per-record projected inputs for the factorized path: slot 0 holds the
/// category factor row, slots 1..V the projected views z^(v)T Theta^(v).
inline std::vector<std::vector<double>> projected_inputs(const CataModel& m,
                                                         const std::vector<SparseVec>& views,
                                                         std::size_t category) {
    std::vector<std::vector<double>> vecs(1 + m.dims.view_count);
    vecs[0].resize(m.dims.ranks[0]);
    for (std::size_t r = 0; r < m.dims.ranks[0]; ++r) {
        vecs[0][r] = m.category_factors(category, r);
    }
    for (std::size_t v = 0; v < m.dims.view_count; ++v) {
        vecs[1 + v] = project_view(m.view_factors[v], views[v], m.dims.view_dims[v]);
    }
    return vecs;
}

}  // namespace detail

/// Factorized rating prediction:
///   core x_0 phi^c x_1 (z^(1)T Theta^(1)) ... x_V (z^(V)T Theta^(V)) + x^T d_c.
/// Costs O(sum nnz * R) plus one core contraction; the full weight tensor is
/// never materialized.
inline double predict(const CataModel& m, const std::vector<SparseVec>& views,
                      std::size_t category) {
    if (category >= m.dims.category_count) {
        throw std::invalid_argument("predict: category " + std::to_string(category) +
                                    " out of range");
    }
    if (views.size() != m.dims.view_count) {
        throw std::invalid_argument("predict: expected " + std::to_string(m.dims.view_count) +
                                    " views, got " + std::to_string(views.size()));
    }
    const auto vecs = detail::projected_inputs(m, views, category);
    return contract_all(m.core, vecs) + direct_term(m, views, category);
}

/// Largest explicit weight-tensor size predict_oracle will materialize.
inline constexpr std::size_t kOracleSizeLimit = 10'000'000;

/// Explicit-tensor reference path: materializes the full weight tensor
/// W = [[core; Phi, Theta^(1..V)]] (category mode first), forms
/// Z_c = e_c o z^(1) o ... o z^(V) and returns <W, Z_c> + x^T d_c.
/// Intended for testing at small dims; refuses oversized instances.
inline double predict_oracle(const CataModel& m, const std::vector<SparseVec>& views,
                             std::size_t category) {
    if (category >= m.dims.category_count) {
        throw std::invalid_argument("predict_oracle: category out of range");
    }
    if (views.size() != m.dims.view_count) {
        throw std::invalid_argument("predict_oracle: wrong view count");
    }
    std::size_t explicit_size = m.dims.category_count;
    for (std::size_t v = 0; v < m.dims.view_count; ++v) {
        explicit_size *= 1 + m.dims.view_dims[v];
    }
    if (explicit_size > kOracleSizeLimit) {
        throw std::invalid_argument("predict_oracle: explicit tensor would have " +
                                    std::to_string(explicit_size) + " entries (limit " +
                                    std::to_string(kOracleSizeLimit) + ")");
    }

    std::vector<Matrix> factors;
    factors.reserve(1 + m.dims.view_count);
    factors.push_back(m.category_factors);
    for (const auto& t : m.view_factors) factors.push_back(t);
    const DenseTensor w = tucker_reconstruct(m.core, factors);

    std::vector<std::vector<double>> axes(1 + m.dims.view_count);
    axes[0].assign(m.dims.category_count, 0.0);
    axes[0][category] = 1.0;
    for (std::size_t v = 0; v < m.dims.view_count; ++v) {
        views[v].validate(m.dims.view_dims[v]);
        auto z = views[v].densify(m.dims.view_dims[v]);
        z.insert(z.begin(), 1.0);
        axes[1 + v] = std::move(z);
    }
    const DenseTensor zc = outer_product(axes);
    return inner_product(w, zc) + direct_term(m, views, category);
}

/// Per-record predict over a whole batch; the first invalid record is
/// reported with its position.
inline std::vector<double> predict_batch(const CataModel& m,
                                         const std::vector<RatingRecord>& records) {
    std::vector<double> out;
    out.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        try {
            records[i].validate(m.dims);
            out.push_back(predict(m, records[i].views, records[i].category));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("record " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace cata
