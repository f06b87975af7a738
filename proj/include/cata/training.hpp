#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cata/data.hpp"
#include "cata/model.hpp"
#include "cata/rng.hpp"

namespace cata {

/// Regularizer applied to the direct-weight matrix: squared Frobenius (Cata)
/// or the group l1-norm, l2 within each (category, view) block (CataG).
enum class Variant { Cata, CataG };

inline const char* variant_name(Variant v) {
    return v == Variant::Cata ? "cata" : "cata-g";
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "cata") return Variant::Cata;
    if (s == "cata-g" || s == "cata_g") return Variant::CataG;
    throw std::invalid_argument("unknown variant: " + s + " (expected cata or cata-g)");
}

/// Smoothing guard for the group-l1 subgradient at tiny block norms.
inline constexpr double kGroupL1Epsilon = 1e-8;

struct TrainConfig {
    std::vector<std::size_t> ranks;  // V+1 entries, category mode first
    double alpha = 0.0;              // factor/core regularization weight
    double beta = 0.0;               // direct-weight regularization weight
    double eta = 0.1;
    std::size_t max_iters = 400;
    double tol = 1e-5;  // relative objective change for convergence
    std::uint64_t seed = 0;
    double init_sigma = 0.01;
    Variant variant = Variant::Cata;
    bool line_search = true;

    void validate() const {
        if (ranks.empty()) throw std::invalid_argument("TrainConfig: ranks required");
        for (std::size_t r : ranks) {
            if (r == 0) throw std::invalid_argument("TrainConfig: ranks must be >= 1");
        }
        if (alpha < 0.0) throw std::invalid_argument("TrainConfig: alpha must be >= 0");
        if (beta < 0.0) throw std::invalid_argument("TrainConfig: beta must be >= 0");
        if (!(eta > 0.0)) throw std::invalid_argument("TrainConfig: eta must be > 0");
        if (max_iters < 1) throw std::invalid_argument("TrainConfig: max_iters must be >= 1");
        if (tol < 0.0 || std::isnan(tol)) {
            throw std::invalid_argument("TrainConfig: tol must be >= 0");
        }
        if (!(init_sigma > 0.0)) {
            throw std::invalid_argument("TrainConfig: init_sigma must be > 0");
        }
    }
};

struct TrainReport {
    std::vector<double> objective_trace;  // length iterations_run + 1
    double final_objective = 0.0;
    std::size_t iterations_run = 0;
    bool converged = false;
    double wall_time_seconds = 0.0;
    std::vector<std::string> block_names;
    // Accepted step size per block per iteration; 0 means the line search
    // rejected every attempt and the block was restored.
    std::vector<std::vector<double>> block_steps;
};

struct TrainingDiverged : std::runtime_error {
    std::size_t iteration;
    double last_finite_objective;
    TrainingDiverged(std::size_t it, double last)
        : std::runtime_error("training diverged at iteration " + std::to_string(it) +
                             "; last finite objective " + std::to_string(last)),
          iteration(it),
          last_finite_objective(last) {}
};

/// Sum over (category, view) blocks of the block's Euclidean norm. The
/// partition lists per-view row counts and must sum to d.rows().
inline double group_l1_norm(const Matrix& d, const std::vector<std::size_t>& view_partition) {
    std::size_t total = 0;
    for (std::size_t p : view_partition) total += p;
    if (total != d.rows() || view_partition.empty()) {
        throw std::invalid_argument("group_l1_norm: partition does not cover rows");
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < d.cols(); ++c) {
        std::size_t offset = 0;
        for (std::size_t p : view_partition) {
            double sq = 0.0;
            for (std::size_t i = 0; i < p; ++i) {
                const double x = d(offset + i, c);
                sq += x * x;
            }
            sum += std::sqrt(sq);
            offset += p;
        }
    }
    return sum;
}

namespace detail {

inline double sum_squares(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x * x;
    return s;
}

inline void check_training_inputs(const CataModel& m, const Dataset& data) {
    if (data.size() == 0) throw std::invalid_argument("empty dataset");
    if (data.view_count() != m.dims.view_count ||
        data.category_count() != m.dims.category_count ||
        data.view_dims() != m.dims.view_dims) {
        throw std::invalid_argument("dataset dims do not match model dims");
    }
}

inline double regularization(const CataModel& m, const TrainConfig& cfg) {
    double reg = cfg.alpha * (sum_squares(m.core.values()) +
                              sum_squares(m.category_factors.values()));
    for (const auto& t : m.view_factors) reg += cfg.alpha * sum_squares(t.values());
    if (cfg.variant == Variant::Cata) {
        reg += cfg.beta * sum_squares(m.direct_weights.values());
    } else {
        reg += cfg.beta * group_l1_norm(m.direct_weights, m.dims.view_dims);
    }
    return reg;
}

/// Walks records category-major, record-minor and hands each one to `fn`
/// together with its projected inputs and residual factor 2(f - y)/N_c.
template <typename Fn>
void for_each_residual(const CataModel& m, const Dataset& data, Fn&& fn) {
    for (std::size_t c = 0; c < data.category_count(); ++c) {
        const auto& idx = data.by_category()[c];
        if (idx.empty()) continue;
        const double inv_n = 1.0 / static_cast<double>(idx.size());
        for (std::size_t i : idx) {
            const RatingRecord& r = data.records()[i];
            const auto vecs = detail::projected_inputs(m, r.views, c);
            const double f = contract_all(m.core, vecs) + direct_term(m, r.views, c);
            const double q = 2.0 * (f - r.rating) * inv_n;
            fn(c, r, vecs, q);
        }
    }
}

}  // namespace detail

/// Regularized empirical risk: per-category mean squared error plus
/// alpha * (||G||_F^2 + ||Phi||_F^2 + sum_v ||Theta^(v)||_F^2) plus
/// beta * Omega_beta(D) (squared Frobenius or group l1 per the variant).
inline double objective(const CataModel& m, const Dataset& data, const TrainConfig& cfg) {
    detail::check_training_inputs(m, data);
    double loss = 0.0;
    for (std::size_t c = 0; c < data.category_count(); ++c) {
        const auto& idx = data.by_category()[c];
        if (idx.empty()) continue;
        double acc = 0.0;
        for (std::size_t i : idx) {
            const RatingRecord& r = data.records()[i];
            const double resid = predict(m, r.views, c) - r.rating;
            acc += resid * resid;
        }
        loss += acc / static_cast<double>(idx.size());
    }
    return loss + detail::regularization(m, cfg);
}

/// d H / d Phi: row c accumulates (2(f-y)/N_c) * pi G_(0)^T over category-c
/// records, plus 2 alpha phi^c. The mode-0 contraction pi G_(0)^T is computed
/// as the core contracted against every projected input except the category
/// mode.
inline Matrix grad_phi(const CataModel& m, const Dataset& data, const TrainConfig& cfg) {
    detail::check_training_inputs(m, data);
    Matrix grad(m.dims.category_count, m.dims.ranks[0]);
    detail::for_each_residual(m, data, [&](std::size_t c, const RatingRecord&,
                                           const std::vector<std::vector<double>>& vecs,
                                           double q) {
        const auto g0 = contract_all_but(m.core, vecs, 0);
        for (std::size_t r = 0; r < g0.size(); ++r) grad(c, r) += q * g0[r];
    });
    for (std::size_t c = 0; c < grad.rows(); ++c) {
        for (std::size_t r = 0; r < grad.cols(); ++r) {
            grad(c, r) += 2.0 * cfg.alpha * m.category_factors(c, r);
        }
    }
    return grad;
}

/// d H / d Theta^(v): per record, z^(v) outer ((pi^(-v) kron phi^c) G_(v)^T)
/// scaled by the residual factor, plus 2 alpha Theta^(v). Row 0 (the bias
/// row) always receives the z_0 = 1 contribution.
inline Matrix grad_theta(const CataModel& m, const Dataset& data, std::size_t v,
                         const TrainConfig& cfg) {
    detail::check_training_inputs(m, data);
    if (v >= m.dims.view_count) {
        throw std::invalid_argument("grad_theta: view index out of range");
    }
    Matrix grad(1 + m.dims.view_dims[v], m.dims.ranks[v + 1]);
    detail::for_each_residual(m, data, [&](std::size_t, const RatingRecord& r,
                                           const std::vector<std::vector<double>>& vecs,
                                           double q) {
        const auto gv = contract_all_but(m.core, vecs, v + 1);
        for (std::size_t k = 0; k < gv.size(); ++k) grad(0, k) += q * gv[k];
        const SparseVec& x = r.views[v];
        for (std::size_t n = 0; n < x.indices.size(); ++n) {
            const double w = q * x.values[n];
            for (std::size_t k = 0; k < gv.size(); ++k) {
                grad(1 + x.indices[n], k) += w * gv[k];
            }
        }
    });
    for (std::size_t i = 0; i < grad.rows(); ++i) {
        for (std::size_t k = 0; k < grad.cols(); ++k) {
            grad(i, k) += 2.0 * cfg.alpha * m.view_factors[v](i, k);
        }
    }
    return grad;
}

/// d H / d G: accumulates the residual-weighted outer product of the
/// projected inputs (phi^c o t^(1) o ... o t^(V)), plus 2 alpha G.
inline DenseTensor grad_core(const CataModel& m, const Dataset& data, const TrainConfig& cfg) {
    detail::check_training_inputs(m, data);
    DenseTensor grad(m.dims.ranks);
    std::vector<double> buf;
    detail::for_each_residual(m, data, [&](std::size_t, const RatingRecord&,
                                           const std::vector<std::vector<double>>& vecs,
                                           double q) {
        buf.assign(1, q);
        for (const auto& v : vecs) {
            std::vector<double> next(buf.size() * v.size());
            std::size_t p = 0;
            for (double b : buf) {
                for (double x : v) next[p++] = b * x;
            }
            buf = std::move(next);
        }
        for (std::size_t i = 0; i < buf.size(); ++i) grad[i] += buf[i];
    });
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += 2.0 * cfg.alpha * m.core[i];
    return grad;
}

/// d H / d D: column c accumulates X_c dL_c/df_c; the beta term adds
/// 2 beta d_c (Cata) or beta d_c^(v)/max(||d_c^(v)||, eps) per view block
/// (CataG, smoothed at the nondifferentiable point).
inline Matrix grad_d(const CataModel& m, const Dataset& data, const TrainConfig& cfg) {
    detail::check_training_inputs(m, data);
    Matrix grad(m.dims.total_feature_dim(), m.dims.category_count);
    detail::for_each_residual(m, data, [&](std::size_t c, const RatingRecord& r,
                                           const std::vector<std::vector<double>>&, double q) {
        std::size_t offset = 0;
        for (std::size_t v = 0; v < r.views.size(); ++v) {
            const SparseVec& x = r.views[v];
            for (std::size_t n = 0; n < x.indices.size(); ++n) {
                grad(offset + x.indices[n], c) += q * x.values[n];
            }
            offset += m.dims.view_dims[v];
        }
    });
    if (cfg.variant == Variant::Cata) {
        for (std::size_t i = 0; i < grad.rows(); ++i) {
            for (std::size_t c = 0; c < grad.cols(); ++c) {
                grad(i, c) += 2.0 * cfg.beta * m.direct_weights(i, c);
            }
        }
    } else {
        for (std::size_t c = 0; c < grad.cols(); ++c) {
            std::size_t offset = 0;
            for (std::size_t v = 0; v < m.dims.view_count; ++v) {
                const std::size_t len = m.dims.view_dims[v];
                double sq = 0.0;
                for (std::size_t i = 0; i < len; ++i) {
                    const double x = m.direct_weights(offset + i, c);
                    sq += x * x;
                }
                const double norm = std::max(std::sqrt(sq), kGroupL1Epsilon);
                for (std::size_t i = 0; i < len; ++i) {
                    grad(offset + i, c) += cfg.beta * m.direct_weights(offset + i, c) / norm;
                }
                offset += len;
            }
        }
    }
    return grad;
}

struct TrainResult {
    CataModel model;
    TrainReport report;
};

namespace detail {

/// Block ids in the Algorithm update order: Phi, Theta^(1..V), G, D.
inline std::vector<std::string> block_names(std::size_t view_count) {
    std::vector<std::string> names{"phi"};
    for (std::size_t v = 0; v < view_count; ++v) names.push_back("theta" + std::to_string(v));
    names.push_back("core");
    names.push_back("d");
    return names;
}

inline std::vector<double>& block_storage(CataModel& m, std::size_t block) {
    const std::size_t v_count = m.dims.view_count;
    if (block == 0) return m.category_factors.values();
    if (block <= v_count) return m.view_factors[block - 1].values();
    if (block == v_count + 1) return m.core.values();
    return m.direct_weights.values();
}

inline std::vector<double> block_gradient(const CataModel& m, const Dataset& data,
                                          const TrainConfig& cfg, std::size_t block) {
    const std::size_t v_count = m.dims.view_count;
    if (block == 0) return grad_phi(m, data, cfg).values();
    if (block <= v_count) return grad_theta(m, data, block - 1, cfg).values();
    if (block == v_count + 1) return grad_core(m, data, cfg).values();
    return grad_d(m, data, cfg).values();
}

}  // namespace detail

/// Alternating block coordinate descent: initializes every parameter from
/// N(0, init_sigma) and repeats full-batch gradient steps in the order Phi,
/// Theta^(1..V), G, D until the relative objective change drops below tol or
/// max_iters is reached. With line_search, a block step that would increase
/// the objective is retried with halved eta (up to 20 halvings) and the block
/// is restored if none succeeds, so the objective trace is non-increasing.
inline TrainResult train(const Dataset& data, const ModelDims& dims, const TrainConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();
    dims.validate();
    if (cfg.ranks != dims.ranks) {
        throw std::invalid_argument("train: config ranks and dims ranks disagree");
    }

    CataModel model = CataModel::zeros(dims);
    Rng rng(cfg.seed);
    for (auto& t : model.view_factors) {
        for (double& x : t.values()) x = rng.normal(cfg.init_sigma);
    }
    for (double& x : model.category_factors.values()) x = rng.normal(cfg.init_sigma);
    for (double& x : model.core.values()) x = rng.normal(cfg.init_sigma);
    for (double& x : model.direct_weights.values()) x = rng.normal(cfg.init_sigma);

    detail::check_training_inputs(model, data);

    TrainReport report;
    report.block_names = detail::block_names(dims.view_count);
    const std::size_t n_blocks = report.block_names.size();

    double current = objective(model, data, cfg);
    if (!std::isfinite(current)) throw TrainingDiverged(0, 0.0);
    report.objective_trace.push_back(current);

    for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
        std::vector<double> steps(n_blocks, 0.0);
        for (std::size_t b = 0; b < n_blocks; ++b) {
            const std::vector<double> grad = detail::block_gradient(model, data, cfg, b);
            std::vector<double>& storage = detail::block_storage(model, b);

            if (!cfg.line_search) {
                for (std::size_t i = 0; i < storage.size(); ++i) {
                    storage[i] -= cfg.eta * grad[i];
                }
                steps[b] = cfg.eta;
                continue;
            }

            const std::vector<double> saved = storage;
            double step = cfg.eta;
            bool accepted = false;
            for (int attempt = 0; attempt <= 20; ++attempt) {
                for (std::size_t i = 0; i < storage.size(); ++i) {
                    storage[i] = saved[i] - step * grad[i];
                }
                const double candidate = objective(model, data, cfg);
                if (std::isfinite(candidate) && candidate <= current) {
                    current = candidate;
                    steps[b] = step;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) {
                storage = saved;
                steps[b] = 0.0;
            }
        }
        report.block_steps.push_back(std::move(steps));

        if (!cfg.line_search) {
            current = objective(model, data, cfg);
            if (!std::isfinite(current)) {
                throw TrainingDiverged(iter, report.objective_trace.back());
            }
        }
        const double prev = report.objective_trace.back();
        report.objective_trace.push_back(current);
        report.iterations_run = iter;

        const double rel = std::abs(prev - current) / std::max(std::abs(prev), 1e-12);
        if (rel < cfg.tol) {
            report.converged = true;
            break;
        }
    }

    report.final_objective = report.objective_trace.back();
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return TrainResult{std::move(model), std::move(report)};
}

// --- Gradient verification ----------------------------------------------------

struct BlockCheck {
    std::string block;
    double max_rel_error = 0.0;
    std::size_t checks = 0;   // scalar comparisons performed
    std::size_t skipped = 0;  // draws skipped as nonsmooth
};

struct GradCheckReport {
    std::vector<BlockCheck> blocks;
    std::size_t trials = 0;
    double max_rel_error = 0.0;

    const BlockCheck& block(const std::string& name) const {
        for (const auto& b : blocks) {
            if (b.block == name) return b;
        }
        throw std::invalid_argument("no such block: " + name);
    }
};

/// Compares every analytic block gradient against central finite differences
/// of `objective` for one (model, dataset) pair. Errors are relative with an
/// absolute floor of 1: |a - fd| / max(1, |a|, |fd|). For CataG, the D block
/// is skipped (flagged nonsmooth) when any (category, view) block norm is
/// within `nonsmooth_margin` of the kink at zero.
inline std::vector<BlockCheck> check_gradients(const CataModel& model, const Dataset& data,
                                               const TrainConfig& cfg, double fd_step = 1e-6,
                                               double nonsmooth_margin = 1e-3) {
    const auto names = detail::block_names(model.dims.view_count);
    std::vector<BlockCheck> out;
    CataModel work = model;
    for (std::size_t b = 0; b < names.size(); ++b) {
        BlockCheck check{names[b], 0.0, 0, 0};
        if (names[b] == "d" && cfg.variant == Variant::CataG) {
            double min_norm = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < work.direct_weights.cols(); ++c) {
                std::size_t offset = 0;
                for (std::size_t v = 0; v < work.dims.view_count; ++v) {
                    double sq = 0.0;
                    for (std::size_t i = 0; i < work.dims.view_dims[v]; ++i) {
                        const double x = work.direct_weights(offset + i, c);
                        sq += x * x;
                    }
                    min_norm = std::min(min_norm, std::sqrt(sq));
                    offset += work.dims.view_dims[v];
                }
            }
            if (min_norm <= nonsmooth_margin) {
                check.skipped = 1;
                out.push_back(check);
                continue;
            }
        }
        const std::vector<double> analytic = detail::block_gradient(work, data, cfg, b);
        std::vector<double>& storage = detail::block_storage(work, b);
        for (std::size_t i = 0; i < storage.size(); ++i) {
            const double saved = storage[i];
            storage[i] = saved + fd_step;
            const double hi = objective(work, data, cfg);
            storage[i] = saved - fd_step;
            const double lo = objective(work, data, cfg);
            storage[i] = saved;
            const double fd = (hi - lo) / (2.0 * fd_step);
            const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(fd)});
            check.max_rel_error = std::max(check.max_rel_error,
                                           std::abs(analytic[i] - fd) / denom);
            ++check.checks;
        }
        out.push_back(check);
    }
    return out;
}

/// Draws `trials` random (model, dataset) pairs at the given dims and reports
/// the per-block maxima of check_gradients across them. Never throws on a
/// failed comparison; the caller judges the reported maxima.
inline GradCheckReport grad_check(const ModelDims& dims, const TrainConfig& cfg,
                                  std::size_t trials) {
    dims.validate();
    cfg.validate();
    if (cfg.ranks != dims.ranks) {
        throw std::invalid_argument("grad_check: config ranks and dims ranks disagree");
    }
    Rng rng(cfg.seed);
    GradCheckReport report;
    report.trials = trials;
    for (const auto& name : detail::block_names(dims.view_count)) {
        report.blocks.push_back(BlockCheck{name, 0.0, 0, 0});
    }

    for (std::size_t t = 0; t < trials; ++t) {
        CataModel model = random_model(dims, rng, 0.5, 0.5);
        std::vector<RatingRecord> records;
        for (std::size_t c = 0; c < dims.category_count; ++c) {
            for (int n = 0; n < 3; ++n) {
                RatingRecord r;
                r.category = c;
                r.views.resize(dims.view_count);
                for (std::size_t v = 0; v < dims.view_count; ++v) {
                    for (std::size_t i = 0; i < dims.view_dims[v]; ++i) {
                        if (rng.uniform() < 0.5) {
                            r.views[v].indices.push_back(i);
                            r.views[v].values.push_back(rng.normal(1.0));
                        }
                    }
                }
                r.rating = rng.normal(1.0);
                records.push_back(std::move(r));
            }
        }
        Dataset data(dims.view_count, dims.category_count, dims.view_dims, std::move(records));

        const auto checks = check_gradients(model, data, cfg);
        for (std::size_t b = 0; b < checks.size(); ++b) {
            report.blocks[b].max_rel_error =
                std::max(report.blocks[b].max_rel_error, checks[b].max_rel_error);
            report.blocks[b].checks += checks[b].checks;
            report.blocks[b].skipped += checks[b].skipped;
            report.max_rel_error = std::max(report.max_rel_error, checks[b].max_rel_error);
        }
    }
    return report;
}

}  // namespace cata
