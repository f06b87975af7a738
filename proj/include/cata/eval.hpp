#pragma once

#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cata/data.hpp"
#include "cata/model.hpp"
#include "cata/training.hpp"

namespace cata {

inline std::pair<double, double> mae_rmse(const std::vector<double>& predictions,
                                          const std::vector<double>& truths) {
    if (predictions.empty() || predictions.size() != truths.size()) {
        throw std::invalid_argument("mae_rmse: need equal nonzero lengths");
    }
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double r = predictions[i] - truths[i];
        abs_sum += std::abs(r);
        sq_sum += r * r;
    }
    const auto n = static_cast<double>(predictions.size());
    return {abs_sum / n, std::sqrt(sq_sum / n)};
}

struct CategoryMetrics {
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t n = 0;
};

struct MetricsReport {
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t n = 0;
    std::vector<CategoryMetrics> per_category;  // indexed by category id
};

/// Overall and per-category MAE/RMSE of model predictions on a test set.
inline MetricsReport evaluate(const CataModel& model, const Dataset& test) {
    if (test.size() == 0) throw std::invalid_argument("evaluate: empty test set");
    if (test.view_count() != model.dims.view_count ||
        test.category_count() != model.dims.category_count ||
        test.view_dims() != model.dims.view_dims) {
        throw std::invalid_argument("evaluate: dataset dims do not match model dims");
    }

    MetricsReport report;
    report.n = test.size();
    report.per_category.resize(test.category_count());
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t c = 0; c < test.category_count(); ++c) {
        const auto& idx = test.by_category()[c];
        if (idx.empty()) continue;
        double cat_abs = 0.0, cat_sq = 0.0;
        for (std::size_t i : idx) {
            const RatingRecord& r = test.records()[i];
            const double resid = predict(model, r.views, c) - r.rating;
            cat_abs += std::abs(resid);
            cat_sq += resid * resid;
        }
        abs_sum += cat_abs;
        sq_sum += cat_sq;
        const auto nc = static_cast<double>(idx.size());
        report.per_category[c] = CategoryMetrics{cat_abs / nc, std::sqrt(cat_sq / nc),
                                                 idx.size()};
    }
    const auto n = static_cast<double>(test.size());
    report.mae = abs_sum / n;
    report.rmse = std::sqrt(sq_sum / n);
    return report;
}

// --- Grid search ---------------------------------------------------------------

struct GridCell {
    double alpha = 0.0;
    double beta = 0.0;
    double valid_rmse = 0.0;
    double valid_mae = 0.0;
    bool diverged = false;
    bool converged = false;
    std::size_t iterations = 0;
};

struct GridResult {
    TrainConfig best_config;
    GridCell best_cell;
    std::vector<GridCell> table;  // alpha-major, beta-minor order
};

/// Trains one model per (alpha, beta) cell with the base config's seed and
/// picks the cell with the lowest validation RMSE (ties: lower MAE, then
/// smaller alpha, then smaller beta). Diverging cells are recorded with
/// infinite error instead of aborting the search.
inline GridResult grid_search(const Dataset& train_set, const Dataset& valid_set,
                              const ModelDims& dims, const TrainConfig& base,
                              const std::vector<double>& alpha_grid,
                              const std::vector<double>& beta_grid) {
    if (alpha_grid.empty() || beta_grid.empty()) {
        throw std::invalid_argument("grid_search: grids must be nonempty");
    }
    GridResult result;
    bool have_best = false;
    auto better = [](const GridCell& a, const GridCell& b) {
        if (a.valid_rmse != b.valid_rmse) return a.valid_rmse < b.valid_rmse;
        if (a.valid_mae != b.valid_mae) return a.valid_mae < b.valid_mae;
        if (a.alpha != b.alpha) return a.alpha < b.alpha;
        return a.beta < b.beta;
    };
    for (double alpha : alpha_grid) {
        for (double beta : beta_grid) {
            TrainConfig cfg = base;
            cfg.alpha = alpha;
            cfg.beta = beta;
            GridCell cell;
            cell.alpha = alpha;
            cell.beta = beta;
            try {
                const TrainResult run = train(train_set, dims, cfg);
                const MetricsReport metrics = evaluate(run.model, valid_set);
                cell.valid_rmse = metrics.rmse;
                cell.valid_mae = metrics.mae;
                cell.converged = run.report.converged;
                cell.iterations = run.report.iterations_run;
            } catch (const TrainingDiverged& e) {
                cell.diverged = true;
                cell.valid_rmse = std::numeric_limits<double>::infinity();
                cell.valid_mae = std::numeric_limits<double>::infinity();
                cell.iterations = e.iteration;
            }
            result.table.push_back(cell);
            if (!have_best || better(cell, result.best_cell)) {
                result.best_cell = cell;
                result.best_config = cfg;
                have_best = true;
            }
        }
    }
    for (const auto& cell : result.table) {
        if (result.best_cell.valid_rmse > cell.valid_rmse) {
            throw std::logic_error("grid_search: winner is not minimal");
        }
    }
    return result;
}

// --- Repeated trials -------------------------------------------------------------

struct TrialStats {
    double mae_mean = 0.0;
    double mae_std = 0.0;
    double rmse_mean = 0.0;
    double rmse_std = 0.0;
    std::size_t trials = 0;
    std::vector<std::pair<double, double>> per_trial;  // (mae, rmse) on test
};

/// Repeats split -> train -> test-evaluate. Trial t splits with seed
/// spec.seed + t unless fixed_split_seed pins one seed for every trial.
/// Standard deviations use the n-1 sample estimator (0 when trials == 1).
inline TrialStats repeated_trials(const Dataset& data, const ModelDims& dims,
                                  const TrainConfig& cfg, const SplitSpec& spec,
                                  std::size_t n_trials,
                                  std::optional<std::uint64_t> fixed_split_seed = std::nullopt) {
    if (n_trials < 1) throw std::invalid_argument("repeated_trials: n_trials must be >= 1");
    TrialStats stats;
    stats.trials = n_trials;
    for (std::size_t t = 0; t < n_trials; ++t) {
        SplitSpec s = spec;
        s.seed = fixed_split_seed ? *fixed_split_seed : spec.seed + t;
        const DatasetSplit split = split_per_category(data, s);
        const TrainResult run = train(split.train, dims, cfg);
        const MetricsReport metrics = evaluate(run.model, split.test);
        stats.per_trial.emplace_back(metrics.mae, metrics.rmse);
    }
    auto mean_std = [&](auto pick) -> std::pair<double, double> {
        double sum = 0.0;
        for (const auto& p : stats.per_trial) sum += pick(p);
        const double mean = sum / static_cast<double>(n_trials);
        if (n_trials < 2) return {mean, 0.0};
        double sq = 0.0;
        for (const auto& p : stats.per_trial) {
            const double d = pick(p) - mean;
            sq += d * d;
        }
        return {mean, std::sqrt(sq / static_cast<double>(n_trials - 1))};
    };
    std::tie(stats.mae_mean, stats.mae_std) =
        mean_std([](const std::pair<double, double>& p) { return p.first; });
    std::tie(stats.rmse_mean, stats.rmse_std) =
        mean_std([](const std::pair<double, double>& p) { return p.second; });
    return stats;
}

// --- Report emission ---------------------------------------------------------------

inline nlohmann::json metrics_to_json(const MetricsReport& r) {
    nlohmann::json per_cat = nlohmann::json::array();
    for (std::size_t c = 0; c < r.per_category.size(); ++c) {
        const auto& m = r.per_category[c];
        if (m.n == 0) continue;
        per_cat.push_back({{"category", c}, {"mae", m.mae}, {"rmse", m.rmse}, {"n", m.n}});
    }
    return nlohmann::json{
        {"mae", r.mae}, {"rmse", r.rmse}, {"n", r.n}, {"per_category", std::move(per_cat)}};
}

inline std::string metrics_to_text(const MetricsReport& r) {
    std::ostringstream out;
    out << std::left << std::setw(10) << "category" << std::right << std::setw(12) << "mae"
        << std::setw(12) << "rmse" << std::setw(8) << "n" << "\n";
    auto row = [&](const std::string& label, double mae, double rmse, std::size_t n) {
        out << std::left << std::setw(10) << label << std::right << std::fixed
            << std::setprecision(4) << std::setw(12) << mae << std::setw(12) << rmse
            << std::setw(8) << n << "\n";
        out.unsetf(std::ios::fixed);
    };
    for (std::size_t c = 0; c < r.per_category.size(); ++c) {
        if (r.per_category[c].n == 0) continue;
        row(std::to_string(c), r.per_category[c].mae, r.per_category[c].rmse,
            r.per_category[c].n);
    }
    row("overall", r.mae, r.rmse, r.n);
    return out.str();
}

inline std::string grid_to_csv(const GridResult& g) {
    std::ostringstream out;
    out << "alpha,beta,valid_rmse,valid_mae,diverged,converged,iterations\n";
    out << std::setprecision(17);
    for (const auto& cell : g.table) {
        out << cell.alpha << "," << cell.beta << "," << cell.valid_rmse << ","
            << cell.valid_mae << "," << (cell.diverged ? 1 : 0) << ","
            << (cell.converged ? 1 : 0) << "," << cell.iterations << "\n";
    }
    return out.str();
}

inline nlohmann::json trials_to_json(const TrialStats& s) {
    nlohmann::json per_trial = nlohmann::json::array();
    for (const auto& p : s.per_trial) {
        per_trial.push_back({{"mae", p.first}, {"rmse", p.second}});
    }
    return nlohmann::json{{"trials", s.trials},
                          {"mae_mean", s.mae_mean},
                          {"mae_std", s.mae_std},
                          {"rmse_mean", s.rmse_mean},
                          {"rmse_std", s.rmse_std},
                          {"per_trial", std::move(per_trial)}};
}

}  // namespace cata
