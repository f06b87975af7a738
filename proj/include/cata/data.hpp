#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cata/model.hpp"
#include "cata/rng.hpp"

namespace cata {

/// Immutable collection of rating records validated against declared
/// dimensions (V, C, I[]), with a category -> record-index lookup.
class Dataset {
public:
    Dataset(std::size_t view_count, std::size_t category_count,
            std::vector<std::size_t> view_dims, std::vector<RatingRecord> records)
        : view_count_(view_count),
          category_count_(category_count),
          view_dims_(std::move(view_dims)),
          records_(std::move(records)),
          by_category_(category_count) {
        if (view_count_ == 0 || category_count_ == 0 || view_dims_.size() != view_count_) {
            throw std::invalid_argument("Dataset: inconsistent declared dims");
        }
        for (std::size_t d : view_dims_) {
            if (d == 0) throw std::invalid_argument("Dataset: view dims must be >= 1");
        }
        for (std::size_t i = 0; i < records_.size(); ++i) {
            try {
                records_[i].validate(view_count_, category_count_, view_dims_);
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument("record " + std::to_string(i) + ": " + e.what());
            }
            by_category_[records_[i].category].push_back(i);
        }
    }

    std::size_t view_count() const { return view_count_; }
    std::size_t category_count() const { return category_count_; }
    const std::vector<std::size_t>& view_dims() const { return view_dims_; }
    const std::vector<RatingRecord>& records() const { return records_; }
    const std::vector<std::vector<std::size_t>>& by_category() const { return by_category_; }
    std::size_t size() const { return records_.size(); }

    /// ModelDims for this data combined with the chosen latent ranks.
    ModelDims dims_with_ranks(std::vector<std::size_t> ranks) const {
        ModelDims dims{view_count_, category_count_, view_dims_, std::move(ranks)};
        dims.validate();
        return dims;
    }

private:
    std::size_t view_count_;
    std::size_t category_count_;
    std::vector<std::size_t> view_dims_;
    std::vector<RatingRecord> records_;
    std::vector<std::vector<std::size_t>> by_category_;
};

// --- JSON-lines dataset format ---------------------------------------------
// Line 1 is a header object {"V":..,"C":..,"I":[..]}; every following
// non-blank line is one record {"c":..,"views":[[[idx,val],..] per view],
// "y":..}.

inline nlohmann::json record_to_json(const RatingRecord& r) {
    nlohmann::json views = nlohmann::json::array();
    for (const auto& sv : r.views) {
        nlohmann::json pairs = nlohmann::json::array();
        for (std::size_t k = 0; k < sv.indices.size(); ++k) {
            pairs.push_back({sv.indices[k], sv.values[k]});
        }
        views.push_back(std::move(pairs));
    }
    return nlohmann::json{{"c", r.category}, {"views", std::move(views)}, {"y", r.rating}};
}

inline void save_dataset(std::ostream& out, const Dataset& ds) {
    out << nlohmann::json{{"V", ds.view_count()},
                          {"C", ds.category_count()},
                          {"I", ds.view_dims()}}
               .dump()
        << "\n";
    for (const auto& r : ds.records()) out << record_to_json(r).dump() << "\n";
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open for writing: " + path);
    save_dataset(out, ds);
    if (!out) throw std::invalid_argument("write failed: " + path);
}

inline Dataset load_dataset(std::istream& in, const std::string& name = "<stream>") {
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
        }
        return false;
    };

    if (!next_line()) {
        throw std::invalid_argument(name + ": missing header line");
    }
    std::size_t view_count = 0, category_count = 0;
    std::vector<std::size_t> view_dims;
    try {
        const auto h = nlohmann::json::parse(line);
        view_count = h.at("V").get<std::size_t>();
        category_count = h.at("C").get<std::size_t>();
        view_dims = h.at("I").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(name + " line " + std::to_string(line_no) +
                                    ": malformed header: " + e.what());
    }

    std::vector<RatingRecord> records;
    while (next_line()) {
        RatingRecord r;
        try {
            const auto j = nlohmann::json::parse(line);
            r.category = j.at("c").get<std::size_t>();
            r.rating = j.at("y").get<double>();
            const auto& views = j.at("views");
            if (!views.is_array()) throw std::invalid_argument("views must be an array");
            for (const auto& vj : views) {
                SparseVec sv;
                for (const auto& pair : vj) {
                    if (!pair.is_array() || pair.size() != 2) {
                        throw std::invalid_argument("feature entries must be [index, value]");
                    }
                    sv.indices.push_back(pair.at(0).get<std::size_t>());
                    sv.values.push_back(pair.at(1).get<double>());
                }
                r.views.push_back(std::move(sv));
            }
        } catch (const std::exception& e) {
            throw std::invalid_argument(name + " line " + std::to_string(line_no) +
                                        ": malformed record: " + e.what());
        }
        records.push_back(std::move(r));
    }
    return Dataset(view_count, category_count, std::move(view_dims), std::move(records));
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open dataset file: " + path);
    return load_dataset(in, path);
}

// --- Per-category splitting -------------------------------------------------

/// Train/valid/test fractions, each in (0,1), summing to 1 within 1e-9.
struct SplitSpec {
    double train_fraction = 0.8;
    double valid_fraction = 0.1;
    double test_fraction = 0.1;
    std::uint64_t seed = 0;

    void validate() const {
        for (double f : {train_fraction, valid_fraction, test_fraction}) {
            if (!(f > 0.0 && f < 1.0)) {
                throw std::invalid_argument("SplitSpec: fractions must lie in (0,1)");
            }
        }
        if (std::abs(train_fraction + valid_fraction + test_fraction - 1.0) > 1e-9) {
            throw std::invalid_argument("SplitSpec: fractions must sum to 1");
        }
    }
};

struct DatasetSplit {
    Dataset train;
    Dataset valid;
    Dataset test;
};

/// Seeded per-category shuffle and partition. Valid/test take
/// floor(fraction * n) records each; the remainder goes to train. Categories
/// with fewer than 3 records go wholly to train (warned on stderr).
inline DatasetSplit split_per_category(const Dataset& ds, const SplitSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::vector<RatingRecord> train, valid, test;
    for (std::size_t c = 0; c < ds.category_count(); ++c) {
        std::vector<std::size_t> idx = ds.by_category()[c];
        if (idx.empty()) continue;
        if (idx.size() < 3) {
            std::cerr << "warning: category " << c << " has " << idx.size()
                      << " record(s); assigning all to train\n";
            for (std::size_t i : idx) train.push_back(ds.records()[i]);
            continue;
        }
        rng.shuffle(idx);
        const std::size_t n = idx.size();
        const auto n_valid =
            static_cast<std::size_t>(std::floor(spec.valid_fraction * static_cast<double>(n) + 1e-9));
        const auto n_test =
            static_cast<std::size_t>(std::floor(spec.test_fraction * static_cast<double>(n) + 1e-9));
        const std::size_t n_train = n - n_valid - n_test;
        for (std::size_t k = 0; k < n; ++k) {
            const RatingRecord& r = ds.records()[idx[k]];
            if (k < n_train) {
                train.push_back(r);
            } else if (k < n_train + n_valid) {
                valid.push_back(r);
            } else {
                test.push_back(r);
            }
        }
    }
    auto pack = [&](std::vector<RatingRecord>&& recs) {
        return Dataset(ds.view_count(), ds.category_count(), ds.view_dims(), std::move(recs));
    };
    return DatasetSplit{pack(std::move(train)), pack(std::move(valid)), pack(std::move(test))};
}

// --- Synthetic data from a planted model ------------------------------------

struct GenConfig {
    /// Records per category; a single entry broadcasts to every category.
    std::vector<std::size_t> records_per_category{100};
    /// Probability that a feature of a non-user view is nonzero.
    double sparsity = 0.2;
    double noise_sigma = 0.1;
    std::uint64_t seed = 0;
    /// Scale of the planted core/category/view factor entries (times N(0,1)).
    double factor_scale = 0.3;
    /// Scale of the planted direct-weight entries.
    double direct_scale = 0.3;
    /// Treat view 0 as a one-hot user-id view.
    bool user_view = true;

    std::vector<std::size_t> counts_for(std::size_t category_count) const {
        if (records_per_category.size() == 1) {
            return std::vector<std::size_t>(category_count, records_per_category[0]);
        }
        if (records_per_category.size() != category_count) {
            throw std::invalid_argument("GenConfig: records_per_category must have one entry "
                                        "or one per category");
        }
        return records_per_category;
    }
};

/// Random model with N(0,1) entries scaled per part.
inline CataModel random_model(const ModelDims& dims, Rng& rng, double factor_scale,
                              double direct_scale) {
    CataModel m = CataModel::zeros(dims);
    for (auto& t : m.view_factors) {
        for (double& x : t.values()) x = rng.normal(factor_scale);
    }
    for (double& x : m.category_factors.values()) x = rng.normal(factor_scale);
    for (double& x : m.core.values()) x = rng.normal(factor_scale);
    for (double& x : m.direct_weights.values()) x = rng.normal(direct_scale);
    return m;
}

/// Draws sparse inputs and emits ratings y = predict(model, x) + N(0, noise).
inline Dataset generate_from_model(const CataModel& model, const GenConfig& cfg, Rng& rng) {
    const ModelDims& dims = model.dims;
    const auto counts = cfg.counts_for(dims.category_count);
    std::vector<RatingRecord> records;
    for (std::size_t c = 0; c < dims.category_count; ++c) {
        for (std::size_t n = 0; n < counts[c]; ++n) {
            RatingRecord r;
            r.category = c;
            r.views.resize(dims.view_count);
            for (std::size_t v = 0; v < dims.view_count; ++v) {
                if (v == 0 && cfg.user_view) {
                    r.views[v].indices.push_back(rng.index(dims.view_dims[0]));
                    r.views[v].values.push_back(1.0);
                    continue;
                }
                for (std::size_t i = 0; i < dims.view_dims[v]; ++i) {
                    if (rng.uniform() < cfg.sparsity) {
                        r.views[v].indices.push_back(i);
                        r.views[v].values.push_back(rng.normal(1.0));
                    }
                }
            }
            r.rating = predict(model, r.views, c) + rng.normal(cfg.noise_sigma);
            records.push_back(std::move(r));
        }
    }
    return Dataset(dims.view_count, dims.category_count, dims.view_dims, std::move(records));
}

struct SyntheticData {
    Dataset dataset;
    CataModel model;
};

/// Plants a random model and samples a dataset from it; both are returned so
/// recovery tests can compare against the ground truth.
inline SyntheticData generate_synthetic(const ModelDims& dims, const GenConfig& cfg) {
    dims.validate();
    Rng rng(cfg.seed);
    CataModel model = random_model(dims, rng, cfg.factor_scale, cfg.direct_scale);
    Dataset ds = generate_from_model(model, cfg, rng);
    return SyntheticData{std::move(ds), std::move(model)};
}

// --- Dataset statistics ------------------------------------------------------

/// Div(u) = 1 - (# same-category pairs) / (n choose 2) over one grouping
/// key's category ids. Requires at least 2 records.
inline double category_diversity(const std::vector<std::size_t>& categories) {
    const std::size_t n = categories.size();
    if (n < 2) {
        throw std::invalid_argument("category_diversity: need at least 2 records");
    }
    std::vector<std::size_t> sorted = categories;
    std::sort(sorted.begin(), sorted.end());
    std::size_t same = 0;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
            ++run;
        } else {
            same += run * (run - 1) / 2;
            run = 1;
        }
    }
    const std::size_t pairs = n * (n - 1) / 2;
    return 1.0 - static_cast<double>(same) / static_cast<double>(pairs);
}

inline constexpr std::size_t kRatingHistogramBins = 10;

struct DatasetStats {
    std::size_t record_count = 0;
    std::vector<std::size_t> records_per_category;
    std::vector<double> view_mean_nnz;
    std::vector<double> view_density;  // mean nnz / I_v
    double rating_min = 0.0;
    double rating_max = 0.0;
    double rating_mean = 0.0;
    double rating_std = 0.0;
    std::vector<std::size_t> rating_histogram =
        std::vector<std::size_t>(kRatingHistogramBins, 0);
    bool has_diversity = false;
    double mean_diversity = 0.0;
    std::size_t diversity_groups = 0;
    std::size_t diversity_skipped = 0;
};

/// Deterministic aggregation. When `user_view` names a one-hot view, records
/// are grouped by that view's single active index and the mean Div over
/// groups with >= 2 records is reported.
inline DatasetStats dataset_stats(const Dataset& ds,
                                  std::optional<std::size_t> user_view = std::nullopt) {
    DatasetStats s;
    s.records_per_category.assign(ds.category_count(), 0);
    s.view_mean_nnz.assign(ds.view_count(), 0.0);
    s.view_density.assign(ds.view_count(), 0.0);
    s.record_count = ds.size();
    if (ds.size() == 0) return s;

    double sum = 0.0, sum_sq = 0.0;
    s.rating_min = ds.records()[0].rating;
    s.rating_max = ds.records()[0].rating;
    for (const auto& r : ds.records()) {
        ++s.records_per_category[r.category];
        for (std::size_t v = 0; v < ds.view_count(); ++v) {
            s.view_mean_nnz[v] += static_cast<double>(r.views[v].nnz());
        }
        sum += r.rating;
        sum_sq += r.rating * r.rating;
        s.rating_min = std::min(s.rating_min, r.rating);
        s.rating_max = std::max(s.rating_max, r.rating);
    }
    const auto n = static_cast<double>(ds.size());
    for (std::size_t v = 0; v < ds.view_count(); ++v) {
        s.view_mean_nnz[v] /= n;
        s.view_density[v] = s.view_mean_nnz[v] / static_cast<double>(ds.view_dims()[v]);
    }
    s.rating_mean = sum / n;
    s.rating_std = ds.size() > 1
                       ? std::sqrt(std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0)))
                       : 0.0;

    const double width = s.rating_max - s.rating_min;
    for (const auto& r : ds.records()) {
        std::size_t bin = 0;
        if (width > 0.0) {
            bin = static_cast<std::size_t>((r.rating - s.rating_min) / width *
                                           static_cast<double>(kRatingHistogramBins));
            bin = std::min(bin, kRatingHistogramBins - 1);
        }
        ++s.rating_histogram[bin];
    }

    if (user_view && *user_view < ds.view_count()) {
        std::vector<std::vector<std::size_t>> groups(ds.view_dims()[*user_view]);
        for (const auto& r : ds.records()) {
            const SparseVec& key = r.views[*user_view];
            if (key.nnz() == 1 && key.values[0] != 0.0) {
                groups[key.indices[0]].push_back(r.category);
            } else {
                ++s.diversity_skipped;
            }
        }
        double total = 0.0;
        for (const auto& g : groups) {
            if (g.size() >= 2) {
                total += category_diversity(g);
                ++s.diversity_groups;
            }
        }
        s.has_diversity = true;
        s.mean_diversity = s.diversity_groups > 0
                               ? total / static_cast<double>(s.diversity_groups)
                               : 0.0;
    }
    return s;
}

inline nlohmann::json stats_to_json(const DatasetStats& s) {
    nlohmann::json j{{"record_count", s.record_count},
                     {"records_per_category", s.records_per_category},
                     {"view_mean_nnz", s.view_mean_nnz},
                     {"view_density", s.view_density},
                     {"rating", {{"min", s.rating_min},
                                 {"max", s.rating_max},
                                 {"mean", s.rating_mean},
                                 {"std", s.rating_std},
                                 {"histogram", s.rating_histogram}}}};
    if (s.has_diversity) {
        j["diversity"] = {{"mean", s.mean_diversity},
                          {"groups", s.diversity_groups},
                          {"skipped_records", s.diversity_skipped}};
    }
    return j;
}

}  // namespace cata
