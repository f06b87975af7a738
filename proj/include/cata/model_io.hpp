#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cata/model.hpp"

namespace cata {

inline constexpr int kModelFormatVersion = 1;

/// Versioned model document: {format_version, dims{V,C,I[],R[]}, G, Phi,
/// Theta[], D} with every array flat row-major. Doubles are emitted with
/// shortest round-trip precision, so save -> load reproduces predictions
/// bit-exactly.
inline nlohmann::json model_to_json(const CataModel& m) {
    m.validate();
    nlohmann::json j;
    j["format_version"] = kModelFormatVersion;
    j["dims"] = {{"V", m.dims.view_count},
                 {"C", m.dims.category_count},
                 {"I", m.dims.view_dims},
                 {"R", m.dims.ranks}};
    j["G"] = m.core.values();
    j["Phi"] = m.category_factors.values();
    nlohmann::json theta = nlohmann::json::array();
    for (const auto& t : m.view_factors) theta.push_back(t.values());
    j["Theta"] = std::move(theta);
    j["D"] = m.direct_weights.values();
    return j;
}

inline CataModel model_from_json(const nlohmann::json& j) {
    if (!j.contains("format_version") || j.at("format_version").get<int>() != kModelFormatVersion) {
        throw std::invalid_argument("model: unsupported or missing format_version");
    }
    const auto& dj = j.at("dims");
    ModelDims dims;
    dims.view_count = dj.at("V").get<std::size_t>();
    dims.category_count = dj.at("C").get<std::size_t>();
    dims.view_dims = dj.at("I").get<std::vector<std::size_t>>();
    dims.ranks = dj.at("R").get<std::vector<std::size_t>>();
    dims.validate();

    CataModel m = CataModel::zeros(dims);
    m.core.values() = j.at("G").get<std::vector<double>>();
    if (m.core.values().size() != m.core.size()) {
        throw std::invalid_argument("model: G length does not match ranks");
    }
    auto fill = [](Matrix& dst, const nlohmann::json& src, const char* what) {
        auto vals = src.get<std::vector<double>>();
        if (vals.size() != dst.rows() * dst.cols()) {
            throw std::invalid_argument(std::string("model: ") + what + " length mismatch");
        }
        dst.values() = std::move(vals);
    };
    fill(m.category_factors, j.at("Phi"), "Phi");
    const auto& theta = j.at("Theta");
    if (!theta.is_array() || theta.size() != dims.view_count) {
        throw std::invalid_argument("model: Theta must hold one matrix per view");
    }
    for (std::size_t v = 0; v < dims.view_count; ++v) {
        fill(m.view_factors[v], theta.at(v), "Theta");
    }
    fill(m.direct_weights, j.at("D"), "D");
    m.validate();
    return m;
}

inline void save_model(const std::string& path, const CataModel& m) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open for writing: " + path);
    out << model_to_json(m).dump() << "\n";
    if (!out) throw std::invalid_argument("write failed: " + path);
}

inline CataModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("model file " + path + ": " + e.what());
    }
    return model_from_json(j);
}

}  // namespace cata
