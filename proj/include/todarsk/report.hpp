#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace todarsk {

/// One tolerance-checked verification item.
struct CheckReport {
    std::string check;
    double max_residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;  ///< optional free-text detail

    static CheckReport make(std::string check, double residual, double tolerance, std::string note = {}) {
        return {std::move(check), residual, tolerance, residual <= tolerance, std::move(note)};
    }
};

inline nlohmann::json to_json(const CheckReport& r) {
    nlohmann::json j{{"check", r.check}, {"max_residual", r.max_residual}, {"tolerance", r.tolerance}, {"pass", r.pass}};
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

inline nlohmann::json to_json(const std::vector<CheckReport>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) arr.push_back(to_json(r));
    return arr;
}

inline bool all_pass(const std::vector<CheckReport>& reports) {
    for (const auto& r : reports)
        if (!r.pass) return false;
    return true;
}

}  // namespace todarsk
