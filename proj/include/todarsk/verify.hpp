#pragma once

// Property suites per module and the ten acceptance criteria, shared by the
// command-line driver and the acceptance binary.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "todarsk/report.hpp"
#include "todarsk/stochastic.hpp"

namespace todarsk {

struct SuiteOptions {
    bool quick = false;              ///< reduced replica and sample counts
    std::uint64_t seed = 20240611;
    std::optional<long> replicas;    ///< overrides the stochastic replica count
};

struct SuiteResult {
    std::string suite;
    std::vector<CheckReport> checks;
    std::vector<SimulationReport> simulations;
    double seconds = 0.0;

    bool pass() const;
};
nlohmann::json to_json(const SuiteResult& r);

/// factorization, grsk, flows, critical, tau, stochastic.
const std::vector<std::string>& suite_names();
bool is_suite(const std::string& name);
/// Throws RangeError for an unknown name.
SuiteResult run_suite(const std::string& name, const SuiteOptions& opts = {});

struct CriterionResult {
    int id = 0;
    std::string title;
    double budget_seconds = 0.0;
    double seconds = 0.0;
    std::vector<CheckReport> checks;
    std::vector<SimulationReport> simulations;

    bool within_budget() const { return seconds < budget_seconds; }
    bool pass() const;
};
nlohmann::json to_json(const CriterionResult& r);

inline constexpr int kCriterionCount = 10;
/// Runs acceptance criterion id (1..10) at full size.
CriterionResult run_criterion(int id, std::uint64_t seed = 20240611);

}  // namespace todarsk
