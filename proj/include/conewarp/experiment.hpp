#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "conewarp/verify.hpp"

namespace conewarp {

inline constexpr const char* kToolVersion = "0.1.0";

/// Declarative experiment description (schema version 1).  Unknown keys are
/// rejected before any computation.
struct ExperimentConfig {
    nlohmann::json raw;

    static ExperimentConfig parse(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);

    std::uint64_t seed() const;
    int resolution() const;
    int threads() const;
    std::vector<std::string> verifiers() const;
    double tolerance(const std::string& verifier, double fallback) const;
};

struct RunOutcome {
    bool all_passed = false;
    std::map<std::string, VerificationReport> reports;
    nlohmann::json manifest;
};

/// Runs every configured verifier, writes per-verifier reports (runtime kept
/// out of the report files) plus a manifest, and returns the outcome.
/// `output_dir` may be empty to skip writing.
RunOutcome run_experiment(const ExperimentConfig& cfg, const std::string& output_dir);

std::string config_hash(const nlohmann::json& j);

/// Machine-readable catalog dump and its strict parser (round-trip tested).
nlohmann::json catalog_json();
std::vector<CatalogEntry> parse_catalog_json(const nlohmann::json& j);

} // namespace conewarp
