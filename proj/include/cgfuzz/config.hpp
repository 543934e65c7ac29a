// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "cgfuzz/campaign.hpp"
#include "cgfuzz/pattern.hpp"

namespace cgfuzz {

/// Flat key=value configuration. Sources merge in order: defaults, config
/// file, CGFUZZ_* environment variables, command-line flags (flags win).
struct Config {
    std::string corpus_dir = "out/corpus";
    std::string noopt_corpus_dir = "out/corpus_noopt";
    std::string patterns_dir = "out/patterns";
    std::string seeds_dir = "out/seeds";
    std::string reports_dir = "out/reports";
    long seed_count = 4000;
    long budget_tests = 10000;
    double budget_seconds = 0;
    uint64_t master_seed = 1;
    double chebyshev_threshold = 1e-3;
    int input_seeds = 3;
    std::string extraction_mode = "adaptive";
    std::string strategy = "repair";  // repair | direct-insert
    std::string mutant;
    int workers = 1;
    int node_cap = 200;
    int bridge_cap = 3;
    bool force = false;
    bool json_output = false;

    /// Keys in documentation order, with current values.
    std::map<std::string, std::string> dump() const;
    /// Set one key from its string form; returns false for unknown keys.
    bool set(const std::string& key, const std::string& value);

    CampaignConfig to_campaign() const;
};

Config load_config_file(const std::string& path, Config base = {});
void apply_env_overrides(Config& cfg);

}  // namespace cgfuzz
