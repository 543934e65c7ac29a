// SPDX-License-Identifier: Apache-2.0
#include "cgfuzz/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace cgfuzz {

std::map<std::string, std::string> Config::dump() const {
    return {
        {"corpus_dir", corpus_dir},
        {"noopt_corpus_dir", noopt_corpus_dir},
        {"patterns_dir", patterns_dir},
        {"seeds_dir", seeds_dir},
        {"reports_dir", reports_dir},
        {"seed_count", std::to_string(seed_count)},
        {"budget_tests", std::to_string(budget_tests)},
        {"budget_seconds", std::to_string(budget_seconds)},
        {"master_seed", std::to_string(master_seed)},
        {"chebyshev_threshold", std::to_string(chebyshev_threshold)},
        {"input_seeds", std::to_string(input_seeds)},
        {"extraction_mode", extraction_mode},
        {"strategy", strategy},
        {"mutant", mutant},
        {"workers", std::to_string(workers)},
        {"node_cap", std::to_string(node_cap)},
        {"bridge_cap", std::to_string(bridge_cap)},
    };
}

bool Config::set(const std::string& key, const std::string& value) {
    try {
        if (key == "corpus_dir") corpus_dir = value;
        else if (key == "noopt_corpus_dir") noopt_corpus_dir = value;
        else if (key == "patterns_dir") patterns_dir = value;
        else if (key == "seeds_dir") seeds_dir = value;
        else if (key == "reports_dir") reports_dir = value;
        else if (key == "seed_count") seed_count = std::stol(value);
        else if (key == "budget_tests") budget_tests = std::stol(value);
        else if (key == "budget_seconds") budget_seconds = std::stod(value);
        else if (key == "master_seed") master_seed = std::stoull(value);
        else if (key == "chebyshev_threshold") chebyshev_threshold = std::stod(value);
        else if (key == "input_seeds") input_seeds = std::stoi(value);
        else if (key == "extraction_mode") extraction_mode = value;
        else if (key == "strategy") strategy = value;
        else if (key == "mutant") mutant = value;
        else if (key == "workers") workers = std::stoi(value);
        else if (key == "node_cap") node_cap = std::stoi(value);
        else if (key == "bridge_cap") bridge_cap = std::stoi(value);
        else return false;
    } catch (const std::exception&) {
        throw std::runtime_error("bad value for config key " + key + ": " + value);
    }
    return true;
}

Config load_config_file(const std::string& path, Config base) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        size_t h = line.find('#');
        if (h != std::string::npos) line = line.substr(0, h);
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": expected key=value");
            continue;
        }
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!base.set(key, value))
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": unknown config key " + key);
    }
    return base;
}

void apply_env_overrides(Config& cfg) {
    for (const auto& [key, cur] : cfg.dump()) {
        std::string env = "CGFUZZ_" + key;
        for (auto& ch : env) ch = toupper(static_cast<unsigned char>(ch));
        if (const char* v = std::getenv(env.c_str())) cfg.set(key, v);
    }
}

CampaignConfig Config::to_campaign() const {
    CampaignConfig c;
    c.master_seed = master_seed;
    c.budget_tests = budget_tests;
    c.budget_seconds = budget_seconds;
    c.oracle.threshold = chebyshev_threshold;
    c.oracle.input_seeds = input_seeds;
    c.synthesis.node_cap = node_cap;
    c.synthesis.bridge_cap = bridge_cap;
    c.synthesis.strategy = strategy == "direct-insert" ? SynthesisStrategy::DirectInsert
                                                       : SynthesisStrategy::Repair;
    c.mutant = mutant;
    c.workers = workers;
    c.report_dir = reports_dir;
    return c;
}

}  // namespace cgfuzz
