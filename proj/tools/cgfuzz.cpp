// SPDX-License-Identifier: Apache-2.0
//
// cgfuzz: optimization-aware fuzzing for a toy computational-graph compiler.
//
// Pipeline: corpus-gen writes the documented-test corpus and the seed pool,
// extract mines optimization-aware patterns from the corpus under
// instrumentation, fuzz splices patterns into seeds and differentially tests
// the pass pipeline, replay re-derives any stored bug from its provenance.

#include <iostream>

#include <CLI11.hpp>

#include "cgfuzz/cli.hpp"

using namespace cgfuzz;

int main(int argc, char** argv) {
    CLI::App app{"computational-graph compiler fuzzer"};
    app.require_subcommand(1);

    Config cfg;
    std::string config_file;
    std::string report_path;

    app.add_option("--config", config_file, "flat key=value config file");
    app.add_flag("--json", cfg.json_output, "machine-readable JSON output");
    app.add_flag("--force", cfg.force, "overwrite existing output directories");

    // Every config key is also a flag; flags win over file and environment.
    std::map<std::string, std::string> overrides;
    for (const auto& [key, value] : cfg.dump()) {
        app.add_option_function<std::string>(
               "--" + key,
               [&overrides, k = key](const std::string& v) { overrides[k] = v; },
               "config key " + key + " (default: " + (value.empty() ? "unset" : value) + ")")
            ->expected(1);
    }

    auto* corpus_gen = app.add_subcommand(
        "corpus-gen", "write the documented-test corpus, the non-optimization corpus "
                      "and the seed pool");
    auto* extract = app.add_subcommand(
        "extract", "mine optimization-aware patterns from the corpus "
                   "(--extraction_mode adaptive|block-only|subgraph-only|whole-graph|noopt)");
    auto* fuzz = app.add_subcommand(
        "fuzz", "run a fuzzing campaign; exit 0 clean, 1 bugs found, 2 fault");
    auto* replay = app.add_subcommand(
        "replay", "re-derive a stored bug report from provenance and re-verify it; "
                  "exit 1 when faithfully reproduced");
    auto* minimize = app.add_subcommand(
        "minimize", "recompute the minimal failing pass set for a stored report");
    auto* sweep = app.add_subcommand(
        "mutant-sweep", "one sub-campaign per seeded mutant; prints the kill matrix");
    auto* report = app.add_subcommand("report", "summarize stored reports");
    replay->add_option("report", report_path, "path to a bug-*.json report")->required();
    minimize->add_option("report", report_path, "path to a bug-*.json report")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_file.empty()) cfg = load_config_file(config_file, cfg);
        apply_env_overrides(cfg);
        for (const auto& [k, v] : overrides)
            if (!cfg.set(k, v)) throw std::runtime_error("unknown config key " + k);

        if (!cfg.json_output) {
            std::cerr << "# effective config\n";
            for (const auto& [k, v] : cfg.dump())
                std::cerr << "#   " << k << " = " << v << "\n";
        }

        if (corpus_gen->parsed()) return cmd_corpus_gen(cfg);
        if (extract->parsed()) return cmd_extract(cfg);
        if (fuzz->parsed()) return cmd_fuzz(cfg);
        if (replay->parsed()) return cmd_replay(cfg, report_path);
        if (minimize->parsed()) return cmd_minimize(cfg, report_path);
        if (sweep->parsed()) return cmd_mutant_sweep(cfg);
        if (report->parsed()) return cmd_report(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
