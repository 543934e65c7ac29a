// SPDX-License-Identifier: Apache-2.0
#include "cgfuzz/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "cgfuzz/corpus.hpp"
#include "cgfuzz/seedgen.hpp"
#include "cgfuzz/serialize.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace cgfuzz {

namespace {

bool dir_nonempty(const std::string& dir) {
    return fs::exists(dir) && !fs::is_empty(dir);
}

/// Existing outputs are never silently overwritten.
bool guard_output_dir(const Config& cfg, const std::string& dir) {
    if (dir_nonempty(dir) && !cfg.force) {
        std::cerr << "error: " << dir << " exists and is not empty (use --force)\n";
        return false;
    }
    return true;
}

void emit(const Config& cfg, const ordered_json& j, const std::string& text) {
    if (cfg.json_output) std::cout << j.dump(2) << "\n";
    else std::cout << text;
}

char seed_file_name[32];

std::string seed_id_of(long i) {
    snprintf(seed_file_name, sizeof seed_file_name, "seed-%06ld", i);
    return seed_file_name;
}

SeedPool load_seed_pool(const Config& cfg) {
    SeedPool pool;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(cfg.seeds_dir))
        if (e.path().extension() == ".json" && e.path().stem().extension() == ".cg")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
        pool.add_base(f.stem().stem().string(), load_graph(f.string()));
    if (pool.size() == 0)
        throw std::runtime_error("no seeds found in " + cfg.seeds_dir);
    return pool;
}

ExtractionMode mode_of(const Config& cfg) {
    ExtractionMode m;
    if (!extraction_mode_from_name(cfg.extraction_mode, m))
        throw std::runtime_error("unknown extraction_mode: " + cfg.extraction_mode);
    return m;
}

}  // namespace

int cmd_corpus_gen(const Config& cfg) {
    for (const auto& d : {cfg.corpus_dir, cfg.noopt_corpus_dir, cfg.seeds_dir})
        if (!guard_output_dir(cfg, d)) return 2;

    auto corpus = documented_corpus();
    write_corpus(corpus, cfg.corpus_dir);
    auto noopt = nonopt_corpus();
    write_corpus(noopt, cfg.noopt_corpus_dir);

    fs::create_directories(cfg.seeds_dir);
    for (long i = 0; i < cfg.seed_count; ++i) {
        Graph g = gen_seed(cfg.master_seed + static_cast<uint64_t>(i));
        save_graph(g, (fs::path(cfg.seeds_dir) / (seed_id_of(i) + ".cg.json")).string());
    }
    ordered_json manifest;
    manifest["corpus_entries"] = corpus.size();
    manifest["noopt_entries"] = noopt.size();
    manifest["seed_count"] = cfg.seed_count;
    manifest["master_seed"] = cfg.master_seed;
    {
        std::ofstream f(fs::path(cfg.seeds_dir) / "manifest.json");
        f << manifest.dump(2) << "\n";
    }
    {
        fs::create_directories(cfg.reports_dir);
        std::ofstream f(fs::path(cfg.reports_dir) / "mutants.json");
        f << mutants_to_json();
    }
    emit(cfg, manifest,
         "corpus: " + std::to_string(corpus.size()) + " entries, noopt: " +
             std::to_string(noopt.size()) + " entries, seeds: " +
             std::to_string(cfg.seed_count) + "\n");
    return 0;
}

int cmd_extract(const Config& cfg) {
    if (!guard_output_dir(cfg, cfg.patterns_dir)) return 2;
    ExtractionMode mode = mode_of(cfg);
    std::string src = mode == ExtractionMode::NonOptCorpus ? cfg.noopt_corpus_dir
                                                           : cfg.corpus_dir;
    auto corpus = load_corpus(src);
    if (corpus.empty()) {
        std::cerr << "warning: empty corpus in " << src << ", writing empty pool\n";
        fs::create_directories(cfg.patterns_dir);
        emit(cfg, ordered_json{{"patterns", 0}}, "0 patterns\n");
        return 0;
    }
    ExtractOptions opts;
    opts.mode = mode;
    opts.require_trigger = mode != ExtractionMode::NonOptCorpus;
    auto pool = extract_corpus(corpus, opts);
    fs::create_directories(cfg.patterns_dir);
    std::map<std::string, int> per_pass;
    for (const auto& p : pool) {
        save_pattern(p, cfg.patterns_dir);
        per_pass[p.target_pass]++;
    }
    ordered_json rep;
    rep["mode"] = extraction_mode_name(mode);
    rep["patterns"] = pool.size();
    rep["per_pass"] = ordered_json::object();
    for (const auto& [k, v] : per_pass) rep["per_pass"][k] = v;
    {
        std::ofstream f(fs::path(cfg.patterns_dir) / "extraction.json");
        f << rep.dump(2) << "\n";
    }
    std::ostringstream text;
    text << pool.size() << " patterns (" << extraction_mode_name(mode) << ")\n";
    for (const auto& [k, v] : per_pass) text << "  " << k << ": " << v << "\n";
    emit(cfg, rep, text.str());
    return 0;
}

int cmd_fuzz(const Config& cfg) {
    if (!guard_output_dir(cfg, cfg.reports_dir)) return 2;
    auto patterns = load_pattern_dir(cfg.patterns_dir);
    SeedPool pool = load_seed_pool(cfg);
    CampaignConfig cc = cfg.to_campaign();
    CampaignResult r = run_campaign(cc, patterns, pool);
    ordered_json j = ordered_json::parse(metrics_to_json(r.metrics));
    std::ostringstream text;
    text << "generated " << r.metrics.generated << ", valid " << r.metrics.valid
         << " (" << r.metrics.validity_rate * 100 << "%), trigger rate "
         << r.metrics.trigger_rate * 100 << "%, bugs " << r.metrics.distinct_bugs
         << ", " << r.metrics.wall_seconds << "s\n";
    emit(cfg, j, text.str());
    return r.reports.empty() ? 0 : 1;
}

namespace {

struct Rederived {
    Graph graph;
    bool ok = false;
    std::string error;
};

Rederived rederive(const Config& cfg, const BugReport& rep) {
    Rederived out;
    auto patterns = load_pattern_dir(cfg.patterns_dir);
    const Pattern* pat = nullptr;
    for (const auto& p : patterns)
        if (p.id == rep.provenance.pattern_id) pat = &p;
    if (!pat) {
        out.error = "pattern " + rep.provenance.pattern_id + " not found";
        return out;
    }
    Graph seed;
    const std::string& sid = rep.provenance.seed_id;
    fs::path base = fs::path(cfg.seeds_dir) / (sid + ".cg.json");
    fs::path high = fs::path(cfg.reports_dir) / "seeds" / (sid + ".cg.json");
    if (fs::exists(base)) seed = load_graph(base.string());
    else if (fs::exists(high)) seed = load_graph(high.string());
    else {
        out.error = "seed " + sid + " not found";
        return out;
    }
    SynthesisOptions opts;
    opts.node_cap = cfg.node_cap;
    opts.bridge_cap = cfg.bridge_cap;
    SynthesisOutcome syn = synthesize(rep.provenance, *pat, seed, opts);
    if (syn.discarded) {
        out.error = std::string("synthesis discarded: ") + discard_reason_name(syn.reason);
        return out;
    }
    out.graph = std::move(syn.graph);
    out.ok = true;
    return out;
}

}  // namespace

int cmd_replay(const Config& cfg, const std::string& report_path) {
    std::ifstream f(report_path);
    if (!f) {
        std::cerr << "error: cannot open " << report_path << "\n";
        return 2;
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    BugReport rep = report_from_json(ss.str());

    Rederived rd = rederive(cfg, rep);
    if (!rd.ok) {
        std::cerr << "replay failed: " << rd.error << "\n";
        return 2;
    }
    std::string hash = graph_hash(rd.graph);
    bool hash_ok = hash == rep.graph_hash;

    PassEngine engine;
    if (!rep.mutant.empty()) engine.activate(rep.mutant);
    OracleConfig oc;
    oc.threshold = cfg.chebyshev_threshold;
    oc.input_seeds = cfg.input_seeds;
    Verdict v = test_one(rd.graph, rep.pipelines, oc, engine, rep.oracle_seed);
    bool verdict_ok = !v.clean && v.report.kind == rep.kind;
    std::string key;
    if (verdict_ok) {
        BugReport fresh = v.report;
        fresh.minimal_passes = minimize_passes(rd.graph, v.report.failing_pipeline, oc,
                                               engine, rep.oracle_seed);
        key = dedup_key_for(fresh);
    }
    bool key_ok = verdict_ok && key == rep.dedup_key;

    ordered_json j;
    j["graph_hash_matches"] = hash_ok;
    j["verdict_matches"] = verdict_ok;
    j["dedup_key_matches"] = key_ok;
    emit(cfg, j,
         std::string("graph hash ") + (hash_ok ? "ok" : "MISMATCH") + ", verdict " +
             (verdict_ok ? "reproduced" : "NOT reproduced") + ", dedup key " +
             (key_ok ? "ok" : "MISMATCH") + "\n");
    return hash_ok && verdict_ok && key_ok ? 1 : 2;
}

int cmd_minimize(const Config& cfg, const std::string& report_path) {
    std::ifstream f(report_path);
    if (!f) {
        std::cerr << "error: cannot open " << report_path << "\n";
        return 2;
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    BugReport rep = report_from_json(ss.str());
    Rederived rd = rederive(cfg, rep);
    if (!rd.ok) {
        std::cerr << "minimize failed: " << rd.error << "\n";
        return 2;
    }
    PassEngine engine;
    if (!rep.mutant.empty()) engine.activate(rep.mutant);
    OracleConfig oc;
    oc.threshold = cfg.chebyshev_threshold;
    oc.input_seeds = cfg.input_seeds;
    auto minimal = minimize_passes(rd.graph, rep.failing_pipeline, oc, engine,
                                   rep.oracle_seed);
    ordered_json j;
    j["minimal_passes"] = minimal;
    std::ostringstream text;
    text << "minimal set:";
    for (const auto& p : minimal) text << " " << p;
    text << "\n";
    emit(cfg, j, text.str());
    return 0;
}

int cmd_mutant_sweep(const Config& cfg) {
    auto patterns = load_pattern_dir(cfg.patterns_dir);
    SeedPool pool = load_seed_pool(cfg);
    CampaignConfig cc = cfg.to_campaign();
    auto rows = mutant_sweep(cc, patterns, pool);
    ordered_json j = ordered_json::array();
    std::ostringstream text;
    int kills = 0;
    for (const auto& r : rows) {
        ordered_json e;
        e["mutant"] = r.mutant;
        e["killed"] = r.killed;
        e["by"] = r.by_kind;
        e["tests"] = r.tests;
        j.push_back(e);
        kills += r.killed;
        text << (r.killed ? "KILLED " : "missed ") << r.mutant
             << (r.killed ? " (" + r.by_kind + ")" : "") << "\n";
    }
    text << kills << "/" << rows.size() << " mutants killed\n";
    if (!cfg.reports_dir.empty()) {
        fs::create_directories(cfg.reports_dir);
        std::ofstream f(fs::path(cfg.reports_dir) / "sweep.json");
        f << j.dump(2) << "\n";
    }
    emit(cfg, j, text.str());
    return 0;
}

int cmd_report(const Config& cfg) {
    ordered_json j;
    fs::path dir(cfg.reports_dir);
    std::ostringstream text;
    if (fs::exists(dir / "campaign.json")) {
        std::ifstream f(dir / "campaign.json");
        j["campaign"] = ordered_json::parse(f);
    }
    j["bugs"] = ordered_json::array();
    std::vector<fs::path> files;
    if (fs::exists(dir))
        for (const auto& e : fs::directory_iterator(dir))
            if (e.path().filename().string().starts_with("bug-")) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f);
        ordered_json bug = ordered_json::parse(in);
        text << bug.value("kind", "?") << "  " << bug.value("dedup_key", "?") << "\n";
        j["bugs"].push_back(bug);
    }
    text << files.size() << " stored bugs\n";
    emit(cfg, j, text.str());
    return 0;
}

}  // namespace cgfuzz
