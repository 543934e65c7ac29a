// SPDX-License-Identifier: Apache-2.0
#include "cgfuzz/campaign.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "cgfuzz/interpreter.hpp"
#include "cgfuzz/serialize.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace cgfuzz {

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

uint64_t mix(uint64_t seed, uint64_t index, uint64_t salt) {
    return splitmix64(seed ^ splitmix64(index + 1) ^ salt);
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

/// Everything one plan produces; merged into campaign state in plan order.
struct PlanOutcome {
    bool executed = false;
    bool valid = false;
    DiscardReason reason = DiscardReason::None;
    std::string target_pass;
    bool target_fired = false;
    std::vector<std::string> full_pipeline_names;
    std::vector<bool> full_fired;
    bool clean = true;
    BugReport report;
    Graph graph;  // kept only when clean and admissible
    bool admissible = false;
};

std::vector<std::vector<std::string>> sample_pipelines(const OracleConfig& cfg,
                                                       std::mt19937_64& rng) {
    std::vector<std::vector<std::string>> pipelines = {full_pipeline()};
    if (cfg.sampler == OracleConfig::RandomSubsets) {
        const auto& all = full_pipeline();
        for (int s = 0; s < cfg.random_subsets; ++s) {
            std::vector<std::string> subset;
            for (const auto& p : all)
                if (rng() & 1) subset.push_back(p);
            if (subset.empty()) subset.push_back(all[rng() % all.size()]);
            pipelines.push_back(std::move(subset));
        }
    }
    return pipelines;
}

PlanOutcome run_plan(uint64_t master_seed, long index, const CampaignConfig& cfg,
                     const std::vector<Pattern>& patterns, const SeedPool& seeds,
                     size_t pool_snapshot, const PassEngine& engine) {
    PlanOutcome out;
    out.executed = true;
    std::mt19937_64 rng(mix(master_seed, static_cast<uint64_t>(index), 0x706c616eull));

    const Pattern& pattern = patterns[rng() % patterns.size()];
    size_t seed_at = rng() % pool_snapshot;
    const Graph& seed = seeds.graph_at(seed_at);

    SynthesisPlan plan;
    plan.seed_id = seeds.id_at(seed_at);
    plan.pattern_id = pattern.id;
    plan.point = static_cast<int>(rng() % (seed.nodes.size() + 1));
    plan.rng_seed = mix(master_seed, static_cast<uint64_t>(index), 0x73796eull);

    SynthesisOutcome syn = synthesize(plan, pattern, seed, cfg.synthesis);
    if (syn.discarded) {
        out.reason = syn.reason;
        return out;
    }
    out.valid = true;
    out.target_pass = pattern.target_pass;
    if (cfg.synthesis_only) return out;

    auto pipelines = sample_pipelines(cfg.oracle, rng);
    uint64_t oracle_seed = mix(master_seed, static_cast<uint64_t>(index), 0x6f7261ull);
    Verdict v = test_one(syn.graph, pipelines, cfg.oracle, engine, oracle_seed);

    out.full_pipeline_names = pipelines[0];
    out.full_fired = v.first_pipeline_fired;
    for (size_t i = 0; i < out.full_fired.size(); ++i)
        if (out.full_pipeline_names[i] == pattern.target_pass && out.full_fired[i])
            out.target_fired = true;

    if (v.clean) {
        out.admissible = high_order_admissible(syn.graph, true, cfg.synthesis);
        if (out.admissible) out.graph = std::move(syn.graph);
        return out;
    }
    out.clean = false;
    out.report = v.report;
    out.report.provenance = plan;
    out.report.minimal_passes = minimize_passes(syn.graph, v.report.failing_pipeline,
                                                cfg.oracle, engine, oracle_seed);
    out.report.dedup_key = dedup_key_for(out.report);
    return out;
}

}  // namespace

void SeedPool::add_base(std::string id, Graph g) {
    index_[id] = ids_.size();
    ids_.push_back(std::move(id));
    graphs_.push_back(std::move(g));
}

std::string SeedPool::admit(const Graph& g) {
    std::string id = "ho-" + graph_hash(g);
    auto it = index_.find(id);
    if (it != index_.end()) return id;
    index_[id] = ids_.size();
    ids_.push_back(id);
    graphs_.push_back(g);
    return id;
}

const Graph* SeedPool::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &graphs_[it->second];
}

CampaignResult run_campaign(const CampaignConfig& cfg,
                            const std::vector<Pattern>& patterns, SeedPool& seeds) {
    if (patterns.empty() || seeds.size() == 0)
        throw std::runtime_error("campaign needs a non-empty pattern pool and seed pool");

    CampaignResult result;
    CampaignMetrics& m = result.metrics;
    BugStore store;
    PassEngine engine;
    if (!cfg.mutant.empty()) engine.activate(cfg.mutant);

    if (!cfg.report_dir.empty()) {
        fs::create_directories(cfg.report_dir);
        fs::create_directories(fs::path(cfg.report_dir) / "seeds");
    }

    double t0 = now_seconds();
    auto over_time = [&] {
        return cfg.budget_seconds > 0 && now_seconds() - t0 >= cfg.budget_seconds;
    };

    long budget = cfg.budget_tests;
    long index = 0;
    int batch_size = std::max(1, cfg.admit_batch);

    while ((budget <= 0 || index < budget) && !over_time()) {
        long batch_end = budget <= 0 ? index + batch_size
                                     : std::min<long>(index + batch_size, budget);
        size_t pool_snapshot = seeds.size();
        long count = batch_end - index;
        std::vector<PlanOutcome> outcomes(count);

        if (cfg.workers > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(cfg.workers)
            for (long k = 0; k < count; ++k) {
                if (over_time()) continue;
                outcomes[k] = run_plan(cfg.master_seed, index + k, cfg, patterns, seeds,
                                       pool_snapshot, engine);
            }
        } else {
            for (long k = 0; k < count; ++k) {
                if (over_time()) break;
                outcomes[k] = run_plan(cfg.master_seed, index + k, cfg, patterns, seeds,
                                       pool_snapshot, engine);
            }
        }

        // Merge in plan order: identical results for any worker count.
        for (long k = 0; k < count; ++k) {
            PlanOutcome& o = outcomes[k];
            if (!o.executed) continue;
            m.generated++;
            if (!o.valid) {
                m.discard_reasons[discard_reason_name(o.reason)]++;
                continue;
            }
            m.valid++;
            if (cfg.synthesis_only) continue;
            for (size_t i = 0; i < o.full_fired.size(); ++i)
                if (o.full_fired[i]) m.pass_trigger_counts[o.full_pipeline_names[i]]++;
            if (o.target_fired) m.target_triggered++;
            if (!o.clean) {
                if (store.add(o.report) && !cfg.report_dir.empty()) {
                    std::string name = "bug-" + std::to_string(store.size() - 1) + ".json";
                    std::ofstream f(fs::path(cfg.report_dir) / name);
                    f << report_to_json(o.report);
                }
            } else if (o.admissible) {
                std::string id = seeds.admit(o.graph);
                m.admitted_seeds++;
                if (!cfg.report_dir.empty()) {
                    fs::path p = fs::path(cfg.report_dir) / "seeds" / (id + ".cg.json");
                    if (!fs::exists(p)) save_graph(o.graph, p.string());
                }
            }
        }
        index = batch_end;
    }

    m.validity_rate = m.generated ? static_cast<double>(m.valid) / m.generated : 0.0;
    m.trigger_rate = m.valid ? static_cast<double>(m.target_triggered) / m.valid : 0.0;
    m.distinct_bugs = static_cast<long>(store.size());
    m.wall_seconds = now_seconds() - t0;
    for (const auto& [key, rep] : store.reports()) result.reports.push_back(rep);

    if (!cfg.report_dir.empty()) {
        std::ofstream f(fs::path(cfg.report_dir) / "campaign.json");
        f << metrics_to_json(m);
    }
    return result;
}

std::string metrics_to_json(const CampaignMetrics& m) {
    ordered_json j;
    j["generated"] = m.generated;
    j["valid"] = m.valid;
    j["validity_rate"] = m.validity_rate;
    j["trigger_rate"] = m.trigger_rate;
    j["target_triggered"] = m.target_triggered;
    j["pass_trigger_counts"] = ordered_json::object();
    for (const auto& [k, v] : m.pass_trigger_counts) j["pass_trigger_counts"][k] = v;
    j["discard_reasons"] = ordered_json::object();
    for (const auto& [k, v] : m.discard_reasons) j["discard_reasons"][k] = v;
    j["distinct_bugs"] = m.distinct_bugs;
    j["admitted_seeds"] = m.admitted_seeds;
    j["wall_seconds"] = m.wall_seconds;
    return j.dump(2) + "\n";
}

std::string report_to_json(const BugReport& r) {
    ordered_json j;
    j["schema"] = "bug-v1";
    j["kind"] = bug_kind_name(r.kind);
    j["dedup_key"] = r.dedup_key;
    j["crash_message"] = r.crash_message;
    j["failing_pipeline"] = r.failing_pipeline;
    j["minimal_passes"] = r.minimal_passes;
    if (std::isinf(r.distance)) j["distance"] = "inf";
    else j["distance"] = r.distance;
    j["graph_hash"] = r.graph_hash;
    j["mutant"] = r.mutant;
    j["provenance"] = {{"seed_id", r.provenance.seed_id},
                       {"pattern_id", r.provenance.pattern_id},
                       {"point", r.provenance.point},
                       {"rng_seed", r.provenance.rng_seed}};
    j["pipelines"] = r.pipelines;
    j["oracle_seed"] = r.oracle_seed;
    return j.dump(2) + "\n";
}

BugReport report_from_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text);
    if (j.value("schema", "") != "bug-v1")
        throw std::runtime_error("not a bug-v1 report");
    BugReport r;
    r.kind = j.value("kind", "crash") == "crash" ? BugKind::Crash : BugKind::Inconsistency;
    r.dedup_key = j.value("dedup_key", "");
    r.crash_message = j.value("crash_message", "");
    for (const auto& p : j.value("failing_pipeline", ordered_json::array()))
        r.failing_pipeline.push_back(p.get<std::string>());
    for (const auto& p : j.value("minimal_passes", ordered_json::array()))
        r.minimal_passes.push_back(p.get<std::string>());
    if (j.contains("distance")) {
        if (j["distance"].is_string()) r.distance = std::numeric_limits<double>::infinity();
        else r.distance = j["distance"].get<double>();
    }
    r.graph_hash = j.value("graph_hash", "");
    r.mutant = j.value("mutant", "");
    if (j.contains("provenance")) {
        r.provenance.seed_id = j["provenance"].value("seed_id", "");
        r.provenance.pattern_id = j["provenance"].value("pattern_id", "");
        r.provenance.point = j["provenance"].value("point", 0);
        r.provenance.rng_seed = j["provenance"].value("rng_seed", uint64_t{0});
    }
    for (const auto& pl : j.value("pipelines", ordered_json::array())) {
        std::vector<std::string> passes;
        for (const auto& p : pl) passes.push_back(p.get<std::string>());
        r.pipelines.push_back(std::move(passes));
    }
    r.oracle_seed = j.value("oracle_seed", uint64_t{0});
    return r;
}

std::vector<SweepRow> mutant_sweep(const CampaignConfig& base,
                                   const std::vector<Pattern>& patterns,
                                   const SeedPool& base_seeds) {
    std::vector<SweepRow> rows;
    const auto& mutants = list_mutants();
    long per_mutant = std::max<long>(1, base.budget_tests / static_cast<long>(mutants.size()));
    for (const auto& mu : mutants) {
        CampaignConfig cfg = base;
        cfg.mutant = mu.name;
        cfg.budget_tests = per_mutant;
        cfg.master_seed = splitmix64(base.master_seed ^ fnv1a64(mu.name));
        cfg.report_dir = base.report_dir.empty()
                             ? ""
                             : (fs::path(base.report_dir) / mu.name).string();
        SeedPool pool = base_seeds;  // isolated admissions per mutant
        CampaignResult r = run_campaign(cfg, patterns, pool);
        SweepRow row;
        row.mutant = mu.name;
        row.killed = !r.reports.empty();
        row.tests = r.metrics.generated;
        if (row.killed) row.by_kind = bug_kind_name(r.reports.front().kind);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace cgfuzz
