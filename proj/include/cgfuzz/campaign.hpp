// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "cgfuzz/oracle.hpp"
#include "cgfuzz/pattern.hpp"
#include "cgfuzz/synthesis.hpp"

namespace cgfuzz {

/// Seed pool: base seeds plus graphs admitted for high-order synthesis.
/// Admission is single-writer; reads are concurrent.
class SeedPool {
  public:
    void add_base(std::string id, Graph g);
    /// Admit a high-order seed; returns its assigned id.
    std::string admit(const Graph& g);
    size_t size() const { return ids_.size(); }
    const std::string& id_at(size_t i) const { return ids_[i]; }
    const Graph& graph_at(size_t i) const { return graphs_[i]; }
    const Graph* find(const std::string& id) const;

  private:
    std::vector<std::string> ids_;
    std::vector<Graph> graphs_;
    std::map<std::string, size_t> index_;
};

struct CampaignConfig {
    uint64_t master_seed = 1;
    long budget_tests = 10000;     // synthesis attempts; <=0 means unlimited
    double budget_seconds = 0;     // wall clock; <=0 means unlimited
    OracleConfig oracle;
    SynthesisOptions synthesis;
    std::string mutant;            // empty = unmutated compiler
    int workers = 1;               // >1 uses the OpenMP driver
    int admit_batch = 64;          // plans per admission batch (pool frozen within)
    bool synthesis_only = false;   // measure validity without running oracles
    std::string report_dir;        // when set, bug reports and seeds are persisted
};

struct CampaignMetrics {
    long generated = 0;
    long valid = 0;
    double validity_rate = 0.0;
    std::map<std::string, long> pass_trigger_counts;  // fired per pass over valid tests
    long target_triggered = 0;  // valid tests whose pattern's target pass fired
    double trigger_rate = 0.0;  // target_triggered / valid
    std::map<std::string, long> discard_reasons;
    long distinct_bugs = 0;
    long admitted_seeds = 0;
    double wall_seconds = 0.0;
};

struct CampaignResult {
    CampaignMetrics metrics;
    std::vector<BugReport> reports;  // deduplicated, in key order
};

/// Drive one fuzzing campaign: draw plans, synthesize, test, minimize, dedup,
/// admit clean graphs for high-order synthesis. Deterministic for a given
/// master seed: the parallel driver partitions plans into batches, freezes the
/// pool within each batch, and merges results in plan order, so serial and
/// parallel runs of the same config produce identical results.
CampaignResult run_campaign(const CampaignConfig& cfg,
                            const std::vector<Pattern>& patterns, SeedPool& seeds);

std::string metrics_to_json(const CampaignMetrics& m);
std::string report_to_json(const BugReport& r);
BugReport report_from_json(const std::string& text);

struct SweepRow {
    std::string mutant;
    bool killed = false;
    std::string by_kind;  // crash | inconsistency
    long tests = 0;
};

/// One sub-campaign per mutant; the budget is split evenly across mutants.
std::vector<SweepRow> mutant_sweep(const CampaignConfig& base,
                                   const std::vector<Pattern>& patterns,
                                   const SeedPool& base_seeds);

}  // namespace cgfuzz
