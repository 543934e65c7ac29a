// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "cgfuzz/graph.hpp"
#include "cgfuzz/passes.hpp"
#include "cgfuzz/synthesis.hpp"

namespace cgfuzz {

struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Chebyshev distance: max over elements of |a_i - b_i|. NaN at any position
/// counts as +infinity — NaN disagreement is a maximal discrepancy.
double chebyshev(const TensorValue& a, const TensorValue& b);

struct OracleConfig {
    double threshold = 1e-3;     // Chebyshev inconsistency threshold
    int input_seeds = 3;         // input seeds per test
    enum Sampler { FullVsNone, RandomSubsets } sampler = RandomSubsets;
    int random_subsets = 2;      // extra sampled pipelines per test
};

enum class BugKind { Crash, Inconsistency };
const char* bug_kind_name(BugKind k);

struct BugReport {
    BugKind kind = BugKind::Crash;
    std::string dedup_key;
    std::string crash_message;            // Crash only (raw, pre-normalization)
    std::vector<std::string> failing_pipeline;
    std::vector<std::string> minimal_passes;  // minimized pass set
    double distance = 0.0;                // Inconsistency only
    std::string graph_hash;
    std::string mutant;                   // active mutant, if any
    SynthesisPlan provenance;
    std::vector<std::vector<std::string>> pipelines;  // all pipelines the test ran
    uint64_t oracle_seed = 0;
};

struct Verdict {
    bool clean = true;
    BugReport report;  // meaningful when !clean
    /// Fired flags of the first pipeline run (the campaign puts the full
    /// pipeline first); feeds the trigger-rate metrics.
    std::vector<bool> first_pipeline_fired;
};

/// Strip node/value ids and numeric literals from a crash message so the same
/// defect reached through different graphs dedups to one key.
std::string normalize_message(const std::string& msg);

/// Differential test of one graph: run every pipeline, crash oracle first,
/// then execute original vs optimized on `input_seeds` input sets and compare
/// outputs with the Chebyshev oracle. Skip("unsupported...") results are
/// disregarded. A changed output arity or tensor type counts as an
/// inconsistency of infinite distance.
Verdict test_one(const Graph& g, const std::vector<std::vector<std::string>>& pipelines,
                 const OracleConfig& cfg, const PassEngine& engine, uint64_t oracle_seed);

struct NotReproducible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// ddmin over the failing pass sequence plus a final single-removal sweep:
/// returns an order-preserving 1-minimal subset that still reveals the bug.
/// Throws NotReproducible if the full pipeline no longer fails (cannot happen
/// while execution stays deterministic).
std::vector<std::string> minimize_passes(const Graph& g,
                                         const std::vector<std::string>& failing_pipeline,
                                         const OracleConfig& cfg, const PassEngine& engine,
                                         uint64_t oracle_seed);

/// Deduplicating bug store. Crash keys are normalized messages; inconsistency
/// keys are the sorted minimal pass set. Returns true when the report is new.
class BugStore {
  public:
    bool add(const BugReport& report);
    const std::map<std::string, BugReport>& reports() const { return reports_; }
    size_t size() const { return reports_.size(); }

  private:
    std::map<std::string, BugReport> reports_;
};

std::string dedup_key_for(const BugReport& report);

}  // namespace cgfuzz
