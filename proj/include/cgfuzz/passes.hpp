// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgfuzz/graph.hpp"

namespace cgfuzz {

enum class Granularity { Block, Subgraph };

const char* granularity_name(Granularity g);

/// Catalog entry for one optimization pass.
struct PassDescriptor {
    std::string name;
    Granularity granularity;
    std::string description;
    std::string match_summary;
};

/// The seven passes, in canonical pipeline order.
const std::vector<PassDescriptor>& pass_catalog();
const PassDescriptor* find_pass(const std::string& name);
std::vector<std::string> full_pipeline();

/// One instrumentation observation: the graph as it looked when a pass was
/// invoked on it, before any transformation.
struct PassTracePair {
    Graph graph;  // deep snapshot taken at hook time
    std::string pass_name;
};

/// Result of running one pass.
struct PassResult {
    enum Status { Success, Skipped, Crashed } status = Success;
    Graph graph;          // Success only
    bool fired = false;   // Success only: rewrote >= 1 node
    int rewrites = 0;
    std::string message;  // Skip reason or crash message (stable dedup key input)
};

struct PipelineResult {
    enum Status { Success, Crashed } status = Success;
    Graph graph;                     // final graph on success
    std::vector<bool> fired;         // per pass, in pipeline order
    int crash_index = -1;            // pass index of first crash
    std::string crash_message;
    bool pass_fired(const std::string& name, const std::vector<std::string>& pipeline) const;
};

/// A seeded defect in one pass. At most one mutant is active per campaign.
struct MutantId {
    std::string pass_name;
    int index = 0;
    std::string name;
    std::string root_cause;  // ICL / TSP / TP / IEH, after the bug-study taxonomy
    std::string symptom;     // crash | inconsistency
    std::string description;
};

struct UnknownMutant : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const std::vector<MutantId>& list_mutants();
const MutantId& find_mutant(const std::string& name);  // throws UnknownMutant
std::string mutants_to_json();

/// Campaign-scoped pass executor: owns the active-mutant flag and the
/// instrumentation hook. Never global; concurrent campaigns each hold their
/// own engine. Pass execution itself is pure graph -> graph.
class PassEngine {
  public:
    PassEngine() = default;

    void activate(const std::string& mutant_name);  // throws UnknownMutant
    void deactivate() { mutant_.reset(); }
    const std::optional<MutantId>& active_mutant() const { return mutant_; }

    using Hook = std::function<void(const PassTracePair&)>;

    /// Run one pass. The result graph, when successful, has been re-validated;
    /// a post-pass validation failure comes back as a Crash.
    PassResult run_pass(const std::string& pass_name, const Graph& g) const;

    /// Run passes in order, recording which fired. Skips leave the graph
    /// unchanged; the first crash aborts the pipeline.
    PipelineResult run_pipeline(const std::vector<std::string>& pass_names,
                                const Graph& g) const;

    /// Collect one PassTracePair per run_pass executed inside `thunk`,
    /// in call order.
    std::vector<PassTracePair> with_instrumentation(const std::function<void()>& thunk);

  private:
    std::optional<MutantId> mutant_;
    Hook hook_;  // set only inside with_instrumentation
};

}  // namespace cgfuzz
