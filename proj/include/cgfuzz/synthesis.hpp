// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cgfuzz/graph.hpp"
#include "cgfuzz/pattern.hpp"

namespace cgfuzz {

/// Everything needed to re-derive one synthesized graph bit-exactly.
struct SynthesisPlan {
    std::string seed_id;
    std::string pattern_id;
    int point = 0;  // index into the seed's topo order, in [0, node_count]
    uint64_t rng_seed = 0;
};

/// Variable pools induced by a synthesis point: values available before it,
/// and rewireable consumer input slots after it.
struct ContextPools {
    std::vector<std::string> preceding;                    // value ids, deterministic order
    std::vector<std::pair<std::string, int>> succeeding;   // (node id, input slot)
};

ContextPools context_pools(const Graph& seed, int point);

struct BridgeImpossible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bridge chain built from a source value toward a concrete requirement:
/// Pad or Crop to fix the element count, Reshape to fix the dimensions,
/// Cast to fix the dtype — each emitted only when needed.
struct BridgeChain {
    std::vector<Node> nodes;
    std::string terminal_value;
    TensorType terminal_type;
};

/// `fresh` prefixes generated node/value ids so they cannot collide.
BridgeChain bridge(const std::string& source_id, const TensorType& source_type,
                   const TensorType& requirement, const std::string& fresh);

enum class SynthesisStrategy { Repair, DirectInsert };

struct SynthesisOptions {
    SynthesisStrategy strategy = SynthesisStrategy::Repair;
    int node_cap = 200;
    int bridge_cap = 3;  // max bridge nodes per dangling edge
};

enum class DiscardReason { None, NoBridgeSource, InferenceConflict, SizeCap, Validation };
const char* discard_reason_name(DiscardReason r);

struct SynthesisOutcome {
    bool discarded = false;
    DiscardReason reason = DiscardReason::None;
    Graph graph;                 // valid when not discarded
    int reuse_edges = 0;         // dangling inputs repaired by reuse
    int bridge_edges = 0;        // dangling inputs repaired by bridging
    int bridge_nodes_added = 0;
    int outputs_rewired = 0;     // dangling outputs wired into succeeding slots
    int outputs_appended = 0;
};

/// Splice `pattern` into `seed` at the plan's synthesis point.
///
/// Dangling inputs are repaired by reusing compatible preceding values
/// (exact-type matches first, then the loosened structural requirement),
/// falling back to bridge-node creation from a random preceding value.
/// Dangling outputs are wired to type-compatible succeeding consumer slots;
/// leftovers are appended to the graph outputs so dead-code elimination
/// cannot erase the pattern. Pure function of (plan, pattern, seed).
SynthesisOutcome synthesize(const SynthesisPlan& plan, const Pattern& pattern,
                            const Graph& seed, const SynthesisOptions& opts = {});

/// Decide whether a fully tested graph joins the seed pool for high-order
/// synthesis: only bug-free graphs within the node cap are admitted.
bool high_order_admissible(const Graph& g, bool bug_free, const SynthesisOptions& opts);

}  // namespace cgfuzz
