// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cgfuzz/graph.hpp"
#include "cgfuzz/op_registry.hpp"
#include "cgfuzz/passes.hpp"

namespace cgfuzz {

struct CorpusError : std::runtime_error {
    CorpusError(const std::string& file, const std::string& cause)
        : std::runtime_error(file + ": " + cause) {}
};

/// One dangling input of a pattern: an external source value and every
/// (node, slot) site inside the pattern that consumed it. Sites sharing one
/// source stay shared, so repairing the edge preserves the topology.
struct DanglingInput {
    std::string value_id;                       // id in the source graph
    std::vector<std::pair<std::string, int>> sites;  // (node id, input slot)
    TensorType concrete;                        // original type requirement
};

struct DanglingOutput {
    std::string value_id;
    TensorType concrete;
};

/// Extracted optimization-aware pattern: an induced sub-DAG of a traced graph
/// known to trigger `target_pass`, with its cut edges recorded as dangling
/// inputs/outputs. Constants consumed by pattern nodes travel with it.
struct Pattern {
    std::string id;  // content hash, assigned on construction
    std::string target_pass;
    Granularity granularity;
    std::vector<Node> nodes;  // topo order preserved from the source graph
    std::map<std::string, TensorValue> constants;
    std::vector<DanglingInput> dangling_inputs;
    std::vector<DanglingOutput> dangling_outputs;
    std::string provenance_file;
    int provenance_index = 0;
};

/// Same topology with concrete shape/type requirements erased: each dangling
/// input keeps only the intrinsic structural requirement of its first
/// consumer slot. Non-tensor attrs are preserved verbatim.
struct AbstractPattern {
    const Pattern* source = nullptr;
    std::vector<InputRequirement> input_reqs;  // parallel to source->dangling_inputs
};

AbstractPattern abstract_pattern(const Pattern& p);

/// Corpus entry: a documented-test graph plus the pass pipeline its test runs.
struct CorpusEntry {
    std::string name;
    Graph graph;
    std::vector<std::string> passes;
};

/// Run every corpus entry under instrumentation and gather the
/// (graph, pass) observations in execution order.
std::vector<PassTracePair> collect_pairs(const std::vector<CorpusEntry>& corpus);

enum class ExtractionMode { Adaptive, BlockOnly, SubgraphOnly, WholeGraph, NonOptCorpus };
const char* extraction_mode_name(ExtractionMode m);
bool extraction_mode_from_name(const std::string& s, ExtractionMode& out);

struct ExtractOptions {
    ExtractionMode mode = ExtractionMode::Adaptive;
    /// Keep only patterns whose standalone embedding fires the target pass.
    /// Disabled for the non-optimization ablation, whose patterns are
    /// intentionally not optimization-triggering.
    bool require_trigger = true;
};

/// Split one traced pair into patterns at the granularity of its pass
/// (or the mode's forced granularity). Deterministic: same pair, same list.
std::vector<Pattern> extract(const PassTracePair& pair, const ExtractOptions& opts = {});

/// Promote every dangling input to a graph input with its concrete type and
/// declare the dangling outputs as graph outputs. The embedding of a pattern
/// is the witness that it triggers its pass on its own.
Graph embed_standalone(const Pattern& p);

/// Extract over a whole corpus, deduplicating isomorphic patterns per target
/// pass by canonical hash.
std::vector<Pattern> extract_corpus(const std::vector<CorpusEntry>& corpus,
                                    const ExtractOptions& opts = {});

std::string pattern_to_json(const Pattern& p);
Pattern pattern_from_json(const std::string& text);
void save_pattern(const Pattern& p, const std::string& dir);
std::vector<Pattern> load_pattern_dir(const std::string& dir);

}  // namespace cgfuzz
