// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

#include "cgfuzz/graph.hpp"

namespace cgfuzz {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Render a graph to the `.cg.json` text format. Field order is fixed, so
/// equal graphs serialize to equal bytes and reproducers diff cleanly.
std::string serialize(const Graph& g);

/// Parse `.cg.json` text. Throws ParseError with field context on malformed
/// input, duplicate ids, or references to missing value ids. Semantic typing
/// errors are left to validate().
Graph parse(const std::string& text);

/// serialize() to / parse() from a file on disk.
void save_graph(const Graph& g, const std::string& path);
Graph load_graph(const std::string& path);

/// FNV-1a over the canonical serialization; stable within and across runs.
uint64_t fnv1a64(const std::string& s);
std::string graph_hash(const Graph& g);

bool structurally_equal(const Graph& a, const Graph& b);

}  // namespace cgfuzz
