// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "cgfuzz/pattern.hpp"

namespace cgfuzz {

/// The documented-test corpus: hand-built graphs, at least five per pass,
/// each constructed to fire the pass its sidecar names. Nodes carry block
/// attributes so block-level extraction has real boundaries.
std::vector<CorpusEntry> documented_corpus();

/// Optimization-unrelated corpus for the non-optimization ablation: plain
/// chains no pass rewrites, without block attributes.
std::vector<CorpusEntry> nonopt_corpus();

void write_corpus(const std::vector<CorpusEntry>& corpus, const std::string& dir);
std::vector<CorpusEntry> load_corpus(const std::string& dir);

}  // namespace cgfuzz
