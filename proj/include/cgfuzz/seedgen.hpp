// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cgfuzz/graph.hpp"

namespace cgfuzz {

/// Generate a random valid seed graph. Seeds provide context diversity, not
/// optimization triggers: the generator deliberately avoids structures any
/// pass rewrites (identity constants, fusable Add->ReLU edges, cast chains,
/// permute-fed concats, duplicate subexpressions, dead values), so a clean
/// compiler leaves seeds alone and every trigger in a synthesized test comes
/// from the spliced pattern.
Graph gen_seed(uint64_t seed);

}  // namespace cgfuzz
