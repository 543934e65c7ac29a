// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "cgfuzz/graph.hpp"

namespace cgfuzz {

struct ExecError : std::runtime_error {
    std::string node_id;
    ExecError(std::string node, const std::string& cause)
        : std::runtime_error("node '" + node + "': " + cause), node_id(std::move(node)) {}
};

struct MissingInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Reference executor. Evaluates `g` on the given input tensors and returns
/// the graph outputs keyed by value id, in declaration order semantics.
/// Pure: same graph and inputs give identical results. Inf/NaN are legal
/// output values, not errors; they are the inconsistency oracle's problem.
std::map<std::string, TensorValue> execute(const Graph& g,
                                           const std::map<std::string, TensorValue>& inputs);

/// Graph outputs as a flat list in output-declaration order.
std::vector<TensorValue> execute_outputs(const Graph& g,
                                         const std::map<std::string, TensorValue>& inputs);

/// Deterministic random inputs for every graph input: floats uniform in
/// [-1, 1], ints uniform in [-4, 4], bools uniform in {0, 1}. Keyed by
/// (seed, input id), so graphs sharing an input signature get identical
/// tensors for the same seed.
std::map<std::string, TensorValue> gen_inputs(const Graph& g, uint64_t seed);

}  // namespace cgfuzz
