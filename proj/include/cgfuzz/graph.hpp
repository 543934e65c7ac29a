// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cgfuzz/tensor.hpp"

namespace cgfuzz {

/// Node attribute value. Int lists cover permutation axes, reshape targets and
/// crop bounds; strings cover dtype names and block ids.
using AttrValue = std::variant<int64_t, double, std::string, std::vector<int64_t>>;

/// Ordered map so serialization and hashing are deterministic.
using Attrs = std::map<std::string, AttrValue>;

/// Reserved attr key marking dataflow-block membership of a node.
inline constexpr const char* kBlockAttr = "block";

struct ValueDecl {
    std::string id;
    TensorType type;
    bool operator==(const ValueDecl& o) const = default;
};

struct Node {
    std::string id;
    std::string op;  // operator kind, see op_registry
    std::vector<std::string> inputs;
    Attrs attrs;
    std::vector<ValueDecl> outputs;

    std::optional<std::string> block() const;
    bool operator==(const Node& o) const = default;
};

/// A computational graph: a DAG of operator nodes over tensor-typed values.
///
/// `nodes` is required to be topologically ordered (definition before use).
/// Graphs are immutable after construction by convention: passes and the
/// synthesizer copy and return new graphs, so any number of workers may read
/// one concurrently.
struct Graph {
    std::vector<ValueDecl> inputs;
    std::map<std::string, TensorValue> constants;  // value id -> payload
    std::vector<Node> nodes;
    std::vector<std::string> outputs;

    bool operator==(const Graph& o) const = default;
};

/// Who produces a value.
struct Producer {
    enum Kind { GraphInput, Constant, NodeOutput } kind;
    int node_index = -1;  // NodeOutput only
    int slot = -1;        // NodeOutput only
};

/// Derived lookup tables for one graph. Build once, read anywhere.
class ValueIndex {
  public:
    explicit ValueIndex(const Graph& g);

    bool contains(const std::string& id) const { return types_.count(id) != 0; }
    const TensorType& type(const std::string& id) const;
    const Producer& producer(const std::string& id) const;
    /// Node indices consuming `id`, in node order (duplicates kept per slot).
    std::vector<int> consumers(const std::string& id) const;
    int consumer_count(const std::string& id) const;

  private:
    std::map<std::string, TensorType> types_;
    std::map<std::string, Producer> producers_;
    std::map<std::string, std::vector<int>> consumers_;
};

struct ValidationResult {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Check every structural and typing invariant, including re-running
/// shape/type inference and comparing against the stored output types.
/// Violations are data, not exceptions.
ValidationResult validate(const Graph& g);

struct CycleDetected : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Deterministic topological order of node indices. Among ready nodes the
/// smallest node id wins. Throws CycleDetected when the graph is cyclic.
std::vector<int> topo_order(const Graph& g);

}  // namespace cgfuzz
