// SPDX-License-Identifier: Apache-2.0
#include "cgfuzz/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include "cgfuzz/op_registry.hpp"

namespace cgfuzz {

const char* dtype_name(DType d) {
    switch (d) {
        case DType::F32: return "f32";
        case DType::F64: return "f64";
        case DType::I32: return "i32";
        case DType::I64: return "i64";
        case DType::Bool: return "bool";
    }
    return "?";
}

bool dtype_from_name(const std::string& s, DType& out) {
    if (s == "f32") out = DType::F32;
    else if (s == "f64") out = DType::F64;
    else if (s == "i32") out = DType::I32;
    else if (s == "i64") out = DType::I64;
    else if (s == "bool") out = DType::Bool;
    else return false;
    return true;
}

bool is_float(DType d) { return d == DType::F32 || d == DType::F64; }
bool is_numeric(DType d) { return d != DType::Bool; }

bool dtype_in_class(DType d, DTypeClass c) {
    switch (c) {
        case DTypeClass::Float: return is_float(d);
        case DTypeClass::Numeric: return is_numeric(d);
        case DTypeClass::Any: return true;
    }
    return false;
}

std::string to_string(const TensorType& t) {
    std::ostringstream os;
    os << dtype_name(t.dtype) << "[";
    for (size_t i = 0; i < t.shape.size(); ++i) {
        if (i) os << ",";
        os << t.shape[i];
    }
    os << "]";
    return os.str();
}

double quantize(DType d, double x) {
    switch (d) {
        case DType::F64: return x;
        case DType::F32: return static_cast<double>(static_cast<float>(x));
        case DType::I32: {
            if (std::isnan(x)) return 0.0;
            double t = std::trunc(x);
            t = std::min(t, 2147483647.0);
            t = std::max(t, -2147483648.0);
            return t;
        }
        case DType::I64: {
            if (std::isnan(x)) return 0.0;
            double t = std::trunc(x);
            t = std::min(t, 9.2233720368547748e18);
            t = std::max(t, -9.2233720368547758e18);
            return t;
        }
        case DType::Bool: return x != 0.0 ? 1.0 : 0.0;
    }
    return x;
}

void quantize_buffer(DType d, std::vector<double>& buf) {
    if (d == DType::F64) return;
    for (double& x : buf) x = quantize(d, x);
}

std::optional<std::string> Node::block() const {
    auto it = attrs.find(kBlockAttr);
    if (it == attrs.end()) return std::nullopt;
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
    return std::nullopt;
}

ValueIndex::ValueIndex(const Graph& g) {
    for (const auto& in : g.inputs) {
        types_[in.id] = in.type;
        producers_[in.id] = Producer{Producer::GraphInput, -1, -1};
    }
    for (const auto& [id, tv] : g.constants) {
        types_[id] = tv.type;
        producers_[id] = Producer{Producer::Constant, -1, -1};
    }
    for (int ni = 0; ni < static_cast<int>(g.nodes.size()); ++ni) {
        const Node& n = g.nodes[ni];
        for (int s = 0; s < static_cast<int>(n.outputs.size()); ++s) {
            types_[n.outputs[s].id] = n.outputs[s].type;
            producers_[n.outputs[s].id] = Producer{Producer::NodeOutput, ni, s};
        }
        for (const auto& in : n.inputs) consumers_[in].push_back(ni);
    }
}

const TensorType& ValueIndex::type(const std::string& id) const {
    auto it = types_.find(id);
    if (it == types_.end()) throw std::out_of_range("unknown value id " + id);
    return it->second;
}

const Producer& ValueIndex::producer(const std::string& id) const {
    auto it = producers_.find(id);
    if (it == producers_.end()) throw std::out_of_range("unknown value id " + id);
    return it->second;
}

std::vector<int> ValueIndex::consumers(const std::string& id) const {
    auto it = consumers_.find(id);
    if (it == consumers_.end()) return {};
    return it->second;
}

int ValueIndex::consumer_count(const std::string& id) const {
    auto it = consumers_.find(id);
    return it == consumers_.end() ? 0 : static_cast<int>(it->second.size());
}

namespace {

void check_type_caps(const TensorType& t, const std::string& where,
                     std::vector<std::string>& out) {
    if (t.rank() > kMaxRank)
        out.push_back("rank cap: " + where + " has rank " + std::to_string(t.rank()));
    for (int64_t e : t.shape) {
        if (e < 0) out.push_back("negative extent: " + where);
        if (e > kMaxExtent) out.push_back("extent cap: " + where);
    }
}

}  // namespace

ValidationResult validate(const Graph& g) {
    ValidationResult r;
    std::set<std::string> value_ids;
    std::set<std::string> node_ids;

    auto declare = [&](const std::string& id, const char* kind) {
        if (!value_ids.insert(id).second)
            r.violations.push_back(std::string("duplicate value id: ") + kind + " '" + id + "'");
    };

    for (const auto& in : g.inputs) {
        declare(in.id, "input");
        check_type_caps(in.type, "input '" + in.id + "'", r.violations);
    }
    for (const auto& [id, tv] : g.constants) {
        declare(id, "constant");
        check_type_caps(tv.type, "constant '" + id + "'", r.violations);
        if (!tv.conforms())
            r.violations.push_back("constant payload size mismatch: '" + id + "'");
    }

    // Definition-before-use over the stored node order; this also implies
    // acyclicity.
    std::map<std::string, TensorType> known;
    for (const auto& in : g.inputs) known[in.id] = in.type;
    for (const auto& [id, tv] : g.constants) known[id] = tv.type;

    for (const Node& n : g.nodes) {
        if (!node_ids.insert(n.id).second)
            r.violations.push_back("duplicate node id: '" + n.id + "'");
        if (!is_known_op(n.op)) {
            r.violations.push_back("unknown op '" + n.op + "' on node '" + n.id + "'");
            for (const auto& out : n.outputs) declare(out.id, "node output");
            continue;
        }
        bool inputs_ok = true;
        std::vector<TensorType> in_types;
        for (const auto& in : n.inputs) {
            auto it = known.find(in);
            if (it == known.end()) {
                r.violations.push_back("use before definition: node '" + n.id +
                                       "' reads '" + in + "'");
                inputs_ok = false;
            } else {
                in_types.push_back(it->second);
            }
        }
        if (inputs_ok) {
            try {
                auto inferred = infer(n.op, in_types, n.attrs);
                if (inferred.size() != n.outputs.size()) {
                    r.violations.push_back("output arity mismatch on node '" + n.id + "'");
                } else {
                    for (size_t s = 0; s < inferred.size(); ++s) {
                        if (!(inferred[s] == n.outputs[s].type))
                            r.violations.push_back(
                                "output type mismatch on node '" + n.id + "' slot " +
                                std::to_string(s) + ": stored " +
                                to_string(n.outputs[s].type) + " inferred " +
                                to_string(inferred[s]));
                    }
                }
            } catch (const ConstraintViolation& e) {
                r.violations.push_back("constraint violation on node '" + n.id + "': " +
                                       e.what());
            }
        }
        for (const auto& out : n.outputs) {
            declare(out.id, "node output");
            check_type_caps(out.type, "output '" + out.id + "'", r.violations);
            known[out.id] = out.type;
        }
    }

    for (const auto& out : g.outputs) {
        if (!known.count(out))
            r.violations.push_back("declared output does not exist: '" + out + "'");
    }
    return r;
}

std::vector<int> topo_order(const Graph& g) {
    // Kahn's algorithm with a min-id tie break among ready nodes.
    std::map<std::string, int> producer_of;
    for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i)
        for (const auto& out : g.nodes[i].outputs) producer_of[out.id] = i;

    std::vector<int> pending(g.nodes.size(), 0);
    std::vector<std::vector<int>> dependents(g.nodes.size());
    for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
        std::set<int> deps;
        for (const auto& in : g.nodes[i].inputs) {
            auto it = producer_of.find(in);
            if (it != producer_of.end() && it->second != i) deps.insert(it->second);
        }
        pending[i] = static_cast<int>(deps.size());
        for (int d : deps) dependents[d].push_back(i);
    }

    auto cmp = [&](int a, int b) { return g.nodes[a].id > g.nodes[b].id; };
    std::priority_queue<int, std::vector<int>, decltype(cmp)> ready(cmp);
    for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i)
        if (pending[i] == 0) ready.push(i);

    std::vector<int> order;
    order.reserve(g.nodes.size());
    while (!ready.empty()) {
        int i = ready.top();
        ready.pop();
        order.push_back(i);
        for (int d : dependents[i])
            if (--pending[d] == 0) ready.push(d);
    }
    if (order.size() != g.nodes.size())
        throw CycleDetected("cycle detected among " +
                            std::to_string(g.nodes.size() - order.size()) + " nodes");
    return order;
}

}  // namespace cgfuzz
