// SPDX-License-Identifier: Apache-2.0
#include "cgfuzz/interpreter.hpp"

#include <random>

#include "cgfuzz/op_registry.hpp"
#include "cgfuzz/serialize.hpp"

namespace cgfuzz {

std::map<std::string, TensorValue> execute(const Graph& g,
                                           const std::map<std::string, TensorValue>& inputs) {
    std::map<std::string, TensorValue> env;
    for (const auto& in : g.inputs) {
        auto it = inputs.find(in.id);
        if (it == inputs.end())
            throw MissingInput("missing input tensor '" + in.id + "'");
        if (!(it->second.type == in.type))
            throw MissingInput("input '" + in.id + "' has type " +
                               to_string(it->second.type) + ", graph declares " +
                               to_string(in.type));
        env[in.id] = it->second;
    }
    for (const auto& [id, tv] : g.constants) env[id] = tv;

    for (const Node& n : g.nodes) {
        std::vector<TensorValue> in_vals;
        in_vals.reserve(n.inputs.size());
        for (const auto& in : n.inputs) {
            auto it = env.find(in);
            if (it == env.end()) throw ExecError(n.id, "undefined input '" + in + "'");
            in_vals.push_back(it->second);
        }
        std::vector<TensorValue> outs;
        try {
            outs = eval_op(n.op, n.attrs, in_vals);
        } catch (const ConstraintViolation& e) {
            throw ExecError(n.id, e.what());
        }
        if (outs.size() != n.outputs.size())
            throw ExecError(n.id, "evaluator arity mismatch");
        for (size_t s = 0; s < outs.size(); ++s) env[n.outputs[s].id] = std::move(outs[s]);
    }

    std::map<std::string, TensorValue> result;
    for (const auto& out : g.outputs) {
        auto it = env.find(out);
        if (it == env.end()) throw ExecError(out, "undefined graph output");
        result[out] = it->second;
    }
    return result;
}

std::vector<TensorValue> execute_outputs(const Graph& g,
                                         const std::map<std::string, TensorValue>& inputs) {
    auto by_id = execute(g, inputs);
    std::vector<TensorValue> outs;
    outs.reserve(g.outputs.size());
    for (const auto& id : g.outputs) outs.push_back(by_id.at(id));
    return outs;
}

std::map<std::string, TensorValue> gen_inputs(const Graph& g, uint64_t seed) {
    std::map<std::string, TensorValue> result;
    for (const auto& in : g.inputs) {
        // Key the stream by (seed, input id) so the same signature gets the
        // same tensors regardless of the rest of the graph.
        std::mt19937_64 rng(seed ^ fnv1a64(in.id));
        TensorValue tv;
        tv.type = in.type;
        tv.data.resize(in.type.element_count());
        if (is_float(in.type.dtype)) {
            std::uniform_real_distribution<double> dist(-1.0, 1.0);
            for (double& x : tv.data) x = dist(rng);
        } else if (in.type.dtype == DType::Bool) {
            std::uniform_int_distribution<int> dist(0, 1);
            for (double& x : tv.data) x = dist(rng);
        } else {
            std::uniform_int_distribution<int> dist(-4, 4);
            for (double& x : tv.data) x = dist(rng);
        }
        quantize_buffer(in.type.dtype, tv.data);
        result[in.id] = std::move(tv);
    }
    return result;
}

}  // namespace cgfuzz
