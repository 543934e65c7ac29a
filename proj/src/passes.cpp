// SPDX-License-Identifier: Apache-2.0
#include "cgfuzz/passes.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "cgfuzz/op_registry.hpp"
#include "cgfuzz/serialize.hpp"

namespace cgfuzz {

namespace {

/// Raised by mutant-gated defect sites; surfaces as a Crash with the raw
/// internal message as the dedup key.
struct PassInternalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PassOutcome {
    enum Status { Success, Skipped } status = Success;
    Graph graph;
    int rewrites = 0;
    std::string skip_reason;
};

bool is_mutant(const std::optional<MutantId>& m, const char* name) {
    return m && m->name == name;
}

bool is_constant(const Graph& g, const std::string& id) {
    return g.constants.count(id) != 0;
}

bool producerless(const Graph& g, const std::string& id) {
    for (const auto& n : g.nodes)
        for (const auto& o : n.outputs)
            if (o.id == id) return false;
    return true;
}

bool all_equal_to(const TensorValue& tv, double x) {
    if (tv.data.empty()) return false;
    return std::all_of(tv.data.begin(), tv.data.end(), [&](double v) { return v == x; });
}

void replace_uses(Graph& g, const std::string& from, const std::string& to) {
    for (auto& n : g.nodes)
        for (auto& in : n.inputs)
            if (in == from) in = to;
    for (auto& out : g.outputs)
        if (out == from) out = to;
}

void remove_node(Graph& g, const std::string& node_id) {
    std::erase_if(g.nodes, [&](const Node& n) { return n.id == node_id; });
}

bool any_multi_output(const Graph& g) {
    return std::any_of(g.nodes.begin(), g.nodes.end(),
                       [](const Node& n) { return n.outputs.size() > 1; });
}

bool same_block(const Node& a, const Node& b) { return a.block() == b.block(); }

std::map<std::string, int> count_consumers(const Graph& g) {
    std::map<std::string, int> c;
    for (const auto& n : g.nodes)
        for (const auto& in : n.inputs) c[in]++;
    return c;
}

const Node* producer_node(const Graph& g, const std::string& id) {
    for (const auto& n : g.nodes)
        for (const auto& o : n.outputs)
            if (o.id == id) return &n;
    return nullptr;
}

// ---------------------------------------------------------------------------
// ConstantFolding: replace nodes whose inputs are all constants with a fresh
// constant holding the evaluated result.
// ---------------------------------------------------------------------------
PassOutcome constant_folding(const Graph& in, const std::optional<MutantId>& mutant) {
    if (any_multi_output(in)) return {PassOutcome::Skipped, {}, 0, "unsupported: multi-output node"};
    PassOutcome r;
    r.graph = in;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const Node& n : r.graph.nodes) {
            bool foldable = !n.inputs.empty() &&
                            std::all_of(n.inputs.begin(), n.inputs.end(), [&](const auto& id) {
                                return is_constant(r.graph, id);
                            });
            if (!foldable) continue;
            std::vector<TensorValue> ins;
            for (const auto& id : n.inputs) ins.push_back(r.graph.constants.at(id));
            std::vector<TensorValue> outs;
            try {
                outs = eval_op(n.op, n.attrs, ins);
            } catch (const ConstraintViolation&) {
                continue;  // stored types would have caught this; leave it alone
            }
            TensorValue folded = outs[0];
            if (is_mutant(mutant, "constfold_casts_through_i32") && is_float(folded.type.dtype)) {
                for (double& x : folded.data) x = quantize(DType::I32, x);
            }
            std::string new_id = n.id + "_folded";
            std::string old_id = n.outputs[0].id;
            std::string node_id = n.id;
            r.graph.constants[new_id] = std::move(folded);
            for (auto& m : r.graph.nodes)
                for (auto& mi : m.inputs)
                    if (mi == old_id) mi = new_id;
            if (!is_mutant(mutant, "constfold_drops_output_rebind")) {
                for (auto& out : r.graph.outputs)
                    if (out == old_id) out = new_id;
            }
            remove_node(r.graph, node_id);
            r.rewrites++;
            changed = true;
            break;  // restart: the node list shifted
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// AlgebraicSimplification: identity-operand rewrites (x*1, x+0, x-0 -> x).
// ---------------------------------------------------------------------------
PassOutcome algebraic_simplification(const Graph& in, const std::optional<MutantId>& mutant) {
    if (any_multi_output(in)) return {PassOutcome::Skipped, {}, 0, "unsupported: multi-output node"};
    if (is_mutant(mutant, "algsimp_self_sub_crash")) {
        for (const Node& n : in.nodes)
            if (n.op == "Sub" && n.inputs[0] == n.inputs[1])
                throw PassInternalError(
                    "internal error: unhandled operand aliasing in simplifier, node " + n.id);
    }
    PassOutcome r;
    r.graph = in;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const Node& n : r.graph.nodes) {
            std::string kept;
            if (n.op == "Mul" || n.op == "Add") {
                for (int s = 0; s < 2; ++s) {
                    const std::string& c = n.inputs[s];
                    if (!is_constant(r.graph, c)) continue;
                    const TensorValue& tv = r.graph.constants.at(c);
                    if ((n.op == "Mul" && all_equal_to(tv, 1.0)) ||
                        (n.op == "Add" && all_equal_to(tv, 0.0))) {
                        kept = n.inputs[1 - s];
                        break;
                    }
                }
            } else if (n.op == "Sub") {
                const std::string& c = n.inputs[1];
                if (is_constant(r.graph, c) && all_equal_to(r.graph.constants.at(c), 0.0))
                    kept = n.inputs[0];
            }
            if (kept.empty()) continue;
            std::string out_id = n.outputs[0].id;
            std::string node_id = n.id;
            if (is_mutant(mutant, "algsimp_identity_input_corrupt") &&
                (is_constant(r.graph, kept) || producerless(r.graph, kept))) {
                kept += "__stale";  // defect: rewires to a placeholder never defined
            }
            replace_uses(r.graph, out_id, kept);
            remove_node(r.graph, node_id);
            r.rewrites++;
            changed = true;
            break;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// ElementwiseFusion: Add whose sole consumer is a same-block ReLU becomes one
// FusedAddReLU node.
// ---------------------------------------------------------------------------
PassOutcome elementwise_fusion(const Graph& in, const std::optional<MutantId>& mutant) {
    if (any_multi_output(in)) return {PassOutcome::Skipped, {}, 0, "unsupported: multi-output node"};
    PassOutcome r;
    r.graph = in;
    bool changed = true;
    while (changed) {
        changed = false;
        auto consumers = count_consumers(r.graph);
        for (size_t i = 0; i < r.graph.nodes.size(); ++i) {
            const Node& add = r.graph.nodes[i];
            if (add.op != "Add") continue;
            const std::string& add_out = add.outputs[0].id;
            if (consumers[add_out] != 1) continue;
            if (std::count(r.graph.outputs.begin(), r.graph.outputs.end(), add_out)) continue;
            const Node* relu = nullptr;
            for (const Node& m : r.graph.nodes)
                if (std::count(m.inputs.begin(), m.inputs.end(), add_out)) { relu = &m; break; }
            if (!relu || relu->op != "ReLU" || !same_block(add, *relu)) continue;
            if (is_mutant(mutant, "fusion_null_deref")) {
                for (const auto& id : add.inputs)
                    if (producerless(r.graph, id))
                        throw PassInternalError(
                            "internal error: null producer dereferenced while fusing node " +
                            add.id);
            }
            Node fused;
            fused.id = add.id + "_fused";
            fused.op = is_mutant(mutant, "fusion_drops_relu") ? "Add" : "FusedAddReLU";
            fused.inputs = add.inputs;
            if (auto b = add.block()) fused.attrs[kBlockAttr] = *b;
            fused.outputs = relu->outputs;
            std::string relu_id = relu->id;
            r.graph.nodes[i] = fused;
            remove_node(r.graph, relu_id);
            r.rewrites++;
            changed = true;
            break;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// ReorderPermuteDimsAfterConcat: Concat of equally-permuted tensors becomes
// a permute of the concat of the raw tensors, with the axis remapped.
// ---------------------------------------------------------------------------
PassOutcome reorder_permute_concat(const Graph& in, const std::optional<MutantId>& mutant) {
    if (any_multi_output(in)) return {PassOutcome::Skipped, {}, 0, "unsupported: multi-output node"};
    if (is_mutant(mutant, "reorder_mixed_concat_crash")) {
        for (const Node& n : in.nodes) {
            if (n.op != "Concat") continue;
            int permuted = 0, plain = 0;
            for (const auto& id : n.inputs) {
                const Node* p = producer_node(in, id);
                (p && p->op == "PermuteDims") ? ++permuted : ++plain;
            }
            if (permuted > 0 && plain > 0)
                throw PassInternalError(
                    "internal error: non-uniform operand list in concat reorder, node " + n.id);
        }
    }
    PassOutcome r;
    r.graph = in;
    bool changed = true;
    while (changed) {
        changed = false;
        auto consumers = count_consumers(r.graph);
        for (size_t i = 0; i < r.graph.nodes.size(); ++i) {
            const Node& cat = r.graph.nodes[i];
            if (cat.op != "Concat" || cat.inputs.size() < 2) continue;
            std::vector<const Node*> perms;
            bool ok = true;
            for (const auto& id : cat.inputs) {
                const Node* p = producer_node(r.graph, id);
                if (!p || p->op != "PermuteDims" || !same_block(*p, cat) ||
                    consumers[id] != 1 ||
                    std::count(r.graph.outputs.begin(), r.graph.outputs.end(), id)) {
                    ok = false;
                    break;
                }
                perms.push_back(p);
            }
            if (!ok) continue;
            auto axes = std::get<std::vector<int64_t>>(perms[0]->attrs.at("axes"));
            for (const Node* p : perms)
                if (std::get<std::vector<int64_t>>(p->attrs.at("axes")) != axes) { ok = false; break; }
            if (!ok) continue;

            int64_t axis = std::get<int64_t>(cat.attrs.at("axis"));
            std::vector<int64_t> inverse(axes.size());
            for (size_t d = 0; d < axes.size(); ++d) inverse[axes[d]] = d;
            int64_t new_axis = is_mutant(mutant, "reorder_wrong_axis") ? axis : inverse[axis];

            std::vector<std::string> raw_inputs;
            std::vector<TensorType> raw_types;
            for (const Node* p : perms) {
                raw_inputs.push_back(p->inputs[0]);
                const TensorType* t = nullptr;
                for (const auto& gin : r.graph.inputs)
                    if (gin.id == p->inputs[0]) t = &gin.type;
                if (!t) {
                    auto it = r.graph.constants.find(p->inputs[0]);
                    if (it != r.graph.constants.end()) t = &it->second.type;
                }
                if (!t) {
                    const Node* pp = producer_node(r.graph, p->inputs[0]);
                    for (const auto& o : pp->outputs)
                        if (o.id == p->inputs[0]) t = &o.type;
                }
                raw_types.push_back(*t);
            }

            Node cc;
            cc.id = cat.id + "_re";
            cc.op = "Concat";
            cc.inputs = raw_inputs;
            cc.attrs["axis"] = new_axis;
            if (auto b = cat.block()) cc.attrs[kBlockAttr] = *b;
            TensorType cc_type = infer("Concat", raw_types, cc.attrs)[0];
            cc.outputs = {ValueDecl{cat.id + "_re_v", cc_type}};

            Node pp;
            pp.id = cat.id + "_re_p";
            pp.op = "PermuteDims";
            pp.inputs = {cc.outputs[0].id};
            pp.attrs["axes"] = axes;
            if (auto b = cat.block()) pp.attrs[kBlockAttr] = *b;
            TensorType pp_type = infer("PermuteDims", {cc_type}, pp.attrs)[0];
            pp.outputs = {ValueDecl{cat.outputs[0].id, pp_type}};

            std::vector<std::string> dead;
            for (const Node* p : perms) dead.push_back(p->id);
            std::string cat_id = cat.id;
            r.graph.nodes[i] = cc;
            r.graph.nodes.insert(r.graph.nodes.begin() + i + 1, pp);
            for (const auto& id : dead) remove_node(r.graph, id);
            remove_node(r.graph, cat_id);
            r.rewrites++;
            changed = true;
            break;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// RedundantCastElimination: drop identity casts and collapse lossless chains.
// ---------------------------------------------------------------------------
bool lossless_cast(DType from, DType to) {
    if (from == to) return true;
    if (from == DType::Bool) return true;
    if (from == DType::I32) return to == DType::I64 || to == DType::F64;
    if (from == DType::F32) return to == DType::F64;
    return false;
}

PassOutcome redundant_cast_elimination(const Graph& in, const std::optional<MutantId>& mutant) {
    if (any_multi_output(in)) return {PassOutcome::Skipped, {}, 0, "unsupported: multi-output node"};
    PassOutcome r;
    r.graph = in;
    bool changed = true;
    while (changed) {
        changed = false;
        ValueIndex idx(r.graph);
        for (size_t i = 0; i < r.graph.nodes.size(); ++i) {
            const Node& n = r.graph.nodes[i];
            if (n.op != "Cast") continue;
            DType src = idx.type(n.inputs[0]).dtype;
            if (src == n.outputs[0].type.dtype) {
                // Identity cast.
                replace_uses(r.graph, n.outputs[0].id, n.inputs[0]);
                remove_node(r.graph, n.id);
                r.rewrites++;
                changed = true;
                break;
            }
            const Node* inner = producer_node(r.graph, n.inputs[0]);
            if (!inner || inner->op != "Cast" || !same_block(*inner, n)) continue;
            DType chain_src = idx.type(inner->inputs[0]).dtype;
            if (is_mutant(mutant, "castelim_bool_chain_crash") && chain_src == DType::Bool)
                throw PassInternalError(
                    "internal error: dtype table index out of range collapsing cast chain at " +
                    n.id);
            if (!lossless_cast(chain_src, idx.type(n.inputs[0]).dtype)) continue;
            if (is_mutant(mutant, "castelim_rewires_inner")) {
                std::string victim = n.outputs[0].id;
                replace_uses(r.graph, victim, inner->outputs[0].id);
                remove_node(r.graph, n.id);
            } else {
                r.graph.nodes[i].inputs[0] = inner->inputs[0];
            }
            r.rewrites++;
            changed = true;
            break;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// DeadCodeElimination: drop nodes and constants not reachable from the graph
// outputs. Graph inputs always stay (they are the public signature).
// ---------------------------------------------------------------------------
PassOutcome dead_code_elimination(const Graph& in, const std::optional<MutantId>& mutant) {
    PassOutcome r;
    r.graph = in;
    Graph& g = r.graph;

    std::set<std::string> roots(g.outputs.begin(), g.outputs.end());
    if (is_mutant(mutant, "dce_drops_live_output")) {
        // Defect: block-scoped values that no node consumes are treated as
        // block-internal even when the graph lists them as outputs.
        auto consumers = count_consumers(g);
        for (const auto& out : g.outputs) {
            const Node* p = producer_node(g, out);
            if (p && p->block() && consumers[out] == 0) roots.erase(out);
        }
    }

    std::set<std::string> live = roots;
    bool grew = true;
    while (grew) {
        grew = false;
        for (const Node& n : g.nodes) {
            bool needed = std::any_of(n.outputs.begin(), n.outputs.end(),
                                      [&](const ValueDecl& o) { return live.count(o.id); });
            if (!needed) continue;
            for (const auto& inp : n.inputs)
                if (live.insert(inp).second) grew = true;
            for (const auto& o : n.outputs)
                if (live.insert(o.id).second) grew = true;
        }
    }

    std::vector<Node> kept;
    for (const Node& n : g.nodes) {
        bool alive = std::any_of(n.outputs.begin(), n.outputs.end(),
                                 [&](const ValueDecl& o) { return live.count(o.id); });
        if (alive) kept.push_back(n);
        else r.rewrites++;
    }
    g.nodes = std::move(kept);
    for (auto it = g.constants.begin(); it != g.constants.end();) {
        if (!live.count(it->first)) {
            it = g.constants.erase(it);
            r.rewrites++;
        } else {
            ++it;
        }
    }
    if (is_mutant(mutant, "dce_drops_live_output")) {
        std::erase_if(g.outputs, [&](const std::string& o) { return !roots.count(o); });
    }
    return r;
}

// ---------------------------------------------------------------------------
// CommonSubexpressionElimination: hash-consing over (op, inputs, attrs).
// Commutative ops get order-normalized input keys. Block membership is not
// part of the key: the pass works at subgraph scope.
// ---------------------------------------------------------------------------
std::string cse_key(const Node& n, const std::map<std::string, std::string>& rename,
                    bool ignore_attrs) {
    auto resolve = [&](const std::string& id) {
        auto it = rename.find(id);
        return it == rename.end() ? id : it->second;
    };
    std::vector<std::string> ins;
    for (const auto& i : n.inputs) ins.push_back(resolve(i));
    if (n.op == "Add" || n.op == "Mul" || n.op == "FusedAddReLU")
        std::sort(ins.begin(), ins.end());
    std::ostringstream key;
    key << n.op;
    for (const auto& i : ins) key << "|" << i;
    if (!ignore_attrs) {
        for (const auto& [k, v] : n.attrs) {
            if (k == kBlockAttr) continue;
            key << "#" << k << "=";
            std::visit([&](const auto& x) {
                if constexpr (std::is_same_v<std::decay_t<decltype(x)>, std::vector<int64_t>>) {
                    for (int64_t e : x) key << e << ",";
                } else {
                    key << x;
                }
            }, v);
        }
    }
    return key.str();
}

PassOutcome common_subexpression_elimination(const Graph& in,
                                             const std::optional<MutantId>& mutant) {
    PassOutcome r;
    r.graph = in;
    bool ignore_attrs = is_mutant(mutant, "cse_ignores_attrs");

    std::map<std::string, const Node*> seen;
    std::map<std::string, std::string> rename;
    std::vector<std::string> dead;
    for (const Node& n : r.graph.nodes) {
        std::string key = cse_key(n, rename, ignore_attrs);
        auto it = seen.find(key);
        if (it == seen.end()) {
            seen[key] = &n;
            continue;
        }
        const Node* keep = it->second;
        if (keep->outputs.size() != n.outputs.size()) continue;
        for (size_t s = 0; s < n.outputs.size(); ++s)
            rename[n.outputs[s].id] = keep->outputs[s].id;
        dead.push_back(n.id);
        r.rewrites++;
    }
    if (!dead.empty()) {
        for (auto& n : r.graph.nodes)
            for (auto& i : n.inputs)
                if (rename.count(i)) i = rename.at(i);
        for (auto& o : r.graph.outputs)
            if (rename.count(o)) o = rename.at(o);
        for (const auto& id : dead) remove_node(r.graph, id);
    }
    return r;
}

using PassFn = PassOutcome (*)(const Graph&, const std::optional<MutantId>&);

PassFn pass_fn(const std::string& name) {
    if (name == "ConstantFolding") return constant_folding;
    if (name == "AlgebraicSimplification") return algebraic_simplification;
    if (name == "ElementwiseFusion") return elementwise_fusion;
    if (name == "ReorderPermuteDimsAfterConcat") return reorder_permute_concat;
    if (name == "RedundantCastElimination") return redundant_cast_elimination;
    if (name == "DeadCodeElimination") return dead_code_elimination;
    if (name == "CommonSubexpressionElimination") return common_subexpression_elimination;
    return nullptr;
}

}  // namespace

const char* granularity_name(Granularity g) {
    return g == Granularity::Block ? "block" : "subgraph";
}

const std::vector<PassDescriptor>& pass_catalog() {
    static const std::vector<PassDescriptor> cat = {
        {"ConstantFolding", Granularity::Block,
         "Evaluates nodes whose inputs are all constants and replaces them with constants.",
         "node with all-constant inputs"},
        {"AlgebraicSimplification", Granularity::Block,
         "Removes identity arithmetic: x*1, x+0, x-0 become x.",
         "Mul/Add/Sub with an identity constant operand"},
        {"RedundantCastElimination", Granularity::Block,
         "Drops identity casts and collapses lossless cast chains.",
         "Cast(Cast(x)) or Cast to the input dtype"},
        {"ReorderPermuteDimsAfterConcat", Granularity::Block,
         "Rewrites Concat of equally-permuted tensors to permute-after-concat.",
         "Concat(PermuteDims(A,p), PermuteDims(B,p), ...)"},
        {"ElementwiseFusion", Granularity::Block,
         "Fuses an Add feeding a sole ReLU consumer into FusedAddReLU.",
         "ReLU(Add(a,b)) within one block"},
        {"CommonSubexpressionElimination", Granularity::Subgraph,
         "Merges nodes computing identical expressions.",
         "two nodes with equal op, inputs and attrs"},
        {"DeadCodeElimination", Granularity::Subgraph,
         "Removes nodes and constants unreachable from the graph outputs.",
         "value with no path to an output"},
    };
    return cat;
}

const PassDescriptor* find_pass(const std::string& name) {
    for (const auto& p : pass_catalog())
        if (p.name == name) return &p;
    return nullptr;
}

std::vector<std::string> full_pipeline() {
    std::vector<std::string> v;
    for (const auto& p : pass_catalog()) v.push_back(p.name);
    return v;
}

bool PipelineResult::pass_fired(const std::string& name,
                                const std::vector<std::string>& pipeline) const {
    for (size_t i = 0; i < pipeline.size() && i < fired.size(); ++i)
        if (pipeline[i] == name && fired[i]) return true;
    return false;
}

void PassEngine::activate(const std::string& mutant_name) {
    mutant_ = find_mutant(mutant_name);
}

PassResult PassEngine::run_pass(const std::string& pass_name, const Graph& g) const {
    PassResult res;
    const PassDescriptor* desc = find_pass(pass_name);
    if (!desc) {
        res.status = PassResult::Crashed;
        res.message = "internal error: unknown pass " + pass_name;
        return res;
    }
    if (hook_) hook_(PassTracePair{g, pass_name});

    std::optional<MutantId> gate;
    if (mutant_ && mutant_->pass_name == pass_name) gate = mutant_;

    try {
        PassOutcome out = pass_fn(pass_name)(g, gate);
        if (out.status == PassOutcome::Skipped) {
            res.status = PassResult::Skipped;
            res.message = out.skip_reason;
            return res;
        }
        ValidationResult v = validate(out.graph);
        if (!v.ok()) {
            res.status = PassResult::Crashed;
            res.message = "post-pass validation failed after " + pass_name + ": " +
                          v.violations.front();
            return res;
        }
        res.status = PassResult::Success;
        res.graph = std::move(out.graph);
        res.rewrites = out.rewrites;
        res.fired = out.rewrites > 0;
        return res;
    } catch (const PassInternalError& e) {
        res.status = PassResult::Crashed;
        res.message = e.what();
        return res;
    } catch (const ConstraintViolation& e) {
        res.status = PassResult::Crashed;
        res.message = std::string("internal error in ") + pass_name + ": " + e.what();
        return res;
    }
}

PipelineResult PassEngine::run_pipeline(const std::vector<std::string>& pass_names,
                                        const Graph& g) const {
    PipelineResult r;
    r.graph = g;
    r.fired.reserve(pass_names.size());
    for (size_t i = 0; i < pass_names.size(); ++i) {
        PassResult step = run_pass(pass_names[i], r.graph);
        if (step.status == PassResult::Crashed) {
            r.status = PipelineResult::Crashed;
            r.crash_index = static_cast<int>(i);
            r.crash_message = step.message;
            r.fired.push_back(false);
            return r;
        }
        if (step.status == PassResult::Skipped) {
            r.fired.push_back(false);
            continue;
        }
        r.fired.push_back(step.fired);
        r.graph = std::move(step.graph);
    }
    return r;
}

std::vector<PassTracePair> PassEngine::with_instrumentation(const std::function<void()>& thunk) {
    std::vector<PassTracePair> traces;
    Hook prev = hook_;
    hook_ = [&traces, &prev](const PassTracePair& p) {
        traces.push_back(p);
        if (prev) prev(p);
    };
    try {
        thunk();
    } catch (...) {
        hook_ = prev;
        throw;
    }
    hook_ = prev;
    return traces;
}

}  // namespace cgfuzz
