// SPDX-License-Identifier: Apache-2.0
#include "cgfuzz/synthesis.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "cgfuzz/op_registry.hpp"
#include "cgfuzz/serialize.hpp"

namespace cgfuzz {

const char* discard_reason_name(DiscardReason r) {
    switch (r) {
        case DiscardReason::None: return "none";
        case DiscardReason::NoBridgeSource: return "no-bridge-source";
        case DiscardReason::InferenceConflict: return "inference-conflict";
        case DiscardReason::SizeCap: return "size-cap";
        case DiscardReason::Validation: return "validation";
    }
    return "?";
}

ContextPools context_pools(const Graph& seed, int point) {
    ContextPools pools;
    for (const auto& in : seed.inputs) pools.preceding.push_back(in.id);
    for (const auto& [id, tv] : seed.constants) pools.preceding.push_back(id);
    std::vector<int> order = topo_order(seed);
    for (int k = 0; k < point && k < static_cast<int>(order.size()); ++k)
        for (const auto& o : seed.nodes[order[k]].outputs) pools.preceding.push_back(o.id);
    for (int k = point; k < static_cast<int>(order.size()); ++k) {
        const Node& n = seed.nodes[order[k]];
        for (int s = 0; s < static_cast<int>(n.inputs.size()); ++s)
            pools.succeeding.push_back({n.id, s});
    }
    return pools;
}

namespace {

/// Fresh id prefix for this splice generation: one past the highest existing
/// splice prefix in the seed, so high-order seeds never collide.
std::string fresh_prefix(const Graph& seed) {
    int max_gen = 0;
    auto scan = [&](const std::string& id) {
        if (id.size() < 3 || id[0] != 'p') return;
        size_t i = 1;
        while (i < id.size() && isdigit(static_cast<unsigned char>(id[i]))) ++i;
        if (i == 1 || i >= id.size() || id[i] != '_') return;
        max_gen = std::max(max_gen, std::stoi(id.substr(1, i - 1)));
    };
    for (const auto& in : seed.inputs) scan(in.id);
    for (const auto& [id, tv] : seed.constants) scan(id);
    for (const auto& n : seed.nodes) {
        scan(n.id);
        for (const auto& o : n.outputs) scan(o.id);
    }
    return "p" + std::to_string(max_gen + 1) + "_";
}

/// Turn an effective slot requirement into a concrete bridge target. The
/// pattern's original concrete requirement seeds the shape; pinned dims,
/// counts and dtypes from the requirement override it.
TensorType concretize(const InputRequirement& req, const TensorType& original) {
    if (req.kind == InputRequirement::Concrete) return req.concrete;
    const AbstractReq& a = req.abstract;
    TensorType t = original;
    if (a.rank.kind == RankReq::Exact && t.rank() != a.rank.rank) {
        if (t.rank() < a.rank.rank) {
            t.shape.insert(t.shape.begin(), a.rank.rank - t.rank(), 1);
        } else {
            int64_t tail = 1;
            while (t.rank() > a.rank.rank) {
                tail *= t.shape.back();
                t.shape.pop_back();
            }
            if (t.shape.empty()) t.shape.push_back(tail);
            else t.shape.back() *= tail;
        }
    } else if (a.rank.kind == RankReq::AtLeast && t.rank() < a.rank.rank) {
        t.shape.insert(t.shape.begin(), a.rank.rank - t.rank(), 1);
    }
    for (auto [axis, extent] : a.dim_eq)
        if (axis < t.rank()) t.shape[axis] = extent;
    for (auto [axis, extent] : a.dim_min)
        if (axis < t.rank()) t.shape[axis] = std::max(t.shape[axis], extent);
    if (a.exact_count && t.element_count() != *a.exact_count) t.shape = {*a.exact_count};
    if (a.min_count && t.element_count() < *a.min_count) t.shape = {*a.min_count};
    if (a.nonempty && t.element_count() == 0) t.shape = {1};
    if (a.exact_dtype) {
        t.dtype = *a.exact_dtype;
    } else if (!dtype_in_class(t.dtype, a.dclass)) {
        t.dtype = DType::F32;
    }
    return t;
}

}  // namespace

BridgeChain bridge(const std::string& source_id, const TensorType& source_type,
                   const TensorType& requirement, const std::string& fresh) {
    if ((source_type.element_count() == 0) != (requirement.element_count() == 0))
        throw BridgeImpossible("cannot bridge between empty and non-empty tensors: " +
                               to_string(source_type) + " -> " + to_string(requirement));
    BridgeChain chain;
    std::string cur_id = source_id;
    TensorType cur = source_type;
    int k = 0;
    auto emit = [&](const std::string& op, Attrs attrs) {
        Node n;
        n.id = fresh + "b" + std::to_string(k);
        n.op = op;
        n.inputs = {cur_id};
        n.attrs = std::move(attrs);
        TensorType out = infer(op, {cur}, n.attrs)[0];
        n.outputs = {ValueDecl{fresh + "bv" + std::to_string(k), out}};
        cur_id = n.outputs[0].id;
        cur = out;
        ++k;
        chain.nodes.push_back(std::move(n));
    };

    // Element count first: zeros appended at the flat tail, or the flat tail
    // truncated. Both leave a rank-1 value for the Reshape to shape.
    int64_t have = cur.element_count(), want = requirement.element_count();
    if (have < want) {
        emit("Pad", {{"amounts", want - have}});
    } else if (have > want) {
        emit("Crop", {{"begin", int64_t{0}}, {"end", want}});
    }
    if (cur.shape != requirement.shape)
        emit("Reshape", {{"target", requirement.shape}});
    if (cur.dtype != requirement.dtype)
        emit("Cast", {{"to", std::string(dtype_name(requirement.dtype))}});

    chain.terminal_value = cur_id;
    chain.terminal_type = cur;
    return chain;
}

bool high_order_admissible(const Graph& g, bool bug_free, const SynthesisOptions& opts) {
    return bug_free && static_cast<int>(g.nodes.size()) <= opts.node_cap;
}

SynthesisOutcome synthesize(const SynthesisPlan& plan, const Pattern& pattern,
                            const Graph& seed, const SynthesisOptions& opts) {
    SynthesisOutcome out;
    std::mt19937_64 rng(plan.rng_seed);
    auto pick = [&](size_t n) {
        return static_cast<size_t>(std::uniform_int_distribution<uint64_t>(0, n - 1)(rng));
    };

    std::vector<int> order = topo_order(seed);
    int point = std::clamp(plan.point, 0, static_cast<int>(order.size()));
    ContextPools pools = context_pools(seed, point);

    ValueIndex seed_idx(seed);
    std::string prefix = fresh_prefix(seed);

    // Rename pattern-internal ids (nodes, produced values, constants, blocks)
    // into this generation's namespace. Dangling source ids stay unmapped.
    std::map<std::string, std::string> rename;
    for (const auto& [id, tv] : pattern.constants) rename[id] = prefix + id;
    for (const auto& n : pattern.nodes)
        for (const auto& o : n.outputs) rename[o.id] = prefix + o.id;

    std::vector<Node> pat_nodes = pattern.nodes;
    for (auto& n : pat_nodes) {
        n.id = prefix + n.id;
        for (auto& o : n.outputs) o.id = rename.at(o.id);
        if (auto b = n.block()) n.attrs[kBlockAttr] = prefix + *b;
    }

    auto assemble = [&](const std::vector<Node>& extra_nodes,
                        const std::vector<Node>& suffix_nodes,
                        const std::vector<std::string>& appended_outputs) {
        Graph g;
        g.inputs = seed.inputs;
        g.constants = seed.constants;
        for (const auto& [id, tv] : pattern.constants) g.constants[rename.at(id)] = tv;
        for (int k = 0; k < point; ++k) g.nodes.push_back(seed.nodes[order[k]]);
        for (const auto& n : extra_nodes) g.nodes.push_back(n);
        g.nodes.insert(g.nodes.end(), suffix_nodes.begin(), suffix_nodes.end());
        g.outputs = seed.outputs;
        for (const auto& o : appended_outputs) g.outputs.push_back(o);
        return g;
    };

    if (opts.strategy == SynthesisStrategy::DirectInsert) {
        // Baseline: no repair at all. Internal edges come along, but dangling
        // inputs keep their original, undefined ids; only self-contained
        // patterns survive validation.
        for (auto& n : pat_nodes)
            for (auto& in : n.inputs)
                if (rename.count(in)) in = rename.at(in);
        std::vector<Node> suffix;
        for (int k = point; k < static_cast<int>(order.size()); ++k)
            suffix.push_back(seed.nodes[order[k]]);
        std::vector<std::string> appended;
        for (const auto& d : pattern.dangling_outputs) appended.push_back(rename.at(d.value_id));
        Graph g = assemble(pat_nodes, suffix, appended);
        if (static_cast<int>(g.nodes.size()) > opts.node_cap) {
            out.discarded = true;
            out.reason = DiscardReason::SizeCap;
            return out;
        }
        if (!validate(g).ok()) {
            out.discarded = true;
            out.reason = DiscardReason::Validation;
            return out;
        }
        out.graph = std::move(g);
        out.outputs_appended = static_cast<int>(appended.size());
        return out;
    }

    // --- Strategy 1 and 2: repair dangling inputs against the preceding pool.
    std::map<std::string, TensorType> value_types;      // merged-graph value types
    for (const auto& id : pools.preceding) value_types[id] = seed_idx.type(id);
    for (const auto& [id, tv] : pattern.constants) value_types[rename.at(id)] = tv.type;

    std::map<std::string, std::string> binding;  // dangling source id -> merged id
    std::map<std::string, const DanglingInput*> dangling_of;
    for (const auto& d : pattern.dangling_inputs) dangling_of[d.value_id] = &d;

    std::vector<Node> spliced;  // bridges interleaved before their consumers
    int bridge_counter = 0;

    for (auto& n : pat_nodes) {
        // Bind any still-dangling inputs of this node, left to right.
        for (int s = 0; s < static_cast<int>(n.inputs.size()); ++s) {
            const std::string& src = n.inputs[s];
            if (rename.count(src)) continue;  // internal or constant
            if (binding.count(src)) continue;
            const DanglingInput* d = dangling_of.at(src);

            std::vector<std::optional<TensorType>> known(n.inputs.size());
            for (size_t t = 0; t < n.inputs.size(); ++t) {
                const std::string& other = n.inputs[t];
                if (rename.count(other)) known[t] = value_types.at(rename.at(other));
                else if (binding.count(other)) known[t] = value_types.at(binding.at(other));
            }
            InputRequirement eff = slot_requirement(n.op, n.attrs, known, s);
            InputRequirement orig = InputRequirement::make_concrete(d->concrete);

            // Strategy 1, strict tier: values matching the original concrete
            // requirement (and not contradicting already-bound siblings).
            std::vector<std::string> candidates;
            for (const auto& id : pools.preceding) {
                const TensorType& t = value_types.at(id);
                if (check_compatible(t, orig) && check_compatible(t, eff))
                    candidates.push_back(id);
            }
            // Strategy 1, loosened tier: the abstract requirement.
            if (candidates.empty()) {
                for (const auto& id : pools.preceding)
                    if (check_compatible(value_types.at(id), eff)) candidates.push_back(id);
            }
            if (!candidates.empty()) {
                binding[src] = candidates[pick(candidates.size())];
                out.reuse_edges++;
                continue;
            }

            // Strategy 2: bridge from a random preceding value.
            TensorType target = concretize(eff, d->concrete);
            std::vector<std::string> sources;
            for (const auto& id : pools.preceding) {
                if ((value_types.at(id).element_count() == 0) !=
                    (target.element_count() == 0))
                    continue;
                sources.push_back(id);
            }
            if (sources.empty() || !check_compatible(target, eff)) {
                out.discarded = true;
                out.reason = DiscardReason::NoBridgeSource;
                return out;
            }
            const std::string& source = sources[pick(sources.size())];
            BridgeChain chain;
            try {
                chain = bridge(source, value_types.at(source), target,
                               prefix + std::to_string(bridge_counter++) + "_");
            } catch (const BridgeImpossible&) {
                out.discarded = true;
                out.reason = DiscardReason::NoBridgeSource;
                return out;
            }
            if (static_cast<int>(chain.nodes.size()) > opts.bridge_cap) {
                out.discarded = true;
                out.reason = DiscardReason::NoBridgeSource;
                return out;
            }
            for (const auto& bn : chain.nodes) {
                for (const auto& o : bn.outputs) value_types[o.id] = o.type;
                spliced.push_back(bn);
            }
            binding[src] = chain.nodes.empty() ? source : chain.terminal_value;
            out.bridge_edges++;
            out.bridge_nodes_added += static_cast<int>(chain.nodes.size());
        }

        // Rewrite this node's inputs and re-infer its output types.
        std::vector<TensorType> in_types;
        for (auto& in : n.inputs) {
            if (rename.count(in)) in = rename.at(in);
            else in = binding.at(in);
            in_types.push_back(value_types.at(in));
        }
        try {
            std::vector<TensorType> inferred = infer(n.op, in_types, n.attrs);
            if (inferred.size() != n.outputs.size()) throw ConstraintViolation("arity");
            for (size_t s = 0; s < inferred.size(); ++s) {
                n.outputs[s].type = inferred[s];
                value_types[n.outputs[s].id] = inferred[s];
            }
        } catch (const ConstraintViolation&) {
            out.discarded = true;
            out.reason = DiscardReason::InferenceConflict;
            return out;
        }
        spliced.push_back(n);
    }

    // Dangling outputs: wire each into a type-compatible succeeding consumer
    // slot; leftovers become graph outputs so the pattern stays live.
    std::vector<Node> suffix;
    std::map<std::string, int> suffix_pos;
    for (int k = point; k < static_cast<int>(order.size()); ++k) {
        suffix_pos[seed.nodes[order[k]].id] = static_cast<int>(suffix.size());
        suffix.push_back(seed.nodes[order[k]]);
    }
    std::set<size_t> used_slots;
    std::vector<std::string> appended;
    for (const auto& d : pattern.dangling_outputs) {
        const std::string& vid = rename.at(d.value_id);
        const TensorType& vtype = value_types.at(vid);
        std::vector<size_t> slots;
        for (size_t i = 0; i < pools.succeeding.size(); ++i) {
            if (used_slots.count(i)) continue;
            const auto& [node_id, slot] = pools.succeeding[i];
            const Node& consumer = suffix[suffix_pos.at(node_id)];
            if (seed_idx.type(consumer.inputs[slot]) == vtype) slots.push_back(i);
        }
        if (!slots.empty()) {
            size_t chosen = slots[pick(slots.size())];
            used_slots.insert(chosen);
            const auto& [node_id, slot] = pools.succeeding[chosen];
            suffix[suffix_pos.at(node_id)].inputs[slot] = vid;
            out.outputs_rewired++;
        } else {
            appended.push_back(vid);
            out.outputs_appended++;
        }
    }

    Graph g = assemble(spliced, suffix, appended);
    if (static_cast<int>(g.nodes.size()) > opts.node_cap) {
        out.discarded = true;
        out.reason = DiscardReason::SizeCap;
        return out;
    }
    ValidationResult v = validate(g);
    if (!v.ok()) {
        out.discarded = true;
        out.reason = DiscardReason::InferenceConflict;
        return out;
    }
    out.graph = std::move(g);
    return out;
}

}  // namespace cgfuzz
