// SPDX-License-Identifier: Apache-2.0
#include "cgfuzz/seedgen.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "cgfuzz/op_registry.hpp"

namespace cgfuzz {

namespace {

const std::vector<std::vector<int64_t>>& shape_palette() {
    static const std::vector<std::vector<int64_t>> shapes = {
        {2, 3}, {3, 2}, {4, 4}, {2, 4}, {8}, {3, 5}, {2, 32}, {2, 3, 4}, {4, 4, 5}, {6},
    };
    return shapes;
}

struct Gen {
    std::mt19937_64 rng;
    Graph g;
    int next_id = 0;
    std::vector<ValueDecl> values;           // every defined value, in order
    std::set<std::string> cse_keys;          // (op|inputs|attrs) already used
    std::set<std::string> add_outputs;       // values produced by Add (fusion guard)
    std::set<std::string> cast_outputs;      // values produced by Cast (chain guard)
    std::set<std::string> permute_outputs;   // values produced by PermuteDims

    explicit Gen(uint64_t seed) : rng(seed) {}

    size_t pick(size_t n) {
        return std::uniform_int_distribution<size_t>(0, n - 1)(rng);
    }
    int range(int lo, int hi) { return static_cast<int>(pick(hi - lo + 1)) + lo; }
    std::string fresh(const char* stem) { return stem + std::to_string(next_id++); }

    std::optional<ValueDecl> find(auto&& pred) {
        std::vector<size_t> hits;
        for (size_t i = 0; i < values.size(); ++i)
            if (pred(values[i])) hits.push_back(i);
        if (hits.empty()) return std::nullopt;
        return values[hits[pick(hits.size())]];
    }

    void add_input(TensorType t) {
        ValueDecl d{fresh("x"), std::move(t)};
        g.inputs.push_back(d);
        values.push_back(d);
    }

    void add_const(TensorType t) {
        TensorValue tv;
        tv.type = t;
        tv.data.resize(t.element_count());
        std::uniform_real_distribution<double> dist(-0.9, 0.9);
        for (double& x : tv.data) {
            x = dist(rng);
            // Never an exact identity operand; .5 offsets keep values fractional.
            if (x == 0.0 || x == 1.0) x = 0.37;
        }
        if (!is_float(t.dtype)) {
            // Small integers, never the 0/1 identities.
            for (double& x : tv.data) {
                double v = std::trunc(x * 3);
                x = v >= 0 ? v + 2 : v - 1;
            }
        }
        quantize_buffer(t.dtype, tv.data);
        ValueDecl d{fresh("c"), t};
        g.constants[d.id] = std::move(tv);
        values.push_back(d);
    }

    bool emit(const std::string& op, const std::vector<ValueDecl>& ins, Attrs attrs) {
        std::vector<TensorType> in_types;
        std::vector<std::string> in_ids;
        for (const auto& v : ins) {
            in_types.push_back(v.type);
            in_ids.push_back(v.id);
        }
        // A node fed by constants alone would be folded away; keep at least
        // one non-constant operand.
        bool all_const = std::all_of(in_ids.begin(), in_ids.end(), [&](const auto& id) {
            return g.constants.count(id) != 0;
        });
        if (all_const) return false;
        std::vector<TensorType> outs;
        try {
            outs = infer(op, in_types, attrs);
        } catch (const ConstraintViolation&) {
            return false;
        }
        std::string key = op;
        std::vector<std::string> sorted_ids = in_ids;
        if (op == "Add" || op == "Mul") std::sort(sorted_ids.begin(), sorted_ids.end());
        for (const auto& id : sorted_ids) key += "|" + id;
        for (const auto& [k, v] : attrs) {
            key += "#" + k + "=";
            std::visit([&](const auto& x) {
                if constexpr (std::is_same_v<std::decay_t<decltype(x)>, std::vector<int64_t>>)
                    for (int64_t e : x) key += std::to_string(e) + ",";
                else if constexpr (std::is_same_v<std::decay_t<decltype(x)>, std::string>)
                    key += x;
                else
                    key += std::to_string(x);
            }, v);
        }
        if (!cse_keys.insert(key).second) return false;

        Node n;
        n.id = fresh("n");
        n.op = op;
        n.inputs = in_ids;
        n.attrs = std::move(attrs);
        for (const auto& t : outs) n.outputs.push_back({fresh("v"), t});
        const std::string& out_id = n.outputs[0].id;
        if (op == "Add") add_outputs.insert(out_id);
        if (op == "Cast") cast_outputs.insert(out_id);
        if (op == "PermuteDims") permute_outputs.insert(out_id);
        values.push_back(n.outputs[0]);
        g.nodes.push_back(std::move(n));
        return true;
    }
};

}  // namespace

Graph gen_seed(uint64_t seed) {
    Gen gen(seed);

    int n_inputs = gen.range(2, 4);
    for (int i = 0; i < n_inputs; ++i) {
        TensorType t;
        int roll = gen.range(0, 9);
        t.dtype = roll < 7 ? DType::F32 : roll < 9 ? DType::I32 : DType::Bool;
        t.shape = shape_palette()[gen.pick(shape_palette().size())];
        gen.add_input(t);
    }
    // One bool value somewhere in most seeds widens the dtype mix the
    // loosened matcher can reach.
    if (gen.range(0, 3) > 0) gen.add_input(TensorType{DType::Bool, {2, 3}});

    int n_consts = gen.range(1, 3);
    for (int i = 0; i < n_consts; ++i) {
        TensorType t{gen.range(0, 4) == 0 ? DType::I32 : DType::F32,
                     shape_palette()[gen.pick(shape_palette().size())]};
        gen.add_const(t);
    }

    int target_nodes = gen.range(6, 18);
    int guard = 0;
    while (static_cast<int>(gen.g.nodes.size()) < target_nodes && guard++ < 300) {
        int roll = gen.range(0, 11);
        auto any_numeric = [&](const ValueDecl& v) { return is_numeric(v.type.dtype); };
        auto any_float = [&](const ValueDecl& v) { return is_float(v.type.dtype); };
        switch (roll) {
            case 0:
            case 1: {  // elementwise binary on two same-typed values
                auto a = gen.find(any_numeric);
                if (!a) break;
                TensorType want = a->type;
                auto b =
                    gen.find([&](const ValueDecl& v) { return v.type == want; });
                if (!b) break;
                const char* op = gen.range(0, 2) == 0 ? "Sub" : gen.range(0, 1) ? "Mul" : "Add";
                gen.emit(op, {*a, *b}, {});
                break;
            }
            case 2: {  // ReLU, never directly on an Add result
                auto a = gen.find([&](const ValueDecl& v) {
                    return is_numeric(v.type.dtype) && !gen.add_outputs.count(v.id);
                });
                if (a) gen.emit("ReLU", {*a}, {});
                break;
            }
            case 3: {
                auto a = gen.find(any_float);
                if (a) gen.emit("Sigmoid", {*a}, {});
                break;
            }
            case 4: {
                auto a = gen.find([&](const ValueDecl& v) {
                    return is_float(v.type.dtype) && v.type.rank() >= 1;
                });
                if (a) gen.emit("Softmax", {*a}, {{"axis", int64_t{gen.range(0, a->type.rank() - 1)}}});
                break;
            }
            case 5: {  // Concat of two same-typed, non-permuted values
                auto a = gen.find([&](const ValueDecl& v) {
                    return v.type.rank() >= 1 && !gen.permute_outputs.count(v.id);
                });
                if (!a) break;
                TensorType want = a->type;
                auto b = gen.find([&](const ValueDecl& v) {
                    return v.type == want && !gen.permute_outputs.count(v.id);
                });
                if (!b) break;
                gen.emit("Concat", {*a, *b}, {{"axis", int64_t{gen.range(0, want.rank() - 1)}}});
                break;
            }
            case 6: {
                auto a = gen.find([&](const ValueDecl& v) { return v.type.rank() >= 2; });
                if (!a) break;
                std::vector<int64_t> axes(a->type.rank());
                for (size_t i = 0; i < axes.size(); ++i) axes[i] = static_cast<int64_t>(i);
                std::shuffle(axes.begin(), axes.end(), gen.rng);
                gen.emit("PermuteDims", {*a}, {{"axes", axes}});
                break;
            }
            case 7: {  // Reshape to a flat or factored form
                auto a = gen.find([&](const ValueDecl& v) {
                    return v.type.element_count() >= 1;
                });
                if (!a) break;
                int64_t n = a->type.element_count();
                std::vector<int64_t> target = {n};
                if (n % 2 == 0 && gen.range(0, 1)) target = {2, n / 2};
                gen.emit("Reshape", {*a}, {{"target", target}});
                break;
            }
            case 8: {  // Cast, never on another cast's result
                auto a = gen.find([&](const ValueDecl& v) {
                    return !gen.cast_outputs.count(v.id);
                });
                if (!a) break;
                DType to = a->type.dtype == DType::F32 ? DType::F64
                           : a->type.dtype == DType::Bool ? DType::F32
                                                          : DType::F32;
                gen.emit("Cast", {*a}, {{"to", std::string(dtype_name(to))}});
                break;
            }
            case 9: {
                auto a = gen.find([&](const ValueDecl& v) {
                    return is_numeric(v.type.dtype) && v.type.rank() == 2;
                });
                if (!a) break;
                TensorType want{a->type.dtype, {a->type.shape[1], a->type.shape[0] > 4 ? 2 : 3}};
                auto b =
                    gen.find([&](const ValueDecl& v) { return v.type == want; });
                if (!b) {
                    gen.add_const(want);
                    b = gen.values.back();
                }
                gen.emit("MatMul", {*a, *b}, {});
                break;
            }
            case 10: {
                auto a = gen.find([&](const ValueDecl& v) {
                    return is_numeric(v.type.dtype) && v.type.rank() >= 2;
                });
                if (!a) break;
                TensorType want{a->type.dtype, {a->type.shape[1]}};
                auto b =
                    gen.find([&](const ValueDecl& v) { return v.type == want; });
                if (!b) break;
                gen.emit("BiasAdd", {*a, *b}, {});
                break;
            }
            default: {  // Crop to a prefix
                auto a = gen.find([&](const ValueDecl& v) {
                    return v.type.element_count() >= 2;
                });
                if (!a) break;
                int64_t n = a->type.element_count();
                gen.emit("Crop", {*a},
                         {{"begin", int64_t{0}}, {"end", int64_t{1 + gen.range(0, static_cast<int>(n) - 1)}}});
                break;
            }
        }
    }

    // Every sink becomes an output: no dead values, so a clean DCE never fires.
    std::set<std::string> consumed;
    for (const auto& n : gen.g.nodes)
        for (const auto& in : n.inputs) consumed.insert(in);
    for (const auto& n : gen.g.nodes)
        for (const auto& o : n.outputs)
            if (!consumed.count(o.id)) gen.g.outputs.push_back(o.id);
    for (const auto& in : gen.g.inputs)
        if (!consumed.count(in.id)) gen.g.outputs.push_back(in.id);
    for (auto it = gen.g.constants.begin(); it != gen.g.constants.end();) {
        if (!consumed.count(it->first)) it = gen.g.constants.erase(it);
        else ++it;
    }
    return gen.g;
}

}  // namespace cgfuzz
