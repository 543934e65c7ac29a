// SPDX-License-Identifier: Apache-2.0
#include "cgfuzz/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cgfuzz/op_registry.hpp"
#include "cgfuzz/serialize.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace cgfuzz {

namespace {

/// Small builder for hand-written corpus graphs.
struct B {
    Graph g;
    int k = 0;

    std::string input(DType d, std::vector<int64_t> shape) {
        std::string id = "x" + std::to_string(k++);
        g.inputs.push_back({id, {d, std::move(shape)}});
        return id;
    }
    std::string cnst(DType d, std::vector<int64_t> shape, double fill) {
        std::string id = "c" + std::to_string(k++);
        TensorValue tv;
        tv.type = {d, std::move(shape)};
        tv.data.assign(tv.type.element_count(), fill);
        quantize_buffer(d, tv.data);
        g.constants[id] = std::move(tv);
        return id;
    }
    std::string node(const std::string& op, std::vector<std::string> ins, Attrs attrs,
                     const std::string& block) {
        std::vector<TensorType> in_types;
        ValueIndex idx(g);
        for (const auto& i : ins) in_types.push_back(idx.type(i));
        if (!block.empty()) attrs[kBlockAttr] = block;
        Node n;
        n.id = "n" + std::to_string(k);
        n.op = op;
        n.inputs = std::move(ins);
        TensorType out = infer(op, in_types, attrs)[0];
        n.attrs = std::move(attrs);
        n.outputs = {{"v" + std::to_string(k), out}};
        ++k;
        g.nodes.push_back(n);
        return n.outputs[0].id;
    }
    void out(const std::string& id) { g.outputs.push_back(id); }
};

CorpusEntry entry(std::string name, B b, std::vector<std::string> passes) {
    return CorpusEntry{std::move(name), std::move(b.g), std::move(passes)};
}

}  // namespace

std::vector<CorpusEntry> documented_corpus() {
    std::vector<CorpusEntry> c;
    const DType F = DType::F32;

    // --- ConstantFolding: an all-constant node inside a block that also
    // touches a live intermediate. Constant values are integer-valued so a
    // correct fold and a truncating fold agree on nothing but these graphs.
    {
        B b;
        auto x = b.input(F, {2, 3});
        auto t = b.node("ReLU", {x}, {}, "b0");
        auto f = b.node("Add", {b.cnst(F, {2, 3}, 2.0), b.cnst(F, {2, 3}, 3.0)}, {}, "b1");
        auto m = b.node("Mul", {f, t}, {}, "b1");
        b.out(b.node("Sigmoid", {m}, {}, "b2"));
        c.push_back(entry("cf-1", std::move(b), {"ConstantFolding"}));
    }
    {
        B b;
        auto x = b.input(F, {4, 4});
        auto t = b.node("ReLU", {x}, {}, "b0");
        auto f = b.node("Sub", {b.cnst(F, {4, 4}, 5.0), b.cnst(F, {4, 4}, 2.0)}, {}, "b1");
        auto m = b.node("Add", {f, t}, {}, "b1");
        b.out(b.node("Sigmoid", {m}, {}, "b2"));
        c.push_back(entry("cf-2", std::move(b), {"ConstantFolding"}));
    }
    {
        B b;
        auto x = b.input(DType::I32, {6});
        auto t = b.node("ReLU", {x}, {}, "b0");
        auto f = b.node("Add", {b.cnst(DType::I32, {6}, 2.0), b.cnst(DType::I32, {6}, 3.0)},
                        {}, "b1");
        auto m = b.node("Mul", {f, t}, {}, "b1");
        b.out(b.node("Cast", {m}, {{"to", std::string("f32")}}, "b2"));
        c.push_back(entry("cf-3", std::move(b), {"ConstantFolding"}));
    }
    {
        B b;
        auto x = b.input(F, {3, 5});
        auto t = b.node("ReLU", {x}, {}, "b0");
        auto f1 = b.node("Add", {b.cnst(F, {3, 5}, 2.0), b.cnst(F, {3, 5}, 4.0)}, {}, "b1");
        auto f2 = b.node("Add", {f1, b.cnst(F, {3, 5}, 7.0)}, {}, "b1");
        auto m = b.node("Mul", {f2, t}, {}, "b1");
        b.out(b.node("Sigmoid", {m}, {}, "b2"));
        c.push_back(entry("cf-4", std::move(b), {"ConstantFolding"}));
    }
    {
        // Self-contained fold block: no dangling input once extracted.
        B b;
        auto x = b.input(F, {2, 4});
        auto f = b.node("Add", {b.cnst(F, {2, 4}, 3.0), b.cnst(F, {2, 4}, 6.0)}, {}, "b1");
        auto s = b.node("Sigmoid", {f}, {}, "b1");
        auto r = b.node("ReLU", {s}, {}, "b2");
        b.out(r);
        b.out(b.node("ReLU", {x}, {}, "b3"));
        c.push_back(entry("cf-5", std::move(b), {"ConstantFolding"}));
    }

    // --- AlgebraicSimplification: identity operands on Mul/Add/Sub. The
    // simplified node sits behind two intermediates, so only block-level
    // extraction exposes its operands for rebinding.
    {
        B b;
        auto x = b.input(F, {2, 3});
        auto y = b.input(F, {2, 3});
        auto t1 = b.node("Sigmoid", {x}, {}, "b0");
        auto t2 = b.node("ReLU", {y}, {}, "b0");
        auto s = b.node("Sub", {t1, t2}, {}, "b1");
        auto m = b.node("Mul", {s, b.cnst(F, {2, 3}, 1.0)}, {}, "b1");
        b.out(b.node("Softmax", {m}, {{"axis", int64_t{0}}}, "b2"));
        c.push_back(entry("as-1", std::move(b), {"AlgebraicSimplification"}));
    }
    {
        B b;
        auto x = b.input(F, {4, 4});
        auto y = b.input(F, {4, 4});
        auto t1 = b.node("Sigmoid", {x}, {}, "b0");
        auto t2 = b.node("ReLU", {y}, {}, "b0");
        auto s = b.node("Sub", {t1, t2}, {}, "b1");
        auto m = b.node("Add", {s, b.cnst(F, {4, 4}, 0.0)}, {}, "b1");
        b.out(b.node("Sigmoid", {m}, {}, "b2"));
        c.push_back(entry("as-2", std::move(b), {"AlgebraicSimplification"}));
    }
    {
        B b;
        auto x = b.input(F, {3, 5});
        auto y = b.input(F, {3, 5});
        auto t1 = b.node("Sigmoid", {x}, {}, "b0");
        auto t2 = b.node("Sigmoid", {y}, {}, "b0");
        auto s = b.node("Sub", {t1, t2}, {}, "b1");
        auto m = b.node("Sub", {s, b.cnst(F, {3, 5}, 0.0)}, {}, "b1");
        b.out(b.node("ReLU", {m}, {}, "b2"));
        c.push_back(entry("as-3", std::move(b), {"AlgebraicSimplification"}));
    }
    {
        // Block ends in a PermuteDims, so the spliced pattern can feed a
        // context concat.
        B b;
        auto x = b.input(F, {2, 3});
        auto t1 = b.node("Sigmoid", {x}, {}, "b0");
        auto m = b.node("Mul", {t1, b.cnst(F, {2, 3}, 1.0)}, {}, "b1");
        auto p = b.node("PermuteDims", {m}, {{"axes", std::vector<int64_t>{1, 0}}}, "b1");
        b.out(b.node("ReLU", {p}, {}, "b2"));
        c.push_back(entry("as-4", std::move(b), {"AlgebraicSimplification"}));
    }
    {
        // Conv2D inside the block: a rank-4 dangling input for the bridge.
        B b;
        auto x = b.input(F, {1, 3, 4, 4});
        auto t = b.node("Sigmoid", {x}, {}, "b0");
        auto w = b.cnst(F, {2, 3, 2, 2}, 0.5);
        auto cv = b.node("Conv2D", {t, w}, {}, "b1");
        auto m = b.node("Mul", {cv, b.cnst(F, {1, 2, 3, 3}, 1.0)}, {}, "b1");
        b.out(b.node("ReLU", {m}, {}, "b2"));
        c.push_back(entry("as-5", std::move(b), {"AlgebraicSimplification"}));
    }

    // --- ElementwiseFusion: Add feeding a sole same-block ReLU, both fed by
    // intermediates.
    auto fusion_entry = [&](const char* name, DType d, std::vector<int64_t> shape) {
        B b;
        auto x = b.input(d, shape);
        auto y = b.input(d, shape);
        std::string a, bb;
        if (is_float(d)) {
            a = b.node("Sigmoid", {x}, {}, "b0");
            bb = b.node("Sigmoid", {y}, {}, "b0");
        } else {
            a = b.node("ReLU", {x}, {}, "b0");
            bb = b.node("ReLU", {y}, {}, "b0");
        }
        auto s = b.node("Add", {a, bb}, {}, "b1");
        auto r = b.node("ReLU", {s}, {}, "b1");
        if (is_float(d)) {
            b.out(b.node("Softmax", {r}, {{"axis", int64_t{0}}}, "b2"));
        } else {
            b.out(b.node("Cast", {r}, {{"to", std::string("f32")}}, "b2"));
        }
        c.push_back(entry(name, std::move(b), {"ElementwiseFusion"}));
    };
    fusion_entry("fu-1", F, {2, 3});
    fusion_entry("fu-2", F, {4, 4});
    fusion_entry("fu-3", DType::I32, {8});
    fusion_entry("fu-4", F, {2, 3, 4});
    {
        B b;
        auto x = b.input(F, {3, 2});
        auto y = b.input(F, {3, 2});
        auto a = b.node("Sigmoid", {x}, {}, "b0");
        auto bb = b.node("Sigmoid", {y}, {}, "b0");
        auto s = b.node("Add", {a, bb}, {}, "b1");
        auto r = b.node("ReLU", {s}, {}, "b1");
        auto g2 = b.node("Sigmoid", {r}, {}, "b1");
        b.out(b.node("ReLU", {g2}, {}, "b2"));
        c.push_back(entry("fu-5", std::move(b), {"ElementwiseFusion"}));
    }

    // --- ReorderPermuteDimsAfterConcat: concat of equally-permuted tensors.
    auto reorder_entry = [&](const char* name, std::vector<int64_t> shape,
                             std::vector<int64_t> axes, int64_t axis, int fanin) {
        B b;
        std::vector<std::string> permuted;
        for (int i = 0; i < fanin; ++i) {
            auto x = b.input(F, shape);
            auto t = b.node("ReLU", {x}, {}, "b0");
            permuted.push_back(b.node("PermuteDims", {t}, {{"axes", axes}}, "b1"));
        }
        auto cat = b.node("Concat", permuted, {{"axis", axis}}, "b1");
        b.out(b.node("Sigmoid", {cat}, {}, "b2"));
        c.push_back(entry(name, std::move(b), {"ReorderPermuteDimsAfterConcat"}));
    };
    reorder_entry("rc-1", {2, 3, 4}, {1, 2, 0}, 0, 2);
    reorder_entry("rc-2", {2, 3}, {1, 0}, 0, 2);
    reorder_entry("rc-3", {2, 3, 4}, {2, 0, 1}, 1, 3);
    reorder_entry("rc-4", {3, 5}, {1, 0}, 1, 2);
    reorder_entry("rc-5", {2, 3, 4}, {0, 2, 1}, 1, 2);

    // --- RedundantCastElimination: lossless cast chains. The first two use
    // pool-friendly shapes; the rest use shapes no seed carries, so their
    // dangling input exercises the loosened matcher.
    auto cast_entry = [&](const char* name, DType d, std::vector<int64_t> shape,
                          const char* up, const char* down) {
        B b;
        auto x = b.input(d, shape);
        auto t = b.node("ReLU", {x}, {}, "b0");
        auto c1 = b.node("Cast", {t}, {{"to", std::string(up)}}, "b1");
        auto c2 = b.node("Cast", {c1}, {{"to", std::string(down)}}, "b1");
        if (is_float(d))
            b.out(b.node("Sigmoid", {c2}, {}, "b2"));
        else
            b.out(b.node("ReLU", {c2}, {}, "b2"));
        c.push_back(entry(name, std::move(b), {"RedundantCastElimination"}));
    };
    cast_entry("ce-1", F, {2, 3}, "f64", "f32");
    cast_entry("ce-2", F, {4, 4}, "f64", "f32");
    cast_entry("ce-3", F, {7, 11}, "f64", "f32");
    cast_entry("ce-4", DType::I32, {5, 9}, "i64", "i32");
    cast_entry("ce-5", F, {13}, "f64", "f32");

    // --- DeadCodeElimination: a dead branch hanging off a live intermediate.
    // The dead value is no cut edge, so it stays dead after splicing.
    {
        B b;
        auto x = b.input(F, {2, 3});
        auto t = b.node("ReLU", {x}, {}, "b0");
        b.out(b.node("Sigmoid", {t}, {}, "b1"));
        b.node("Mul", {t, b.cnst(F, {2, 3}, 0.37)}, {}, "b2");
        c.push_back(entry("dc-1", std::move(b), {"DeadCodeElimination"}));
    }
    {
        B b;
        auto x = b.input(F, {4, 4});
        auto t = b.node("ReLU", {x}, {}, "b0");
        b.out(b.node("Softmax", {t}, {{"axis", int64_t{1}}}, "b1"));
        auto d1 = b.node("Mul", {t, b.cnst(F, {4, 4}, 0.37)}, {}, "b2");
        b.node("ReLU", {d1}, {}, "b2");
        c.push_back(entry("dc-2", std::move(b), {"DeadCodeElimination"}));
    }
    {
        B b;
        auto x = b.input(F, {3, 5});
        auto t = b.node("ReLU", {x}, {}, "b0");
        b.out(b.node("Softmax", {t}, {{"axis", int64_t{0}}}, "b1"));
        b.node("Pad", {t}, {{"amounts", int64_t{4}}}, "b2");
        c.push_back(entry("dc-3", std::move(b), {"DeadCodeElimination"}));
    }
    {
        B b;
        auto x = b.input(F, {8});
        auto t = b.node("Sigmoid", {x}, {}, "b0");
        b.out(b.node("ReLU", {t}, {}, "b1"));
        b.node("Mul", {t, b.cnst(F, {8}, 0.5)}, {}, "b2");
        b.node("Crop", {t}, {{"begin", int64_t{0}}, {"end", int64_t{3}}}, "b3");
        c.push_back(entry("dc-4", std::move(b), {"DeadCodeElimination"}));
    }
    {
        B b;
        auto x = b.input(F, {2, 3, 4});
        auto t = b.node("ReLU", {x}, {}, "b0");
        b.out(b.node("Softmax", {t}, {{"axis", int64_t{2}}}, "b1"));
        auto d1 = b.node("Reshape", {t}, {{"target", std::vector<int64_t>{24}}}, "b2");
        b.node("Cast", {d1}, {{"to", std::string("f64")}}, "b2");
        c.push_back(entry("dc-5", std::move(b), {"DeadCodeElimination"}));
    }

    // --- CommonSubexpressionElimination: duplicated subexpressions over a
    // shared intermediate, plus near-duplicates differing only in attrs.
    {
        B b;
        auto x = b.input(F, {2, 3});
        auto t = b.node("ReLU", {x}, {}, "b0");
        auto u1 = b.node("Sigmoid", {t}, {}, "b1");
        auto u2 = b.node("Sigmoid", {t}, {}, "b1");
        b.out(b.node("Add", {u1, u2}, {}, "b2"));
        c.push_back(entry("cs-1", std::move(b), {"CommonSubexpressionElimination"}));
    }
    {
        B b;
        auto x = b.input(F, {4, 4});
        auto t = b.node("ReLU", {x}, {}, "b0");
        auto v1 = b.node("Softmax", {t}, {{"axis", int64_t{0}}}, "b1");
        auto u1 = b.node("Softmax", {t}, {{"axis", int64_t{0}}}, "b1");
        auto v2 = b.node("Softmax", {t}, {{"axis", int64_t{1}}}, "b2");
        b.out(b.node("Add", {v1, u1}, {}, "b3"));
        b.out(b.node("Sub", {v1, v2}, {}, "b3"));
        c.push_back(entry("cs-2", std::move(b), {"CommonSubexpressionElimination"}));
    }
    {
        B b;
        auto x = b.input(F, {2, 3});
        auto t = b.node("Sigmoid", {x}, {}, "b0");
        auto p1 = b.node("PermuteDims", {t}, {{"axes", std::vector<int64_t>{1, 0}}}, "b1");
        auto p2 = b.node("PermuteDims", {t}, {{"axes", std::vector<int64_t>{1, 0}}}, "b1");
        b.out(b.node("Add", {p1, p2}, {}, "b2"));
        auto r1 = b.node("Reshape", {t}, {{"target", std::vector<int64_t>{6}}}, "b3");
        auto r2 = b.node("Reshape", {t}, {{"target", std::vector<int64_t>{3, 2}}}, "b3");
        b.out(b.node("Sigmoid", {r1}, {}, "b4"));
        b.out(b.node("Sigmoid", {r2}, {}, "b4"));
        c.push_back(entry("cs-3", std::move(b), {"CommonSubexpressionElimination"}));
    }
    {
        B b;
        auto x = b.input(F, {2, 3});
        auto y = b.input(F, {3, 2});
        auto t = b.node("ReLU", {x}, {}, "b0");
        auto u = b.node("ReLU", {y}, {}, "b0");
        auto m1 = b.node("MatMul", {t, u}, {}, "b1");
        auto m2 = b.node("MatMul", {t, u}, {}, "b1");
        b.out(b.node("Add", {m1, m2}, {}, "b2"));
        c.push_back(entry("cs-4", std::move(b), {"CommonSubexpressionElimination"}));
    }
    {
        B b;
        auto x = b.input(F, {3, 5});
        auto t = b.node("ReLU", {x}, {}, "b0");
        auto c1 = b.node("Cast", {t}, {{"to", std::string("f64")}}, "b1");
        auto c2 = b.node("Cast", {t}, {{"to", std::string("f64")}}, "b1");
        b.out(b.node("Add", {c1, c2}, {}, "b2"));
        c.push_back(entry("cs-5", std::move(b), {"CommonSubexpressionElimination"}));
    }

    return c;
}

std::vector<CorpusEntry> nonopt_corpus() {
    std::vector<CorpusEntry> c;
    const DType F = DType::F32;
    {
        B b;
        auto x = b.input(F, {2, 3});
        auto a = b.node("ReLU", {x}, {}, "");
        auto s = b.node("Sigmoid", {a}, {}, "");
        b.out(b.node("Softmax", {s}, {{"axis", int64_t{0}}}, ""));
        c.push_back(entry("no-1", std::move(b), {"ConstantFolding"}));
    }
    {
        B b;
        auto x = b.input(F, {4, 4});
        auto a = b.node("Sigmoid", {x}, {}, "");
        auto r = b.node("Reshape", {a}, {{"target", std::vector<int64_t>{16}}}, "");
        b.out(b.node("ReLU", {r}, {}, ""));
        c.push_back(entry("no-2", std::move(b), {"AlgebraicSimplification"}));
    }
    {
        B b;
        auto x = b.input(F, {8});
        auto a = b.node("ReLU", {x}, {}, "");
        auto cr = b.node("Crop", {a}, {{"begin", int64_t{0}}, {"end", int64_t{5}}}, "");
        b.out(b.node("Sigmoid", {cr}, {}, ""));
        c.push_back(entry("no-3", std::move(b), {"ElementwiseFusion"}));
    }
    {
        B b;
        auto x = b.input(F, {2, 3, 4});
        auto a = b.node("Softmax", {x}, {{"axis", int64_t{1}}}, "");
        auto r = b.node("Reshape", {a}, {{"target", std::vector<int64_t>{6, 4}}}, "");
        b.out(b.node("Sigmoid", {r}, {}, ""));
        auto y = b.input(F, {6});
        b.out(b.node("ReLU", {y}, {}, ""));
        c.push_back(entry("no-4", std::move(b), {"DeadCodeElimination"}));
    }
    {
        B b;
        auto x = b.input(F, {3, 5});
        auto a = b.node("Sigmoid", {x}, {}, "");
        auto r = b.node("ReLU", {a}, {}, "");
        auto s = b.node("Softmax", {r}, {{"axis", int64_t{1}}}, "");
        b.out(b.node("Reshape", {s}, {{"target", std::vector<int64_t>{15}}}, ""));
        c.push_back(entry("no-5", std::move(b),
                          {"CommonSubexpressionElimination", "ReorderPermuteDimsAfterConcat"}));
    }
    return c;
}

void write_corpus(const std::vector<CorpusEntry>& corpus, const std::string& dir) {
    fs::create_directories(dir);
    for (const auto& e : corpus) {
        save_graph(e.graph, (fs::path(dir) / (e.name + ".cg.json")).string());
        ordered_json j;
        j["passes"] = e.passes;
        std::ofstream f(fs::path(dir) / (e.name + ".passes.json"));
        f << j.dump(2) << "\n";
    }
}

std::vector<CorpusEntry> load_corpus(const std::string& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json" && e.path().stem().extension() == ".cg")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<CorpusEntry> corpus;
    for (const auto& f : files) {
        CorpusEntry entry;
        entry.name = f.stem().stem().string();
        try {
            entry.graph = load_graph(f.string());
        } catch (const std::exception& e) {
            throw CorpusError(f.string(), e.what());
        }
        fs::path sidecar = f.parent_path() / (entry.name + ".passes.json");
        if (!fs::exists(sidecar))
            throw CorpusError(f.string(), "missing sidecar manifest " + sidecar.string());
        std::ifstream sf(sidecar);
        ordered_json j = ordered_json::parse(sf, nullptr, false);
        if (j.is_discarded() || !j.contains("passes"))
            throw CorpusError(sidecar.string(), "malformed manifest");
        for (const auto& p : j["passes"]) entry.passes.push_back(p.get<std::string>());
        corpus.push_back(std::move(entry));
    }
    return corpus;
}

}  // namespace cgfuzz
