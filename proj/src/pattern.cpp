// SPDX-License-Identifier: Apache-2.0
#include "cgfuzz/pattern.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cgfuzz/serialize.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace cgfuzz {

const char* extraction_mode_name(ExtractionMode m) {
    switch (m) {
        case ExtractionMode::Adaptive: return "adaptive";
        case ExtractionMode::BlockOnly: return "block-only";
        case ExtractionMode::SubgraphOnly: return "subgraph-only";
        case ExtractionMode::WholeGraph: return "whole-graph";
        case ExtractionMode::NonOptCorpus: return "noopt";
    }
    return "?";
}

bool extraction_mode_from_name(const std::string& s, ExtractionMode& out) {
    for (ExtractionMode m : {ExtractionMode::Adaptive, ExtractionMode::BlockOnly,
                             ExtractionMode::SubgraphOnly, ExtractionMode::WholeGraph,
                             ExtractionMode::NonOptCorpus}) {
        if (s == extraction_mode_name(m)) {
            out = m;
            return true;
        }
    }
    return false;
}

std::vector<PassTracePair> collect_pairs(const std::vector<CorpusEntry>& corpus) {
    std::vector<PassTracePair> pairs;
    PassEngine engine;
    for (const auto& entry : corpus) {
        ValidationResult v = validate(entry.graph);
        if (!v.ok()) throw CorpusError(entry.name, v.violations.front());
        for (const auto& p : entry.passes)
            if (!find_pass(p)) throw CorpusError(entry.name, "unknown pass '" + p + "'");
        auto traces = engine.with_instrumentation([&] {
            engine.run_pipeline(entry.passes, entry.graph);
        });
        for (auto& t : traces) pairs.push_back(std::move(t));
    }
    return pairs;
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

/// Subgraphs: maximal groups of nodes sharing any input or output tensor.
std::vector<std::vector<int>> subgraph_components(const Graph& g) {
    int n = static_cast<int>(g.nodes.size());
    UnionFind uf(n);
    std::map<std::string, std::vector<int>> touching;
    for (int i = 0; i < n; ++i) {
        for (const auto& in : g.nodes[i].inputs) touching[in].push_back(i);
        for (const auto& out : g.nodes[i].outputs) touching[out.id].push_back(i);
    }
    for (const auto& [id, nodes] : touching)
        for (size_t k = 1; k < nodes.size(); ++k) uf.unite(nodes[0], nodes[k]);

    std::map<int, std::vector<int>> by_root;
    for (int i = 0; i < n; ++i) by_root[uf.find(i)].push_back(i);
    std::vector<std::vector<int>> comps;
    std::set<int> emitted;
    for (int i = 0; i < n; ++i) {
        int r = uf.find(i);
        if (emitted.insert(r).second) comps.push_back(by_root[r]);
    }
    return comps;
}

/// Blocks: inside one subgraph, nodes sharing an explicit block id form one
/// block; unattributed nodes are chained greedily along shared intermediate
/// tensors in execution order.
std::vector<std::vector<int>> block_split(const Graph& g, const std::vector<int>& comp) {
    std::vector<std::vector<int>> blocks;
    std::map<std::string, int> block_of_attr;
    std::vector<int> current;  // open chain of unattributed nodes
    std::set<std::string> current_values;

    auto flush = [&] {
        if (!current.empty()) {
            blocks.push_back(current);
            current.clear();
            current_values.clear();
        }
    };

    for (int i : comp) {
        const Node& node = g.nodes[i];
        if (auto b = node.block()) {
            auto it = block_of_attr.find(*b);
            if (it == block_of_attr.end()) {
                flush();
                block_of_attr[*b] = static_cast<int>(blocks.size());
                blocks.push_back({i});
            } else {
                blocks[it->second].push_back(i);
            }
            continue;
        }
        bool chained = std::any_of(node.inputs.begin(), node.inputs.end(),
                                   [&](const std::string& v) { return current_values.count(v); });
        if (!chained) flush();
        current.push_back(i);
        for (const auto& o : node.outputs) current_values.insert(o.id);
    }
    flush();
    return blocks;
}

Pattern build_pattern(const PassTracePair& pair, const std::vector<int>& node_indices,
                      Granularity gran, int index) {
    const Graph& g = pair.graph;
    Pattern p;
    p.target_pass = pair.pass_name;
    p.granularity = gran;
    p.provenance_index = index;

    std::set<int> members(node_indices.begin(), node_indices.end());
    std::set<std::string> produced;
    for (int i : node_indices)
        for (const auto& o : g.nodes[i].outputs) produced.insert(o.id);

    ValueIndex idx(g);
    std::map<std::string, size_t> dangling_by_value;
    for (int i : node_indices) {
        const Node& n = g.nodes[i];
        p.nodes.push_back(n);
        for (int s = 0; s < static_cast<int>(n.inputs.size()); ++s) {
            const std::string& in = n.inputs[s];
            if (produced.count(in)) continue;
            if (g.constants.count(in)) {
                p.constants[in] = g.constants.at(in);
                continue;
            }
            auto it = dangling_by_value.find(in);
            if (it == dangling_by_value.end()) {
                dangling_by_value[in] = p.dangling_inputs.size();
                p.dangling_inputs.push_back(DanglingInput{in, {{n.id, s}}, idx.type(in)});
            } else {
                p.dangling_inputs[it->second].sites.push_back({n.id, s});
            }
        }
    }

    // Cut edges: pattern values consumed outside the pattern or listed as
    // graph outputs. A pattern with no cut edge at all exposes its sinks
    // instead, so it can stay live once spliced.
    std::set<std::string> out_set(g.outputs.begin(), g.outputs.end());
    for (int i : node_indices) {
        for (const auto& o : g.nodes[i].outputs) {
            bool outside = false;
            for (int c : idx.consumers(o.id))
                if (!members.count(c)) outside = true;
            if (outside || out_set.count(o.id))
                p.dangling_outputs.push_back({o.id, o.type});
        }
    }
    if (p.dangling_outputs.empty()) {
        for (int i : node_indices)
            for (const auto& o : g.nodes[i].outputs)
                if (idx.consumer_count(o.id) == 0)
                    p.dangling_outputs.push_back({o.id, o.type});
    }
    return p;
}

/// Canonical form: node and value ids renumbered in pattern order, provenance
/// stripped. Isomorphic patterns for the same pass hash identically.
std::string canonical_pattern_string(const Pattern& p) {
    std::map<std::string, std::string> rename;
    int vk = 0;
    for (const auto& d : p.dangling_inputs) rename[d.value_id] = "di" + std::to_string(vk++);
    int ck = 0;
    for (const auto& [id, tv] : p.constants) rename[id] = "c" + std::to_string(ck++);
    for (size_t i = 0; i < p.nodes.size(); ++i)
        for (size_t s = 0; s < p.nodes[i].outputs.size(); ++s)
            rename[p.nodes[i].outputs[s].id] =
                "n" + std::to_string(i) + "o" + std::to_string(s);

    std::ostringstream os;
    os << p.target_pass << "/" << granularity_name(p.granularity) << ";";
    for (const auto& [id, tv] : p.constants) {
        os << rename.at(id) << ":" << to_string(tv.type) << "=";
        for (double x : tv.data) os << x << ",";
        os << ";";
    }
    for (size_t i = 0; i < p.nodes.size(); ++i) {
        const Node& n = p.nodes[i];
        os << "n" << i << "=" << n.op << "(";
        for (const auto& in : n.inputs) os << rename.at(in) << ",";
        os << ")";
        for (const auto& [k, v] : n.attrs) {
            if (k == kBlockAttr) continue;
            os << "#" << k << "=";
            std::visit([&](const auto& x) {
                if constexpr (std::is_same_v<std::decay_t<decltype(x)>, std::vector<int64_t>>) {
                    for (int64_t e : x) os << e << ",";
                } else {
                    os << x;
                }
            }, v);
        }
        for (const auto& o : n.outputs) os << "->" << to_string(o.type);
        os << ";";
    }
    os << "in:";
    for (const auto& d : p.dangling_inputs) {
        os << rename.at(d.value_id) << ":" << to_string(d.concrete) << "@";
        for (const auto& [node, slot] : d.sites) os << slot << ",";
        os << ";";
    }
    os << "out:";
    for (const auto& d : p.dangling_outputs) os << rename.at(d.value_id) << ";";
    return os.str();
}

std::string pattern_id_for(const Pattern& p) {
    char buf[16];
    snprintf(buf, sizeof buf, "%012llx",
             static_cast<unsigned long long>(fnv1a64(canonical_pattern_string(p)) &
                                             0xffffffffffffull));
    return std::string("pat-") + buf;
}

}  // namespace

Graph embed_standalone(const Pattern& p) {
    Graph g;
    for (const auto& d : p.dangling_inputs) g.inputs.push_back({d.value_id, d.concrete});
    g.constants = p.constants;
    g.nodes = p.nodes;
    for (const auto& d : p.dangling_outputs) g.outputs.push_back(d.value_id);
    return g;
}

AbstractPattern abstract_pattern(const Pattern& p) {
    AbstractPattern a;
    a.source = &p;
    for (const auto& d : p.dangling_inputs) {
        // Intrinsic structural requirement of the first consumer slot, with
        // no sibling knowledge: rank and dtype family only.
        const auto& [node_id, slot] = d.sites.front();
        const Node* n = nullptr;
        for (const auto& cand : p.nodes)
            if (cand.id == node_id) n = &cand;
        std::vector<std::optional<TensorType>> unknown(n->inputs.size());
        a.input_reqs.push_back(slot_requirement(n->op, n->attrs, unknown, slot));
    }
    return a;
}

std::vector<Pattern> extract(const PassTracePair& pair, const ExtractOptions& opts) {
    const PassDescriptor* desc = find_pass(pair.pass_name);
    Granularity gran = desc ? desc->granularity : Granularity::Subgraph;
    if (opts.mode == ExtractionMode::BlockOnly) gran = Granularity::Block;
    if (opts.mode == ExtractionMode::SubgraphOnly) gran = Granularity::Subgraph;

    std::vector<std::vector<int>> groups;
    if (opts.mode == ExtractionMode::WholeGraph) {
        std::vector<int> all(pair.graph.nodes.size());
        std::iota(all.begin(), all.end(), 0);
        if (!all.empty()) groups.push_back(all);
    } else {
        auto comps = subgraph_components(pair.graph);
        if (gran == Granularity::Subgraph) {
            groups = comps;
        } else {
            for (const auto& comp : comps)
                for (auto& b : block_split(pair.graph, comp)) groups.push_back(std::move(b));
        }
    }

    std::vector<Pattern> out;
    PassEngine probe;
    int index = 0;
    for (const auto& grp : groups) {
        Pattern p = build_pattern(pair, grp, gran, index++);
        if (p.nodes.empty()) continue;
        if (opts.require_trigger) {
            Graph embedded = embed_standalone(p);
            if (!validate(embedded).ok()) continue;
            PassResult res = probe.run_pass(p.target_pass, embedded);
            if (res.status != PassResult::Success || !res.fired) continue;
        }
        p.id = pattern_id_for(p);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Pattern> extract_corpus(const std::vector<CorpusEntry>& corpus,
                                    const ExtractOptions& opts) {
    std::vector<std::vector<Pattern>> per_entry(corpus.size());
#pragma omp parallel for schedule(dynamic)
    for (size_t i = 0; i < corpus.size(); ++i) {
        std::vector<CorpusEntry> one = {corpus[i]};
        auto pairs = collect_pairs(one);
        std::vector<Pattern> mine;
        for (const auto& pair : pairs) {
            for (auto& p : extract(pair, opts)) {
                p.provenance_file = corpus[i].name;
                mine.push_back(std::move(p));
            }
        }
        per_entry[i] = std::move(mine);
    }
    // Single-writer merge in corpus order; duplicates collapse by content hash.
    std::vector<Pattern> pool;
    std::set<std::string> seen;
    for (auto& entry_patterns : per_entry)
        for (auto& p : entry_patterns)
            if (seen.insert(p.id).second) pool.push_back(std::move(p));
    return pool;
}

std::string pattern_to_json(const Pattern& p) {
    ordered_json j;
    j["schema"] = "pattern-v1";
    j["id"] = p.id;
    j["target_pass"] = p.target_pass;
    j["granularity"] = granularity_name(p.granularity);
    Graph shell;
    shell.nodes = p.nodes;
    shell.constants = p.constants;
    ordered_json g = ordered_json::parse(serialize(shell));
    j["constants"] = g["constants"];
    j["nodes"] = g["nodes"];
    j["dangling_inputs"] = ordered_json::array();
    for (const auto& d : p.dangling_inputs) {
        ordered_json e;
        e["value"] = d.value_id;
        e["dtype"] = dtype_name(d.concrete.dtype);
        e["shape"] = d.concrete.shape;
        e["sites"] = ordered_json::array();
        for (const auto& [node, slot] : d.sites)
            e["sites"].push_back(ordered_json::array({node, slot}));
        j["dangling_inputs"].push_back(e);
    }
    j["dangling_outputs"] = ordered_json::array();
    for (const auto& d : p.dangling_outputs) {
        ordered_json e;
        e["value"] = d.value_id;
        e["dtype"] = dtype_name(d.concrete.dtype);
        e["shape"] = d.concrete.shape;
        j["dangling_outputs"].push_back(e);
    }
    j["provenance"] = {{"file", p.provenance_file}, {"index", p.provenance_index}};
    return j.dump(2) + "\n";
}

Pattern pattern_from_json(const std::string& text) {
    ordered_json j = ordered_json::parse(text);
    if (j.value("schema", "") != "pattern-v1") throw ParseError("not a pattern-v1 file");
    Pattern p;
    p.target_pass = j.at("target_pass").get<std::string>();
    std::string gran = j.value("granularity", "block");
    p.granularity = gran == "block" ? Granularity::Block : Granularity::Subgraph;

    ordered_json shell;
    shell["schema"] = "cg-v1";
    shell["inputs"] = ordered_json::array();
    shell["constants"] = j["constants"];
    shell["nodes"] = j["nodes"];
    shell["outputs"] = ordered_json::array();
    Graph g = parse(shell.dump());
    p.nodes = g.nodes;
    p.constants = g.constants;

    for (const auto& e : j.value("dangling_inputs", ordered_json::array())) {
        DanglingInput d;
        d.value_id = e.at("value").get<std::string>();
        dtype_from_name(e.at("dtype").get<std::string>(), d.concrete.dtype);
        for (const auto& x : e.at("shape")) d.concrete.shape.push_back(x.get<int64_t>());
        for (const auto& s : e.at("sites"))
            d.sites.push_back({s[0].get<std::string>(), s[1].get<int>()});
        p.dangling_inputs.push_back(std::move(d));
    }
    for (const auto& e : j.value("dangling_outputs", ordered_json::array())) {
        DanglingOutput d;
        d.value_id = e.at("value").get<std::string>();
        dtype_from_name(e.at("dtype").get<std::string>(), d.concrete.dtype);
        for (const auto& x : e.at("shape")) d.concrete.shape.push_back(x.get<int64_t>());
        p.dangling_outputs.push_back(std::move(d));
    }
    if (j.contains("provenance")) {
        p.provenance_file = j["provenance"].value("file", "");
        p.provenance_index = j["provenance"].value("index", 0);
    }
    p.id = pattern_id_for(p);
    std::string stored = j.value("id", "");
    if (!stored.empty() && stored != p.id)
        throw ParseError("pattern content does not match its stored id " + stored);
    return p;
}

void save_pattern(const Pattern& p, const std::string& dir) {
    fs::create_directories(dir);
    std::ofstream f(fs::path(dir) / (p.id + ".pattern.json"));
    f << pattern_to_json(p);
}

std::vector<Pattern> load_pattern_dir(const std::string& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().filename().string().ends_with(".pattern.json"))
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<Pattern> out;
    for (const auto& f : files) {
        std::ifstream in(f);
        std::ostringstream ss;
        ss << in.rdbuf();
        out.push_back(pattern_from_json(ss.str()));
    }
    return out;
}

}  // namespace cgfuzz
