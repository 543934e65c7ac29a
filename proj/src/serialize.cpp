// SPDX-License-Identifier: Apache-2.0
#include "cgfuzz/serialize.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cgfuzz {

using ordered_json = nlohmann::ordered_json;

namespace {

TensorType type_from_json(const ordered_json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("dtype") || !j.contains("shape"))
        throw ParseError(where + ": expected {dtype, shape}");
    TensorType t;
    if (!dtype_from_name(j["dtype"].get<std::string>(), t.dtype))
        throw ParseError(where + ": unknown dtype '" + j["dtype"].get<std::string>() + "'");
    for (const auto& e : j["shape"]) {
        if (!e.is_number_integer())
            throw ParseError(where + ": non-integer extent");
        t.shape.push_back(e.get<int64_t>());
    }
    return t;
}

ordered_json attrs_to_json(const Attrs& attrs) {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : attrs) {
        std::visit([&](const auto& x) { j[k] = x; }, v);
    }
    return j;
}

Attrs attrs_from_json(const ordered_json& j, const std::string& where) {
    Attrs attrs;
    if (j.is_null()) return attrs;
    if (!j.is_object()) throw ParseError(where + ": attrs must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& v = it.value();
        if (v.is_number_integer()) {
            attrs[it.key()] = v.get<int64_t>();
        } else if (v.is_number_float()) {
            attrs[it.key()] = v.get<double>();
        } else if (v.is_string()) {
            attrs[it.key()] = v.get<std::string>();
        } else if (v.is_array()) {
            std::vector<int64_t> xs;
            for (const auto& e : v) {
                if (!e.is_number_integer())
                    throw ParseError(where + ": attr '" + it.key() + "' has a non-integer element");
                xs.push_back(e.get<int64_t>());
            }
            attrs[it.key()] = xs;
        } else {
            throw ParseError(where + ": unsupported attr value for '" + it.key() + "'");
        }
    }
    return attrs;
}

}  // namespace

std::string serialize(const Graph& g) {
    ordered_json j;
    j["schema"] = "cg-v1";
    j["inputs"] = ordered_json::array();
    for (const auto& in : g.inputs) {
        ordered_json e;
        e["id"] = in.id;
        e["dtype"] = dtype_name(in.type.dtype);
        e["shape"] = in.type.shape;
        j["inputs"].push_back(e);
    }
    j["constants"] = ordered_json::array();
    for (const auto& [id, tv] : g.constants) {
        ordered_json e;
        e["id"] = id;
        e["dtype"] = dtype_name(tv.type.dtype);
        e["shape"] = tv.type.shape;
        e["data"] = tv.data;
        j["constants"].push_back(e);
    }
    j["nodes"] = ordered_json::array();
    for (const Node& n : g.nodes) {
        ordered_json e;
        e["id"] = n.id;
        e["op"] = n.op;
        e["inputs"] = n.inputs;
        e["attrs"] = attrs_to_json(n.attrs);
        e["outputs"] = ordered_json::array();
        for (const auto& out : n.outputs) {
            ordered_json o;
            o["id"] = out.id;
            o["dtype"] = dtype_name(out.type.dtype);
            o["shape"] = out.type.shape;
            e["outputs"].push_back(o);
        }
        j["nodes"].push_back(e);
    }
    j["outputs"] = g.outputs;
    return j.dump(2) + "\n";
}

Graph parse(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("schema", "") != "cg-v1")
        throw ParseError("missing or unsupported schema field (want \"cg-v1\")");

    Graph g;
    std::set<std::string> value_ids;
    std::set<std::string> node_ids;
    auto declare = [&](const std::string& id, const std::string& where) {
        if (id.empty()) throw ParseError(where + ": empty id");
        if (!value_ids.insert(id).second)
            throw ParseError(where + ": duplicate value id '" + id + "'");
    };

    for (const auto& e : j.value("inputs", ordered_json::array())) {
        ValueDecl d;
        d.id = e.value("id", "");
        d.type = type_from_json(e, "input '" + d.id + "'");
        declare(d.id, "inputs");
        g.inputs.push_back(d);
    }
    for (const auto& e : j.value("constants", ordered_json::array())) {
        std::string id = e.value("id", "");
        TensorValue tv;
        tv.type = type_from_json(e, "constant '" + id + "'");
        if (!e.contains("data") || !e["data"].is_array())
            throw ParseError("constant '" + id + "': missing data array");
        for (const auto& x : e["data"]) tv.data.push_back(x.get<double>());
        if (!tv.conforms())
            throw ParseError("constant '" + id + "': payload length does not match shape");
        declare(id, "constants");
        g.constants[id] = std::move(tv);
    }
    for (const auto& e : j.value("nodes", ordered_json::array())) {
        Node n;
        n.id = e.value("id", "");
        if (n.id.empty()) throw ParseError("node with empty id");
        if (!node_ids.insert(n.id).second)
            throw ParseError("duplicate node id '" + n.id + "'");
        n.op = e.value("op", "");
        for (const auto& in : e.value("inputs", ordered_json::array())) {
            std::string ref = in.get<std::string>();
            if (!value_ids.count(ref))
                throw ParseError("node '" + n.id + "' references missing value id '" + ref + "'");
            n.inputs.push_back(ref);
        }
        n.attrs = attrs_from_json(e.contains("attrs") ? e["attrs"] : ordered_json(),
                                  "node '" + n.id + "'");
        for (const auto& o : e.value("outputs", ordered_json::array())) {
            ValueDecl d;
            d.id = o.value("id", "");
            d.type = type_from_json(o, "node '" + n.id + "' output");
            declare(d.id, "node '" + n.id + "' outputs");
            n.outputs.push_back(d);
        }
        g.nodes.push_back(std::move(n));
    }
    for (const auto& o : j.value("outputs", ordered_json::array())) {
        std::string ref = o.get<std::string>();
        if (!value_ids.count(ref))
            throw ParseError("graph output references missing value id '" + ref + "'");
        g.outputs.push_back(ref);
    }
    return g;
}

void save_graph(const Graph& g, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << serialize(g);
}

Graph load_graph(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string graph_hash(const Graph& g) {
    char buf[17];
    snprintf(buf, sizeof buf, "%016llx",
             static_cast<unsigned long long>(fnv1a64(serialize(g))));
    return buf;
}

bool structurally_equal(const Graph& a, const Graph& b) {
    return serialize(a) == serialize(b);
}

}  // namespace cgfuzz
