// SPDX-License-Identifier: Apache-2.0
#include "cgfuzz/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cgfuzz/interpreter.hpp"
#include "cgfuzz/serialize.hpp"

namespace cgfuzz {

const char* bug_kind_name(BugKind k) {
    return k == BugKind::Crash ? "crash" : "inconsistency";
}

double chebyshev(const TensorValue& a, const TensorValue& b) {
    if (!(a.type == b.type))
        throw ShapeMismatch("chebyshev over mismatched types: " + to_string(a.type) +
                            " vs " + to_string(b.type));
    double worst = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double x = a.data[i], y = b.data[i];
        if (std::isnan(x) || std::isnan(y))
            return std::numeric_limits<double>::infinity();
        worst = std::max(worst, std::abs(x - y));
    }
    return worst;
}

std::string normalize_message(const std::string& msg) {
    std::string out;
    out.reserve(msg.size());
    bool in_digits = false;
    for (char c : msg) {
        if (c >= '0' && c <= '9') {
            if (!in_digits) out.push_back('#');
            in_digits = true;
        } else {
            in_digits = false;
            out.push_back(c);
        }
    }
    return out;
}

std::string dedup_key_for(const BugReport& report) {
    if (report.kind == BugKind::Crash)
        return "crash:" + normalize_message(report.crash_message);
    std::vector<std::string> passes = report.minimal_passes;
    std::sort(passes.begin(), passes.end());
    std::string key = "ic:";
    for (const auto& p : passes) key += p + ",";
    return key;
}

namespace {

std::vector<TensorType> output_types(const Graph& g) {
    ValueIndex idx(g);
    std::vector<TensorType> out;
    out.reserve(g.outputs.size());
    for (const auto& id : g.outputs) out.push_back(idx.type(id));
    return out;
}

/// Runs one pipeline and compares against precomputed baselines.
/// Returns clean=true, or the bug skeleton (kind/message/distance).
struct PipelineCheck {
    bool clean = true;
    BugKind kind = BugKind::Crash;
    std::string crash_message;
    double distance = 0.0;
    std::vector<bool> fired;
};

PipelineCheck check_pipeline(const Graph& g, const std::vector<std::string>& pipeline,
                             const OracleConfig& cfg, const PassEngine& engine,
                             const std::vector<std::map<std::string, TensorValue>>& inputs,
                             const std::vector<std::vector<TensorValue>>& baselines,
                             const std::vector<TensorType>& base_types) {
    PipelineCheck r;
    PipelineResult pr = engine.run_pipeline(pipeline, g);
    r.fired = pr.fired;
    if (pr.status == PipelineResult::Crashed) {
        r.clean = false;
        r.kind = BugKind::Crash;
        r.crash_message = pr.crash_message;
        return r;
    }
    // Signature agreement: same output arity and tensor types.
    std::vector<TensorType> opt_types = output_types(pr.graph);
    if (opt_types.size() != base_types.size() ||
        !std::equal(opt_types.begin(), opt_types.end(), base_types.begin())) {
        r.clean = false;
        r.kind = BugKind::Inconsistency;
        r.distance = std::numeric_limits<double>::infinity();
        return r;
    }
    for (size_t k = 0; k < inputs.size(); ++k) {
        std::vector<TensorValue> opt_out = execute_outputs(pr.graph, inputs[k]);
        double worst = 0.0;
        for (size_t j = 0; j < opt_out.size(); ++j)
            worst = std::max(worst, chebyshev(baselines[k][j], opt_out[j]));
        if (worst > cfg.threshold) {
            r.clean = false;
            r.kind = BugKind::Inconsistency;
            r.distance = worst;
            return r;
        }
    }
    return r;
}

}  // namespace

Verdict test_one(const Graph& g, const std::vector<std::vector<std::string>>& pipelines,
                 const OracleConfig& cfg, const PassEngine& engine, uint64_t oracle_seed) {
    Verdict v;
    std::vector<std::map<std::string, TensorValue>> inputs;
    std::vector<std::vector<TensorValue>> baselines;
    for (int k = 0; k < cfg.input_seeds; ++k) {
        inputs.push_back(gen_inputs(g, oracle_seed + static_cast<uint64_t>(k)));
        baselines.push_back(execute_outputs(g, inputs.back()));
    }
    std::vector<TensorType> base_types = output_types(g);

    for (size_t i = 0; i < pipelines.size(); ++i) {
        PipelineCheck c =
            check_pipeline(g, pipelines[i], cfg, engine, inputs, baselines, base_types);
        if (i == 0) v.first_pipeline_fired = c.fired;
        if (c.clean) continue;
        v.clean = false;
        v.report.kind = c.kind;
        v.report.crash_message = c.crash_message;
        v.report.distance = c.distance;
        v.report.failing_pipeline = pipelines[i];
        v.report.graph_hash = graph_hash(g);
        v.report.pipelines = pipelines;
        v.report.oracle_seed = oracle_seed;
        if (engine.active_mutant()) v.report.mutant = engine.active_mutant()->name;
        return v;
    }
    return v;
}

namespace {

/// Does this pass subsequence still reveal the same bug?
bool still_fails(const Graph& g, const std::vector<std::string>& passes,
                 const BugReport& shape, const OracleConfig& cfg, const PassEngine& engine,
                 uint64_t oracle_seed) {
    Verdict v = test_one(g, {passes}, cfg, engine, oracle_seed);
    if (v.clean) return false;
    if (v.report.kind != shape.kind) return false;
    if (shape.kind == BugKind::Crash)
        return normalize_message(v.report.crash_message) ==
               normalize_message(shape.crash_message);
    return true;
}

}  // namespace

std::vector<std::string> minimize_passes(const Graph& g,
                                         const std::vector<std::string>& failing_pipeline,
                                         const OracleConfig& cfg, const PassEngine& engine,
                                         uint64_t oracle_seed) {
    Verdict first = test_one(g, {failing_pipeline}, cfg, engine, oracle_seed);
    if (first.clean)
        throw NotReproducible("pipeline no longer fails; execution is expected to be deterministic");
    const BugReport& shape = first.report;

    // ddmin over the pass sequence: repeatedly try dropping chunks.
    std::vector<std::string> seq = failing_pipeline;
    size_t n = 2;
    while (seq.size() >= 2) {
        bool reduced = false;
        size_t chunk = std::max<size_t>(1, seq.size() / n);
        for (size_t start = 0; start < seq.size(); start += chunk) {
            std::vector<std::string> candidate;
            for (size_t i = 0; i < seq.size(); ++i)
                if (i < start || i >= start + chunk) candidate.push_back(seq[i]);
            if (candidate.empty()) continue;
            if (still_fails(g, candidate, shape, cfg, engine, oracle_seed)) {
                seq = candidate;
                n = std::max<size_t>(2, n - 1);
                reduced = true;
                break;
            }
        }
        if (!reduced) {
            if (n >= seq.size()) break;
            n = std::min(n * 2, seq.size());
        }
    }

    // Final sweep guarantees 1-minimality: no single pass can be dropped.
    bool stable = false;
    while (!stable && seq.size() > 1) {
        stable = true;
        for (size_t i = 0; i < seq.size(); ++i) {
            std::vector<std::string> candidate = seq;
            candidate.erase(candidate.begin() + i);
            if (still_fails(g, candidate, shape, cfg, engine, oracle_seed)) {
                seq = candidate;
                stable = false;
                break;
            }
        }
    }
    return seq;
}

bool BugStore::add(const BugReport& report) {
    std::string key = report.dedup_key.empty() ? dedup_key_for(report) : report.dedup_key;
    auto [it, fresh] = reports_.emplace(key, report);
    if (fresh) it->second.dedup_key = key;
    return fresh;
}

}  // namespace cgfuzz
