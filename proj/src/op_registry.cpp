// SPDX-License-Identifier: Apache-2.0
#include "cgfuzz/op_registry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cgfuzz {

namespace {

constexpr int kVariadicMax = 8;

int64_t attr_int(const Attrs& attrs, const std::string& key) {
    auto it = attrs.find(key);
    if (it == attrs.end())
        throw ConstraintViolation("attr: missing '" + key + "'");
    if (const auto* v = std::get_if<int64_t>(&it->second)) return *v;
    throw ConstraintViolation("attr: '" + key + "' must be an integer");
}

std::vector<int64_t> attr_ints(const Attrs& attrs, const std::string& key) {
    auto it = attrs.find(key);
    if (it == attrs.end())
        throw ConstraintViolation("attr: missing '" + key + "'");
    if (const auto* v = std::get_if<std::vector<int64_t>>(&it->second)) return *v;
    throw ConstraintViolation("attr: '" + key + "' must be an integer list");
}

DType attr_dtype(const Attrs& attrs, const std::string& key) {
    auto it = attrs.find(key);
    if (it == attrs.end())
        throw ConstraintViolation("attr: missing '" + key + "'");
    const auto* s = std::get_if<std::string>(&it->second);
    DType d;
    if (!s || !dtype_from_name(*s, d))
        throw ConstraintViolation("attr: '" + key + "' must name a dtype");
    return d;
}

void require_arity(const std::string& op, size_t got, int lo, int hi) {
    if (static_cast<int>(got) < lo || static_cast<int>(got) > hi)
        throw ConstraintViolation("arity: " + op + " takes " + std::to_string(lo) +
                                  (lo == hi ? "" : ".." + std::to_string(hi)) +
                                  " inputs, got " + std::to_string(got));
}

void require_same_shape(const std::string& op, const TensorType& a, const TensorType& b) {
    if (a.shape != b.shape)
        throw ConstraintViolation("shape: " + op + " needs equal input shapes, got " +
                                  to_string(a) + " vs " + to_string(b));
}

void require_same_dtype(const std::string& op, const TensorType& a, const TensorType& b) {
    if (a.dtype != b.dtype)
        throw ConstraintViolation("dtype: " + op + " needs equal input dtypes, got " +
                                  to_string(a) + " vs " + to_string(b));
}

void require_class(const std::string& op, const TensorType& t, DTypeClass c) {
    if (!dtype_in_class(t.dtype, c))
        throw ConstraintViolation("dtype: " + op + " rejects " + to_string(t));
}

void check_result_caps(const std::string& op, const TensorType& t) {
    if (!t.within_caps())
        throw ConstraintViolation("caps: " + op + " result " + to_string(t) +
                                  " exceeds rank/extent caps");
}

}  // namespace

RankReq OpConstraint::slot_rank(int slot) const {
    if (ranks.empty()) return RankReq::any();
    return ranks[std::min<size_t>(slot, ranks.size() - 1)];
}

DTypeClass OpConstraint::slot_class(int slot) const {
    if (dclasses.empty()) return DTypeClass::Any;
    return dclasses[std::min<size_t>(slot, dclasses.size() - 1)];
}

const std::vector<OpConstraint>& op_registry() {
    static const std::vector<OpConstraint> regs = [] {
        std::vector<OpConstraint> v;
        auto add = [&](OpConstraint c) { v.push_back(std::move(c)); };
        // Elementwise binary, same-shape semantics (no broadcasting in v1).
        for (const char* op : {"Add", "Sub", "Mul"})
            add({op, 2, 2, {RankReq::any()}, {DTypeClass::Numeric}, {}, false});
        add({"ReLU", 1, 1, {RankReq::any()}, {DTypeClass::Numeric}, {}, false});
        add({"Sigmoid", 1, 1, {RankReq::any()}, {DTypeClass::Float}, {}, false});
        add({"Softmax", 1, 1, {RankReq::at_least(1)}, {DTypeClass::Float}, {"axis"}, false});
        add({"MatMul", 2, 2, {RankReq::exact(2)}, {DTypeClass::Numeric}, {}, false});
        add({"Concat", 1, kVariadicMax, {RankReq::at_least(1)}, {DTypeClass::Any}, {"axis"}, false});
        add({"PermuteDims", 1, 1, {RankReq::any()}, {DTypeClass::Any}, {"axes"}, false});
        add({"Reshape", 1, 1, {RankReq::any()}, {DTypeClass::Any}, {"target"}, false});
        add({"Pad", 1, 1, {RankReq::any()}, {DTypeClass::Any}, {"amounts"}, false});
        add({"Crop", 1, 1, {RankReq::any()}, {DTypeClass::Any}, {"begin", "end"}, false});
        add({"Cast", 1, 1, {RankReq::any()}, {DTypeClass::Any}, {"to"}, false});
        add({"Conv2D", 2, 2, {RankReq::exact(4), RankReq::exact(4)},
             {DTypeClass::Float, DTypeClass::Float}, {}, false});
        add({"BiasAdd", 2, 2, {RankReq::at_least(2), RankReq::exact(1)},
             {DTypeClass::Numeric, DTypeClass::Numeric}, {}, false});
        add({"FusedAddReLU", 2, 2, {RankReq::any()}, {DTypeClass::Numeric}, {}, true});
        return v;
    }();
    return regs;
}

const OpConstraint* find_op(const std::string& op) {
    for (const auto& c : op_registry())
        if (c.op == op) return &c;
    return nullptr;
}

bool is_known_op(const std::string& op) { return find_op(op) != nullptr; }

bool check_compatible(const TensorType& candidate, const InputRequirement& req) {
    if (req.kind == InputRequirement::Concrete) return candidate == req.concrete;
    const AbstractReq& a = req.abstract;
    if (!dtype_in_class(candidate.dtype, a.dclass)) return false;
    if (a.exact_dtype && candidate.dtype != *a.exact_dtype) return false;
    if (!a.rank.admits(candidate.rank())) return false;
    int64_t count = candidate.element_count();
    if (a.exact_count && count != *a.exact_count) return false;
    if (a.min_count && count < *a.min_count) return false;
    if (a.nonempty && count == 0) return false;
    for (auto [axis, extent] : a.dim_eq) {
        if (axis >= candidate.rank() || candidate.shape[axis] != extent) return false;
    }
    for (auto [axis, extent] : a.dim_min) {
        if (axis >= candidate.rank() || candidate.shape[axis] < extent) return false;
    }
    return true;
}

std::vector<TensorType> infer(const std::string& op,
                              const std::vector<TensorType>& in, const Attrs& attrs) {
    const OpConstraint* c = find_op(op);
    if (!c) throw ConstraintViolation("unknown op: " + op);
    require_arity(op, in.size(), c->min_arity, c->max_arity);
    for (size_t i = 0; i < in.size(); ++i) {
        const RankReq rr = c->slot_rank(static_cast<int>(i));
        if (!rr.admits(in[i].rank()))
            throw ConstraintViolation("rank: " + op + " input " + std::to_string(i) +
                                      " is " + to_string(in[i]) +
                                      (rr.kind == RankReq::Exact
                                           ? ", rank " + std::to_string(rr.rank) + " required"
                                           : ", rank >= " + std::to_string(rr.rank) + " required"));
        require_class(op, in[i], c->slot_class(static_cast<int>(i)));
    }

    if (op == "Add" || op == "Sub" || op == "Mul" || op == "FusedAddReLU") {
        require_same_shape(op, in[0], in[1]);
        require_same_dtype(op, in[0], in[1]);
        return {in[0]};
    }
    if (op == "ReLU" || op == "Sigmoid") return {in[0]};
    if (op == "Softmax") {
        int64_t axis = attr_int(attrs, "axis");
        if (axis < 0 || axis >= in[0].rank())
            throw ConstraintViolation("attr: Softmax axis out of range");
        return {in[0]};
    }
    if (op == "MatMul") {
        require_same_dtype(op, in[0], in[1]);
        if (in[0].shape[1] != in[1].shape[0])
            throw ConstraintViolation("shape: MatMul inner dimensions differ, " +
                                      to_string(in[0]) + " x " + to_string(in[1]));
        TensorType out{in[0].dtype, {in[0].shape[0], in[1].shape[1]}};
        check_result_caps(op, out);
        return {out};
    }
    if (op == "Concat") {
        int64_t axis = attr_int(attrs, "axis");
        const TensorType& first = in[0];
        if (axis < 0 || axis >= first.rank())
            throw ConstraintViolation("attr: Concat axis out of range");
        int64_t total = 0;
        for (const auto& t : in) {
            require_same_dtype(op, first, t);
            if (t.rank() != first.rank())
                throw ConstraintViolation("rank: Concat inputs must agree, got " +
                                          to_string(first) + " vs " + to_string(t));
            for (int d = 0; d < first.rank(); ++d) {
                if (d == axis) continue;
                if (t.shape[d] != first.shape[d])
                    throw ConstraintViolation("shape: Concat inputs differ off-axis, " +
                                              to_string(first) + " vs " + to_string(t));
            }
            total += t.shape[axis];
        }
        TensorType out = first;
        out.shape[axis] = total;
        check_result_caps(op, out);
        return {out};
    }
    if (op == "PermuteDims") {
        auto axes = attr_ints(attrs, "axes");
        if (static_cast<int>(axes.size()) != in[0].rank())
            throw ConstraintViolation("attr: PermuteDims axes length must equal input rank");
        std::set<int64_t> seen(axes.begin(), axes.end());
        if (seen.size() != axes.size() ||
            (axes.size() && (*seen.begin() != 0 || *seen.rbegin() != static_cast<int64_t>(axes.size()) - 1)))
            throw ConstraintViolation("attr: PermuteDims axes is not a permutation");
        // axes[d] names the output axis that input axis d moves to.
        TensorType out = in[0];
        for (size_t d = 0; d < axes.size(); ++d) out.shape[axes[d]] = in[0].shape[d];
        return {out};
    }
    if (op == "Reshape") {
        auto target = attr_ints(attrs, "target");
        TensorType out{in[0].dtype, target};
        if (!out.within_caps())
            throw ConstraintViolation("caps: Reshape target " + to_string(out));
        if (out.element_count() != in[0].element_count())
            throw ConstraintViolation("shape: Reshape must conserve element count, " +
                                      to_string(in[0]) + " -> " + to_string(out));
        return {out};
    }
    if (op == "Pad") {
        // Appends zeros at the flat tail; the result is rank-1.
        int64_t amounts = attr_int(attrs, "amounts");
        if (amounts < 0) throw ConstraintViolation("attr: Pad amounts must be >= 0");
        if (in[0].element_count() == 0)
            throw ConstraintViolation("shape: Pad cannot extend an empty tensor");
        TensorType out{in[0].dtype, {in[0].element_count() + amounts}};
        check_result_caps(op, out);
        return {out};
    }
    if (op == "Crop") {
        // Keeps the flat element range [begin, end); the result is rank-1.
        int64_t begin = attr_int(attrs, "begin");
        int64_t end = attr_int(attrs, "end");
        if (begin < 0 || end < begin || end > in[0].element_count())
            throw ConstraintViolation("attr: Crop range out of bounds");
        if (end == begin)
            throw ConstraintViolation("shape: Crop result must be non-empty");
        return {TensorType{in[0].dtype, {end - begin}}};
    }
    if (op == "Cast") {
        DType to = attr_dtype(attrs, "to");
        return {TensorType{to, in[0].shape}};
    }
    if (op == "Conv2D") {
        // NCHW data, OIHW weight, stride 1, no padding.
        require_same_dtype(op, in[0], in[1]);
        const auto& d = in[0].shape;
        const auto& w = in[1].shape;
        if (d[1] != w[1])
            throw ConstraintViolation("shape: Conv2D channel mismatch, data " +
                                      to_string(in[0]) + " weight " + to_string(in[1]));
        if (d[2] < w[2] || d[3] < w[3])
            throw ConstraintViolation("shape: Conv2D kernel larger than input");
        TensorType out{in[0].dtype, {d[0], w[0], d[2] - w[2] + 1, d[3] - w[3] + 1}};
        check_result_caps(op, out);
        return {out};
    }
    if (op == "BiasAdd") {
        require_same_dtype(op, in[0], in[1]);
        if (in[1].shape[0] != in[0].shape[1])
            throw ConstraintViolation("shape: BiasAdd bias length must equal channel axis, " +
                                      to_string(in[0]) + " vs " + to_string(in[1]));
        return {in[0]};
    }
    throw ConstraintViolation("unhandled op: " + op);
}

InputRequirement slot_requirement(const std::string& op, const Attrs& attrs,
                                  const std::vector<std::optional<TensorType>>& known,
                                  int slot) {
    const OpConstraint* c = find_op(op);
    if (!c) throw ConstraintViolation("unknown op: " + op);
    AbstractReq a;
    a.rank = c->slot_rank(slot);
    a.dclass = c->slot_class(slot);

    auto other = [&](int i) -> const TensorType* {
        if (i < 0 || i >= static_cast<int>(known.size())) return nullptr;
        return known[i] ? &*known[i] : nullptr;
    };

    if (op == "Add" || op == "Sub" || op == "Mul" || op == "FusedAddReLU") {
        if (const TensorType* t = other(1 - slot)) return InputRequirement::make_concrete(*t);
        return InputRequirement::make_abstract(a);
    }
    if (op == "Softmax") {
        int64_t axis = attr_int(attrs, "axis");
        a.rank = RankReq::at_least(static_cast<int>(axis) + 1);
        return InputRequirement::make_abstract(a);
    }
    if (op == "MatMul") {
        a.rank = RankReq::exact(2);
        if (const TensorType* t = other(1 - slot)) {
            a.exact_dtype = t->dtype;
            // Inner dimensions must meet: rows of the right factor, columns of
            // the left.
            if (slot == 0) a.dim_eq.push_back({1, t->shape[0]});
            else a.dim_eq.push_back({0, t->shape[1]});
        }
        return InputRequirement::make_abstract(a);
    }
    if (op == "Concat") {
        int64_t axis = attr_int(attrs, "axis");
        const TensorType* sibling = nullptr;
        for (size_t i = 0; i < known.size(); ++i)
            if (static_cast<int>(i) != slot && known[i]) { sibling = &*known[i]; break; }
        if (sibling) {
            a.exact_dtype = sibling->dtype;
            a.rank = RankReq::exact(sibling->rank());
            for (int d = 0; d < sibling->rank(); ++d)
                if (d != axis) a.dim_eq.push_back({d, sibling->shape[d]});
        } else {
            a.rank = RankReq::at_least(static_cast<int>(axis) + 1);
        }
        return InputRequirement::make_abstract(a);
    }
    if (op == "PermuteDims") {
        auto axes = attr_ints(attrs, "axes");
        a.rank = RankReq::exact(static_cast<int>(axes.size()));
        return InputRequirement::make_abstract(a);
    }
    if (op == "Reshape") {
        auto target = attr_ints(attrs, "target");
        int64_t n = 1;
        for (int64_t e : target) n *= e;
        a.exact_count = n;
        return InputRequirement::make_abstract(a);
    }
    if (op == "Pad") {
        a.nonempty = true;
        return InputRequirement::make_abstract(a);
    }
    if (op == "Crop") {
        a.min_count = attr_int(attrs, "end");
        return InputRequirement::make_abstract(a);
    }
    if (op == "Conv2D") {
        if (const TensorType* t = other(1 - slot)) {
            a.exact_dtype = t->dtype;
            if (slot == 0) {
                a.dim_eq.push_back({1, t->shape[1]});
                a.dim_min.push_back({2, t->shape[2]});
                a.dim_min.push_back({3, t->shape[3]});
            } else {
                a.dim_eq.push_back({1, t->shape[1]});
            }
        }
        return InputRequirement::make_abstract(a);
    }
    if (op == "BiasAdd") {
        if (const TensorType* t = other(1 - slot)) {
            a.exact_dtype = t->dtype;
            if (slot == 0) a.dim_eq.push_back({1, t->shape[0]});
            else return InputRequirement::make_concrete(TensorType{t->dtype, {t->shape[1]}});
        }
        return InputRequirement::make_abstract(a);
    }
    // ReLU, Sigmoid, Cast: intrinsic class/rank only.
    return InputRequirement::make_abstract(a);
}

namespace {

std::vector<int64_t> strides_of(const std::vector<int64_t>& shape) {
    std::vector<int64_t> st(shape.size(), 1);
    for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i)
        st[i] = st[i + 1] * shape[i + 1];
    return st;
}

}  // namespace

std::vector<TensorValue> eval_op(const std::string& op, const Attrs& attrs,
                                 const std::vector<TensorValue>& inputs) {
    std::vector<TensorType> in_types;
    in_types.reserve(inputs.size());
    for (const auto& v : inputs) in_types.push_back(v.type);
    std::vector<TensorType> out_types = infer(op, in_types, attrs);

    std::vector<TensorValue> outs;
    outs.reserve(out_types.size());
    for (const auto& t : out_types)
        outs.push_back(TensorValue{t, std::vector<double>(t.element_count(), 0.0)});

    const auto& a = inputs.size() > 0 ? inputs[0].data : outs[0].data;

    if (op == "Add" || op == "Sub" || op == "Mul") {
        const auto& b = inputs[1].data;
        for (size_t i = 0; i < a.size(); ++i) {
            double x = a[i], y = b[i];
            outs[0].data[i] = op == "Add" ? x + y : op == "Sub" ? x - y : x * y;
        }
    } else if (op == "ReLU") {
        for (size_t i = 0; i < a.size(); ++i) outs[0].data[i] = a[i] > 0 ? a[i] : 0.0;
    } else if (op == "Sigmoid") {
        for (size_t i = 0; i < a.size(); ++i) outs[0].data[i] = 1.0 / (1.0 + std::exp(-a[i]));
    } else if (op == "FusedAddReLU") {
        const auto& b = inputs[1].data;
        for (size_t i = 0; i < a.size(); ++i) {
            double s = a[i] + b[i];
            outs[0].data[i] = s > 0 ? s : 0.0;
        }
    } else if (op == "Softmax") {
        int64_t axis = attr_int(attrs, "axis");
        const auto& shape = inputs[0].type.shape;
        auto st = strides_of(shape);
        int64_t n = shape[axis], stride = st[axis];
        int64_t outer = 1;
        for (int64_t d = 0; d < axis; ++d) outer *= shape[d];
        int64_t inner = stride;
        for (int64_t o = 0; o < outer; ++o) {
            for (int64_t i = 0; i < inner; ++i) {
                int64_t base = o * n * inner + i;
                double mx = -std::numeric_limits<double>::infinity();
                for (int64_t k = 0; k < n; ++k) mx = std::max(mx, a[base + k * stride]);
                double sum = 0;
                for (int64_t k = 0; k < n; ++k) sum += std::exp(a[base + k * stride] - mx);
                for (int64_t k = 0; k < n; ++k)
                    outs[0].data[base + k * stride] = std::exp(a[base + k * stride] - mx) / sum;
            }
        }
    } else if (op == "MatMul") {
        const auto& b = inputs[1].data;
        int64_t m = inputs[0].type.shape[0], k = inputs[0].type.shape[1],
                n = inputs[1].type.shape[1];
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < n; ++j) {
                double s = 0;
                for (int64_t t = 0; t < k; ++t) s += a[i * k + t] * b[t * n + j];
                outs[0].data[i * n + j] = s;
            }
    } else if (op == "Concat") {
        int64_t axis = attr_int(attrs, "axis");
        const auto& oshape = outs[0].type.shape;
        int64_t inner = 1;
        for (size_t d = axis + 1; d < oshape.size(); ++d) inner *= oshape[d];
        int64_t outer = 1;
        for (int64_t d = 0; d < axis; ++d) outer *= oshape[d];
        int64_t out_axis = oshape[axis];
        int64_t offset = 0;
        for (const auto& in : inputs) {
            int64_t in_axis = in.type.shape[axis];
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t x = 0; x < in_axis; ++x)
                    for (int64_t i = 0; i < inner; ++i)
                        outs[0].data[(o * out_axis + offset + x) * inner + i] =
                            in.data[(o * in_axis + x) * inner + i];
            offset += in_axis;
        }
    } else if (op == "PermuteDims") {
        auto axes = attr_ints(attrs, "axes");
        const auto& ishape = inputs[0].type.shape;
        auto ist = strides_of(ishape);
        auto ost = strides_of(outs[0].type.shape);
        int64_t n = inputs[0].type.element_count();
        std::vector<int64_t> idx(ishape.size(), 0);
        for (int64_t flat = 0; flat < n; ++flat) {
            int64_t rem = flat, oflat = 0;
            for (size_t d = 0; d < ishape.size(); ++d) {
                idx[d] = rem / ist[d];
                rem %= ist[d];
                oflat += idx[d] * ost[axes[d]];
            }
            outs[0].data[oflat] = a[flat];
        }
    } else if (op == "Reshape") {
        outs[0].data = a;
    } else if (op == "Pad") {
        std::copy(a.begin(), a.end(), outs[0].data.begin());
    } else if (op == "Crop") {
        int64_t begin = attr_int(attrs, "begin"), end = attr_int(attrs, "end");
        std::copy(a.begin() + begin, a.begin() + end, outs[0].data.begin());
    } else if (op == "Cast") {
        outs[0].data = a;
    } else if (op == "Conv2D") {
        const auto& w = inputs[1];
        const auto& ds = inputs[0].type.shape;
        const auto& ws = w.type.shape;
        int64_t N = ds[0], C = ds[1], H = ds[2], W = ds[3];
        int64_t O = ws[0], KH = ws[2], KW = ws[3];
        int64_t OH = H - KH + 1, OW = W - KW + 1;
        for (int64_t n = 0; n < N; ++n)
            for (int64_t o = 0; o < O; ++o)
                for (int64_t y = 0; y < OH; ++y)
                    for (int64_t x = 0; x < OW; ++x) {
                        double s = 0;
                        for (int64_t c = 0; c < C; ++c)
                            for (int64_t ky = 0; ky < KH; ++ky)
                                for (int64_t kx = 0; kx < KW; ++kx)
                                    s += a[((n * C + c) * H + y + ky) * W + x + kx] *
                                         w.data[((o * C + c) * KH + ky) * KW + kx];
                        outs[0].data[((n * O + o) * OH + y) * OW + x] = s;
                    }
    } else if (op == "BiasAdd") {
        const auto& b = inputs[1].data;
        const auto& shape = inputs[0].type.shape;
        int64_t ch = shape[1];
        int64_t inner = 1;
        for (size_t d = 2; d < shape.size(); ++d) inner *= shape[d];
        int64_t n = inputs[0].type.element_count();
        for (int64_t i = 0; i < n; ++i)
            outs[0].data[i] = a[i] + b[(i / inner) % ch];
    } else {
        throw ConstraintViolation("unhandled op: " + op);
    }

    for (auto& o : outs) quantize_buffer(o.type.dtype, o.data);
    return outs;
}

}  // namespace cgfuzz
