// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgfuzz/graph.hpp"
#include "cgfuzz/tensor.hpp"

namespace cgfuzz {

struct ConstraintViolation : std::runtime_error {
    explicit ConstraintViolation(const std::string& rule)
        : std::runtime_error(rule) {}
};

/// Structural rank requirement of an input slot.
struct RankReq {
    enum Kind { Any, Exact, AtLeast } kind = Any;
    int rank = 0;

    static RankReq any() { return {Any, 0}; }
    static RankReq exact(int r) { return {Exact, r}; }
    static RankReq at_least(int r) { return {AtLeast, r}; }
    bool admits(int r) const {
        switch (kind) {
            case Any: return true;
            case Exact: return r == rank;
            case AtLeast: return r >= rank;
        }
        return false;
    }
};

/// Loosened requirement for an input slot: intrinsic structure only, never
/// concrete extents. Optional fields refine the requirement when sibling
/// inputs or attrs pin part of the structure.
struct AbstractReq {
    DTypeClass dclass = DTypeClass::Any;
    RankReq rank = RankReq::any();
    std::optional<DType> exact_dtype;
    std::optional<int64_t> exact_count;           // e.g. Reshape target element count
    std::optional<int64_t> min_count;             // e.g. Crop needs at least `end`
    bool nonempty = false;                        // Pad cannot extend an empty tensor
    std::vector<std::pair<int, int64_t>> dim_eq;  // (axis, extent) pins
    std::vector<std::pair<int, int64_t>> dim_min; // (axis, minimum extent)
};

/// What a dangling edge demands of a candidate value: either the exact
/// original tensor type, or the abstract structural requirement left after
/// shape/type erasure.
struct InputRequirement {
    enum Kind { Concrete, Abstract } kind = Concrete;
    TensorType concrete;
    AbstractReq abstract;

    static InputRequirement make_concrete(TensorType t) {
        InputRequirement r;
        r.kind = Concrete;
        r.concrete = std::move(t);
        return r;
    }
    static InputRequirement make_abstract(AbstractReq a) {
        InputRequirement r;
        r.kind = Abstract;
        r.abstract = std::move(a);
        return r;
    }
};

/// true iff `candidate` satisfies the requirement. Concrete requirements
/// demand exact shape and dtype equality; abstract ones apply only the
/// intrinsic structural rules.
bool check_compatible(const TensorType& candidate, const InputRequirement& req);

/// Intrinsic constraint record of one operator kind. Constraints never fix
/// concrete extents, only structure: arity, rank, dtype family.
struct OpConstraint {
    std::string op;
    int min_arity = 1;
    int max_arity = 1;
    std::vector<RankReq> ranks;        // per slot; last entry repeats for variadics
    std::vector<DTypeClass> dclasses;  // same convention
    std::vector<std::string> attr_keys;
    bool pass_produced_only = false;   // never emitted by generators or bridges

    RankReq slot_rank(int slot) const;
    DTypeClass slot_class(int slot) const;
};

/// Fixed v1 operator set, in registry order.
const std::vector<OpConstraint>& op_registry();
const OpConstraint* find_op(const std::string& op);
bool is_known_op(const std::string& op);

/// Shape/type inference: output types for the given inputs and attrs.
/// Deterministic and total on inputs passing constraints; throws
/// ConstraintViolation naming the failed rule otherwise.
std::vector<TensorType> infer(const std::string& op,
                              const std::vector<TensorType>& input_types,
                              const Attrs& attrs);

/// Structural requirement of one input slot given the attrs and whatever
/// sibling input types are already known (nullopt = not yet fixed). Used by
/// the synthesizer to search context pools without breaking inference.
InputRequirement slot_requirement(const std::string& op, const Attrs& attrs,
                                  const std::vector<std::optional<TensorType>>& known,
                                  int slot);

/// Evaluation semantics. Inputs must satisfy the constraint record; outputs
/// come back already quantized to their inferred dtypes.
std::vector<TensorValue> eval_op(const std::string& op, const Attrs& attrs,
                                 const std::vector<TensorValue>& inputs);

}  // namespace cgfuzz
