// SPDX-License-Identifier: Apache-2.0
#include <json.hpp>

#include "cgfuzz/passes.hpp"

namespace cgfuzz {

// Injectable defects, one per campaign. Each mirrors a root-cause category
// observed in real compiler optimization bugs: ICL incorrect code logic,
// TSP tensor shape problem, TP type problem, IEH incorrect exception handling.
const std::vector<MutantId>& list_mutants() {
    static const std::vector<MutantId> muts = {
        {"ConstantFolding", 0, "constfold_casts_through_i32", "TP", "inconsistency",
         "folded float results are truncated through int32 before being stored"},
        {"ConstantFolding", 1, "constfold_drops_output_rebind", "ICL", "crash",
         "folding a node forgets to rebind graph outputs to the new constant"},
        {"AlgebraicSimplification", 0, "algsimp_self_sub_crash", "IEH", "crash",
         "raises a raw internal error when a Sub node aliases one value on both operands"},
        {"AlgebraicSimplification", 1, "algsimp_identity_input_corrupt", "ICL", "crash",
         "identity rewrites targeting a producer-less operand rewire consumers to a stale id"},
        {"ElementwiseFusion", 0, "fusion_null_deref", "IEH", "crash",
         "fusion candidate scan dereferences the producer of a graph input or constant"},
        {"ElementwiseFusion", 1, "fusion_drops_relu", "ICL", "inconsistency",
         "the fused node computes plain Add, silently losing the ReLU"},
        {"ReorderPermuteDimsAfterConcat", 0, "reorder_wrong_axis", "TSP", "inconsistency",
         "the rewritten concat keeps the permuted-space axis instead of remapping it"},
        {"ReorderPermuteDimsAfterConcat", 1, "reorder_mixed_concat_crash", "ICL", "crash",
         "a concat mixing permuted and plain operands crashes the candidate scan"},
        {"RedundantCastElimination", 0, "castelim_bool_chain_crash", "TP", "crash",
         "cast chains whose source value is bool overflow the dtype table"},
        {"RedundantCastElimination", 1, "castelim_rewires_inner", "ICL", "crash",
         "chain collapse rewires consumers to the inner cast value of the wrong dtype"},
        {"DeadCodeElimination", 0, "dce_drops_live_output", "ICL", "inconsistency",
         "block-scoped graph outputs with no node consumer are treated as dead"},
        {"CommonSubexpressionElimination", 0, "cse_ignores_attrs", "ICL", "inconsistency",
         "the expression key omits attrs, merging nodes that differ only in attrs"},
    };
    return muts;
}

const MutantId& find_mutant(const std::string& name) {
    for (const auto& m : list_mutants())
        if (m.name == name) return m;
    throw UnknownMutant("unknown mutant: " + name);
}

std::string mutants_to_json() {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& m : list_mutants()) {
        nlohmann::ordered_json e;
        e["name"] = m.name;
        e["pass"] = m.pass_name;
        e["index"] = m.index;
        e["root_cause"] = m.root_cause;
        e["symptom"] = m.symptom;
        e["description"] = m.description;
        j.push_back(e);
    }
    return j.dump(2) + "\n";
}

}  // namespace cgfuzz
