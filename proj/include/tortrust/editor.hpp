#pragma once

#include <map>
#include <string_view>
#include <vector>

#include "tortrust/beliefs.hpp"
#include "tortrust/ontology.hpp"
#include "tortrust/world.hpp"

namespace tortrust {

/// The world after structural beliefs have been applied, together with the
/// budget and compromise-effectiveness specs attached to its nodes.
struct EditedWorld {
    World world;
    Ontology ontology;
    std::map<NodeId, std::vector<BudgetBelief>> budgets;
    std::map<NodeId, std::vector<CeBelief>> ce_specs;
    /// Relationships added by the user; exempt from the ontology-edge check.
    RelationshipSet user_relationships;
    bool operator==(const EditedWorld&) const = default;
};

/// Applies, in order: novel types, instance additions/removals, relationship
/// additions/removals, attribute edits, then the document's budget and CE
/// trust beliefs. Throws SemanticError (cycle, duplicate or unknown id,
/// negative budget, overlapping CE predicates, budget/CE overlap) or
/// ValidationError when the result does not conform.
EditedWorld apply_structural(const World& w, const Ontology& o, const BeliefDocument& doc);

/// Children of `n` satisfying `p` (trust context), sorted by id.
std::vector<NodeId> children_matching(const EditedWorld& ew, std::string_view n, const Predicate& p);

Json to_json(const EditedWorld& ew);
EditedWorld edited_world_from_json(const Json& j);

}  // namespace tortrust
