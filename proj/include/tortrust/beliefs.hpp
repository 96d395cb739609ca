#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tortrust/attributes.hpp"
#include "tortrust/ontology.hpp"
#include "tortrust/predicate.hpp"
#include "tortrust/world.hpp"

namespace tortrust {

/// Five-valued trust scale, from surely compromised to surely trustworthy.
enum class TrustValue { SC, LC, U, LT, ST };

std::string_view to_string(TrustValue v);
std::optional<TrustValue> parse_trust_value(std::string_view s);

struct TrustScale {
    std::array<double, 5> mapping{0.999, 0.85, 0.5, 0.15, 0.02};
    /// Probabilities for compromise-effectiveness beliefs.
    std::array<double, 5> ce_mapping{0.999, 0.85, 0.5, 0.15, 0.02};

    double p(TrustValue v) const { return mapping[static_cast<std::size_t>(v)]; }
    double ce(TrustValue v) const { return ce_mapping[static_cast<std::size_t>(v)]; }
    bool operator==(const TrustScale&) const = default;
};

/// A trust level: a symbolic value or a literal probability in [0, 1].
using Level = std::variant<TrustValue, double>;
double resolve(const Level& level, const TrustScale& scale);
double resolve_ce(const Level& level, const TrustScale& scale);

// Structural beliefs.

struct NovelType {
    std::string name;
    std::vector<AttributeDef> required;
    std::vector<AttributeDef> optional;
    bool operator==(const NovelType&) const = default;
};
struct AddInstance {
    std::string type_name;
    AttributeMap data;
    NodeId id;
    bool operator==(const AddInstance&) const = default;
};
struct RemoveInstance {
    NodeId id;
    bool operator==(const RemoveInstance&) const = default;
};
struct AddRelationship {
    NodeId parent;
    NodeId child;
    bool operator==(const AddRelationship&) const = default;
};
struct RemoveRelationship {
    NodeId parent;
    NodeId child;
    bool operator==(const RemoveRelationship&) const = default;
};
struct SetAttribute {
    NodeId id;
    std::string name;
    AttrValue value;
    bool operator==(const SetAttribute&) const = default;
};

using StructuralBelief =
    std::variant<NovelType, AddInstance, RemoveInstance, AddRelationship, RemoveRelationship, SetAttribute>;

// Trust beliefs.

/// Adds the level's probability to the risk set of every matching node.
struct RelativeBelief {
    std::string tag;
    Predicate predicate;
    Level value;
    bool operator==(const RelativeBelief&) const = default;
};
/// Matching nodes are cut from their parents and compromised with the
/// level's probability. Later absolute beliefs win.
struct AbsoluteBelief {
    Predicate predicate;
    Level value;
    bool operator==(const AbsoluteBelief&) const = default;
};
/// "bu1": compromise of `instance` reaches k of its children of one type, in expectation.
struct TypeBudget {
    NodeId instance;
    std::string type_name;
    std::int64_t k = 0;
    bool operator==(const TypeBudget&) const = default;
};
/// "bu2": as TypeBudget, across all children.
struct AllBudget {
    NodeId instance;
    std::int64_t k = 0;
    bool operator==(const AllBudget&) const = default;
};
/// "ce1": with the level's probability, compromise of `instance` compromises
/// all of its children that satisfy the predicate.
struct PredicateCe {
    NodeId instance;
    Predicate predicate;
    Level value;
    bool operator==(const PredicateCe&) const = default;
};
/// "ce2": as PredicateCe over all children; suppresses other CE beliefs on the instance.
struct TopCe {
    NodeId instance;
    Level value;
    bool operator==(const TopCe&) const = default;
};

using TrustBelief = std::variant<RelativeBelief, AbsoluteBelief, TypeBudget, AllBudget, PredicateCe, TopCe>;
using BudgetBelief = std::variant<TypeBudget, AllBudget>;
using CeBelief = std::variant<PredicateCe, TopCe>;

struct BeliefDocument {
    TrustScale scale;
    std::vector<StructuralBelief> structural;
    std::vector<TrustBelief> trust;
    bool operator==(const BeliefDocument&) const = default;
};

/// Checks tag and range rules on one trust belief; throws SemanticError.
void validate_trust_belief(const TrustBelief& b);

/// Document format: a JSON object with optional keys
///
///     "scale":      {"SC": p, "LC": p, "U": p, "LT": p, "ST": p, "ce": {...}}
///     "structural": [["ut", name, {attr: type}|null, {attr: type}|null],
///                    ["inst", type, {attr: value}, id (, P, C)],
///                    ["rm_inst", id], ["rel", parent, child],
///                    ["rm_rel", parent, child], ["attr", id, name, value]]
///     "trust":      [["abs", pred, v], [tag, pred, v], ["bu1", id, type, k],
///                    ["bu2", id, "all", k], ["ce1", id, pred, v], ["ce2", id, "top", v]]
///
/// where v is a trust symbol or a probability. Errors carry the line of the
/// offending tuple.
BeliefDocument parse_belief_document(std::string_view text);
BeliefDocument belief_document_from_json(const Json& j);
Json to_json(const BeliefDocument& doc);
std::string serialize(const BeliefDocument& doc);

Json to_json(const TrustBelief& b);
TrustBelief trust_belief_from_json(const Json& j);

/// Compromise probability of a relay family with uptime u in [0, 1]:
/// p_max - (p_max - p_min) * u.
double the_man_family_probability(double uptime, double p_fam_max, double p_fam_min);

/// Adversary document compromising every relay family by longevity and
/// every AS and IXP organization with probability p_org. Throws
/// SemanticError when a family lacks a valid uptime attribute.
BeliefDocument build_the_man(const World& w, double p_org = 0.1, double p_fam_max = 0.1, double p_fam_min = 0.001);

}  // namespace tortrust
