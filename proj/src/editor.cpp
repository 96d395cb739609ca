#include "tortrust/editor.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "detail.hpp"
#include "tortrust/error.hpp"

namespace tortrust {

using detail::overloaded;

namespace {

const TypeInstance& require_instance(const World& w, std::string_view id, std::string_view what) {
    const TypeInstance* inst = w.find(id);
    if (inst == nullptr) throw SemanticError(std::string(what) + " refers to unknown instance " + std::string(id));
    return *inst;
}

std::set<NodeId> child_ids(const World& w, World::Index n, const std::function<bool(World::Index)>& keep) {
    std::set<NodeId> out;
    for (World::Index c : w.children(n))
        if (keep(c)) out.insert(w.at(c).id);
    return out;
}

std::set<NodeId> budget_scope(const World& w, const BudgetBelief& b) {
    return std::visit(overloaded{
                          [&](const TypeBudget& t) {
                              return child_ids(w, w.index_of(t.instance),
                                               [&](World::Index c) { return w.at(c).type_name == t.type_name; });
                          },
                          [&](const AllBudget& a) {
                              return child_ids(w, w.index_of(a.instance), [](World::Index) { return true; });
                          },
                      },
                      b);
}

void attach_budget(EditedWorld& ew, const BudgetBelief& b) {
    const auto& [id, k] = std::visit([](const auto& x) { return std::pair<const NodeId&, std::int64_t>(x.instance, x.k); }, b);
    require_instance(ew.world, id, "budget belief");
    if (k < 0) throw SemanticError("budget for " + id + " is negative: " + std::to_string(k));
    if (const auto* t = std::get_if<TypeBudget>(&b); t && ew.ontology.find_type(t->type_name) == nullptr)
        throw SemanticError("budget for " + id + " names unknown type " + t->type_name);
    ew.budgets[id].push_back(b);
}

void attach_ce(EditedWorld& ew, const CeBelief& b) {
    const NodeId& id = std::visit([](const auto& x) -> const NodeId& { return x.instance; }, b);
    const TypeInstance& inst = require_instance(ew.world, id, "compromise-effectiveness belief");
    const TypeDef* type = ew.ontology.find_type(inst.type_name);
    if (type != nullptr && type->is_output)
        throw SemanticError("compromise-effectiveness belief on output instance " + id);
    auto& specs = ew.ce_specs[id];
    if (std::holds_alternative<TopCe>(b) &&
        std::any_of(specs.begin(), specs.end(), [](const CeBelief& s) { return std::holds_alternative<TopCe>(s); }))
        throw SemanticError("more than one top compromise-effectiveness belief on " + id);
    specs.push_back(b);
}

/// Children covered by the effective CE specs of one node: everything under
/// a top spec, otherwise the union of the predicate matches, which must be
/// pairwise disjoint.
std::set<NodeId> ce_scope(const EditedWorld& ew, const NodeId& id, const std::vector<CeBelief>& specs) {
    const World::Index n = ew.world.index_of(id);
    if (std::any_of(specs.begin(), specs.end(), [](const CeBelief& s) { return std::holds_alternative<TopCe>(s); }))
        return child_ids(ew.world, n, [](World::Index) { return true; });
    std::set<NodeId> covered;
    for (const auto& s : specs) {
        const auto& ce = std::get<PredicateCe>(s);
        for (auto& c : children_matching(ew, id, ce.predicate))
            if (!covered.insert(c).second)
                throw SemanticError("compromise-effectiveness predicates on " + id + " overlap on child " + c);
    }
    return covered;
}

Json relationship_set_json(const RelationshipSet& s) {
    Json out = Json::array();
    for (const auto& [p, c] : s) out.push_back(Json::array({p, c}));
    return out;
}

}  // namespace

EditedWorld apply_structural(const World& w, const Ontology& o, const BeliefDocument& doc) {
    EditedWorld ew{w, o, {}, {}, {}};

    // Novel types.
    std::vector<TypeDef> novel;
    for (const auto& b : doc.structural)
        if (const auto* t = std::get_if<NovelType>(&b)) {
            TypeDef def{t->name, Label::User, false, {}};
            def.attributes = t->required;
            def.attributes.insert(def.attributes.end(), t->optional.begin(), t->optional.end());
            novel.push_back(std::move(def));
        }
    if (!novel.empty()) ew.ontology = extend_ontology(o, novel, {});

    // Instances.
    for (const auto& b : doc.structural) {
        if (const auto* a = std::get_if<AddInstance>(&b)) {
            if (ew.ontology.find_type(a->type_name) == nullptr)
                throw SemanticError("instance " + a->id + " has unknown type " + a->type_name);
            ew.world.add_instance(TypeInstance{a->id, a->type_name, a->data});
        } else if (const auto* r = std::get_if<RemoveInstance>(&b)) {
            if (!ew.world.remove_instance(r->id)) throw SemanticError("cannot remove unknown instance " + r->id);
        }
    }

    // Relationships.
    for (const auto& b : doc.structural) {
        if (const auto* a = std::get_if<AddRelationship>(&b)) {
            const World::Index p = ew.world.index_of(a->parent);
            const World::Index c = ew.world.index_of(a->child);
            if (p == World::npos || c == World::npos)
                throw SemanticError("relationship " + a->parent + " -> " + a->child + " has an unknown endpoint");
            if (ew.world.reaches(c, p))
                throw SemanticError("relationship " + a->parent + " -> " + a->child + " would create a cycle");
            ew.world.add_relationship(RelationshipInstance{a->parent, a->child, {}});
            ew.user_relationships.emplace(a->parent, a->child);
        } else if (const auto* r = std::get_if<RemoveRelationship>(&b)) {
            if (!ew.world.remove_relationship(r->parent, r->child))
                throw SemanticError("cannot remove unknown relationship " + r->parent + " -> " + r->child);
            ew.user_relationships.erase({r->parent, r->child});
        }
    }
    // Cascaded removals can leave stale exemptions behind.
    std::erase_if(ew.user_relationships,
                  [&](const auto& rel) { return !ew.world.has_relationship(rel.first, rel.second); });

    // Attributes.
    for (const auto& b : doc.structural)
        if (const auto* s = std::get_if<SetAttribute>(&b)) ew.world.set_attribute(s->id, s->name, s->value);

    ValidationReport report = validate_world(ew.world, ew.ontology, &ew.user_relationships);
    if (!report.empty()) throw ValidationError("edited world is invalid:\n" + format_report(report));

    // Budgets, then compromise effectiveness.
    for (const auto& b : doc.trust) {
        if (const auto* t = std::get_if<TypeBudget>(&b)) attach_budget(ew, *t);
        else if (const auto* a = std::get_if<AllBudget>(&b)) attach_budget(ew, *a);
    }
    for (const auto& b : doc.trust) {
        if (const auto* c = std::get_if<PredicateCe>(&b)) attach_ce(ew, *c);
        else if (const auto* t = std::get_if<TopCe>(&b)) attach_ce(ew, *t);
    }
    for (const auto& [id, specs] : ew.ce_specs) {
        const std::set<NodeId> covered = ce_scope(ew, id, specs);
        auto it = ew.budgets.find(id);
        if (it == ew.budgets.end()) continue;
        for (const auto& budget : it->second)
            for (const auto& c : budget_scope(ew.world, budget))
                if (covered.contains(c))
                    throw SemanticError("budget and compromise-effectiveness beliefs on " + id +
                                        " both cover child " + c);
    }
    return ew;
}

std::vector<NodeId> children_matching(const EditedWorld& ew, std::string_view n, const Predicate& p) {
    const World::Index i = ew.world.index_of(n);
    if (i == World::npos) throw SemanticError("unknown instance id: " + std::string(n));
    std::vector<NodeId> out;
    for (World::Index c : ew.world.children(i))
        if (eval_predicate(p, ew.world, c, EvalContext::Trust)) out.push_back(ew.world.at(c).id);
    std::sort(out.begin(), out.end());
    return out;
}

Json to_json(const EditedWorld& ew) {
    Json out = to_json(ew.world);
    out["ontology"] = to_json(ew.ontology);
    Json budgets = Json::object();
    for (const auto& [id, list] : ew.budgets) {
        Json a = Json::array();
        for (const auto& b : list) a.push_back(std::visit([](const auto& x) { return to_json(TrustBelief(x)); }, b));
        budgets[id] = std::move(a);
    }
    Json ce = Json::object();
    for (const auto& [id, list] : ew.ce_specs) {
        Json a = Json::array();
        for (const auto& b : list) a.push_back(std::visit([](const auto& x) { return to_json(TrustBelief(x)); }, b));
        ce[id] = std::move(a);
    }
    out["budgets"] = std::move(budgets);
    out["ce_specs"] = std::move(ce);
    out["user_relationships"] = relationship_set_json(ew.user_relationships);
    return out;
}

EditedWorld edited_world_from_json(const Json& j) {
    EditedWorld ew;
    ew.world = world_from_json(j);
    ew.ontology = j.contains("ontology") ? ontology_from_json(j["ontology"]) : default_ontology();
    if (j.contains("budgets"))
        for (const auto& [id, list] : j["budgets"].items())
            for (const auto& b : list) {
                TrustBelief t = trust_belief_from_json(b);
                if (auto* x = std::get_if<TypeBudget>(&t)) ew.budgets[id].push_back(*x);
                else if (auto* y = std::get_if<AllBudget>(&t)) ew.budgets[id].push_back(*y);
                else throw ParseError("budgets section of " + id + " holds a non-budget belief");
            }
    if (j.contains("ce_specs"))
        for (const auto& [id, list] : j["ce_specs"].items())
            for (const auto& b : list) {
                TrustBelief t = trust_belief_from_json(b);
                if (auto* x = std::get_if<PredicateCe>(&t)) ew.ce_specs[id].push_back(*x);
                else if (auto* y = std::get_if<TopCe>(&t)) ew.ce_specs[id].push_back(*y);
                else throw ParseError("ce_specs section of " + id + " holds a non-CE belief");
            }
    if (j.contains("user_relationships"))
        for (const auto& pair : j["user_relationships"])
            ew.user_relationships.emplace(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
    return ew;
}

}  // namespace tortrust
