#include "tortrust/world.hpp"

#include <algorithm>
#include <map>
#include <queue>

#include "detail.hpp"
#include "tortrust/error.hpp"

namespace tortrust {

World::World(std::vector<TypeInstance> instances, std::vector<RelationshipInstance> relationships)
    : instances_(std::move(instances)), relationships_(std::move(relationships)) {
    rebuild();
}

void World::rebuild() {
    index_.clear();
    index_.reserve(instances_.size());
    for (Index i = 0; i < instances_.size(); ++i) index_.emplace(instances_[i].id, i);
    children_.assign(instances_.size(), {});
    parents_.assign(instances_.size(), {});
    for (const auto& r : relationships_) {
        const Index p = index_of(r.parent);
        const Index c = index_of(r.child);
        if (p == npos || c == npos) continue;
        children_[p].push_back(c);
        parents_[c].push_back(p);
    }
}

World::Index World::index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? npos : it->second;
}

const TypeInstance* World::find(std::string_view id) const {
    const Index i = index_of(id);
    return i == npos ? nullptr : &instances_[i];
}

bool World::has_relationship(std::string_view parent, std::string_view child) const {
    const Index p = index_of(parent);
    const Index c = index_of(child);
    if (p == npos || c == npos) return false;
    if (children_[p].size() <= parents_[c].size())
        return std::find(children_[p].begin(), children_[p].end(), c) != children_[p].end();
    return std::find(parents_[c].begin(), parents_[c].end(), p) != parents_[c].end();
}

bool World::reaches(Index from, Index to) const {
    if (from == to) return true;
    std::vector<bool> seen(instances_.size(), false);
    std::vector<Index> stack{from};
    seen[from] = true;
    while (!stack.empty()) {
        const Index v = stack.back();
        stack.pop_back();
        for (Index c : children_[v]) {
            if (c == to) return true;
            if (!seen[c]) {
                seen[c] = true;
                stack.push_back(c);
            }
        }
    }
    return false;
}

std::optional<std::vector<World::Index>> World::topological_order() const {
    std::vector<std::size_t> indegree(instances_.size(), 0);
    for (Index i = 0; i < instances_.size(); ++i) indegree[i] = parents_[i].size();
    std::priority_queue<Index, std::vector<Index>, std::greater<>> ready;
    for (Index i = 0; i < instances_.size(); ++i)
        if (indegree[i] == 0) ready.push(i);
    std::vector<Index> order;
    order.reserve(instances_.size());
    while (!ready.empty()) {
        const Index v = ready.top();
        ready.pop();
        order.push_back(v);
        for (Index c : children_[v])
            if (--indegree[c] == 0) ready.push(c);
    }
    if (order.size() != instances_.size()) return std::nullopt;
    return order;
}

void World::add_instance(TypeInstance inst) {
    if (contains(inst.id)) throw SemanticError("duplicate instance id: " + inst.id);
    const Index i = instances_.size();
    index_.emplace(inst.id, i);
    instances_.push_back(std::move(inst));
    children_.emplace_back();
    parents_.emplace_back();
}

void World::add_relationship(RelationshipInstance rel) {
    const Index p = index_of(rel.parent);
    const Index c = index_of(rel.child);
    if (p == npos) throw SemanticError("unknown relationship parent: " + rel.parent);
    if (c == npos) throw SemanticError("unknown relationship child: " + rel.child);
    if (has_relationship(rel.parent, rel.child))
        throw SemanticError("duplicate relationship: " + rel.parent + " -> " + rel.child);
    children_[p].push_back(c);
    parents_[c].push_back(p);
    relationships_.push_back(std::move(rel));
}

bool World::remove_instance(std::string_view id) {
    const Index i = index_of(id);
    if (i == npos) return false;
    instances_.erase(instances_.begin() + static_cast<std::ptrdiff_t>(i));
    std::erase_if(relationships_, [&](const RelationshipInstance& r) { return r.parent == id || r.child == id; });
    rebuild();
    return true;
}

bool World::remove_relationship(std::string_view parent, std::string_view child) {
    const std::size_t before = relationships_.size();
    std::erase_if(relationships_, [&](const RelationshipInstance& r) { return r.parent == parent && r.child == child; });
    if (relationships_.size() == before) return false;
    rebuild();
    return true;
}

void World::set_attribute(std::string_view id, const std::string& name, AttrValue value) {
    const Index i = index_of(id);
    if (i == npos) throw SemanticError("unknown instance id: " + std::string(id));
    instances_[i].attributes[name] = std::move(value);
}

ValidationReport validate_world(const World& w, const Ontology& o, const RelationshipSet* exempt) {
    using K = Violation::Kind;
    ValidationReport out;

    std::map<std::string, std::size_t> seen;
    for (const auto& inst : w.instances())
        if (++seen[inst.id] == 2) out.push_back({K::DuplicateId, {inst.id}, "instance id is not unique"});

    for (const auto& inst : w.instances()) {
        const TypeDef* t = o.find_type(inst.type_name);
        if (t == nullptr) {
            out.push_back({K::UnknownType, {inst.id, inst.type_name}, "instance of undeclared type"});
            continue;
        }
        for (const auto& [name, value] : inst.attributes) {
            const AttributeDef* def = o.find_attribute(inst.type_name, name);
            if (def != nullptr && !conforms(value, def->data_type))
                out.push_back({K::AttributeType,
                               {inst.id, name},
                               "attribute declared " + std::string(to_string(def->data_type)) + " holds " +
                                   std::string(value_kind(value))});
        }
        for (const auto& def : t->attributes)
            if (def.requirement == Requirement::Required && !inst.attributes.contains(def.name))
                out.push_back({K::MissingRequiredAttribute, {inst.id, def.name}, "required attribute missing"});
    }

    for (const auto& r : w.relationships()) {
        const TypeInstance* p = w.find(r.parent);
        const TypeInstance* c = w.find(r.child);
        if (p == nullptr || c == nullptr) {
            out.push_back({K::UnknownEndpoint, {r.parent, r.child}, "relationship endpoint is not an instance"});
            continue;
        }
        const bool is_exempt = exempt != nullptr && exempt->contains({r.parent, r.child});
        const EdgeDef* e = o.find_edge(p->type_name, c->type_name);
        if (e == nullptr && !is_exempt) {
            out.push_back({K::EdgeNotInOntology,
                           {r.parent, r.child},
                           "no ontology edge " + p->type_name + " -> " + c->type_name});
            continue;
        }
        if (e != nullptr)
            for (const auto& [name, value] : r.attributes)
                for (const auto& def : e->attributes)
                    if (def.name == name && !conforms(value, def.data_type))
                        out.push_back({K::AttributeType, {r.parent + "->" + r.child, name}, "relationship attribute type"});
    }

    auto comps = detail::cyclic_components(w.size(), [&](std::size_t v) { return w.children(v); });
    for (const auto& comp : comps) {
        std::vector<std::string> members;
        for (std::size_t v : comp) members.push_back(w.at(v).id);
        out.push_back({K::Cycle, members, "instances form a cycle"});
    }
    return out;
}

Json to_json(const World& w) {
    Json inst = Json::array();
    for (const auto& i : w.instances())
        inst.push_back(Json{{"id", i.id}, {"type_name", i.type_name}, {"attributes", attributes_to_json(i.attributes)}});
    Json rels = Json::array();
    for (const auto& r : w.relationships()) {
        Json jr{{"parent", r.parent}, {"child", r.child}};
        if (!r.attributes.empty()) jr["attributes"] = attributes_to_json(r.attributes);
        rels.push_back(std::move(jr));
    }
    return Json{{"instances", std::move(inst)}, {"relationships", std::move(rels)}};
}

World world_from_json(const Json& j) {
    try {
        std::vector<TypeInstance> instances;
        instances.reserve(j.at("instances").size());
        for (const auto& i : j.at("instances"))
            instances.push_back(TypeInstance{i.at("id").get<std::string>(), i.at("type_name").get<std::string>(),
                                             attributes_from_json(i.value("attributes", Json()))});
        std::vector<RelationshipInstance> rels;
        rels.reserve(j.at("relationships").size());
        for (const auto& r : j.at("relationships"))
            rels.push_back(RelationshipInstance{r.at("parent").get<std::string>(), r.at("child").get<std::string>(),
                                                attributes_from_json(r.value("attributes", Json()))});
        return World(std::move(instances), std::move(rels));
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad world: ") + e.what());
    }
}

}  // namespace tortrust
