#include "tortrust/ontology.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "detail.hpp"
#include "tortrust/error.hpp"

namespace tortrust {

std::string_view to_string(Label l) { return l == Label::System ? "system" : "user"; }
std::string_view to_string(Requirement r) { return r == Requirement::Required ? "required" : "optional"; }

std::string_view to_string(Violation::Kind k) {
    using K = Violation::Kind;
    switch (k) {
        case K::Cycle: return "cycle";
        case K::DanglingEdge: return "dangling-edge";
        case K::LabelRule: return "label-rule";
        case K::OutputHasOutgoingEdge: return "output-has-outgoing-edge";
        case K::DuplicateName: return "duplicate-name";
        case K::DuplicateAttribute: return "duplicate-attribute";
        case K::DuplicateId: return "duplicate-id";
        case K::UnknownType: return "unknown-type";
        case K::UnknownEndpoint: return "unknown-endpoint";
        case K::EdgeNotInOntology: return "edge-not-in-ontology";
        case K::AttributeType: return "attribute-type";
        case K::MissingRequiredAttribute: return "missing-required-attribute";
    }
    return "unknown";
}

std::string format_report(const ValidationReport& report) {
    std::ostringstream os;
    for (const Violation& v : report) {
        os << to_string(v.kind) << ": " << v.message;
        if (!v.elements.empty()) {
            os << " [";
            for (std::size_t i = 0; i < v.elements.size(); ++i) os << (i ? ", " : "") << v.elements[i];
            os << "]";
        }
        os << "\n";
    }
    return os.str();
}

const AttributeDef* TypeDef::find_attribute(std::string_view attr) const {
    for (const auto& a : attributes)
        if (a.name == attr) return &a;
    return nullptr;
}

Ontology::Ontology(std::vector<TypeDef> types, std::vector<EdgeDef> edges, std::vector<AttributeDef> common)
    : types_(std::move(types)), edges_(std::move(edges)), common_(std::move(common)) {}

const TypeDef* Ontology::find_type(std::string_view name) const {
    for (const auto& t : types_)
        if (t.name == name) return &t;
    return nullptr;
}

const EdgeDef* Ontology::find_edge(std::string_view from, std::string_view to) const {
    for (const auto& e : edges_)
        if (e.from_type == from && e.to_type == to) return &e;
    return nullptr;
}

const AttributeDef* Ontology::find_attribute(std::string_view type, std::string_view attr) const {
    const TypeDef* t = find_type(type);
    if (t == nullptr) return nullptr;
    if (const AttributeDef* a = t->find_attribute(attr)) return a;
    if (!t->is_output)
        for (const auto& a : common_)
            if (a.name == attr) return &a;
    return nullptr;
}

std::optional<std::vector<std::string>> Ontology::topological_order() const {
    std::map<std::string, std::size_t> indegree;
    std::map<std::string, std::vector<std::string>> succ;
    for (const auto& t : types_) indegree.emplace(t.name, 0);
    for (const auto& e : edges_) {
        if (!indegree.contains(e.from_type) || !indegree.contains(e.to_type)) continue;
        ++indegree[e.to_type];
        succ[e.from_type].push_back(e.to_type);
    }
    std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
    for (const auto& [name, d] : indegree)
        if (d == 0) ready.push(name);
    std::vector<std::string> order;
    while (!ready.empty()) {
        std::string t = ready.top();
        ready.pop();
        order.push_back(t);
        for (const auto& s : succ[t])
            if (--indegree[s] == 0) ready.push(s);
    }
    if (order.size() != indegree.size()) return std::nullopt;
    return order;
}

namespace {

AttributeDef attr(std::string_view name, DataType type, Label source) {
    return AttributeDef{std::string(name), type, source, Requirement::Optional};
}

TypeDef type(std::string_view name, Label label, std::vector<AttributeDef> attributes = {}, bool output = false) {
    return TypeDef{std::string(name), label, output, std::move(attributes)};
}

EdgeDef edge(std::string_view from, std::string_view to, Label label) {
    return EdgeDef{std::string(from), std::string(to), label, {}};
}

void check_attribute_names(const std::vector<AttributeDef>& attrs, const std::string& owner, ValidationReport& out) {
    std::set<std::string> seen;
    for (const auto& a : attrs)
        if (!seen.insert(a.name).second)
            out.push_back({Violation::Kind::DuplicateAttribute, {owner, a.name}, "attribute declared twice"});
}

}  // namespace

Ontology default_ontology() {
    using namespace types;
    constexpr Label S = Label::System;
    constexpr Label U = Label::User;

    std::vector<TypeDef> t{
        type(LegalJurisdiction, S,
             {attr(attrs::Country, DataType::String, S), attr(attrs::Region, DataType::PredicateText, U)}),
        type(AsOrganization, S),
        type(IxpOrganization, S),
        type(As, S, {attr(attrs::AsNumber, DataType::Integer, S)}),
        type(Ixp, S, {attr(attrs::IxpName, DataType::String, S), attr(attrs::PhysicalLocation, DataType::CoordinatePair, S)}),
        type(Corporation, U),
        type(HostingService, U),
        type(RouterSwitch, U, {attr(attrs::RouterSwitchKind, DataType::StringSet, U)}),
        type(PhysicalConnection, U, {attr(attrs::ConnectionType, DataType::String, U)}),
        type(RelayFamily, S, {attr(attrs::Uptime, DataType::Real, S)}),
        type(RelayOperator, U),
        type(TorRelay, S,
             {attr(attrs::RelaySoftware, DataType::String, S), attr(attrs::PhysicalLocation, DataType::CoordinatePair, S),
              attr(attrs::RelayHardware, DataType::StringSet, U), attr(attrs::Fingerprint, DataType::String, S),
              attr(attrs::Flags, DataType::StringSet, S), attr(attrs::Bandwidth, DataType::Real, S),
              attr(attrs::Ip, DataType::String, S), attr(attrs::AsNumber, DataType::Integer, S)},
             true),
        type(VirtualLink, S, {attr(attrs::AsNumber, DataType::Integer, S), attr(attrs::Fingerprint, DataType::String, S)},
             true),
    };

    std::vector<EdgeDef> e{
        edge(LegalJurisdiction, AsOrganization, U),
        edge(LegalJurisdiction, IxpOrganization, U),
        edge(LegalJurisdiction, Corporation, U),
        edge(LegalJurisdiction, HostingService, U),
        edge(LegalJurisdiction, TorRelay, S),
        edge(LegalJurisdiction, Ixp, S),
        edge(AsOrganization, As, S),
        edge(IxpOrganization, Ixp, S),
        edge(Corporation, HostingService, U),
        edge(Corporation, As, U),
        edge(Corporation, Ixp, U),
        edge(HostingService, TorRelay, U),
        edge(As, RouterSwitch, U),
        edge(As, VirtualLink, S),
        edge(Ixp, RouterSwitch, U),
        edge(Ixp, VirtualLink, S),
        edge(RouterSwitch, VirtualLink, U),
        edge(PhysicalConnection, VirtualLink, U),
        edge(RelayFamily, TorRelay, S),
        edge(RelayOperator, TorRelay, U),
    };

    std::vector<AttributeDef> common{attr(attrs::Budget, DataType::BudgetSpec, U),
                                     attr(attrs::CompromiseEffectiveness, DataType::CeSpec, U)};
    return Ontology(std::move(t), std::move(e), std::move(common));
}

ValidationReport validate_ontology(const Ontology& o) {
    ValidationReport out;
    std::map<std::string, std::size_t> idx;
    for (const auto& t : o.types()) {
        if (!idx.emplace(t.name, idx.size()).second)
            out.push_back({Violation::Kind::DuplicateName, {t.name}, "type name declared twice"});
        check_attribute_names(t.attributes, t.name, out);
    }
    check_attribute_names(o.common_attributes(), "<common>", out);

    std::vector<std::vector<std::size_t>> succ(idx.size());
    std::set<std::pair<std::string, std::string>> seen_edges;
    for (const auto& e : o.edges()) {
        const std::string name = e.from_type + "->" + e.to_type;
        const TypeDef* from = o.find_type(e.from_type);
        const TypeDef* to = o.find_type(e.to_type);
        if (!seen_edges.insert({e.from_type, e.to_type}).second)
            out.push_back({Violation::Kind::DuplicateName, {name}, "edge declared twice"});
        check_attribute_names(e.attributes, name, out);
        if (from == nullptr || to == nullptr) {
            std::vector<std::string> missing;
            if (from == nullptr) missing.push_back(e.from_type);
            if (to == nullptr) missing.push_back(e.to_type);
            out.push_back({Violation::Kind::DanglingEdge, {name}, "edge endpoint is not a declared type: " + missing.front()});
            continue;
        }
        if ((from->label == Label::User || to->label == Label::User) && e.label != Label::User)
            out.push_back({Violation::Kind::LabelRule, {name}, "edge touching a user type must be labeled user"});
        if (from->is_output)
            out.push_back({Violation::Kind::OutputHasOutgoingEdge, {from->name, name}, "output type has an outgoing edge"});
        succ[idx[e.from_type]].push_back(idx[e.to_type]);
    }

    std::vector<std::string> names(idx.size());
    for (const auto& [n, i] : idx) names[i] = n;
    auto comps = detail::cyclic_components(succ.size(), [&](std::size_t v) { return std::span<const std::size_t>(succ[v]); });
    for (const auto& comp : comps) {
        std::vector<std::string> members;
        for (std::size_t v : comp) members.push_back(names[v]);
        std::sort(members.begin(), members.end());
        out.push_back({Violation::Kind::Cycle, members, "types form a cycle"});
    }
    return out;
}

Ontology extend_ontology(const Ontology& o, const std::vector<TypeDef>& new_types, const std::vector<EdgeDef>& new_edges) {
    std::vector<TypeDef> types = o.types();
    for (const auto& t : new_types) {
        if (o.find_type(t.name) != nullptr ||
            std::count_if(new_types.begin(), new_types.end(), [&](const TypeDef& u) { return u.name == t.name; }) > 1)
            throw SemanticError("duplicate type name: " + t.name);
        types.push_back(t);
    }
    std::vector<EdgeDef> edges = o.edges();
    edges.insert(edges.end(), new_edges.begin(), new_edges.end());
    Ontology merged(std::move(types), std::move(edges), o.common_attributes());
    ValidationReport report = validate_ontology(merged);
    if (!report.empty()) throw SemanticError("extended ontology is invalid:\n" + format_report(report));
    return merged;
}

Json to_json(const AttributeDef& a) {
    return Json{{"name", a.name},
                {"data_type", std::string(to_string(a.data_type))},
                {"source", std::string(to_string(a.source))},
                {"requirement", std::string(to_string(a.requirement))}};
}

namespace {

Label parse_label(const Json& j) {
    const auto s = j.get<std::string>();
    if (s == "system") return Label::System;
    if (s == "user") return Label::User;
    throw ParseError("unknown label: " + s);
}

Json attributes_json(const std::vector<AttributeDef>& attrs) {
    Json a = Json::array();
    for (const auto& d : attrs) a.push_back(to_json(d));
    return a;
}

std::vector<AttributeDef> attributes_from(const Json& j, const char* key) {
    std::vector<AttributeDef> out;
    if (j.contains(key))
        for (const auto& a : j.at(key)) out.push_back(attribute_def_from_json(a));
    return out;
}

}  // namespace

AttributeDef attribute_def_from_json(const Json& j) {
    try {
        AttributeDef a;
        a.name = j.at("name").get<std::string>();
        const auto dt = j.at("data_type").get<std::string>();
        auto parsed = parse_data_type(dt);
        if (!parsed) throw ParseError("unknown data type: " + dt);
        a.data_type = *parsed;
        a.source = j.contains("source") ? parse_label(j["source"]) : Label::User;
        const auto req = j.value("requirement", std::string("optional"));
        if (req != "required" && req != "optional") throw ParseError("unknown requirement: " + req);
        a.requirement = req == "required" ? Requirement::Required : Requirement::Optional;
        return a;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad attribute definition: ") + e.what());
    }
}

Json to_json(const Ontology& o) {
    Json types = Json::array();
    for (const auto& t : o.types())
        types.push_back(Json{{"name", t.name},
                             {"label", std::string(to_string(t.label))},
                             {"is_output", t.is_output},
                             {"attributes", attributes_json(t.attributes)}});
    Json edges = Json::array();
    for (const auto& e : o.edges())
        edges.push_back(Json{{"from_type", e.from_type},
                             {"to_type", e.to_type},
                             {"label", std::string(to_string(e.label))},
                             {"attributes", attributes_json(e.attributes)}});
    return Json{{"types", types}, {"edges", edges}, {"attributes", attributes_json(o.common_attributes())}};
}

Ontology ontology_from_json(const Json& j) {
    try {
        std::vector<TypeDef> types;
        for (const auto& t : j.at("types"))
            types.push_back(TypeDef{t.at("name").get<std::string>(), parse_label(t.at("label")),
                                    t.value("is_output", false), attributes_from(t, "attributes")});
        std::vector<EdgeDef> edges;
        for (const auto& e : j.at("edges"))
            edges.push_back(EdgeDef{e.at("from_type").get<std::string>(), e.at("to_type").get<std::string>(),
                                    parse_label(e.at("label")), attributes_from(e, "attributes")});
        return Ontology(std::move(types), std::move(edges), attributes_from(j, "attributes"));
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad ontology: ") + e.what());
    }
}

}  // namespace tortrust
