#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tortrust/attributes.hpp"

namespace tortrust {

enum class Label { System, User };
enum class Requirement { Required, Optional };

std::string_view to_string(Label l);
std::string_view to_string(Requirement r);

struct AttributeDef {
    std::string name;
    DataType data_type = DataType::String;
    Label source = Label::System;
    Requirement requirement = Requirement::Optional;
    bool operator==(const AttributeDef&) const = default;
};

struct TypeDef {
    std::string name;
    Label label = Label::System;
    bool is_output = false;
    std::vector<AttributeDef> attributes;
    bool operator==(const TypeDef&) const = default;

    const AttributeDef* find_attribute(std::string_view attr) const;
};

struct EdgeDef {
    std::string from_type;
    std::string to_type;
    Label label = Label::System;
    std::vector<AttributeDef> attributes;
    bool operator==(const EdgeDef&) const = default;
};

/// A single validation finding. `elements` names the offending types, edges,
/// instances or relationships.
struct Violation {
    enum class Kind {
        Cycle,
        DanglingEdge,
        LabelRule,
        OutputHasOutgoingEdge,
        DuplicateName,
        DuplicateAttribute,
        DuplicateId,
        UnknownType,
        UnknownEndpoint,
        EdgeNotInOntology,
        AttributeType,
        MissingRequiredAttribute,
    };
    Kind kind;
    std::vector<std::string> elements;
    std::string message;
};

std::string_view to_string(Violation::Kind k);

using ValidationReport = std::vector<Violation>;

std::string format_report(const ValidationReport& report);

/// Type system that worlds conform to: types, directed type edges and their
/// attribute declarations. Immutable once built.
class Ontology {
public:
    Ontology() = default;
    /// `common_attributes` apply to every non-output type.
    Ontology(std::vector<TypeDef> types, std::vector<EdgeDef> edges,
             std::vector<AttributeDef> common_attributes = {});

    const std::vector<TypeDef>& types() const noexcept { return types_; }
    const std::vector<EdgeDef>& edges() const noexcept { return edges_; }
    const std::vector<AttributeDef>& common_attributes() const noexcept { return common_; }

    const TypeDef* find_type(std::string_view name) const;
    const EdgeDef* find_edge(std::string_view from, std::string_view to) const;
    bool has_edge(std::string_view from, std::string_view to) const { return find_edge(from, to) != nullptr; }

    /// Declared attribute for a type, or nullptr.
    const AttributeDef* find_attribute(std::string_view type, std::string_view attr) const;

    /// Type names in topological order (ties by name); nullopt when cyclic.
    std::optional<std::vector<std::string>> topological_order() const;

    bool operator==(const Ontology&) const = default;

private:
    std::vector<TypeDef> types_;
    std::vector<EdgeDef> edges_;
    std::vector<AttributeDef> common_;
};

namespace types {
inline constexpr std::string_view LegalJurisdiction = "LegalJurisdiction";
inline constexpr std::string_view AsOrganization = "ASOrganization";
inline constexpr std::string_view IxpOrganization = "IXPOrganization";
inline constexpr std::string_view As = "AS";
inline constexpr std::string_view Ixp = "IXP";
inline constexpr std::string_view Corporation = "Corporation";
inline constexpr std::string_view HostingService = "HostingService";
inline constexpr std::string_view RouterSwitch = "RouterSwitch";
inline constexpr std::string_view PhysicalConnection = "PhysicalConnection";
inline constexpr std::string_view RelayFamily = "RelayFamily";
inline constexpr std::string_view RelayOperator = "RelayOperator";
inline constexpr std::string_view TorRelay = "TorRelay";
inline constexpr std::string_view VirtualLink = "VirtualLink";
}  // namespace types

namespace attrs {
inline constexpr std::string_view RelaySoftware = "relay_software";
inline constexpr std::string_view PhysicalLocation = "physical_location";
inline constexpr std::string_view Budget = "budget";
inline constexpr std::string_view CompromiseEffectiveness = "compromise_effectiveness";
inline constexpr std::string_view ConnectionType = "connection_type";
inline constexpr std::string_view Region = "region";
inline constexpr std::string_view RouterSwitchKind = "router_switch_kind";
inline constexpr std::string_view RelayHardware = "relay_hardware";
// Consensus-derived relay data and identifiers populated by world generation.
inline constexpr std::string_view Fingerprint = "fingerprint";
inline constexpr std::string_view Flags = "flags";
inline constexpr std::string_view Bandwidth = "bandwidth";
inline constexpr std::string_view Ip = "ip";
inline constexpr std::string_view AsNumber = "as_number";
inline constexpr std::string_view Uptime = "uptime";
inline constexpr std::string_view Country = "country";
inline constexpr std::string_view IxpName = "ixp";
}  // namespace attrs

/// The built-in ontology of network-element types.
Ontology default_ontology();

/// Reports cycles, dangling edge endpoints, label-rule violations, output
/// types with outgoing edges and duplicate names. Empty means valid.
ValidationReport validate_ontology(const Ontology& o);

/// Adds user types and edges. Throws SemanticError on a name collision or
/// when the merged ontology does not validate.
Ontology extend_ontology(const Ontology& o, const std::vector<TypeDef>& new_types,
                         const std::vector<EdgeDef>& new_edges);

Json to_json(const Ontology& o);
Ontology ontology_from_json(const Json& j);

Json to_json(const AttributeDef& a);
AttributeDef attribute_def_from_json(const Json& j);

}  // namespace tortrust
