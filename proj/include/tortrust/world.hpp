#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tortrust/attributes.hpp"
#include "tortrust/ontology.hpp"

namespace tortrust {

using NodeId = std::string;

struct TypeInstance {
    NodeId id;
    std::string type_name;
    AttributeMap attributes;
    bool operator==(const TypeInstance&) const = default;
};

struct RelationshipInstance {
    NodeId parent;
    NodeId child;
    AttributeMap attributes;
    bool operator==(const RelationshipInstance&) const = default;
};

/// A DAG of type instances (vertices) and relationship instances (edges).
///
/// Instances and relationships keep insertion order, which is what makes
/// every downstream traversal deterministic. Adjacency is maintained eagerly,
/// so a const World can be read from several threads.
class World {
public:
    using Index = std::size_t;
    static constexpr Index npos = static_cast<Index>(-1);

    World() = default;
    /// Takes the vectors as-is, without uniqueness or endpoint checks, so
    /// that malformed worlds can be loaded and reported by validate_world.
    World(std::vector<TypeInstance> instances, std::vector<RelationshipInstance> relationships);

    const std::vector<TypeInstance>& instances() const noexcept { return instances_; }
    const std::vector<RelationshipInstance>& relationships() const noexcept { return relationships_; }
    std::size_t size() const noexcept { return instances_.size(); }

    Index index_of(std::string_view id) const;
    bool contains(std::string_view id) const { return index_of(id) != npos; }
    const TypeInstance* find(std::string_view id) const;
    const TypeInstance& at(Index i) const { return instances_[i]; }

    std::span<const Index> children(Index i) const { return children_[i]; }
    std::span<const Index> parents(Index i) const { return parents_[i]; }

    bool has_relationship(std::string_view parent, std::string_view child) const;
    /// True if `to` is reachable from `from` along relationships (or equal).
    bool reaches(Index from, Index to) const;

    /// Instance indices in topological order, ties broken by insertion order;
    /// nullopt when the graph has a cycle.
    std::optional<std::vector<Index>> topological_order() const;

    /// Throws SemanticError when the id is already present.
    void add_instance(TypeInstance inst);
    /// Throws SemanticError for unknown endpoints or a duplicate relationship.
    /// Does not check for cycles.
    void add_relationship(RelationshipInstance rel);
    /// Removes the instance and its incident relationships. False if absent.
    bool remove_instance(std::string_view id);
    bool remove_relationship(std::string_view parent, std::string_view child);
    /// Throws SemanticError when the id is unknown.
    void set_attribute(std::string_view id, const std::string& name, AttrValue value);

    bool operator==(const World& other) const {
        return instances_ == other.instances_ && relationships_ == other.relationships_;
    }

private:
    void rebuild();

    std::vector<TypeInstance> instances_;
    std::vector<RelationshipInstance> relationships_;
    std::unordered_map<std::string, Index> index_;
    std::vector<std::vector<Index>> children_;
    std::vector<std::vector<Index>> parents_;
};

/// (parent id, child id) pairs exempt from the ontology-edge check.
using RelationshipSet = std::set<std::pair<NodeId, NodeId>>;

/// Reports cycles, unknown types, relationships whose type pair is not an
/// ontology edge, duplicate ids, dangling endpoints, attribute type
/// mismatches and missing required attributes.
ValidationReport validate_world(const World& w, const Ontology& o, const RelationshipSet* exempt = nullptr);

Json to_json(const World& w);
World world_from_json(const Json& j);

}  // namespace tortrust
