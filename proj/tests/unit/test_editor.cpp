#include <doctest.h>

#include "fixtures.hpp"
#include "tortrust/editor.hpp"
#include "tortrust/error.hpp"
#include "tortrust/io.hpp"

using namespace tortrust;
using namespace fixtures;

namespace {

EditedWorld apply(const std::string& json) { return apply_structural(tiny_tor_world(), default_ontology(), parse_belief_document(json)); }

std::vector<NodeId> child_ids(const World& w, std::string_view id) {
    std::vector<NodeId> out;
    for (World::Index c : w.children(w.index_of(id))) out.push_back(w.at(c).id);
    std::sort(out.begin(), out.end());
    return out;
}

std::set<NodeId> output_ids(const World& w, const Ontology& o) {
    std::set<NodeId> out;
    for (const auto& t : w.instances())
        if (const TypeDef* d = o.find_type(t.type_name); d && d->is_output) out.insert(t.id);
    return out;
}

}  // namespace

TEST_CASE("empty document leaves the world unchanged") {
    const EditedWorld ew = apply("{}");
    CHECK(ew.world == tiny_tor_world());
    CHECK(ew.budgets.empty());
    CHECK(ew.ce_specs.empty());
}

TEST_CASE("adding a relay operator") {
    const EditedWorld ew = apply(R"({"structural": [
        ["inst", "RelayOperator", {}, "operator:O"],
        ["rel", "operator:O", "relay:E1"], ["rel", "operator:O", "relay:G1"]]})");
    CHECK(child_ids(ew.world, "operator:O") == std::vector<NodeId>{"relay:E1", "relay:G1"});
}

TEST_CASE("removing a relay cascades to its relationships") {
    const EditedWorld ew = apply(R"({"structural": [["rm_inst", "relay:G1"]]})");
    CHECK_FALSE(ew.world.contains("relay:G1"));
    CHECK(child_ids(ew.world, "family:G1").empty());
    CHECK(child_ids(ew.world, "country:US").empty());
}

TEST_CASE("structural errors") {
    CHECK_THROWS_AS(apply(R"({"structural": [["rel", "vlink:as1-relay:G1", "as:1"]]})"), SemanticError);  // cycle
    CHECK_THROWS_AS(apply(R"({"structural": [["inst", "AS", {}, "as:1"]]})"), SemanticError);            // duplicate
    CHECK_THROWS_AS(apply(R"({"structural": [["rm_inst", "as:99"]]})"), SemanticError);                   // unknown
    CHECK_THROWS_AS(apply(R"({"structural": [["inst", "Dragon", {}, "d:1"]]})"), SemanticError);          // unknown type
    CHECK_THROWS_AS(apply(R"({"structural": [["rel", "as:1", "ghost"]]})"), SemanticError);
    CHECK_THROWS_AS(apply(R"({"trust": [["bu2", "as:1", "all", -1]]})"), SemanticError);
    CHECK_THROWS_AS(apply(R"({"trust": [["bu2", "as:99", "all", 1]]})"), SemanticError);
    CHECK_THROWS_AS(apply(R"({"trust": [["ce2", "relay:G1", "top", "U"]]})"), SemanticError);  // output node
    CHECK_THROWS_AS(apply(R"({"trust": [["ce2", "asorg:A", "top", "U"], ["ce2", "asorg:A", "top", "LC"]]})"),
                    SemanticError);
    // Overlapping CE predicates over the node's children.
    CHECK_THROWS_AS(apply(R"({"trust": [["ce1", "asorg:A", "is AS", "U"], ["ce1", "asorg:A", "id in {\"as:1\"}", "U"]]})"),
                    SemanticError);
    // Budget and CE over the same child.
    CHECK_THROWS_AS(apply(R"({"trust": [["bu2", "asorg:A", "all", 1], ["ce2", "asorg:A", "top", "U"]]})"),
                    SemanticError);
    // Attribute of the wrong type fails validation.
    CHECK_THROWS_AS(apply(R"({"structural": [["attr", "as:1", "as_number", "one"]]})"), ValidationError);
}

TEST_CASE("budgets and CE specs are attached") {
    const EditedWorld ew = apply(R"({"trust": [
        ["bu1", "as:3", "VirtualLink", 1],
        ["ce1", "asorg:A", "id in {\"as:1\"}", "U"], ["ce1", "asorg:A", "id in {\"as:2\"}", 0.3]]})");
    REQUIRE(ew.budgets.count("as:3") == 1);
    CHECK(ew.budgets.at("as:3").size() == 1);
    REQUIRE(ew.ce_specs.count("asorg:A") == 1);
    CHECK(ew.ce_specs.at("asorg:A").size() == 2);
}

TEST_CASE("user types and user relationships") {
    const EditedWorld ew = apply(R"({"structural": [
        ["ut", "Treaty", null, {"year": "integer"}],
        ["inst", "Treaty", {"year": 1990}, "treaty:T"],
        ["rel", "treaty:T", "country:US"]]})");
    CHECK(ew.ontology.find_type("Treaty") != nullptr);
    CHECK(ew.ontology.find_type("Treaty")->label == Label::User);
    CHECK(ew.user_relationships.count({"treaty:T", "country:US"}) == 1);
    CHECK(child_ids(ew.world, "treaty:T") == std::vector<NodeId>{"country:US"});

    // Structural ops see earlier edits: removing the instance drops the exemption.
    const EditedWorld gone = apply(R"({"structural": [
        ["ut", "Treaty", null, null], ["inst", "Treaty", {}, "treaty:T"],
        ["rel", "treaty:T", "country:US"], ["rm_rel", "treaty:T", "country:US"]]})");
    CHECK(gone.user_relationships.empty());
}

TEST_CASE("children_matching") {
    const EditedWorld ew = apply("{}");
    CHECK(children_matching(ew, "asorg:A", Predicate()) == std::vector<NodeId>{"as:1", "as:2"});
    CHECK(children_matching(ew, "asorg:A", parse_predicate("false")).empty());
    CHECK(children_matching(ew, "as:3", parse_predicate("is VirtualLink")) ==
          std::vector<NodeId>{"vlink:as3-relay:E1", "vlink:as3-relay:E2"});

    // Five virtual links under one AS.
    std::string doc = R"({"structural": [)";
    for (int i = 0; i < 5; ++i) {
        if (i) doc += ",";
        doc += R"(["inst", "VirtualLink", {}, "vl:)" + std::to_string(i) + R"("], ["rel", "as:2", "vl:)" +
               std::to_string(i) + R"("])";
    }
    doc += "]}";
    const EditedWorld five = apply(doc);
    const auto matched = children_matching(five, "as:2", parse_predicate("is VirtualLink"));
    std::size_t expected = 0;
    for (World::Index c : five.world.children(five.world.index_of("as:2")))
        expected += five.world.at(c).type_name == types::VirtualLink;
    CHECK(matched.size() == expected);
    CHECK(matched.size() == 6);  // five added plus the existing link
    CHECK(std::is_sorted(matched.begin(), matched.end()));
}

TEST_CASE("edited world JSON round trip") {
    const EditedWorld ew = apply(R"({"structural": [["ut", "Treaty", null, null], ["inst", "Treaty", {}, "treaty:T"],
                                                    ["rel", "treaty:T", "country:US"]],
                                     "trust": [["bu2", "as:3", "all", 1], ["ce2", "asorg:A", "top", "U"]]})");
    CHECK(edited_world_from_json(parse_json(dump_json(to_json(ew)))) == ew);
}

TEST_CASE("property: attribute edits are idempotent and outputs are tracked") {
    Engine eng = make_engine(61);
    const World base = tiny_tor_world();
    const Ontology o = default_ontology();
    const std::vector<NodeId> ids = [&] {
        std::vector<NodeId> v;
        for (const auto& t : base.instances()) v.push_back(t.id);
        return v;
    }();
    for (int trial = 0; trial < 200; ++trial) {
        BeliefDocument doc;
        std::set<NodeId> removed, added_outputs;
        for (std::uint64_t i = uniform_index(eng, 4); i > 0; --i) {
            const NodeId id = ids[uniform_index(eng, ids.size())];
            if (removed.insert(id).second) doc.structural.push_back(RemoveInstance{id});
        }
        for (std::uint64_t i = uniform_index(eng, 3); i > 0; --i) {
            const NodeId id = "vl:new" + std::to_string(trial) + "-" + std::to_string(i);
            doc.structural.push_back(AddInstance{std::string(types::VirtualLink), {}, id});
            added_outputs.insert(id);
        }
        const SetAttribute edit{"vl:probe", "connection_type", std::string("x")};
        doc.structural.push_back(AddInstance{std::string(types::PhysicalConnection), {}, "vl:probe"});
        doc.structural.push_back(edit);

        const EditedWorld once = apply_structural(base, o, doc);
        BeliefDocument twice = doc;
        twice.structural.push_back(edit);
        CHECK(apply_structural(base, o, twice).world == once.world);

        std::set<NodeId> want = output_ids(base, o);
        want.insert(added_outputs.begin(), added_outputs.end());
        for (const auto& r : removed) want.erase(r);
        CHECK(output_ids(once.world, once.ontology) == want);
        CHECK(once.world.topological_order().has_value());
    }
}
