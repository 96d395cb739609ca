#pragma once

// Shared test fixtures, generators and independent oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tortrust/bbn.hpp"
#include "tortrust/beliefs.hpp"
#include "tortrust/editor.hpp"
#include "tortrust/ontology.hpp"
#include "tortrust/random.hpp"
#include "tortrust/world.hpp"

namespace fixtures {

using namespace tortrust;

inline TypeInstance inst(std::string id, std::string_view type, AttributeMap attrs = {}) {
    return TypeInstance{std::move(id), std::string(type), std::move(attrs)};
}

inline RelationshipInstance rel(std::string parent, std::string child) {
    return RelationshipInstance{std::move(parent), std::move(child), {}};
}

/// Relay with flags, bandwidth, /16 address and AS number.
inline TypeInstance relay(std::string id, bool guard, bool exit, double bw, std::string ip, std::int64_t asn) {
    StringSet flags;
    if (guard) flags.insert("Guard");
    if (exit) flags.insert("Exit");
    return inst(std::move(id), types::TorRelay,
                {{"flags", flags}, {"bandwidth", bw}, {"ip", std::move(ip)}, {"as_number", asn}});
}

inline TypeInstance vlink(std::int64_t asn, const std::string& fp) {
    return inst("vlink:as" + std::to_string(asn) + "-relay:" + fp, types::VirtualLink,
                {{"as_number", asn}, {"fingerprint", fp}});
}

/// Small Tor-shaped world under the default ontology:
///
///   asorg:A -> as:1, as:2      asorg:B -> as:3      country:US -> relay:G1
///   family:G1 -> relay:G1      family:E1 -> relay:E1, relay:E2
///   vlink(1, G1) <- as:1, as:2       vlink(3, E1) <- as:3
///   vlink(3, E2) <- as:3             relays G1 (guard, as 2), E1/E2 (exits, as 3)
inline World tiny_tor_world() {
    std::vector<TypeInstance> is{
        inst("country:US", types::LegalJurisdiction, {{"country", std::string("US")}}),
        inst("asorg:A", types::AsOrganization),
        inst("asorg:B", types::AsOrganization),
        inst("as:1", types::As, {{"as_number", std::int64_t{1}}}),
        inst("as:2", types::As, {{"as_number", std::int64_t{2}}}),
        inst("as:3", types::As, {{"as_number", std::int64_t{3}}}),
        inst("family:E1", types::RelayFamily, {{"uptime", 0.5}}),
        inst("family:G1", types::RelayFamily, {{"uptime", 1.0}}),
        relay("relay:E1", false, true, 300, "20.3.0.1", 3),
        relay("relay:E2", false, true, 100, "20.3.0.2", 3),
        relay("relay:G1", true, false, 200, "20.2.0.1", 2),
        vlink(1, "G1"),
        vlink(3, "E1"),
        vlink(3, "E2"),
    };
    std::vector<RelationshipInstance> rs{
        rel("asorg:A", "as:1"),          rel("asorg:A", "as:2"),        rel("asorg:B", "as:3"),
        rel("country:US", "relay:G1"),   rel("family:G1", "relay:G1"),  rel("family:E1", "relay:E1"),
        rel("family:E1", "relay:E2"),    rel("as:1", "vlink:as1-relay:G1"), rel("as:2", "vlink:as1-relay:G1"),
        rel("as:3", "vlink:as3-relay:E1"), rel("as:3", "vlink:as3-relay:E2"),
    };
    return World(std::move(is), std::move(rs));
}

/// Client as:1 with guards G1 (as:2, behind org Bad), G2 (as:3), G3 (as:6);
/// exits E1 (as:4, Bad), E2 (as:5, Bad) and E3 in the destination AS as:9.
inline World route_world() {
    std::vector<TypeInstance> is{
        inst("asorg:Bad", types::AsOrganization), inst("asorg:Clean", types::AsOrganization),
    };
    std::vector<RelationshipInstance> rs;
    for (int a : {1, 2, 3, 4, 5, 6, 9}) {
        is.push_back(inst("as:" + std::to_string(a), types::As, {{"as_number", std::int64_t{a}}}));
        const bool bad = a == 2 || a == 4 || a == 5;
        rs.push_back(rel(bad ? "asorg:Bad" : "asorg:Clean", "as:" + std::to_string(a)));
    }
    auto add_relay = [&](const std::string& fp, bool guard, bool exit, double bw, int asn) {
        is.push_back(inst("family:" + fp, types::RelayFamily, {{"uptime", 1.0}}));
        is.push_back(relay("relay:" + fp, guard, exit, bw, "10." + std::to_string(asn) + ".0.1", asn));
        rs.push_back(rel("family:" + fp, "relay:" + fp));
    };
    add_relay("G1", true, false, 100, 2);
    add_relay("G2", true, false, 100, 3);
    add_relay("G3", true, false, 100, 6);
    add_relay("E1", false, true, 100, 4);
    add_relay("E2", false, true, 100, 5);
    add_relay("E3", false, true, 100, 9);
    auto link = [&](int from, const std::string& fp, int relay_as) {
        const auto v = vlink(from, fp);
        is.push_back(v);
        rs.push_back(rel("as:" + std::to_string(from), v.id));
        if (relay_as != from) rs.push_back(rel("as:" + std::to_string(relay_as), v.id));
    };
    link(1, "G1", 2);
    link(1, "G2", 3);
    link(1, "G3", 6);
    link(9, "E1", 4);
    link(9, "E2", 5);
    link(9, "E3", 9);
    return World(is, rs);
}

// Oracles.

/// P(at least one independent event fires), by summing over all outcomes.
inline double oracle_any_fires(const std::vector<double>& probs) {
    const std::size_t n = probs.size();
    double total = 0.0;
    for (std::uint64_t s = 1; s < (std::uint64_t{1} << n); ++s) {
        double p = 1.0;
        for (std::size_t i = 0; i < n; ++i) p *= ((s >> i) & 1U) ? probs[i] : 1.0 - probs[i];
        total += p;
    }
    return total;
}

/// Exact marginals by brute force over every joint state, reading the raw
/// node description (noisy-OR over compromised parents and risks).
inline std::vector<double> oracle_marginals(const CompiledBbn& b) {
    const std::size_t n = b.size();
    std::vector<double> marg(n, 0.0);
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
        double p = 1.0;
        for (std::size_t i = 0; i < n && p > 0.0; ++i) {
            const BbnNode& node = b.node(i);
            double on;
            if (node.absolute) {
                on = *node.absolute;
            } else {
                std::vector<double> firing;
                for (const auto& e : node.parents)
                    if ((s >> e.parent) & 1U) firing.push_back(e.weight);
                firing.insert(firing.end(), node.risks.begin(), node.risks.end());
                double none = 1.0;
                for (double f : firing) none *= 1.0 - f;
                on = 1.0 - none;
            }
            p *= ((s >> i) & 1U) ? on : 1.0 - on;
        }
        for (std::size_t i = 0; i < n; ++i)
            if ((s >> i) & 1U) marg[i] += p;
    }
    return marg;
}

// Random belief networks built through the full edit/compile pipeline.

struct RandomCase {
    World world;
    Ontology ontology;
    BeliefDocument doc;
};

/// Four-layer ontology L0 -> L1 -> L2 -> L3 (output) with skip edges.
inline Ontology layered_ontology() {
    std::vector<TypeDef> ts;
    for (int i = 0; i < 4; ++i)
        ts.push_back(TypeDef{"L" + std::to_string(i), Label::User, i == 3,
                             {AttributeDef{"size", DataType::Integer, Label::User, Requirement::Optional}}});
    std::vector<EdgeDef> es;
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) es.push_back(EdgeDef{"L" + std::to_string(a), "L" + std::to_string(b), Label::User, {}});
    return Ontology(std::move(ts), std::move(es));
}

inline Level random_level(Engine& eng) {
    if (bernoulli(eng, 0.5)) return static_cast<TrustValue>(uniform_index(eng, 5));
    return std::round(uniform01(eng) * 1000.0) / 1000.0;
}

/// World of `n_world` nodes with random layered edges and a belief document
/// mixing relative, absolute, budget and CE beliefs. CE nodes are counted
/// against `max_nodes`.
inline RandomCase random_case(Engine& eng, std::size_t n_world, std::size_t max_nodes) {
    RandomCase rc;
    rc.ontology = layered_ontology();
    std::vector<int> layer(n_world);
    std::vector<TypeInstance> is;
    for (std::size_t i = 0; i < n_world; ++i) {
        layer[i] = static_cast<int>(uniform_index(eng, 4));
        is.push_back(inst("n" + std::to_string(i), "L" + std::to_string(layer[i]),
                          {{"size", static_cast<std::int64_t>(uniform_index(eng, 10))}}));
    }
    std::vector<RelationshipInstance> rs;
    for (std::size_t a = 0; a < n_world; ++a)
        for (std::size_t b = 0; b < n_world; ++b)
            if (layer[a] < layer[b] && bernoulli(eng, 0.35)) rs.push_back(rel(is[a].id, is[b].id));
    rc.world = World(is, rs);

    auto pick = [&] { return "n" + std::to_string(uniform_index(eng, n_world)); };
    auto rand_pred = [&]() -> Predicate {
        switch (uniform_index(eng, 4)) {
            case 0: return Predicate(pred::TypeTest{"L" + std::to_string(uniform_index(eng, 4))});
            case 1: return Predicate(pred::AttrCmp{"size", CmpOp::Ge, static_cast<std::int64_t>(uniform_index(eng, 10))});
            case 2: return Predicate(pred::IdIn{{pick(), pick()}});
            default:
                return Predicate(pred::And{{Predicate(pred::HasParent{Predicate()}),
                                            Predicate(pred::AttrCmp{"size", CmpOp::Lt, std::int64_t{5}})}});
        }
    };

    const std::size_t n_rel = 1 + uniform_index(eng, 4);
    for (std::size_t i = 0; i < n_rel; ++i)
        rc.doc.trust.push_back(RelativeBelief{"r" + std::to_string(i), rand_pred(), random_level(eng)});
    const std::size_t n_abs = uniform_index(eng, 3);
    for (std::size_t i = 0; i < n_abs; ++i) rc.doc.trust.push_back(AbsoluteBelief{rand_pred(), random_level(eng)});

    // Budgets and CE beliefs on distinct nodes with children.
    std::size_t budget_room = max_nodes - n_world;
    for (std::size_t i = 0; i < n_world; ++i) {
        const auto kids = rc.world.children(i);
        if (kids.empty()) continue;
        const std::string id = is[i].id;
        const std::size_t roll = uniform_index(eng, 4);
        if (roll == 0) {
            rc.doc.trust.push_back(
                AllBudget{id, static_cast<std::int64_t>(uniform_index(eng, kids.size() + 1))});
        } else if (roll == 1) {
            const std::string& t = rc.world.at(kids[uniform_index(eng, kids.size())]).type_name;
            rc.doc.trust.push_back(TypeBudget{id, t, static_cast<std::int64_t>(1 + uniform_index(eng, 2))});
        } else if (roll == 2 && budget_room > 0 && layer[i] < 3) {
            --budget_room;
            if (bernoulli(eng, 0.5) || budget_room == 0) {
                rc.doc.trust.push_back(TopCe{id, random_level(eng)});
            } else {
                // Two disjoint id sets over the children.
                std::vector<std::string> a, b;
                for (World::Index k : kids) (bernoulli(eng, 0.5) ? a : b).push_back(rc.world.at(k).id);
                rc.doc.trust.push_back(PredicateCe{id, Predicate(pred::IdIn{a}), random_level(eng)});
                --budget_room;
                rc.doc.trust.push_back(PredicateCe{id, Predicate(pred::IdIn{b}), random_level(eng)});
            }
        }
    }
    return rc;
}

}  // namespace fixtures
