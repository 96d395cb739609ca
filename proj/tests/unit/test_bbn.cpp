#include <doctest.h>

#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fixtures.hpp"
#include "tortrust/error.hpp"
#include "tortrust/io.hpp"

using namespace tortrust;
using namespace fixtures;

namespace {

BbnNode world_node(std::string id, std::vector<ParentEdge> parents = {}, std::vector<double> risks = {},
                   std::optional<double> absolute = std::nullopt) {
    BbnNode n;
    n.id = std::move(id);
    n.parents = std::move(parents);
    n.risks = std::move(risks);
    n.absolute = absolute;
    return n;
}

double marginal(const CompiledBbn& b, std::string_view id, std::size_t n, std::uint64_t seed) {
    const std::vector<NodeId> ids{std::string(id)};
    return estimate_marginals(b, ids, n, seed).at(0).estimate;
}

/// P(event) by summing the joint distribution over the states where it holds.
double exact_event(const CompiledBbn& b, const std::function<bool(std::uint64_t)>& holds) {
    const auto joint = enumerate_exact(b);
    double total = 0.0;
    for (std::uint64_t s = 0; s < joint.size(); ++s)
        if (holds(s)) total += joint[s];
    return total;
}

CompiledBbn compiled(const World& w, const Ontology& o, const std::string& json) {
    const BeliefDocument doc = parse_belief_document(json);
    return compile(apply_structural(w, o, doc), doc.trust, doc.scale);
}

}  // namespace

TEST_CASE("compromise_probability") {
    CHECK(compromise_probability({}, {}) == 0.0);
    const std::vector<double> one{1.0}, half{0.5}, risk{0.15};
    CHECK(compromise_probability(one, {}) == 1.0);
    CHECK(compromise_probability(half, risk) == doctest::Approx(0.575).epsilon(1e-15));
    const std::vector<double> bad{1.5};
    CHECK_THROWS_AS(compromise_probability(bad, {}), SemanticError);
    CHECK_THROWS_AS(compromise_probability({}, std::vector<double>{-0.1}), SemanticError);
}

TEST_CASE("network construction checks") {
    CHECK_THROWS_AS(CompiledBbn({world_node("a", {{1, 1.0}}), world_node("b")}), SemanticError);  // order
    CHECK_THROWS_AS(CompiledBbn({world_node("a"), world_node("a")}), SemanticError);              // duplicate
    CHECK_THROWS_AS(CompiledBbn({world_node("a", {}, {1.2})}), SemanticError);                    // range
    const CompiledBbn b({world_node("a"), world_node("b", {{0, 0.5}})});
    CHECK(b.require("b") == 1);
    CHECK(b.index_of("zz") == CompiledBbn::npos);
    CHECK_THROWS_AS(b.require("zz"), SemanticError);
}

TEST_CASE("compile: CE with probability 1 is all-or-none") {
    const World w({inst("n", "L0"), inst("a", "L1"), inst("b", "L1")}, {rel("n", "a"), rel("n", "b")});
    const CompiledBbn b = compiled(w, layered_ontology(),
                                   R"({"trust": [["abs", "id in {\"n\"}", 0.5], ["ce2", "n", "top", 1.0]]})");
    REQUIRE(b.size() == 4);
    const BbnNode& ce = b.node(1);
    CHECK(ce.kind == NodeKind::Ce);
    REQUIRE(ce.parents.size() == 1);
    CHECK(ce.parents[0].weight == 1.0);
    const SampleBatch batch(b, 50000, 5);
    const auto ra = batch.row(b.require("a"));
    const auto rb = batch.row(b.require("b"));
    const auto rn = batch.row(b.require("n"));
    for (std::size_t i = 0; i < ra.size(); ++i) {
        CHECK((ra[i] ^ rb[i]) == 0);
        CHECK((ra[i] & ~rn[i]) == 0);
    }
}

TEST_CASE("compile: CE children outside every predicate hang off the parent") {
    const World w({inst("n", "L0"), inst("a", "L1"), inst("b", "L1"), inst("c", "L1")},
                  {rel("n", "a"), rel("n", "b"), rel("n", "c")});
    const CompiledBbn b = compiled(w, layered_ontology(), R"({"trust": [["ce1", "n", "id in {\"a\", \"b\"}", 0.4]]})");
    const BbnNode& c = b.node(b.require("c"));
    REQUIRE(c.parents.size() == 1);
    CHECK(b.node(c.parents[0].parent).id == "n");
    CHECK(c.parents[0].weight == 1.0);
    const BbnNode& a = b.node(b.require("a"));
    REQUIRE(a.parents.size() == 1);
    const BbnNode& ce = b.node(a.parents[0].parent);
    CHECK(ce.kind == NodeKind::Ce);
    CHECK(ce.parents[0].weight == 0.4);
    CHECK(a.parents[0].weight == 1.0);
}

TEST_CASE("compile: budget scaling") {
    std::vector<TypeInstance> is{inst("n", "L0")};
    std::vector<RelationshipInstance> rs;
    for (int i = 0; i < 4; ++i) {
        is.push_back(inst("t" + std::to_string(i), "L1"));
        rs.push_back(rel("n", "t" + std::to_string(i)));
    }
    is.push_back(inst("o", "L2"));
    rs.push_back(rel("n", "o"));
    const World w(is, rs);
    const Ontology o = layered_ontology();

    SUBCASE("typed budget scales only its type") {
        const CompiledBbn b = compiled(w, o, R"({"trust": [["bu1", "n", "L1", 2]]})");
        for (int i = 0; i < 4; ++i) CHECK(b.node(b.require("t" + std::to_string(i))).parents[0].weight == 0.5);
        CHECK(b.node(b.require("o")).parents[0].weight == 1.0);
    }
    SUBCASE("budget beyond the child count leaves weights alone") {
        const CompiledBbn b = compiled(w, o, R"({"trust": [["bu1", "n", "L1", 9]]})");
        CHECK(b.node(b.require("t0")).parents[0].weight == 1.0);
    }
    SUBCASE("all-budget wins over typed budgets") {
        const CompiledBbn b = compiled(w, o, R"({"trust": [["bu1", "n", "L1", 2], ["bu2", "n", "all", 1]]})");
        CHECK(b.node(b.require("t0")).parents[0].weight == doctest::Approx(0.2));
        CHECK(b.node(b.require("o")).parents[0].weight == doctest::Approx(0.2));
    }
    SUBCASE("zero budget cuts propagation") {
        const CompiledBbn b = compiled(w, o, R"({"trust": [["bu2", "n", "all", 0]]})");
        CHECK(b.node(b.require("t0")).parents[0].weight == 0.0);
    }
}

TEST_CASE("compile: relative and absolute beliefs") {
    const World w({inst("a", "L0"), inst("x", "L1", {{"size", std::int64_t{3}}})}, {rel("a", "x")});
    const CompiledBbn b = compiled(w, layered_ontology(), R"({"trust": [
        ["r1", "is L1", "LT"], ["r2", "attr(\"size\") >= 3", "LT"], ["r3", "is L0", 0.3]]})");
    CHECK(b.node(b.require("x")).risks == std::vector<double>{0.15, 0.15});
    CHECK(b.node(b.require("a")).risks == std::vector<double>{0.3});

    const CompiledBbn c = compiled(w, layered_ontology(), R"({"trust": [
        ["abs", "id in {\"x\"}", "SC"], ["abs", "is L1", "U"], ["r", "true", "LC"]]})");
    const BbnNode& x = c.node(c.require("x"));
    CHECK(x.absolute == 0.5);
    CHECK(x.parents.empty());
    CHECK(c.node(c.require("a")).absolute == std::nullopt);

    std::vector<std::string> warnings;
    CompileOptions opts;
    opts.warnings = &warnings;
    const BeliefDocument doc = parse_belief_document(R"({"trust": [["r", "attr(\"weight\") > 2", "U"]]})");
    compile(apply_structural(w, layered_ontology(), doc), doc.trust, doc.scale, opts);
    CHECK(warnings.size() == 2);
}

TEST_CASE("sampling chains") {
    SUBCASE("certain propagation") {
        const CompiledBbn b({world_node("A", {}, {}, 1.0), world_node("B", {{0, 1.0}})});
        for (std::uint64_t seed = 0; seed < 50; ++seed) CHECK(sample(b, seed).compromised[1]);
        CHECK(marginal(b, "B", 10000, 1) == 1.0);
    }
    SUBCASE("half propagation") {
        const CompiledBbn b({world_node("A", {}, {}, 0.5), world_node("B", {{0, 1.0}})});
        CHECK(marginal(b, "B", 100000, 2) == doctest::Approx(0.5).epsilon(0.02));
    }
    SUBCASE("weighted edge and risk") {
        const CompiledBbn b({world_node("A", {}, {}, 0.5), world_node("B", {{0, 0.5}}, {0.15})});
        // Sum over the four joint states, by hand.
        const double want = 0.5 * (1 - 0.5 * 0.85) + 0.5 * 0.15;
        CHECK(want == doctest::Approx(0.3625));
        CHECK(exact_marginals(enumerate_exact(b), 2)[1] == doctest::Approx(want).epsilon(1e-12));
        CHECK(oracle_marginals(b)[1] == doctest::Approx(want).epsilon(1e-12));
        CHECK(std::abs(marginal(b, "B", 200000, 3) - want) < 4 * std::sqrt(want * (1 - want) / 200000));
    }
    SUBCASE("scalar sampler agrees with the exact marginal") {
        const CompiledBbn b({world_node("A", {}, {}, 0.5), world_node("B", {{0, 0.5}}, {0.15})});
        std::size_t hits = 0;
        const std::size_t n = 40000;
        for (std::uint64_t s = 0; s < n; ++s) hits += sample(b, s).compromised[1];
        CHECK(std::abs(static_cast<double>(hits) / n - 0.3625) < 4 * std::sqrt(0.3625 * 0.6375 / n));
    }
}

TEST_CASE("estimate_marginals") {
    const CompiledBbn b({world_node("z", {}, {}, 0.0), world_node("h", {}, {}, 0.5)});
    const std::vector<NodeId> ids{"z", "h"};
    const auto est = estimate_marginals(b, ids, 100000, 9);
    CHECK(est[0].estimate == 0.0);
    CHECK(std::abs(est[1].estimate - 0.5) < 0.01);
    CHECK(est[1].n_samples == 100000);
    CHECK(est[1].standard_error() <= 0.5 / std::sqrt(100000.0) + 1e-15);
    CHECK(estimate_marginals(b, ids, 1000, 9)[1].estimate == estimate_marginals(b, ids, 1000, 9)[1].estimate);
}

TEST_CASE("events") {
    const CompiledBbn b({world_node("x", {}, {}, 0.1), world_node("y", {}, {}, 0.1)});
    const double exact = exact_event(b, [](std::uint64_t s) { return (s & 1U) || (s & 2U); });
    CHECK(exact == doctest::Approx(0.19).epsilon(1e-12));
    const double est = estimate_event(b, "x or y", 100000, 4);
    CHECK(std::abs(est - exact) < 4 * std::sqrt(exact * (1 - exact) / 100000));
    CHECK(estimate_event(b, "x and not x", 10000, 4) == 0.0);
    CHECK(estimate_event(b, "true", 1000, 4) == 1.0);
    CHECK(estimate_event(b, R"("x" and (y or false))", 1000, 4) <= estimate_event(b, "x", 1000, 4));
    CHECK_THROWS_AS(estimate_event(b, "x or w", 1000, 4), SemanticError);
    CHECK_THROWS_AS(parse_event("x or"), ParseError);
    CHECK(parse_event("a:1 or not b-2").atoms() == std::vector<NodeId>{"a:1", "b-2"});
}

TEST_CASE("first-last event matches the pathsel semantics") {
    // guard g, client link l, exit e, destination link d; l and d share an org.
    const CompiledBbn b({world_node("org", {}, {}, 0.1), world_node("g", {}, {}, 0.05), world_node("e", {}, {}, 0.02),
                         world_node("l", {{0, 1.0}}), world_node("d", {{0, 1.0}})});
    const double exact = exact_event(b, [](std::uint64_t s) { return ((s >> 1 & 1) || (s >> 3 & 1)) && ((s >> 2 & 1) || (s >> 4 & 1)); });
    const double est = estimate_event(b, "(g or l) and (e or d)", 200000, 8);
    CHECK(std::abs(est - exact) < 4 * std::sqrt(exact * (1 - exact) / 200000));
}

TEST_CASE("enumerate_exact") {
    const CompiledBbn single({world_node("a", {}, {}, 0.3)});
    const auto j1 = enumerate_exact(single);
    REQUIRE(j1.size() == 2);
    CHECK(j1[0] == doctest::Approx(0.7));
    CHECK(j1[1] == doctest::Approx(0.3));

    const CompiledBbn pair({world_node("a", {}, {}, 0.5), world_node("b", {}, {}, 0.5)});
    for (double p : enumerate_exact(pair)) CHECK(p == doctest::Approx(0.25));

    // n (abs 1) -> ce (0.4) -> two children: both with 0.4, neither with 0.6.
    const World w({inst("n", "L0"), inst("a", "L1"), inst("b", "L1")}, {rel("n", "a"), rel("n", "b")});
    const CompiledBbn ce = compiled(w, layered_ontology(),
                                    R"({"trust": [["abs", "id in {\"n\"}", 1.0], ["ce2", "n", "top", 0.4]]})");
    const std::size_t ia = ce.require("a"), ib = ce.require("b");
    const double both = exact_event(ce, [&](std::uint64_t s) { return (s >> ia & 1) && (s >> ib & 1); });
    const double none = exact_event(ce, [&](std::uint64_t s) { return !(s >> ia & 1) && !(s >> ib & 1); });
    CHECK(both == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(none == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(both + none == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<BbnNode> big;
    for (int i = 0; i < 25; ++i) big.push_back(world_node("n" + std::to_string(i), {}, {}, 0.5));
    CHECK_THROWS_AS(enumerate_exact(CompiledBbn(big)), SemanticError);
    CHECK_THROWS_AS(enumerate_exact(CompiledBbn(big), 10), SemanticError);
}

TEST_CASE("JSON and sample-dump round trips") {
    const World w({inst("n", "L0"), inst("a", "L1"), inst("b", "L1")}, {rel("n", "a"), rel("n", "b")});
    const CompiledBbn b = compiled(w, layered_ontology(),
                                   R"({"trust": [["abs", "id in {\"n\"}", 0.7], ["ce2", "n", "top", 0.4], ["r", "is L1", "LT"]]})");
    CHECK(compiled_bbn_from_json(parse_json(dump_json(to_json(b)))) == b);

    const SampleBatch batch(b, 1000, 3);
    std::stringstream buf;
    write_sample_dump(buf, batch);
    const std::string bytes = buf.str();
    CHECK(bytes.substr(0, 4) == "TBBN");
    CHECK(bytes.size() == 8 + 1000 * ((b.size() + 7) / 8));
    const auto back = read_sample_dump(buf);
    REQUIRE(back.size() == 1000);
    for (std::size_t s = 0; s < 1000; ++s)
        for (std::size_t i = 0; i < b.size(); ++i) CHECK(back[s][i] == batch.get(i, s));
    std::stringstream junk("XXXX1234");
    CHECK_THROWS_AS(read_sample_dump(junk), ParseError);
}

TEST_CASE("batches are reproducible and blockwise stable") {
    Engine eng = make_engine(71);
    const RandomCase rc = random_case(eng, 10, 16);
    const EditedWorld ew = apply_structural(rc.world, rc.ontology, rc.doc);
    const CompiledBbn b = compile(ew, rc.doc.trust, rc.doc.scale);
    const SampleBatch a(b, 5000, 12), again(b, 5000, 12), longer(b, 9000, 12);
    for (std::size_t i = 0; i < b.size(); ++i) {
        CHECK(std::equal(a.row(i).begin(), a.row(i).end(), again.row(i).begin()));
        // The first full block does not depend on the batch size.
        const std::size_t words = SampleBatch::kBlockWords;
        CHECK(std::equal(a.row(i).begin(), a.row(i).begin() + words, longer.row(i).begin()));
        CHECK(a.count(i) == popcount(a.row(i)));
    }
    // Bits past n are clear.
    const SampleBatch odd(b, 70, 1);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK((odd.row(i)[1] >> 6) == 0);
    CHECK(sample(b, 5) == sample(b, 5));
}

TEST_CASE("property: ancestral subnet keeps the marginals") {
    Engine eng = make_engine(73);
    for (int trial = 0; trial < 30; ++trial) {
        const RandomCase rc = random_case(eng, 6 + uniform_index(eng, 6), 14);
        EditedWorld ew;
        try {
            ew = apply_structural(rc.world, rc.ontology, rc.doc);
        } catch (const SemanticError&) {
            continue;
        }
        const CompiledBbn b = compile(ew, rc.doc.trust, rc.doc.scale);
        const std::vector<NodeId> target{b.nodes().back().id};
        const CompiledBbn sub = ancestral_subnet(b, target);
        CHECK(sub.size() <= b.size());
        const auto full = oracle_marginals(b);
        const auto part = oracle_marginals(sub);
        for (std::size_t i = 0; i < sub.size(); ++i)
            CHECK(part[i] == doctest::Approx(full[b.require(sub.node(i).id)]).epsilon(1e-12));
    }
}

TEST_CASE("property: exact joint sums to one and agrees with the oracle") {
    Engine eng = make_engine(79);
    for (int trial = 0; trial < 40; ++trial) {
        const RandomCase rc = random_case(eng, 5 + uniform_index(eng, 8), 16);
        EditedWorld ew;
        try {
            ew = apply_structural(rc.world, rc.ontology, rc.doc);
        } catch (const SemanticError&) {
            continue;
        }
        const CompiledBbn b = compile(ew, rc.doc.trust, rc.doc.scale);
        const auto joint = enumerate_exact(b);
        CHECK(std::accumulate(joint.begin(), joint.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
        const auto exact = exact_marginals(joint, b.size());
        const auto oracle = oracle_marginals(b);
        for (std::size_t i = 0; i < b.size(); ++i) {
            CHECK(exact[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
            const BbnNode& n = b.node(i);
            if (n.absolute) CHECK(exact[i] == doctest::Approx(*n.absolute).epsilon(1e-12));  // absolute override
            if (n.absolute) CHECK(n.parents.empty());
        }
    }
}

TEST_CASE("property: adding a risk never lowers a marginal") {
    Engine eng = make_engine(83);
    for (int trial = 0; trial < 40; ++trial) {
        const RandomCase rc = random_case(eng, 5 + uniform_index(eng, 6), 14);
        EditedWorld ew;
        try {
            ew = apply_structural(rc.world, rc.ontology, rc.doc);
        } catch (const SemanticError&) {
            continue;
        }
        const CompiledBbn b = compile(ew, rc.doc.trust, rc.doc.scale);
        std::vector<BbnNode> nodes = b.nodes();
        nodes[uniform_index(eng, nodes.size())].risks.push_back(uniform01(eng));
        const auto before = oracle_marginals(b);
        const auto after = exact_marginals(enumerate_exact(CompiledBbn(nodes)), nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) CHECK(after[i] >= before[i] - 1e-12);
    }
}

TEST_CASE("property: budget expectation in the exact distribution") {
    for (std::size_t c : {3u, 5u, 8u})
        for (std::int64_t k = 0; k <= static_cast<std::int64_t>(c) + 1; ++k) {
            std::vector<TypeInstance> is{inst("p", "L0")};
            std::vector<RelationshipInstance> rs;
            for (std::size_t i = 0; i < c; ++i) {
                is.push_back(inst("c" + std::to_string(i), "L1"));
                rs.push_back(rel("p", "c" + std::to_string(i)));
            }
            const CompiledBbn b = compiled(World(is, rs), layered_ontology(),
                                           R"({"trust": [["abs", "id in {\"p\"}", 1.0], ["bu2", "p", "all", )" +
                                               std::to_string(k) + "]]}");
            const auto m = exact_marginals(enumerate_exact(b), b.size());
            const double expected = std::accumulate(m.begin() + 1, m.end(), 0.0);
            CHECK(expected == doctest::Approx(std::min<double>(static_cast<double>(k), static_cast<double>(c))).epsilon(1e-12));
        }
}
