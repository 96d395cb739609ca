#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tortrust/io.hpp"

namespace fs = std::filesystem;
using tortrust::Json;

namespace {

const fs::path kCli = TORTRUST_CLI;
const fs::path kSource = TORTRUST_SOURCE_DIR;

/// Scratch directory removed at scope exit.
struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("tortrust_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    fs::path operator/(const std::string& f) const { return dir / f; }
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

/// Runs the CLI with stdout to `stdout_file` (if given) and returns the exit code.
int run(const std::string& args, const fs::path& stdout_file = {}) {
    std::string cmd = quote(kCli.string()) + " " + args;
    cmd += stdout_file.empty() ? " >/dev/null" : " >" + quote(stdout_file.string());
    cmd += " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) { return tortrust::read_file(p); }

void spit(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string small_synth(const fs::path& out, int seed) {
    return "world synth --seed " + std::to_string(seed) + " --out " + quote(out.string()) +
           " --n-as 40 --n-ixp 3 --n-relays 30 --n-relay-as 10";
}

/// Bundle and world file in `s`.
void make_world(const Scratch& s) {
    REQUIRE(run(small_synth(s / "bundle", 3)) == 0);
    REQUIRE(run("world build --data " + quote((s / "bundle").string()) + " --out " + quote((s / "world.json").string())) ==
            0);
}

/// Compiled network where as:1000 and as:1001 are independent coins of 0.5 and nothing else fires.
void make_half_net(const Scratch& s) {
    spit(s / "half.json", R"({"trust": [["abs", "true", 0.0], ["abs", "id in {\"as:1000\", \"as:1001\"}", 0.5]]})");
    REQUIRE(run("bbn compile --world " + quote((s / "world.json").string()) + " --beliefs " +
                quote((s / "half.json").string()) + " --out " + quote((s / "half.bbn.json").string())) == 0);
}

}  // namespace

TEST_CASE("usage errors exit 2") {
    CHECK(run("") == 2);
    CHECK(run("nonsense") == 2);
    CHECK(run("world synth --out x") == 2);  // missing --seed
    CHECK(run("bbn marginals --bbn /nonexistent --seed 1") == 2);
    CHECK(run("--version") == 0);
    CHECK(run("--help") == 0);
}

TEST_CASE("synth is deterministic and build produces a valid world") {
    Scratch s("synth");
    REQUIRE(run(small_synth(s / "a", 11)) == 0);
    REQUIRE(run(small_synth(s / "b", 11)) == 0);
    for (const auto& e : fs::directory_iterator(s / "a"))
        CHECK(slurp(e.path()) == slurp(s / "b" / e.path().filename()));
    CHECK(fs::exists(s / "a.manifest.json"));
    const Json man = tortrust::parse_json(slurp(s / "a.manifest.json"));
    CHECK(man["seeds"]["seed"] == 11);

    REQUIRE(run("world build --data " + quote((s / "a").string()) + " --out " + quote((s / "w.json").string())) == 0);
    CHECK(run("world validate --world " + quote((s / "w.json").string())) == 0);
    const Json w = tortrust::parse_json(slurp(s / "w.json"));
    std::size_t relays = 0;
    for (const auto& i : w["instances"]) relays += i["type_name"] == "TorRelay";
    CHECK(relays == 30);
}

TEST_CASE("validate reports violations with exit 3") {
    Scratch s("validate");
    make_world(s);
    Json w = tortrust::parse_json(slurp(s / "world.json"));
    w["relationships"].push_back({{"parent", "as:1000"}, {"child", "nowhere"}});
    spit(s / "bad.json", w.dump());
    CHECK(run("world validate --world " + quote((s / "bad.json").string())) == 3);
    spit(s / "broken.json", "{\"instances\": [");
    CHECK(run("world validate --world " + quote((s / "broken.json").string())) == 4);
}

TEST_CASE("beliefs commands") {
    Scratch s("beliefs");
    make_world(s);
    const std::string world = quote((s / "world.json").string());

    CHECK(run("beliefs check --beliefs " + quote((kSource / "data/examples/five_valued.json").string())) == 0);
    spit(s / "bad.json", R"({"trust": [["abs", "is AS", "MAYBE"]]})");
    CHECK(run("beliefs check --beliefs " + quote((s / "bad.json").string())) == 4);

    SUBCASE("the-man") {
        REQUIRE(run("beliefs the-man --world " + world + " --p-org 0.2 --out " + quote((s / "man.json").string())) == 0);
        const Json doc = tortrust::parse_json(slurp(s / "man.json"));
        bool saw_org = false;
        for (const auto& t : doc["trust"])
            if (t[1] == "is ASOrganization") {
                saw_org = true;
                CHECK(t[2] == 0.2);
            }
        CHECK(saw_org);
        CHECK(run("beliefs check --world " + world + " --beliefs " + quote((s / "man.json").string())) == 0);
    }
    SUBCASE("apply refuses a cycle and writes nothing") {
        // Point a virtual link back at one of its own parents.
        const Json w = tortrust::parse_json(slurp(s / "world.json"));
        std::string link, parent;
        for (const auto& r : w["relationships"])
            if (r["child"].get<std::string>().rfind("vlink:", 0) == 0) {
                link = r["child"];
                parent = r["parent"];
                break;
            }
        REQUIRE_FALSE(link.empty());
        spit(s / "cycle.json", R"({"structural": [["rel", ")" + link + R"(", ")" + parent + R"("]]})");
        const fs::path out = s / "edited.json";
        CHECK(run("beliefs apply --world " + world + " --beliefs " + quote((s / "cycle.json").string()) + " --out " +
                  quote(out.string())) == 5);
        CHECK_FALSE(fs::exists(out));
    }
    SUBCASE("apply writes an edited world") {
        spit(s / "op.json", R"({"structural": [["inst", "RelayOperator", {}, "operator:O"]]})");
        const fs::path out = s / "edited.json";
        REQUIRE(run("beliefs apply --world " + world + " --beliefs " + quote((s / "op.json").string()) + " --out " +
                    quote(out.string())) == 0);
        CHECK(slurp(out).find("operator:O") != std::string::npos);
        CHECK(fs::exists(s / "edited.json.manifest.json"));
    }
}

TEST_CASE("bbn queries") {
    Scratch s("bbn");
    make_world(s);
    make_half_net(s);
    const std::string net = quote((s / "half.bbn.json").string());

    SUBCASE("marginals") {
        REQUIRE(run("bbn marginals --bbn " + net + " --nodes as:1000 --seed 4 --n 100000 --format json",
                    s / "m.json") == 0);
        const Json m = tortrust::parse_json(slurp(s / "m.json"));
        REQUIRE(m["marginals"].size() == 1);
        CHECK(std::abs(m["marginals"][0]["estimate"].get<double>() - 0.5) < 0.01);
        // Same seed, same bytes.
        REQUIRE(run("bbn marginals --bbn " + net + " --nodes as:1000 --seed 4 --n 100000 --format json",
                    s / "m2.json") == 0);
        CHECK(slurp(s / "m.json") == slurp(s / "m2.json"));
        CHECK(run("bbn marginals --bbn " + net + " --nodes ghost --seed 4") == 5);
        CHECK(run("bbn marginals --bbn " + net + " --seed 4 --format xml") == 5);
    }
    SUBCASE("event") {
        REQUIRE(run("bbn event --bbn " + net + " --expr 'as:1000 or as:1001' --seed 1 --n 20000", s / "e.csv") == 0);
        const std::string csv = slurp(s / "e.csv");
        CHECK(csv.rfind("event,estimate,n_samples,seed\n", 0) == 0);
        const double p = std::stod(csv.substr(csv.find("\",") + 2));
        // 1 - 0.5 * 0.5
        CHECK(std::abs(p - 0.75) < 4 * std::sqrt(0.75 * 0.25 / 20000));
        CHECK(run("bbn event --bbn " + net + " --expr 'as:1000 or' --seed 1") == 4);
    }
    SUBCASE("exact enumeration is capped") {
        CHECK(run("bbn exact --bbn " + net) == 5);
    }
    SUBCASE("sample dump") {
        REQUIRE(run("bbn sample --bbn " + net + " --seed 2 --n 10 --dump " + quote((s / "d.bin").string()) + " --out " +
                    quote((s / "samples.csv").string())) == 0);
        CHECK(fs::file_size(s / "d.bin") > 0);
        std::istringstream lines(slurp(s / "samples.csv"));
        std::string line;
        std::size_t count = 0;
        while (std::getline(lines, line)) ++count;
        CHECK(count == 11);
        const Json man = tortrust::parse_json(slurp(s / "samples.csv.manifest.json"));
        CHECK(man["outputs"].size() == 2);
    }
}

TEST_CASE("exact marginals on a small net") {
    Scratch s("exact");
    spit(s / "world.json",
         R"({"instances": [{"id": "asorg:A", "type_name": "ASOrganization", "attributes": {}},
                           {"id": "as:1", "type_name": "AS", "attributes": {"as_number": 1}}],
             "relationships": [{"parent": "asorg:A", "child": "as:1"}]})");
    spit(s / "b.json", R"({"trust": [["abs", "is ASOrganization", 0.25], ["r", "is AS", 0.1]]})");
    REQUIRE(run("bbn compile --world " + quote((s / "world.json").string()) + " --beliefs " +
                quote((s / "b.json").string()) + " --out " + quote((s / "n.json").string())) == 0);
    REQUIRE(run("bbn exact --bbn " + quote((s / "n.json").string()), s / "x.csv") == 0);
    // 1 - 0.75 * 0.9 for the AS.
    CHECK(slurp(s / "x.csv") == "node,probability\nasorg:A,0.250000\nas:1,0.325000\n");
}

TEST_CASE("experiment") {
    Scratch s("experiment");
    make_world(s);
    const Json w = tortrust::parse_json(slurp(s / "world.json"));
    // Clients and destination: ASes with no relays.
    std::vector<std::string> ases;
    std::set<std::int64_t> relay_as;
    for (const auto& i : w["instances"])
        if (i["type_name"] == "TorRelay") relay_as.insert(i["attributes"]["as_number"].get<std::int64_t>());
    for (const auto& i : w["instances"])
        if (i["type_name"] == "AS" && !relay_as.count(i["attributes"]["as_number"].get<std::int64_t>()))
            ases.push_back(i["id"]);
    REQUIRE(ases.size() >= 4);

    REQUIRE(run("beliefs the-man --world " + quote((s / "world.json").string()) + " --out " +
                quote((s / "man.json").string())) == 0);
    spit(s / "exp.json", Json{{"world", "bundle"},
                              {"adversary", "man.json"},
                              {"clients", {ases[0], ases[1], ases[2]}},
                              {"destination_as", ases[3]},
                              {"seed", 8},
                              {"n_samples", 2000}}
                             .dump());
    const std::string cfg = quote((s / "exp.json").string());
    REQUIRE(run("experiment --config " + cfg + " --out " + quote((s / "t1.csv").string())) == 0);
    REQUIRE(run("experiment --config " + cfg + " --out " + quote((s / "t2.csv").string())) == 0);
    const std::string t1 = slurp(s / "t1.csv");
    CHECK(t1 == slurp(s / "t2.csv"));
    CHECK(std::count(t1.begin(), t1.end(), '\n') == 6);
    CHECK(t1.rfind("scenario,mean,median,min,max,n_samples,seed\n", 0) == 0);
    for (const char* row : {"tor-default,", "clients-trust,", "clients-service-1,", "clients-service-3,"})
        CHECK(t1.find(row) != std::string::npos);

    const Json man = tortrust::parse_json(slurp(s / "t1.csv.manifest.json"));
    CHECK(man["inputs"].size() >= 3);  // config, world bundle, adversary

    REQUIRE(run("experiment --config " + cfg + " --scenario clients-trust --seed 9", s / "t3.csv") == 0);
    const std::string t3 = slurp(s / "t3.csv");
    CHECK(std::count(t3.begin(), t3.end(), '\n') == 2);
    CHECK(t3.find(",9\n") != std::string::npos);

    spit(s / "bad.json", R"({"world": "bundle"})");
    CHECK(run("experiment --config " + quote((s / "bad.json").string())) == 5);
}
