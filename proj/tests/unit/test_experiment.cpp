#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "tortrust/error.hpp"
#include "tortrust/experiment.hpp"
#include "tortrust/io.hpp"

using namespace tortrust;
using namespace fixtures;

namespace {

CompiledBbn compile_doc(const World& w, const std::string& json) {
    const BeliefDocument doc = parse_belief_document(json);
    return compile(apply_structural(w, default_ontology(), doc), doc.trust, doc.scale);
}

Json base_config() {
    return Json{{"world", "w.json"}, {"adversary", "adv.json"}, {"clients", {"as:1", "as:3"}},
                {"destination_as", "as:9"}, {"seed", 5}};
}

}  // namespace

TEST_CASE("config parsing") {
    SUBCASE("defaults and relative paths") {
        const ExperimentConfig cfg = experiment_config_from_json(base_config(), "/data/run");
        CHECK(cfg.world == std::filesystem::path("/data/run/w.json"));
        CHECK(cfg.adversary == std::filesystem::path("/data/run/adv.json"));
        CHECK(cfg.clients == std::vector<ClientLocation>{{"as:1"}, {"as:3"}});
        CHECK(cfg.destination_as == "as:9");
        CHECK(cfg.seed == 5);
        CHECK(cfg.n_samples == 100000);
        CHECK(cfg.k_servers == 3);
        CHECK(cfg.scenarios.size() == 3);
    }
    SUBCASE("absolute paths are kept") {
        Json j = base_config();
        j["world"] = "/abs/world.json";
        CHECK(experiment_config_from_json(j, "/data").world == std::filesystem::path("/abs/world.json"));
    }
    SUBCASE("optional keys") {
        Json j = base_config();
        j["n_samples"] = 1000;
        j["k_servers"] = 2;
        j["scenarios"] = {"tor-default"};
        const ExperimentConfig cfg = experiment_config_from_json(j);
        CHECK(cfg.n_samples == 1000);
        CHECK(cfg.k_servers == 2);
        CHECK(cfg.scenarios == std::vector<std::string>{"tor-default"});
    }
    SUBCASE("errors") {
        for (const char* key : {"world", "adversary", "clients", "destination_as", "seed"}) {
            Json j = base_config();
            j.erase(key);
            CHECK_THROWS_AS(experiment_config_from_json(j), SemanticError);
        }
        Json j = base_config();
        j["scenarios"] = {"nonsense"};
        CHECK_THROWS_AS(experiment_config_from_json(j), SemanticError);
        j = base_config();
        j["seed"] = "five";
        CHECK_THROWS_AS(experiment_config_from_json(j), SemanticError);
        CHECK_THROWS_AS(experiment_config_from_json(Json::array()), SemanticError);
    }
    SUBCASE("file relative to its directory") {
        const auto dir = std::filesystem::temp_directory_path() / "tortrust_cfg_test";
        std::filesystem::create_directories(dir);
        std::ofstream(dir / "exp.json") << base_config().dump();
        CHECK(load_experiment_config(dir / "exp.json").world == dir / "w.json");
        std::filesystem::remove_all(dir);
    }
}

TEST_CASE("summary statistics") {
    const ExperimentRow odd = summarize("x", {0.3, 0.1, 0.2}, 10, 7);
    CHECK(odd.mean == doctest::Approx(0.2));
    CHECK(odd.median == 0.2);
    CHECK(odd.min == 0.1);
    CHECK(odd.max == 0.3);
    CHECK(odd.n_samples == 10);
    CHECK(odd.seed == 7);
    CHECK(odd.per_client == std::vector<double>{0.3, 0.1, 0.2});

    const ExperimentRow even = summarize("y", {0.4, 0.1, 0.3, 0.2}, 10, 7);
    CHECK(even.median == doctest::Approx(0.25));
}

TEST_CASE("csv table") {
    ExperimentTable t;
    t.rows.push_back(summarize("tor-default", {0.5, 0.25}, 100, 3));
    const std::string csv = to_csv(t);
    CHECK(csv == "scenario,mean,median,min,max,n_samples,seed\n"
                 "tor-default,0.375000,0.375000,0.250000,0.500000,100,3\n");
    CHECK(t.find("tor-default") != nullptr);
    CHECK(t.find("clients-trust") == nullptr);
}

TEST_CASE("small experiment") {
    const World w = route_world();
    const CompiledBbn b = compile_doc(w, R"({"trust": [["abs", "id in {\"asorg:Bad\"}", 0.5],
                                                        ["abs", "id in {\"asorg:Clean\"}", 0.02],
                                                        ["abs", "is RelayFamily", 0.01]]})");
    ExperimentConfig cfg;
    cfg.clients = {{"as:1"}, {"as:3"}, {"as:6"}};
    cfg.destination_as = "as:9";
    cfg.n_samples = 20000;
    cfg.seed = 99;
    const ExperimentTable t = run_experiment(cfg, w, b);

    REQUIRE(t.rows.size() == 5);
    const char* names[] = {"tor-default", "clients-trust", "clients-service-1", "clients-service-2",
                           "clients-service-3"};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(t.rows[i].scenario == names[i]);
        CHECK(t.rows[i].per_client.size() == 3);
        for (double p : t.rows[i].per_client) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
        CHECK(t.rows[i].min <= t.rows[i].median);
        CHECK(t.rows[i].median <= t.rows[i].max);
    }
    // Trust-aware choice minimizes over a superset of what Tor's sampler can pick.
    CHECK(t.find("clients-trust")->mean < t.find("tor-default")->mean);
    for (int k = 2; k <= 3; ++k)
        CHECK(t.find("clients-service-" + std::to_string(k))->mean <=
              t.find("clients-service-" + std::to_string(k - 1))->mean);

    CHECK(to_csv(run_experiment(cfg, w, b)) == to_csv(t));

    ExperimentConfig only = cfg;
    only.scenarios = {"clients-trust"};
    const ExperimentTable one = run_experiment(only, w, b);
    REQUIRE(one.rows.size() == 1);
    CHECK(one.rows[0].per_client == t.find("clients-trust")->per_client);

    ExperimentConfig bad = cfg;
    bad.destination_as = "relay:E3";
    CHECK_THROWS_AS(run_experiment(bad, w, b), SemanticError);
    bad = cfg;
    bad.clients = {{"as:404"}};
    CHECK_THROWS_AS(run_experiment(bad, w, b), SemanticError);
}
