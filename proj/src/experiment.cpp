#include "tortrust/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "tortrust/beliefs.hpp"
#include "tortrust/dataset.hpp"
#include "tortrust/editor.hpp"
#include "tortrust/error.hpp"
#include "tortrust/io.hpp"
#include "tortrust/parallel.hpp"
#include "tortrust/worldgen.hpp"

namespace tortrust {

namespace {

std::filesystem::path resolve_path(const std::filesystem::path& p, const std::filesystem::path& base) {
    return p.is_absolute() || base.empty() ? p : base / p;
}

bool wants(const ExperimentConfig& cfg, std::string_view s) {
    return std::find(cfg.scenarios.begin(), cfg.scenarios.end(), s) != cfg.scenarios.end();
}

void require_as(const World& w, const NodeId& id, std::string_view role) {
    const TypeInstance* inst = w.find(id);
    if (inst == nullptr || inst->type_name != types::As)
        throw SemanticError(std::string(role) + " " + id + " is not an AS in the world");
}

std::string fixed(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw SemanticError("experiment config must be a JSON object");
    for (const char* key : {"world", "adversary", "clients", "destination_as", "seed"})
        if (!j.contains(key)) throw SemanticError(std::string("experiment config is missing '") + key + "'");
    ExperimentConfig cfg;
    try {
        cfg.world = resolve_path(j["world"].get<std::string>(), base_dir);
        cfg.adversary = resolve_path(j["adversary"].get<std::string>(), base_dir);
        for (const auto& c : j["clients"]) cfg.clients.push_back(ClientLocation{c.get<std::string>()});
        cfg.destination_as = j["destination_as"].get<std::string>();
        cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("scenarios")) cfg.scenarios = j["scenarios"].get<std::vector<std::string>>();
        if (j.contains("n_samples")) cfg.n_samples = j["n_samples"].get<std::size_t>();
        if (j.contains("k_servers")) cfg.k_servers = j["k_servers"].get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw SemanticError(std::string("malformed experiment config: ") + e.what());
    }
    for (const auto& s : cfg.scenarios)
        if (s != scenario::TorDefault && s != scenario::ClientsTrust && s != scenario::ClientsService)
            throw SemanticError("unknown scenario '" + s + "'");
    if (cfg.clients.empty()) throw SemanticError("experiment config lists no clients");
    if (cfg.n_samples == 0) throw SemanticError("n_samples must be positive");
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& file) {
    return experiment_config_from_json(load_json(file), file.parent_path());
}

const ExperimentRow* ExperimentTable::find(std::string_view scenario) const {
    for (const auto& r : rows)
        if (r.scenario == scenario) return &r;
    return nullptr;
}

ExperimentRow summarize(std::string scenario, std::vector<double> per_client, std::size_t n, std::uint64_t seed) {
    if (per_client.empty()) throw SemanticError("no per-client values to summarize");
    ExperimentRow row;
    row.scenario = std::move(scenario);
    row.n_samples = n;
    row.seed = seed;
    std::vector<double> sorted = per_client;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    row.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(m);
    row.median = m % 2 == 1 ? sorted[m / 2] : (sorted[m / 2 - 1] + sorted[m / 2]) / 2.0;
    row.min = sorted.front();
    row.max = sorted.back();
    row.per_client = std::move(per_client);
    return row;
}

std::vector<double> tor_default_probabilities(const CompiledBbn& b, const World& w,
                                              std::span<const ClientLocation> clients, const NodeId& destination_as,
                                              std::size_t n, std::uint64_t seed) {
    const ConsensusView cv = consensus_view(w);
    std::vector<double> out(clients.size(), 0.0);
    parallel_for(clients.size(), [&](std::size_t ci) {
        const ClientLocation& client = clients[ci];
        std::vector<LinkEnd> ends;
        for (const auto& r : cv.relays) {
            if (r.guard) ends.emplace_back(client.as_id, r.id);
            if (r.exit) ends.emplace_back(destination_as, r.id);
        }
        const std::uint64_t s = client_seed(seed, client, scenario::TorDefault);
        const CircuitSampler sampler(b, w, ends, n, s);
        Engine eng = make_engine(s, 1);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (sampler.first_last_in_sample(tor_default_circuit(cv, client, destination_as, eng), i)) ++hits;
        out[ci] = static_cast<double>(hits) / static_cast<double>(n);
    });
    return out;
}

std::vector<double> clients_trust_probabilities(const CompiledBbn& b, const World& w,
                                                std::span<const ClientLocation> clients,
                                                const NodeId& destination_as, std::size_t n, std::uint64_t seed) {
    const ConsensusView cv = consensus_view(w);
    std::vector<double> out(clients.size(), 0.0);
    parallel_for(clients.size(), [&](std::size_t ci) {
        const ClientLocation& client = clients[ci];
        std::vector<LinkEnd> ends;
        for (const auto& r : cv.relays) {
            if (r.guard) ends.emplace_back(client.as_id, r.id);
            if (r.exit) ends.emplace_back(destination_as, r.id);
        }
        const CircuitSampler sampler(b, w, ends, n, client_seed(seed, client, scenario::ClientsTrust));
        const auto guards = select_guards(sampler, cv, client);
        out[ci] = select_circuit(sampler, cv, client, guards, destination_as).probability;
    });
    return out;
}

ExperimentTable run_experiment(const ExperimentConfig& cfg, const World& w, const CompiledBbn& b) {
    for (const auto& c : cfg.clients) require_as(w, c.as_id, "client");
    require_as(w, cfg.destination_as, "destination");

    ExperimentTable t;
    if (wants(cfg, scenario::TorDefault))
        t.rows.push_back(summarize(std::string(scenario::TorDefault),
                                   tor_default_probabilities(b, w, cfg.clients, cfg.destination_as, cfg.n_samples,
                                                             cfg.seed),
                                   cfg.n_samples, cfg.seed));
    if (wants(cfg, scenario::ClientsTrust))
        t.rows.push_back(summarize(std::string(scenario::ClientsTrust),
                                   clients_trust_probabilities(b, w, cfg.clients, cfg.destination_as, cfg.n_samples,
                                                               cfg.seed),
                                   cfg.n_samples, cfg.seed));
    if (wants(cfg, scenario::ClientsService) && cfg.k_servers > 0) {
        const PlacementResult placed = place_servers(b, w, cfg.clients, cfg.k_servers, cfg.n_samples, cfg.seed);
        for (std::size_t r = 0; r < placed.per_client_probability.size(); ++r) {
            std::vector<double> per_client;
            for (const auto& c : cfg.clients) per_client.push_back(placed.per_client_probability[r].at(c));
            t.rows.push_back(summarize(std::string(scenario::ClientsService) + "-" + std::to_string(r + 1),
                                       std::move(per_client), cfg.n_samples, cfg.seed));
        }
    }
    return t;
}

ExperimentTable run_experiment(const ExperimentConfig& cfg) {
    const Ontology o = default_ontology();
    World w = std::filesystem::is_directory(cfg.world) ? build_world(o, load_bundle(cfg.world))
                                                       : world_from_json(load_json(cfg.world));
    const BeliefDocument doc = parse_belief_document(read_file(cfg.adversary));
    const EditedWorld ew = apply_structural(w, o, doc);
    const CompiledBbn b = compile(ew, doc.trust, doc.scale);
    return run_experiment(cfg, ew.world, b);
}

std::string to_csv(const ExperimentTable& t) {
    std::string out = "scenario,mean,median,min,max,n_samples,seed\n";
    for (const auto& r : t.rows)
        out += r.scenario + "," + fixed(r.mean) + "," + fixed(r.median) + "," + fixed(r.min) + "," + fixed(r.max) +
               "," + std::to_string(r.n_samples) + "," + std::to_string(r.seed) + "\n";
    return out;
}

}  // namespace tortrust
