#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tortrust/bbn.hpp"
#include "tortrust/pathsel.hpp"
#include "tortrust/world.hpp"

namespace tortrust {

namespace scenario {
inline constexpr std::string_view TorDefault = "tor-default";
inline constexpr std::string_view ClientsTrust = "clients-trust";
inline constexpr std::string_view ClientsService = "clients-service";
}  // namespace scenario

struct ExperimentConfig {
    /// World file, or a dataset bundle directory to build the world from.
    std::filesystem::path world;
    /// Adversary belief document.
    std::filesystem::path adversary;
    std::vector<ClientLocation> clients;
    NodeId destination_as;
    std::vector<std::string> scenarios{std::string(scenario::TorDefault), std::string(scenario::ClientsTrust),
                                       std::string(scenario::ClientsService)};
    std::size_t n_samples = 100000;
    std::uint64_t seed = 0;
    std::size_t k_servers = 3;
};

/// Relative paths resolve against `base_dir`. Throws SemanticError for
/// missing keys.
ExperimentConfig experiment_config_from_json(const Json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& file);

struct ExperimentRow {
    std::string scenario;
    double mean = 0.0;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    std::vector<double> per_client;
};

struct ExperimentTable {
    std::vector<ExperimentRow> rows;
    const ExperimentRow* find(std::string_view scenario) const;
};

ExperimentRow summarize(std::string scenario, std::vector<double> per_client, std::size_t n, std::uint64_t seed);

/// Per-client first-last probability with Tor's default selection: each
/// sample draws a fresh circuit and a fresh adversary.
std::vector<double> tor_default_probabilities(const CompiledBbn& b, const World& w,
                                              std::span<const ClientLocation> clients, const NodeId& destination_as,
                                              std::size_t n, std::uint64_t seed);
/// Per-client minimum over the client's three trust-selected guards and all exits.
std::vector<double> clients_trust_probabilities(const CompiledBbn& b, const World& w,
                                                std::span<const ClientLocation> clients,
                                                const NodeId& destination_as, std::size_t n, std::uint64_t seed);

/// Rows: tor-default, clients-trust, clients-service-1 .. clients-service-k
/// (filtered by cfg.scenarios).
ExperimentTable run_experiment(const ExperimentConfig& cfg, const World& w, const CompiledBbn& b);
/// Loads the world and adversary named by cfg, then runs.
ExperimentTable run_experiment(const ExperimentConfig& cfg);

/// CSV with header scenario,mean,median,min,max,n_samples,seed.
std::string to_csv(const ExperimentTable& t);

}  // namespace tortrust
