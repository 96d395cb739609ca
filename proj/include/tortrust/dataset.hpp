#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tortrust/attributes.hpp"

namespace tortrust {

struct ConsensusRecord {
    std::string fingerprint;
    bool guard = false;
    bool exit = false;
    double bandwidth = 0.0;
    /// Fingerprints this relay's descriptor lists as family.
    std::vector<std::string> family;
    std::string os;
    std::string ip;
    std::int64_t as_number = 0;
    bool operator==(const ConsensusRecord&) const = default;
};

/// Route from src_as to dst_as. The path includes both endpoints.
struct AsPathRecord {
    std::int64_t src_as = 0;
    std::int64_t dst_as = 0;
    std::vector<std::int64_t> as_path;
    std::vector<std::string> ixp_path;
    bool operator==(const AsPathRecord&) const = default;
};

struct AsClusterRecord {
    std::string org_id;
    std::vector<std::int64_t> members;
    bool operator==(const AsClusterRecord&) const = default;
};

struct IxpClusterRecord {
    std::string org_id;
    std::vector<std::string> members;
    bool operator==(const IxpClusterRecord&) const = default;
};

/// Location of a relay ("relay:<fingerprint>") or IXP ("ixp:<name>").
struct GeoRecord {
    std::string entity;
    std::string country;
    double lat = 0.0;
    double lon = 0.0;
    bool operator==(const GeoRecord&) const = default;
};

/// Relays carrying the Running flag in one consensus epoch.
struct UptimeRecord {
    std::int64_t epoch = 0;
    std::vector<std::string> running;
    bool operator==(const UptimeRecord&) const = default;
};

/// Normalized public-network data that world generation consumes.
struct DatasetBundle {
    std::vector<ConsensusRecord> consensus;
    std::vector<AsPathRecord> as_paths;
    std::vector<AsClusterRecord> as_clusters;
    std::vector<IxpClusterRecord> ixp_clusters;
    std::vector<GeoRecord> geo;
    std::vector<UptimeRecord> uptime;
    bool operator==(const DatasetBundle&) const = default;
};

/// Reads/writes the six JSON-lines files of a bundle directory. Missing
/// files load as empty.
DatasetBundle load_bundle(const std::filesystem::path& dir);
void save_bundle(const DatasetBundle& b, const std::filesystem::path& dir);

/// Parameters of the seeded synthetic network. Paths are shortest paths over
/// a Watts-Strogatz small-world AS graph; IXPs sit on a fraction of AS
/// adjacencies.
struct SynthParams {
    int n_as = 200;
    int n_ixp = 20;
    int n_relays = 100;
    /// Share of relays flagged guard-only, exit-only and both; the rest are
    /// middle-only.
    double guard_fraction = 0.45;
    double exit_fraction = 0.25;
    double both_fraction = 0.2;
    /// Number of ASes that host relays (relays are spread over them).
    int n_relay_as = 40;
    /// Sizes of multi-relay families; remaining relays are singletons.
    std::vector<int> family_sizes = {4, 3, 3, 2, 2, 2, 2, 2};
    /// Largest AS organization; every AS belongs to exactly one organization.
    int max_as_org_size = 3;
    int max_ixp_org_size = 2;
    int n_countries = 12;
    /// Ring-lattice neighbours on each side and rewiring probability.
    int lattice_k = 3;
    double rewire_p = 0.15;
    double ixp_edge_fraction = 0.1;
    int n_epochs = 24;
    bool operator==(const SynthParams&) const = default;
};

Json to_json(const SynthParams& p);
SynthParams synth_params_from_json(const Json& j);

/// Deterministic in (params, seed). Throws SemanticError on infeasible params.
DatasetBundle generate_synthetic(const SynthParams& params, std::uint64_t seed);

}  // namespace tortrust
