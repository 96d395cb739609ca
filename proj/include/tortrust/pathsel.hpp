#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tortrust/bbn.hpp"
#include "tortrust/random.hpp"
#include "tortrust/world.hpp"

namespace tortrust {

struct ClientLocation {
    NodeId as_id;
    auto operator<=>(const ClientLocation&) const = default;
};

struct Circuit {
    ClientLocation client;
    NodeId guard;
    NodeId exit;
    NodeId destination_as;
    bool operator==(const Circuit&) const = default;
};

struct RelayView {
    NodeId id;
    double bandwidth = 0.0;
    bool guard = false;
    bool exit = false;
    NodeId family;
    /// First two octets of the IPv4 address, e.g. "10.3".
    std::string prefix16;
    NodeId as_id;
};

struct ConsensusView {
    std::vector<RelayView> relays;
    const RelayView* find(std::string_view id) const;
};

/// Relay flags, bandwidth, family and /16 prefix as recorded in the world.
ConsensusView consensus_view(const World& w);

/// One side of a circuit: a relay and the AS at the other end of its
/// virtual link.
using LinkEnd = std::pair<NodeId, NodeId>;  // (AS id, relay id)

/// Joint compromise samples covering a fixed set of (AS, relay) ends.
///
/// An end is observed when the relay or its virtual link is compromised. A
/// missing virtual link degrades to the two-AS path {AS, relay's AS}. All
/// queries read the same batch, so comparisons between ends are made on the
/// same sampled adversaries.
class CircuitSampler {
public:
    CircuitSampler(const CompiledBbn& b, const World& w, std::span<const LinkEnd> ends, std::size_t n,
                   std::uint64_t seed);

    std::size_t n_samples() const noexcept { return n_; }

    /// P(relay or link observed). Throws SemanticError for an end not covered.
    double end_probability(const NodeId& as_id, const NodeId& relay) const;
    /// P(both ends observed in the same sample).
    double first_last_probability(const Circuit& c) const;
    bool first_last_in_sample(const Circuit& c, std::size_t sample) const;

private:
    const std::vector<std::uint64_t>& end_row(const NodeId& as_id, const NodeId& relay) const;

    std::size_t n_ = 0;
    std::map<LinkEnd, std::vector<std::uint64_t>> rows_;
};

/// Probability that the adversary observes the guard or the client-to-guard link.
double guard_exposure(const CompiledBbn& b, const World& w, const ClientLocation& client, const NodeId& guard,
                      std::size_t n, std::uint64_t seed);

/// The `count` guard-flagged relays with the smallest exposure, ties by id.
std::vector<NodeId> select_guards(const CircuitSampler& s, const ConsensusView& cv, const ClientLocation& client,
                                  std::size_t count = 3);
std::vector<NodeId> select_guards(const CompiledBbn& b, const World& w, const ClientLocation& client,
                                  std::size_t count, std::size_t n, std::uint64_t seed);

/// P[(guard or client link) and (exit or destination link)] from joint samples.
double first_last_probability(const CompiledBbn& b, const World& w, const Circuit& circuit, std::size_t n,
                              std::uint64_t seed);

struct CircuitChoice {
    NodeId guard;
    NodeId exit;
    double probability = 1.0;
};

/// Minimizes the first-last probability over guards x exit-flagged relays.
/// Ties are broken by (guard id, exit id). `exits` restricts the exit set
/// when non-empty.
CircuitChoice select_circuit(const CircuitSampler& s, const ConsensusView& cv, const ClientLocation& client,
                             std::span<const NodeId> guards, const NodeId& destination_as,
                             std::span<const NodeId> exits = {});
CircuitChoice select_circuit(const CompiledBbn& b, const World& w, const ClientLocation& client,
                             std::span<const NodeId> guards, const NodeId& destination_as, std::size_t n,
                             std::uint64_t seed);

/// Bandwidth-weighted exit, then bandwidth-weighted guard among guards not
/// sharing the exit's family or /16. Throws SemanticError when either
/// candidate set is empty.
Circuit tor_default_circuit(const ConsensusView& cv, const ClientLocation& client, const NodeId& destination_as,
                            Engine& eng);
Circuit tor_default_circuit(const ConsensusView& cv, const ClientLocation& client, const NodeId& destination_as,
                            std::uint64_t seed);

struct PlacementResult {
    std::vector<NodeId> chosen_ases;
    /// Per-client probability after each placement round.
    std::vector<std::map<ClientLocation, double>> per_client_probability;
    std::vector<double> mean_after_round() const;
};

/// ASes that contain at least one exit relay, sorted by id.
std::vector<NodeId> exit_ases(const ConsensusView& cv);

/// Per-client seed derived from the master seed and client id.
std::uint64_t client_seed(std::uint64_t master, const ClientLocation& client, std::string_view scenario);

/// Greedy server placement over ASes containing an exit. Each round picks
/// the AS minimizing the mean client probability, where a client's
/// probability only changes when the new location lowers it.
PlacementResult place_servers(const CompiledBbn& b, const World& w, std::span<const ClientLocation> clients,
                              std::size_t k, std::size_t n, std::uint64_t seed);

}  // namespace tortrust
