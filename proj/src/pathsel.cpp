#include "tortrust/pathsel.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <set>

#include "tortrust/error.hpp"
#include "tortrust/ontology.hpp"
#include "tortrust/parallel.hpp"
#include "tortrust/worldgen.hpp"

namespace tortrust {

namespace {

std::optional<double> number_attr(const TypeInstance& inst, std::string_view name) {
    auto it = inst.attributes.find(std::string(name));
    if (it == inst.attributes.end()) return std::nullopt;
    if (const auto* d = std::get_if<double>(&it->second)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
    return std::nullopt;
}

std::string prefix16(const std::string& ip) {
    const auto first = ip.find('.');
    if (first == std::string::npos) return {};
    const auto second = ip.find('.', first + 1);
    return second == std::string::npos ? std::string{} : ip.substr(0, second);
}

/// Virtual-link node per (AS id, relay id), read from the link attributes.
std::map<LinkEnd, NodeId> virtual_links(const World& w) {
    std::map<LinkEnd, NodeId> out;
    for (const auto& inst : w.instances()) {
        if (inst.type_name != types::VirtualLink) continue;
        auto asn = inst.attributes.find(std::string(attrs::AsNumber));
        auto fp = inst.attributes.find(std::string(attrs::Fingerprint));
        if (asn == inst.attributes.end() || fp == inst.attributes.end()) continue;
        const auto* a = std::get_if<std::int64_t>(&asn->second);
        const auto* f = std::get_if<std::string>(&fp->second);
        if (a != nullptr && f != nullptr) out.emplace(LinkEnd{ids::as(*a), ids::relay(*f)}, inst.id);
    }
    return out;
}

double fraction(std::span<const std::uint64_t> bits, std::size_t n) {
    return static_cast<double>(popcount(bits)) / static_cast<double>(n);
}

bool separated(const RelayView& a, const RelayView& b) {
    if (a.id == b.id) return false;
    if (!a.family.empty() && a.family == b.family) return false;
    return a.prefix16.empty() || a.prefix16 != b.prefix16;
}

const RelayView& require_relay(const ConsensusView& cv, std::string_view id) {
    const RelayView* r = cv.find(id);
    if (r == nullptr) throw SemanticError("unknown relay " + std::string(id));
    return *r;
}

std::size_t weighted_pick(Engine& eng, const std::vector<const RelayView*>& candidates, std::string_view what) {
    double total = 0.0;
    for (const auto* r : candidates) total += r->bandwidth;
    if (candidates.empty() || !(total > 0.0)) throw SemanticError("no " + std::string(what) + " with positive bandwidth");
    const double x = uniform01(eng) * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i]->bandwidth <= 0.0) continue;
        acc += candidates[i]->bandwidth;
        last_positive = i;
        if (x < acc) return i;
    }
    return last_positive;
}

std::vector<LinkEnd> guard_ends(const ConsensusView& cv, const ClientLocation& client) {
    std::vector<LinkEnd> ends;
    for (const auto& r : cv.relays)
        if (r.guard) ends.emplace_back(client.as_id, r.id);
    return ends;
}

}  // namespace

const RelayView* ConsensusView::find(std::string_view id) const {
    auto it = std::lower_bound(relays.begin(), relays.end(), id,
                               [](const RelayView& r, std::string_view key) { return r.id < key; });
    return it != relays.end() && it->id == id ? &*it : nullptr;
}

ConsensusView consensus_view(const World& w) {
    ConsensusView cv;
    for (World::Index i = 0; i < w.size(); ++i) {
        const TypeInstance& inst = w.at(i);
        if (inst.type_name != types::TorRelay) continue;
        RelayView r;
        r.id = inst.id;
        r.bandwidth = number_attr(inst, attrs::Bandwidth).value_or(0.0);
        if (r.bandwidth < 0.0) throw SemanticError("relay " + inst.id + " has negative bandwidth");
        if (auto it = inst.attributes.find(std::string(attrs::Flags)); it != inst.attributes.end())
            if (const auto* flags = std::get_if<StringSet>(&it->second)) {
                r.guard = flags->contains("Guard");
                r.exit = flags->contains("Exit");
            }
        if (auto it = inst.attributes.find(std::string(attrs::Ip)); it != inst.attributes.end())
            if (const auto* ip = std::get_if<std::string>(&it->second)) r.prefix16 = prefix16(*ip);
        if (auto it = inst.attributes.find(std::string(attrs::AsNumber)); it != inst.attributes.end())
            if (const auto* asn = std::get_if<std::int64_t>(&it->second)) r.as_id = ids::as(*asn);
        for (World::Index p : w.parents(i))
            if (w.at(p).type_name == types::RelayFamily) r.family = w.at(p).id;
        cv.relays.push_back(std::move(r));
    }
    std::sort(cv.relays.begin(), cv.relays.end(), [](const RelayView& a, const RelayView& b) { return a.id < b.id; });
    return cv;
}

CircuitSampler::CircuitSampler(const CompiledBbn& b, const World& w, std::span<const LinkEnd> ends, std::size_t n,
                               std::uint64_t seed)
    : n_(n) {
    const auto links = virtual_links(w);
    const ConsensusView cv = consensus_view(w);

    // Nodes whose union observes each end.
    std::map<LinkEnd, std::vector<NodeId>> members;
    std::set<NodeId> targets;
    for (const auto& end : ends) {
        if (members.contains(end)) continue;
        const auto& [as_id, relay] = end;
        std::vector<NodeId> m{relay};
        if (auto it = links.find(end); it != links.end()) {
            m.push_back(it->second);
        } else {
            // No routing data: the link degrades to the two endpoint ASes.
            m.push_back(as_id);
            const RelayView& r = require_relay(cv, relay);
            if (!r.as_id.empty() && r.as_id != as_id) m.push_back(r.as_id);
        }
        for (const auto& id : m) {
            if (b.index_of(id) == CompiledBbn::npos) throw SemanticError("no BBN node for " + id);
            targets.insert(id);
        }
        members.emplace(end, std::move(m));
    }

    const std::vector<NodeId> target_list(targets.begin(), targets.end());
    const CompiledBbn sub = ancestral_subnet(b, target_list);
    const SampleBatch batch(sub, n, seed);
    for (const auto& [end, m] : members) {
        std::vector<std::uint64_t> row(batch.words(), 0);
        for (const auto& id : m) {
            const auto r = batch.row(sub.require(id));
            for (std::size_t i = 0; i < row.size(); ++i) row[i] |= r[i];
        }
        rows_.emplace(end, std::move(row));
    }
}

const std::vector<std::uint64_t>& CircuitSampler::end_row(const NodeId& as_id, const NodeId& relay) const {
    auto it = rows_.find(LinkEnd{as_id, relay});
    if (it == rows_.end()) throw SemanticError("circuit end (" + as_id + ", " + relay + ") was not sampled");
    return it->second;
}

double CircuitSampler::end_probability(const NodeId& as_id, const NodeId& relay) const {
    return fraction(end_row(as_id, relay), n_);
}

double CircuitSampler::first_last_probability(const Circuit& c) const {
    const auto& a = end_row(c.client.as_id, c.guard);
    const auto& b = end_row(c.destination_as, c.exit);
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.size(); ++i) count += static_cast<std::size_t>(std::popcount(a[i] & b[i]));
    return static_cast<double>(count) / static_cast<double>(n_);
}

bool CircuitSampler::first_last_in_sample(const Circuit& c, std::size_t sample) const {
    const auto& a = end_row(c.client.as_id, c.guard);
    const auto& b = end_row(c.destination_as, c.exit);
    return ((a[sample / 64] & b[sample / 64]) >> (sample % 64)) & 1U;
}

double guard_exposure(const CompiledBbn& b, const World& w, const ClientLocation& client, const NodeId& guard,
                      std::size_t n, std::uint64_t seed) {
    const LinkEnd end{client.as_id, guard};
    return CircuitSampler(b, w, std::span(&end, 1), n, seed).end_probability(client.as_id, guard);
}

std::vector<NodeId> select_guards(const CircuitSampler& s, const ConsensusView& cv, const ClientLocation& client,
                                  std::size_t count) {
    std::vector<std::pair<double, NodeId>> ranked;
    for (const auto& r : cv.relays)
        if (r.guard) ranked.emplace_back(s.end_probability(client.as_id, r.id), r.id);
    if (ranked.size() < count)
        throw SemanticError("need " + std::to_string(count) + " guards, consensus has " + std::to_string(ranked.size()));
    std::sort(ranked.begin(), ranked.end());
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(ranked[i].second);
    return out;
}

std::vector<NodeId> select_guards(const CompiledBbn& b, const World& w, const ClientLocation& client,
                                  std::size_t count, std::size_t n, std::uint64_t seed) {
    const ConsensusView cv = consensus_view(w);
    const auto ends = guard_ends(cv, client);
    return select_guards(CircuitSampler(b, w, ends, n, seed), cv, client, count);
}

double first_last_probability(const CompiledBbn& b, const World& w, const Circuit& circuit, std::size_t n,
                              std::uint64_t seed) {
    const std::vector<LinkEnd> ends{{circuit.client.as_id, circuit.guard}, {circuit.destination_as, circuit.exit}};
    return CircuitSampler(b, w, ends, n, seed).first_last_probability(circuit);
}

CircuitChoice select_circuit(const CircuitSampler& s, const ConsensusView& cv, const ClientLocation& client,
                             std::span<const NodeId> guards, const NodeId& destination_as,
                             std::span<const NodeId> exits) {
    if (guards.empty()) throw SemanticError("no guards to choose from");
    std::vector<NodeId> exit_ids(exits.begin(), exits.end());
    if (exit_ids.empty())
        for (const auto& r : cv.relays)
            if (r.exit) exit_ids.push_back(r.id);
    if (exit_ids.empty()) throw SemanticError("no exit relays");
    std::vector<NodeId> guard_ids(guards.begin(), guards.end());
    std::sort(guard_ids.begin(), guard_ids.end());
    std::sort(exit_ids.begin(), exit_ids.end());

    std::optional<CircuitChoice> best;
    for (const auto& g : guard_ids) {
        const RelayView& gv = require_relay(cv, g);
        for (const auto& e : exit_ids) {
            if (!separated(gv, require_relay(cv, e))) continue;
            const double p = s.first_last_probability(Circuit{client, g, e, destination_as});
            if (!best || p < best->probability) best = CircuitChoice{g, e, p};
        }
    }
    if (!best) throw SemanticError("no exit can be combined with the given guards");
    return *best;
}

CircuitChoice select_circuit(const CompiledBbn& b, const World& w, const ClientLocation& client,
                             std::span<const NodeId> guards, const NodeId& destination_as, std::size_t n,
                             std::uint64_t seed) {
    const ConsensusView cv = consensus_view(w);
    std::vector<LinkEnd> ends;
    for (const auto& g : guards) ends.emplace_back(client.as_id, g);
    for (const auto& r : cv.relays)
        if (r.exit) ends.emplace_back(destination_as, r.id);
    return select_circuit(CircuitSampler(b, w, ends, n, seed), cv, client, guards, destination_as);
}

Circuit tor_default_circuit(const ConsensusView& cv, const ClientLocation& client, const NodeId& destination_as,
                            Engine& eng) {
    std::vector<const RelayView*> exits;
    for (const auto& r : cv.relays)
        if (r.exit) exits.push_back(&r);
    if (exits.empty()) throw SemanticError("no exit relays");
    const RelayView& exit = *exits[weighted_pick(eng, exits, "exit")];
    std::vector<const RelayView*> guards;
    for (const auto& r : cv.relays)
        if (r.guard && separated(r, exit)) guards.push_back(&r);
    if (guards.empty()) throw SemanticError("no guard compatible with exit " + exit.id);
    const RelayView& guard = *guards[weighted_pick(eng, guards, "guard")];
    return Circuit{client, guard.id, exit.id, destination_as};
}

Circuit tor_default_circuit(const ConsensusView& cv, const ClientLocation& client, const NodeId& destination_as,
                            std::uint64_t seed) {
    Engine eng = make_engine(seed);
    return tor_default_circuit(cv, client, destination_as, eng);
}

std::vector<double> PlacementResult::mean_after_round() const {
    std::vector<double> out;
    for (const auto& round : per_client_probability) {
        double sum = 0.0;
        for (const auto& [c, p] : round) sum += p;
        out.push_back(round.empty() ? 0.0 : sum / static_cast<double>(round.size()));
    }
    return out;
}

std::vector<NodeId> exit_ases(const ConsensusView& cv) {
    std::set<NodeId> out;
    for (const auto& r : cv.relays)
        if (r.exit && !r.as_id.empty()) out.insert(r.as_id);
    return {out.begin(), out.end()};
}

std::uint64_t client_seed(std::uint64_t master, const ClientLocation& client, std::string_view scenario) {
    return derive_seed(derive_seed(master, hash_string(client.as_id)), hash_string(scenario));
}

PlacementResult place_servers(const CompiledBbn& b, const World& w, std::span<const ClientLocation> clients,
                              std::size_t k, std::size_t n, std::uint64_t seed) {
    const ConsensusView cv = consensus_view(w);
    const std::vector<NodeId> candidates = exit_ases(cv);
    if (k == 0) throw SemanticError("server count must be positive");
    if (k > candidates.size())
        throw SemanticError("cannot place " + std::to_string(k) + " servers in " + std::to_string(candidates.size()) +
                            " exit ASes");
    if (clients.empty()) throw SemanticError("no clients");

    std::map<NodeId, std::vector<NodeId>> exits_in;
    for (const auto& r : cv.relays)
        if (r.exit && !r.as_id.empty()) exits_in[r.as_id].push_back(r.id);

    // cost[c][a]: best first-last probability for client c with the server in AS a.
    std::vector<std::vector<double>> cost(clients.size(), std::vector<double>(candidates.size(), 1.0));
    parallel_for(clients.size(), [&](std::size_t ci) {
        const ClientLocation& client = clients[ci];
        std::vector<LinkEnd> ends = guard_ends(cv, client);
        for (const auto& [as_id, list] : exits_in)
            for (const auto& e : list) ends.emplace_back(as_id, e);
        const CircuitSampler s(b, w, ends, n, client_seed(seed, client, "clients-service"));
        const auto guards = select_guards(s, cv, client);
        for (std::size_t ai = 0; ai < candidates.size(); ++ai) {
            const auto& exits = exits_in.at(candidates[ai]);
            try {
                cost[ci][ai] = select_circuit(s, cv, client, guards, candidates[ai], exits).probability;
            } catch (const SemanticError&) {
                cost[ci][ai] = 1.0;  // every exit there clashes with the guards
            }
        }
    });

    PlacementResult out;
    std::vector<double> current(clients.size(), 1.0);
    std::vector<bool> used(candidates.size(), false);
    for (std::size_t round = 0; round < k; ++round) {
        std::size_t best = candidates.size();
        double best_mean = std::numeric_limits<double>::infinity();
        for (std::size_t ai = 0; ai < candidates.size(); ++ai) {
            if (used[ai]) continue;
            double sum = 0.0;
            for (std::size_t ci = 0; ci < clients.size(); ++ci) sum += std::min(current[ci], cost[ci][ai]);
            const double mean = sum / static_cast<double>(clients.size());
            if (mean < best_mean) {
                best_mean = mean;
                best = ai;
            }
        }
        used[best] = true;
        out.chosen_ases.push_back(candidates[best]);
        std::map<ClientLocation, double> snapshot;
        for (std::size_t ci = 0; ci < clients.size(); ++ci) {
            current[ci] = std::min(current[ci], cost[ci][best]);
            snapshot[clients[ci]] = current[ci];
        }
        out.per_client_probability.push_back(std::move(snapshot));
    }
    return out;
}

}  // namespace tortrust
