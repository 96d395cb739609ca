#include "tortrust/worldgen.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "tortrust/error.hpp"

namespace tortrust {

namespace ids {
std::string as(std::int64_t asn) { return "as:" + std::to_string(asn); }
std::string ixp(const std::string& name) { return "ixp:" + name; }
std::string relay(const std::string& fingerprint) { return "relay:" + fingerprint; }
std::string family(const std::string& smallest_fingerprint) { return "family:" + smallest_fingerprint; }
std::string as_org(const std::string& org) { return "asorg:" + org; }
std::string ixp_org(const std::string& org) { return "ixporg:" + org; }
std::string country(const std::string& code) { return "country:" + code; }
std::string vlink(std::int64_t asn, const std::string& fingerprint) {
    return "vlink:as" + std::to_string(asn) + "-relay:" + fingerprint;
}
}  // namespace ids

namespace {

std::string strip_relay_prefix(const std::string& id) {
    constexpr std::string_view prefix = "relay:";
    return id.starts_with(prefix) ? id.substr(prefix.size()) : id;
}

std::map<std::string, std::size_t> running_counts(const DatasetBundle& d) {
    std::map<std::string, std::size_t> counts;
    for (const auto& epoch : d.uptime) {
        // A relay listed twice in one epoch still counts once.
        std::vector<std::string> running = epoch.running;
        std::sort(running.begin(), running.end());
        running.erase(std::unique(running.begin(), running.end()), running.end());
        for (const auto& fp : running) ++counts[strip_relay_prefix(fp)];
    }
    return counts;
}

double uptime_from_counts(const std::map<std::string, std::size_t>& counts, std::size_t epochs,
                          const std::set<std::string>& family) {
    if (family.empty()) throw SemanticError("family_uptime: empty family");
    if (epochs == 0) throw SemanticError("family_uptime: no consensus epochs");
    std::size_t total = 0;
    for (const auto& m : family) {
        auto it = counts.find(strip_relay_prefix(m));
        if (it != counts.end()) total += it->second;
    }
    return static_cast<double>(total) / (static_cast<double>(family.size()) * static_cast<double>(epochs));
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

double family_uptime(const DatasetBundle& d, const std::set<std::string>& family) {
    return uptime_from_counts(running_counts(d), d.uptime.size(), family);
}

World build_world(const Ontology& o, const DatasetBundle& d) {
    using namespace types;
    std::vector<TypeInstance> instances;
    std::vector<RelationshipInstance> rels;
    auto add = [&](std::string id, std::string_view type, AttributeMap attrs = {}) {
        instances.push_back(TypeInstance{std::move(id), std::string(type), std::move(attrs)});
    };
    auto relate = [&](const std::string& parent, const std::string& child) {
        rels.push_back(RelationshipInstance{parent, child, {}});
    };

    // Relays by fingerprint.
    std::map<std::string, std::size_t> relay_index;
    for (std::size_t i = 0; i < d.consensus.size(); ++i)
        if (!relay_index.emplace(d.consensus[i].fingerprint, i).second)
            throw SemanticError("duplicate relay fingerprint: " + d.consensus[i].fingerprint);

    // AS and IXP universes: everything on a path plus every relay's AS.
    std::set<std::int64_t> as_set;
    std::set<std::string> ixp_set;
    std::map<std::pair<std::int64_t, std::int64_t>, const AsPathRecord*> paths;
    for (const auto& p : d.as_paths) {
        if (p.as_path.empty()) throw SemanticError("empty AS path " + std::to_string(p.src_as) + " -> " + std::to_string(p.dst_as));
        if (!paths.emplace(std::pair{p.src_as, p.dst_as}, &p).second)
            throw SemanticError("duplicate AS path " + std::to_string(p.src_as) + " -> " + std::to_string(p.dst_as));
        as_set.insert(p.src_as);
        as_set.insert(p.dst_as);
        as_set.insert(p.as_path.begin(), p.as_path.end());
        ixp_set.insert(p.ixp_path.begin(), p.ixp_path.end());
    }
    for (const auto& r : d.consensus) as_set.insert(r.as_number);

    // Geo: jurisdictions and locations.
    std::map<std::string, const GeoRecord*> geo;
    std::set<std::string> countries;
    for (const auto& g : d.geo) {
        if (g.entity.starts_with("relay:")) {
            if (!relay_index.contains(strip_relay_prefix(g.entity))) throw SemanticError("geo record for unknown relay: " + g.entity);
        } else if (g.entity.starts_with("ixp:")) {
            if (!ixp_set.contains(g.entity.substr(4))) throw SemanticError("geo record for unknown IXP: " + g.entity);
        } else {
            throw SemanticError("geo record for unsupported entity: " + g.entity);
        }
        if (!geo.emplace(g.entity, &g).second) throw SemanticError("duplicate geo record: " + g.entity);
        if (!g.country.empty()) countries.insert(g.country);
    }
    for (const auto& c : countries) add(ids::country(c), LegalJurisdiction, {{std::string(attrs::Country), c}});

    // Organizations.
    std::set<std::int64_t> clustered_as;
    for (const auto& c : d.as_clusters) {
        add(ids::as_org(c.org_id), AsOrganization);
        for (auto m : c.members) {
            if (!as_set.contains(m)) throw SemanticError("AS cluster " + c.org_id + " references unknown AS " + std::to_string(m));
            if (!clustered_as.insert(m).second) throw SemanticError("AS " + std::to_string(m) + " is in two clusters");
            relate(ids::as_org(c.org_id), ids::as(m));
        }
    }
    std::set<std::string> clustered_ixp;
    for (const auto& c : d.ixp_clusters) {
        add(ids::ixp_org(c.org_id), IxpOrganization);
        for (const auto& m : c.members) {
            if (!ixp_set.contains(m)) throw SemanticError("IXP cluster " + c.org_id + " references unknown IXP " + m);
            if (!clustered_ixp.insert(m).second) throw SemanticError("IXP " + m + " is in two clusters");
            relate(ids::ixp_org(c.org_id), ids::ixp(m));
        }
    }

    for (auto a : as_set) add(ids::as(a), As, {{std::string(attrs::AsNumber), a}});
    for (const auto& x : ixp_set) {
        AttributeMap attrs{{std::string(attrs::IxpName), x}};
        auto g = geo.find("ixp:" + x);
        if (g != geo.end()) {
            attrs[std::string(attrs::PhysicalLocation)] = Coordinate{g->second->lat, g->second->lon};
            if (!g->second->country.empty()) relate(ids::country(g->second->country), ids::ixp(x));
        }
        add(ids::ixp(x), Ixp, std::move(attrs));
    }

    // Families: connected components under mutual family references.
    UnionFind uf(d.consensus.size());
    for (std::size_t i = 0; i < d.consensus.size(); ++i)
        for (const auto& fp : d.consensus[i].family) {
            auto it = relay_index.find(strip_relay_prefix(fp));
            if (it == relay_index.end())
                throw SemanticError("relay " + d.consensus[i].fingerprint + " lists unknown family member " + fp);
            const auto& other = d.consensus[it->second].family;
            const bool mutual = std::any_of(other.begin(), other.end(), [&](const std::string& f) {
                return strip_relay_prefix(f) == d.consensus[i].fingerprint;
            });
            if (mutual) uf.unite(i, it->second);
        }
    std::map<std::size_t, std::set<std::string>> components;
    for (std::size_t i = 0; i < d.consensus.size(); ++i) components[uf.find(i)].insert(d.consensus[i].fingerprint);
    const auto counts = running_counts(d);
    std::vector<std::string> family_of(d.consensus.size());
    std::vector<std::pair<std::string, const std::set<std::string>*>> families;
    for (const auto& [root, members] : components) families.emplace_back(ids::family(*members.begin()), &members);
    std::sort(families.begin(), families.end());
    for (const auto& [fid, members] : families) {
        AttributeMap attrs;
        if (!d.uptime.empty()) attrs[std::string(attrs::Uptime)] = uptime_from_counts(counts, d.uptime.size(), *members);
        add(fid, RelayFamily, std::move(attrs));
        for (const auto& fp : *members) family_of[relay_index[fp]] = fid;
    }

    // Relays.
    for (std::size_t i = 0; i < d.consensus.size(); ++i) {
        const auto& r = d.consensus[i];
        StringSet flags;
        if (r.guard) flags.insert("Guard");
        if (r.exit) flags.insert("Exit");
        AttributeMap attrs{{std::string(attrs::Fingerprint), r.fingerprint},
                           {std::string(attrs::Flags), flags},
                           {std::string(attrs::Bandwidth), r.bandwidth},
                           {std::string(attrs::AsNumber), r.as_number}};
        if (!r.ip.empty()) attrs[std::string(attrs::Ip)] = r.ip;
        if (!r.os.empty()) attrs[std::string(attrs::RelaySoftware)] = r.os;
        const std::string rid = ids::relay(r.fingerprint);
        auto g = geo.find(rid);
        if (g != geo.end()) {
            attrs[std::string(attrs::PhysicalLocation)] = Coordinate{g->second->lat, g->second->lon};
            if (!g->second->country.empty()) relate(ids::country(g->second->country), rid);
        }
        add(rid, TorRelay, std::move(attrs));
        relate(family_of[i], rid);
    }

    // Virtual links: every AS to every guard or exit, covering both directions.
    for (auto s : as_set)
        for (const auto& r : d.consensus) {
            if (!r.guard && !r.exit) continue;
            const std::int64_t dst = r.as_number;
            std::set<std::int64_t> on_path;
            std::set<std::string> ixps;
            bool found = false;
            for (auto key : {std::pair{s, dst}, std::pair{dst, s}}) {
                auto it = paths.find(key);
                if (it == paths.end()) continue;
                found = true;
                on_path.insert(it->second->as_path.begin(), it->second->as_path.end());
                ixps.insert(it->second->ixp_path.begin(), it->second->ixp_path.end());
            }
            if (!found) on_path = {s, dst};
            const std::string vid = ids::vlink(s, r.fingerprint);
            add(vid, VirtualLink, {{std::string(attrs::AsNumber), s}, {std::string(attrs::Fingerprint), r.fingerprint}});
            for (auto a : on_path) relate(ids::as(a), vid);
            for (const auto& x : ixps) relate(ids::ixp(x), vid);
        }

    World w(std::move(instances), std::move(rels));
    ValidationReport report = validate_world(w, o);
    if (!report.empty()) throw ValidationError("generated world does not conform to the ontology:\n" + format_report(report));
    return w;
}

}  // namespace tortrust
