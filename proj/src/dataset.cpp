#include "tortrust/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tortrust/error.hpp"
#include "tortrust/io.hpp"
#include "tortrust/random.hpp"

namespace tortrust {

namespace {

Json to_json(const ConsensusRecord& r) {
    return Json{{"fingerprint", r.fingerprint}, {"guard", r.guard}, {"exit", r.exit},     {"bandwidth", r.bandwidth},
                {"family", r.family},           {"os", r.os},       {"ip", r.ip},         {"as_number", r.as_number}};
}
Json to_json(const AsPathRecord& r) {
    return Json{{"src_as", r.src_as}, {"dst_as", r.dst_as}, {"as_path", r.as_path}, {"ixp_path", r.ixp_path}};
}
Json to_json(const AsClusterRecord& r) { return Json{{"org_id", r.org_id}, {"members", r.members}}; }
Json to_json(const IxpClusterRecord& r) { return Json{{"org_id", r.org_id}, {"members", r.members}}; }
Json to_json(const GeoRecord& r) {
    return Json{{"entity", r.entity}, {"country", r.country}, {"lat", r.lat}, {"lon", r.lon}};
}
Json to_json(const UptimeRecord& r) { return Json{{"epoch", r.epoch}, {"running", r.running}}; }

void from_json(const Json& j, ConsensusRecord& r) {
    r.fingerprint = j.at("fingerprint").get<std::string>();
    r.guard = j.value("guard", false);
    r.exit = j.value("exit", false);
    r.bandwidth = j.value("bandwidth", 0.0);
    r.family = j.value("family", std::vector<std::string>{});
    r.os = j.value("os", std::string());
    r.ip = j.value("ip", std::string());
    r.as_number = j.at("as_number").get<std::int64_t>();
}
void from_json(const Json& j, AsPathRecord& r) {
    r.src_as = j.at("src_as").get<std::int64_t>();
    r.dst_as = j.at("dst_as").get<std::int64_t>();
    r.as_path = j.at("as_path").get<std::vector<std::int64_t>>();
    r.ixp_path = j.value("ixp_path", std::vector<std::string>{});
}
void from_json(const Json& j, AsClusterRecord& r) {
    r.org_id = j.at("org_id").get<std::string>();
    r.members = j.at("members").get<std::vector<std::int64_t>>();
}
void from_json(const Json& j, IxpClusterRecord& r) {
    r.org_id = j.at("org_id").get<std::string>();
    r.members = j.at("members").get<std::vector<std::string>>();
}
void from_json(const Json& j, GeoRecord& r) {
    r.entity = j.at("entity").get<std::string>();
    r.country = j.value("country", std::string());
    r.lat = j.value("lat", 0.0);
    r.lon = j.value("lon", 0.0);
}
void from_json(const Json& j, UptimeRecord& r) {
    r.epoch = j.at("epoch").get<std::int64_t>();
    r.running = j.at("running").get<std::vector<std::string>>();
}

template <class Record>
std::vector<Record> load_jsonl(const std::filesystem::path& file) {
    std::vector<Record> out;
    if (!std::filesystem::exists(file)) return out;
    const std::string text = read_file(file);
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            Record r;
            from_json(parse_json(line), r);
            out.push_back(std::move(r));
        } catch (const ParseError& e) {
            throw ParseError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const Json::exception& e) {
            throw ParseError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

template <class Record>
void save_jsonl(const std::vector<Record>& records, const std::filesystem::path& file) {
    std::string text;
    for (const auto& r : records) {
        text += to_json(r).dump();
        text += '\n';
    }
    write_file_atomic(file, text);
}

}  // namespace

DatasetBundle load_bundle(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError("not a dataset directory: " + dir.string());
    DatasetBundle b;
    b.consensus = load_jsonl<ConsensusRecord>(dir / "consensus.jsonl");
    b.as_paths = load_jsonl<AsPathRecord>(dir / "as_paths.jsonl");
    b.as_clusters = load_jsonl<AsClusterRecord>(dir / "as_clusters.jsonl");
    b.ixp_clusters = load_jsonl<IxpClusterRecord>(dir / "ixp_clusters.jsonl");
    b.geo = load_jsonl<GeoRecord>(dir / "geo.jsonl");
    b.uptime = load_jsonl<UptimeRecord>(dir / "uptime.jsonl");
    return b;
}

void save_bundle(const DatasetBundle& b, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_jsonl(b.consensus, dir / "consensus.jsonl");
    save_jsonl(b.as_paths, dir / "as_paths.jsonl");
    save_jsonl(b.as_clusters, dir / "as_clusters.jsonl");
    save_jsonl(b.ixp_clusters, dir / "ixp_clusters.jsonl");
    save_jsonl(b.geo, dir / "geo.jsonl");
    save_jsonl(b.uptime, dir / "uptime.jsonl");
}

Json to_json(const SynthParams& p) {
    return Json{{"n_as", p.n_as},
                {"n_ixp", p.n_ixp},
                {"n_relays", p.n_relays},
                {"guard_fraction", p.guard_fraction},
                {"exit_fraction", p.exit_fraction},
                {"both_fraction", p.both_fraction},
                {"n_relay_as", p.n_relay_as},
                {"family_sizes", p.family_sizes},
                {"max_as_org_size", p.max_as_org_size},
                {"max_ixp_org_size", p.max_ixp_org_size},
                {"n_countries", p.n_countries},
                {"lattice_k", p.lattice_k},
                {"rewire_p", p.rewire_p},
                {"ixp_edge_fraction", p.ixp_edge_fraction},
                {"n_epochs", p.n_epochs}};
}

SynthParams synth_params_from_json(const Json& j) {
    SynthParams p;
    try {
        p.n_as = j.value("n_as", p.n_as);
        p.n_ixp = j.value("n_ixp", p.n_ixp);
        p.n_relays = j.value("n_relays", p.n_relays);
        p.guard_fraction = j.value("guard_fraction", p.guard_fraction);
        p.exit_fraction = j.value("exit_fraction", p.exit_fraction);
        p.both_fraction = j.value("both_fraction", p.both_fraction);
        p.n_relay_as = j.value("n_relay_as", p.n_relay_as);
        p.family_sizes = j.value("family_sizes", p.family_sizes);
        p.max_as_org_size = j.value("max_as_org_size", p.max_as_org_size);
        p.max_ixp_org_size = j.value("max_ixp_org_size", p.max_ixp_org_size);
        p.n_countries = j.value("n_countries", p.n_countries);
        p.lattice_k = j.value("lattice_k", p.lattice_k);
        p.rewire_p = j.value("rewire_p", p.rewire_p);
        p.ixp_edge_fraction = j.value("ixp_edge_fraction", p.ixp_edge_fraction);
        p.n_epochs = j.value("n_epochs", p.n_epochs);
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad synthetic parameters: ") + e.what());
    }
    return p;
}

namespace {

constexpr std::array<const char*, 20> kCountries{"US", "DE", "FR", "NL", "GB", "SE", "RU", "CA", "CH", "RO",
                                                 "UA", "JP", "BR", "FI", "PL", "AT", "CZ", "ES", "IT", "LU"};

void check_params(const SynthParams& p) {
    auto fail = [](const std::string& m) { throw SemanticError("infeasible synthetic parameters: " + m); };
    if (p.n_as < 2) fail("n_as must be at least 2");
    if (p.n_relays < 2) fail("n_relays must be at least 2");
    if (p.n_ixp < 0) fail("n_ixp must be non-negative");
    for (double f : {p.guard_fraction, p.exit_fraction, p.both_fraction, p.rewire_p, p.ixp_edge_fraction})
        if (!(f >= 0.0 && f <= 1.0)) fail("fractions must lie in [0, 1]");
    if (p.guard_fraction + p.exit_fraction + p.both_fraction > 1.0 + 1e-12)
        fail("guard, exit and both fractions exceed the relay count");
    if (p.n_relay_as < 1 || p.n_relay_as > p.n_as) fail("n_relay_as must lie in [1, n_as]");
    int family_total = 0;
    for (int s : p.family_sizes) {
        if (s < 2) fail("family sizes must be at least 2");
        family_total += s;
    }
    if (family_total > p.n_relays) fail("families need more relays than n_relays");
    if (p.max_as_org_size < 1 || p.max_ixp_org_size < 1) fail("organization sizes must be at least 1");
    if (p.n_countries < 1) fail("n_countries must be at least 1");
    if (p.lattice_k < 1 || 2 * p.lattice_k >= p.n_as) fail("lattice_k must satisfy 1 <= k < n_as / 2");
    if (p.n_epochs < 1) fail("n_epochs must be at least 1");
}

double round4(double x) { return std::round(x * 1e4) / 1e4; }

std::string hex_id(Engine& eng) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llX", static_cast<unsigned long long>(eng()));
    return buf;
}

template <class T>
void shuffle(std::vector<T>& v, Engine& eng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(eng, i)]);
}

/// BFS predecessor tree from `root`; neighbours are visited in ascending order.
std::vector<int> bfs_tree(const std::vector<std::set<int>>& adj, int root) {
    std::vector<int> pred(adj.size(), -2);
    std::deque<int> q{root};
    pred[static_cast<std::size_t>(root)] = -1;
    while (!q.empty()) {
        const int v = q.front();
        q.pop_front();
        for (int w : adj[static_cast<std::size_t>(v)])
            if (pred[static_cast<std::size_t>(w)] == -2) {
                pred[static_cast<std::size_t>(w)] = v;
                q.push_back(w);
            }
    }
    return pred;
}

/// Path root -> target read off a BFS tree rooted at `root`.
std::vector<int> tree_path(const std::vector<int>& pred, int target) {
    std::vector<int> rev;
    for (int v = target; v != -1; v = pred[static_cast<std::size_t>(v)]) {
        if (v == -2) return {};
        rev.push_back(v);
    }
    std::reverse(rev.begin(), rev.end());
    return rev;
}

}  // namespace

DatasetBundle generate_synthetic(const SynthParams& p, std::uint64_t seed) {
    check_params(p);
    Engine eng = make_engine(seed, 0x5e7);
    const auto n_as = static_cast<std::size_t>(p.n_as);
    auto asn = [](std::size_t i) { return static_cast<std::int64_t>(1000 + i); };

    // Small-world AS graph; lattice offset 1 is never rewired, so it stays connected.
    std::vector<std::set<int>> adj(n_as);
    for (int i = 0; i < p.n_as; ++i) {
        for (int d = 1; d <= p.lattice_k; ++d) {
            int j = (i + d) % p.n_as;
            if (d > 1 && bernoulli(eng, p.rewire_p)) {
                int cand;
                do {
                    cand = static_cast<int>(uniform_index(eng, n_as));
                } while (cand == i || adj[static_cast<std::size_t>(i)].contains(cand));
                j = cand;
            }
            adj[static_cast<std::size_t>(i)].insert(j);
            adj[static_cast<std::size_t>(j)].insert(i);
        }
    }

    std::map<std::pair<int, int>, std::string> edge_ixp;
    if (p.n_ixp > 0)
        for (int i = 0; i < p.n_as; ++i)
            for (int j : adj[static_cast<std::size_t>(i)])
                if (i < j && bernoulli(eng, p.ixp_edge_fraction)) {
                    char name[16];
                    std::snprintf(name, sizeof name, "IX%02d",
                                  static_cast<int>(uniform_index(eng, static_cast<std::uint64_t>(p.n_ixp))));
                    edge_ixp[{i, j}] = name;
                }

    // Relay hosting ASes and their countries.
    std::vector<int> order(n_as);
    for (std::size_t i = 0; i < n_as; ++i) order[i] = static_cast<int>(i);
    shuffle(order, eng);
    std::vector<int> relay_ases(order.begin(), order.begin() + p.n_relay_as);
    std::sort(relay_ases.begin(), relay_ases.end());
    auto country_code = [&](std::size_t c) {
        if (c < kCountries.size()) return std::string(kCountries[c]);
        char buf[24];
        std::snprintf(buf, sizeof buf, "X%02zu", c);
        return std::string(buf);
    };
    std::map<int, std::string> as_country;
    for (int a : relay_ases)
        as_country[a] = country_code(uniform_index(eng, static_cast<std::uint64_t>(p.n_countries)));

    DatasetBundle b;

    // Relays.
    const auto n_relays = static_cast<std::size_t>(p.n_relays);
    const auto n_guard = static_cast<std::size_t>(std::llround(p.guard_fraction * p.n_relays));
    const auto n_exit = static_cast<std::size_t>(std::llround(p.exit_fraction * p.n_relays));
    const auto n_both = static_cast<std::size_t>(std::llround(p.both_fraction * p.n_relays));
    if (n_guard + n_exit + n_both > n_relays) throw SemanticError("infeasible synthetic parameters: more flagged relays than relays");
    static constexpr std::array<const char*, 4> kOs{"Linux", "Linux", "FreeBSD", "Windows"};
    std::vector<ConsensusRecord> relays(n_relays);
    std::vector<double> stability(n_relays);
    for (std::size_t r = 0; r < n_relays; ++r) {
        auto& rec = relays[r];
        rec.fingerprint = hex_id(eng);
        const int a = relay_ases[uniform_index(eng, relay_ases.size())];
        rec.as_number = asn(static_cast<std::size_t>(a));
        rec.bandwidth = std::round(50.0 - 2000.0 * std::log(1.0 - uniform01(eng)));
        rec.os = kOs[uniform_index(eng, kOs.size())];
        char ip[32];
        std::snprintf(ip, sizeof ip, "%d.%d.%d.%d", 20 + a / 250, a % 250,
                      static_cast<int>(uniform_index(eng, 256)), 1 + static_cast<int>(uniform_index(eng, 254)));
        rec.ip = ip;
        stability[r] = uniform01(eng);
    }
    std::vector<std::size_t> ridx(n_relays);
    for (std::size_t i = 0; i < n_relays; ++i) ridx[i] = i;
    shuffle(ridx, eng);
    for (std::size_t i = 0; i < n_guard + n_exit + n_both; ++i) {
        auto& rec = relays[ridx[i]];
        rec.guard = i < n_guard || i >= n_guard + n_exit;
        rec.exit = i >= n_guard;
    }
    shuffle(ridx, eng);
    std::size_t next = 0;
    for (int size : p.family_sizes) {
        std::vector<std::size_t> members(ridx.begin() + static_cast<std::ptrdiff_t>(next),
                                         ridx.begin() + static_cast<std::ptrdiff_t>(next + static_cast<std::size_t>(size)));
        next += static_cast<std::size_t>(size);
        for (std::size_t m : members)
            for (std::size_t o : members)
                if (m != o) relays[m].family.push_back(relays[o].fingerprint);
    }
    for (auto& r : relays) std::sort(r.family.begin(), r.family.end());

    // Uptime: relay r carries Running in an epoch with probability stability[r].
    for (int e = 0; e < p.n_epochs; ++e) {
        UptimeRecord u{e, {}};
        for (std::size_t r = 0; r < n_relays; ++r)
            if (uniform01(eng) < stability[r]) u.running.push_back(relays[r].fingerprint);
        std::sort(u.running.begin(), u.running.end());
        b.uptime.push_back(std::move(u));
    }

    // Geo for relays, in relay-AS country.
    for (const auto& r : relays) {
        const int a = static_cast<int>(r.as_number - 1000);
        b.geo.push_back(GeoRecord{"relay:" + r.fingerprint, as_country[a], round4(-60.0 + 130.0 * uniform01(eng)),
                                  round4(-180.0 + 360.0 * uniform01(eng))});
    }

    // Paths from every AS to every relay AS, in both directions.
    std::set<std::string> used_ixps;
    std::vector<std::vector<int>> trees(n_as);
    for (std::size_t a = 0; a < n_as; ++a) trees[a] = bfs_tree(adj, static_cast<int>(a));
    auto make_path = [&](int src, int dst) {
        AsPathRecord rec;
        rec.src_as = asn(static_cast<std::size_t>(src));
        rec.dst_as = asn(static_cast<std::size_t>(dst));
        const auto path = tree_path(trees[static_cast<std::size_t>(src)], dst);
        for (std::size_t i = 0; i < path.size(); ++i) {
            rec.as_path.push_back(asn(static_cast<std::size_t>(path[i])));
            if (i + 1 < path.size()) {
                auto key = std::minmax(path[i], path[i + 1]);
                auto it = edge_ixp.find({key.first, key.second});
                if (it != edge_ixp.end()) {
                    rec.ixp_path.push_back(it->second);
                    used_ixps.insert(it->second);
                }
            }
        }
        return rec;
    };
    std::set<std::pair<int, int>> emitted;
    auto emit = [&](int src, int dst) {
        if (emitted.emplace(src, dst).second) b.as_paths.push_back(make_path(src, dst));
    };
    for (int s = 0; s < p.n_as; ++s)
        for (int d : relay_ases) {
            emit(s, d);
            emit(d, s);
        }

    // IXP locations.
    for (const auto& ix : used_ixps)
        b.geo.push_back(GeoRecord{"ixp:" + ix,
                                  country_code(uniform_index(eng, static_cast<std::uint64_t>(p.n_countries))),
                                  round4(-60.0 + 130.0 * uniform01(eng)), round4(-180.0 + 360.0 * uniform01(eng))});

    // Organizations: every AS and every used IXP belongs to exactly one.
    shuffle(order, eng);
    for (std::size_t i = 0, org = 0; i < n_as; ++org) {
        const std::size_t size =
            std::min<std::size_t>(1 + uniform_index(eng, static_cast<std::uint64_t>(p.max_as_org_size)), n_as - i);
        char id[16];
        std::snprintf(id, sizeof id, "ORG%03zu", org);
        AsClusterRecord c{id, {}};
        for (std::size_t k = 0; k < size; ++k) c.members.push_back(asn(static_cast<std::size_t>(order[i + k])));
        std::sort(c.members.begin(), c.members.end());
        b.as_clusters.push_back(std::move(c));
        i += size;
    }
    std::vector<std::string> ixps(used_ixps.begin(), used_ixps.end());
    shuffle(ixps, eng);
    for (std::size_t i = 0, org = 0; i < ixps.size(); ++org) {
        const std::size_t size = std::min<std::size_t>(
            1 + uniform_index(eng, static_cast<std::uint64_t>(p.max_ixp_org_size)), ixps.size() - i);
        char id[16];
        std::snprintf(id, sizeof id, "IXORG%02zu", org);
        IxpClusterRecord c{id, {}};
        for (std::size_t k = 0; k < size; ++k) c.members.push_back(ixps[i + k]);
        std::sort(c.members.begin(), c.members.end());
        b.ixp_clusters.push_back(std::move(c));
        i += size;
    }

    std::sort(relays.begin(), relays.end(),
              [](const ConsensusRecord& x, const ConsensusRecord& y) { return x.fingerprint < y.fingerprint; });
    b.consensus = std::move(relays);
    return b;
}

}  // namespace tortrust
