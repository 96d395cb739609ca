#include "tortrust/bbn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "lexer.hpp"
#include "tortrust/error.hpp"
#include "tortrust/parallel.hpp"
#include "tortrust/random.hpp"

namespace tortrust {

namespace {

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

void check_probability(double p, std::string_view what) {
    if (!is_probability(p)) throw SemanticError(std::string(what) + " outside [0, 1]: " + std::to_string(p));
}

/// Each set bit of `mask` independently kept with probability p.
std::uint64_t bernoulli_bits(Engine& eng, std::uint64_t mask, double p) {
    if (p <= 0.0 || mask == 0) return 0;
    if (p >= 1.0) return mask;
    std::uint64_t out = 0;
    while (mask != 0) {
        const std::uint64_t bit = mask & (~mask + 1);
        if (uniform01(eng) < p) out |= bit;
        mask ^= bit;
    }
    return out;
}

double combined_risk(const std::vector<double>& risks) {
    double keep = 1.0;
    for (double r : risks) keep *= 1.0 - r;
    return 1.0 - keep;
}

}  // namespace

double compromise_probability(std::span<const double> propagation, std::span<const double> risks) {
    double keep = 1.0;
    for (double p : propagation) {
        check_probability(p, "propagation weight");
        keep *= 1.0 - p;
    }
    for (double q : risks) {
        check_probability(q, "risk");
        keep *= 1.0 - q;
    }
    return 1.0 - keep;
}

CompiledBbn::CompiledBbn(std::vector<BbnNode> nodes) : nodes_(std::move(nodes)) {
    index_.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const BbnNode& n = nodes_[i];
        if (!index_.emplace(n.id, i).second) throw SemanticError("duplicate BBN node id: " + n.id);
        for (const ParentEdge& e : n.parents) {
            if (e.parent >= i) throw SemanticError("BBN node " + n.id + " has a parent that does not precede it");
            check_probability(e.weight, "edge weight into " + n.id);
        }
        for (double r : n.risks) check_probability(r, "risk of " + n.id);
        if (n.absolute) {
            check_probability(*n.absolute, "absolute probability of " + n.id);
            if (!n.parents.empty()) throw SemanticError("BBN node " + n.id + " has an absolute value and parents");
        }
        if (n.kind == NodeKind::Ce && n.parents.size() != 1)
            throw SemanticError("CE node " + n.id + " must have exactly one parent");
    }
}

std::size_t CompiledBbn::index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? npos : it->second;
}

std::size_t CompiledBbn::require(std::string_view id) const {
    const std::size_t i = index_of(id);
    if (i == npos) throw SemanticError("unknown BBN node: " + std::string(id));
    return i;
}

CompiledBbn compile(const EditedWorld& ew, const std::vector<TrustBelief>& trust, const TrustScale& scale,
                    const CompileOptions& options) {
    check_probability(options.default_weight, "default weight");
    const World& w = ew.world;
    const auto order = w.topological_order();
    if (!order) throw SemanticError("world has a cycle");

    std::vector<const RelativeBelief*> relative;
    std::vector<const AbsoluteBelief*> absolute;
    for (const auto& b : trust) {
        if (const auto* r = std::get_if<RelativeBelief>(&b)) relative.push_back(r);
        else if (const auto* a = std::get_if<AbsoluteBelief>(&b)) absolute.push_back(a);
    }

    // Risk sets and absolute overrides, evaluated per world node.
    struct Assessment {
        std::vector<double> risks;
        std::optional<double> absolute;
        std::vector<std::string> warnings;
    };
    std::vector<Assessment> assess(w.size());
    parallel_for(w.size(), [&](std::size_t i) {
        Assessment& a = assess[i];
        auto* warn = options.warnings != nullptr ? &a.warnings : nullptr;
        for (const auto* r : relative)
            if (eval_predicate(r->predicate, w, i, EvalContext::Trust, warn)) a.risks.push_back(resolve(r->value, scale));
        for (auto it = absolute.rbegin(); it != absolute.rend(); ++it)
            if (eval_predicate((*it)->predicate, w, i, EvalContext::Trust, warn)) {
                a.absolute = resolve((*it)->value, scale);
                break;
            }
    });
    if (options.warnings != nullptr)
        for (std::size_t i : *order)
            options.warnings->insert(options.warnings->end(), assess[i].warnings.begin(), assess[i].warnings.end());

    // Incoming edges per world node, as (source BBN node, weight).
    std::vector<std::vector<ParentEdge>> incoming(w.size());
    std::vector<BbnNode> nodes;
    nodes.reserve(w.size());

    for (World::Index n : *order) {
        const TypeInstance& inst = w.at(n);
        const TypeDef* type = ew.ontology.find_type(inst.type_name);

        BbnNode node;
        node.id = inst.id;
        node.is_output = type != nullptr && type->is_output;
        node.risks = std::move(assess[n].risks);
        node.absolute = assess[n].absolute;
        if (!node.absolute) node.parents = std::move(incoming[n]);
        const std::size_t self = nodes.size();
        nodes.push_back(std::move(node));

        const auto children = w.children(n);
        if (children.empty()) continue;
        std::vector<std::size_t> via(children.size(), self);
        std::vector<bool> covered(children.size(), false);

        // Compromise-effectiveness nodes.
        if (auto ce = ew.ce_specs.find(inst.id); ce != ew.ce_specs.end()) {
            const auto& specs = ce->second;
            const auto top = std::find_if(specs.rbegin(), specs.rend(),
                                          [](const CeBelief& s) { return std::holds_alternative<TopCe>(s); });
            std::size_t k = 0;
            auto add_ce = [&](const Level& level) {
                BbnNode c;
                c.id = "ce:" + inst.id + "#" + std::to_string(k++);
                c.kind = NodeKind::Ce;
                c.parents.push_back({self, resolve_ce(level, scale)});
                nodes.push_back(std::move(c));
                return nodes.size() - 1;
            };
            if (top != specs.rend()) {
                const std::size_t c = add_ce(std::get<TopCe>(*top).value);
                std::fill(via.begin(), via.end(), c);
                std::fill(covered.begin(), covered.end(), true);
            } else {
                for (const auto& s : specs) {
                    const auto& pce = std::get<PredicateCe>(s);
                    const std::size_t c = add_ce(pce.value);
                    for (std::size_t j = 0; j < children.size(); ++j) {
                        if (!eval_predicate(pce.predicate, w, children[j], EvalContext::Trust)) continue;
                        if (covered[j])
                            throw SemanticError("compromise-effectiveness predicates on " + inst.id + " overlap on " +
                                                w.at(children[j]).id);
                        covered[j] = true;
                        via[j] = c;
                    }
                }
            }
        }

        // Budget scaling of the direct edges. An "all" budget overrides typed ones.
        std::vector<double> factor(children.size(), 1.0);
        if (auto bu = ew.budgets.find(inst.id); bu != ew.budgets.end()) {
            const auto& list = bu->second;
            auto all = std::find_if(list.rbegin(), list.rend(),
                                    [](const BudgetBelief& b) { return std::holds_alternative<AllBudget>(b); });
            auto scaled = [](std::int64_t k, std::size_t c) {
                return c == 0 ? 1.0 : std::min(1.0, static_cast<double>(k) / static_cast<double>(c));
            };
            if (all != list.rend()) {
                std::fill(factor.begin(), factor.end(), scaled(std::get<AllBudget>(*all).k, children.size()));
            } else {
                std::map<std::string_view, std::size_t> per_type;
                for (World::Index x : children) ++per_type[w.at(x).type_name];
                for (std::size_t j = 0; j < children.size(); ++j) {
                    const std::string& ct = w.at(children[j]).type_name;
                    auto it = std::find_if(list.rbegin(), list.rend(), [&](const BudgetBelief& b) {
                        return std::get<TypeBudget>(b).type_name == ct;
                    });
                    if (it != list.rend()) factor[j] = scaled(std::get<TypeBudget>(*it).k, per_type[ct]);
                }
            }
        }

        for (std::size_t j = 0; j < children.size(); ++j) {
            const double weight = covered[j] ? 1.0 : options.default_weight * factor[j];
            incoming[children[j]].push_back({via[j], weight});
        }
    }

    // Index positions were assigned in order, so parents already precede children.
    return CompiledBbn(std::move(nodes));
}

CompiledBbn ancestral_subnet(const CompiledBbn& b, std::span<const NodeId> targets) {
    std::vector<bool> keep(b.size(), false);
    for (const auto& id : targets) keep[b.require(id)] = true;
    for (std::size_t i = b.size(); i-- > 0;)
        if (keep[i])
            for (const auto& e : b.node(i).parents) keep[e.parent] = true;
    std::vector<std::size_t> remap(b.size(), CompiledBbn::npos);
    std::vector<BbnNode> nodes;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (!keep[i]) continue;
        remap[i] = nodes.size();
        BbnNode n = b.node(i);
        for (auto& e : n.parents) e.parent = remap[e.parent];
        nodes.push_back(std::move(n));
    }
    return CompiledBbn(std::move(nodes));
}

SampleResult sample(const CompiledBbn& b, std::uint64_t seed) {
    Engine eng = make_engine(seed);
    SampleResult out{std::vector<bool>(b.size(), false), seed};
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double p = b.conditional(i, [&](std::size_t j) { return out.compromised[j]; });
        out.compromised[i] = bernoulli(eng, p);
    }
    return out;
}

SampleBatch::SampleBatch(const CompiledBbn& b, std::size_t n, std::uint64_t seed)
    : n_(n), nodes_(b.size()), words_((n + 63) / 64), seed_(seed), bits_(nodes_ * words_, 0) {
    if (n == 0) throw SemanticError("sample count must be positive");
    std::vector<double> risk(nodes_);
    for (std::size_t i = 0; i < nodes_; ++i) risk[i] = combined_risk(b.node(i).risks);

    const std::size_t blocks = (words_ + kBlockWords - 1) / kBlockWords;
    parallel_for(blocks, [&](std::size_t block) {
        Engine eng = make_engine(seed, block);
        const std::size_t w0 = block * kBlockWords;
        const std::size_t w1 = std::min(words_, w0 + kBlockWords);
        for (std::size_t i = 0; i < nodes_; ++i) {
            const BbnNode& node = b.node(i);
            std::uint64_t* row = bits_.data() + i * words_;
            for (std::size_t wi = w0; wi < w1; ++wi) {
                const std::size_t tail = n_ - wi * 64;
                const std::uint64_t valid = tail >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << tail) - 1;
                std::uint64_t acc = 0;
                if (node.absolute) {
                    acc = bernoulli_bits(eng, valid, *node.absolute);
                } else {
                    for (const ParentEdge& e : node.parents) {
                        const std::uint64_t pw = bits_[e.parent * words_ + wi] & ~acc;
                        acc |= bernoulli_bits(eng, pw, e.weight);
                    }
                    acc |= bernoulli_bits(eng, valid & ~acc, risk[i]);
                }
                row[wi] = acc;
            }
        }
    });
}

std::size_t SampleBatch::count(std::size_t node) const { return popcount(row(node)); }

std::size_t popcount(std::span<const std::uint64_t> words) {
    std::size_t c = 0;
    for (std::uint64_t w : words) c += static_cast<std::size_t>(std::popcount(w));
    return c;
}

double MarginalEstimate::standard_error() const {
    if (n_samples == 0) return 0.0;
    return std::sqrt(estimate * (1.0 - estimate) / static_cast<double>(n_samples));
}

std::vector<MarginalEstimate> estimate_marginals(const CompiledBbn& b, std::span<const NodeId> nodes, std::size_t n,
                                                 std::uint64_t seed) {
    const CompiledBbn sub = ancestral_subnet(b, nodes);
    const SampleBatch batch(sub, n, seed);
    std::vector<MarginalEstimate> out;
    out.reserve(nodes.size());
    for (const auto& id : nodes) {
        const std::size_t c = batch.count(sub.require(id));
        out.push_back({id, static_cast<double>(c) / static_cast<double>(n), n});
    }
    return out;
}

// Event expressions.

std::vector<NodeId> EventExpr::atoms() const {
    std::vector<NodeId> out;
    std::function<void(const Node&)> walk = [&](const Node& n) {
        if (n.kind == Node::Kind::Atom && std::find(out.begin(), out.end(), n.id) == out.end()) out.push_back(n.id);
        for (const auto& op : n.operands) walk(op.root());
    };
    if (root_) walk(*root_);
    return out;
}

namespace {

using detail::Tok;

class EventParser {
public:
    explicit EventParser(std::string_view text) : ts_(text, detail::tokenize(text, true)) {}

    EventExpr parse() {
        if (ts_.peek().kind == Tok::End) ts_.fail(ts_.peek(), "empty event expression");
        EventExpr e = parse_junction(Kind::Or);
        if (ts_.peek().kind != Tok::End) ts_.fail(ts_.peek(), "unexpected " + detail::describe(ts_.peek()));
        return e;
    }

private:
    using Node = EventExpr::Node;
    using Kind = Node::Kind;

    static EventExpr make(Node n) { return EventExpr(std::make_shared<const Node>(std::move(n))); }

    EventExpr parse_junction(Kind kind) {
        const char* word = kind == Kind::Or ? "or" : "and";
        auto operand = [&] { return kind == Kind::Or ? parse_junction(Kind::And) : parse_unary(); };
        std::vector<EventExpr> ops{operand()};
        while (ts_.accept_keyword(word)) ops.push_back(operand());
        if (ops.size() == 1) return ops.front();
        Node n;
        n.kind = kind;
        n.operands = std::move(ops);
        return make(std::move(n));
    }

    EventExpr parse_unary() {
        if (ts_.accept_keyword("not")) {
            Node n;
            n.kind = Kind::Not;
            n.operands.push_back(parse_unary());
            return make(std::move(n));
        }
        const auto& t = ts_.peek();
        if (t.kind == Tok::LParen) {
            ts_.next();
            EventExpr e = parse_junction(Kind::Or);
            ts_.expect(Tok::RParen, "')'");
            return e;
        }
        Node n;
        if (t.kind == Tok::Ident && (t.text == "true" || t.text == "false")) {
            n.kind = Kind::Const;
            n.value = t.text == "true";
        } else if (t.kind == Tok::Ident || t.kind == Tok::String) {
            if (t.kind == Tok::Ident && (t.text == "and" || t.text == "or"))
                ts_.fail(t, "expected node id, found " + detail::describe(t));
            n.kind = Kind::Atom;
            n.id = t.text;
        } else {
            ts_.fail(t, "expected node id, found " + detail::describe(t));
        }
        ts_.next();
        return make(std::move(n));
    }

    detail::TokenStream ts_;
};

}  // namespace

EventExpr parse_event(std::string_view text) { return EventParser(text).parse(); }

std::vector<std::uint64_t> eval_event(const EventExpr& e, const SampleBatch& batch,
                                      const std::function<std::size_t(std::string_view)>& index) {
    using Kind = EventExpr::Node::Kind;
    const std::size_t words = batch.words();
    std::vector<std::uint64_t> valid(words, ~std::uint64_t{0});
    if (words > 0 && batch.n_samples() % 64 != 0) valid.back() = (std::uint64_t{1} << (batch.n_samples() % 64)) - 1;

    std::function<std::vector<std::uint64_t>(const EventExpr&)> eval = [&](const EventExpr& x) {
        const auto& n = x.root();
        switch (n.kind) {
            case Kind::Atom: {
                auto r = batch.row(index(n.id));
                return std::vector<std::uint64_t>(r.begin(), r.end());
            }
            case Kind::Const: return n.value ? valid : std::vector<std::uint64_t>(words, 0);
            case Kind::Not: {
                auto v = eval(n.operands.front());
                for (std::size_t i = 0; i < words; ++i) v[i] = ~v[i] & valid[i];
                return v;
            }
            case Kind::And:
            case Kind::Or: {
                auto v = eval(n.operands.front());
                for (std::size_t k = 1; k < n.operands.size(); ++k) {
                    const auto o = eval(n.operands[k]);
                    for (std::size_t i = 0; i < words; ++i) v[i] = n.kind == Kind::And ? (v[i] & o[i]) : (v[i] | o[i]);
                }
                return v;
            }
        }
        return std::vector<std::uint64_t>(words, 0);
    };
    return eval(e);
}

double estimate_event(const CompiledBbn& b, const EventExpr& event, std::size_t n, std::uint64_t seed) {
    const auto atoms = event.atoms();
    for (const auto& id : atoms) b.require(id);
    const CompiledBbn sub = ancestral_subnet(b, atoms);
    const SampleBatch batch(sub, n, seed);
    const auto bits = eval_event(event, batch, [&](std::string_view id) { return sub.require(id); });
    return static_cast<double>(popcount(bits)) / static_cast<double>(n);
}

double estimate_event(const CompiledBbn& b, std::string_view event, std::size_t n, std::uint64_t seed) {
    return estimate_event(b, parse_event(event), n, seed);
}

std::vector<double> enumerate_exact(const CompiledBbn& b, std::size_t max_nodes) {
    const std::size_t n = b.size();
    if (n > max_nodes || n >= 63)
        throw SemanticError("exact enumeration limited to " + std::to_string(max_nodes) + " nodes, network has " +
                            std::to_string(n));
    std::vector<double> joint(std::size_t{1} << n, 0.0);
    joint[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t states = std::size_t{1} << i;
        for (std::size_t s = 0; s < states; ++s) {
            const double p = b.conditional(i, [&](std::size_t j) { return ((s >> j) & 1U) != 0; });
            joint[s | states] = joint[s] * p;
            joint[s] *= 1.0 - p;
        }
    }
    return joint;
}

std::vector<double> exact_marginals(const std::vector<double>& joint, std::size_t n_nodes) {
    std::vector<double> out(n_nodes, 0.0);
    for (std::size_t s = 0; s < joint.size(); ++s)
        for (std::size_t i = 0; i < n_nodes; ++i)
            if ((s >> i) & 1U) out[i] += joint[s];
    return out;
}

Json to_json(const CompiledBbn& b) {
    Json nodes = Json::array();
    for (const auto& n : b.nodes()) {
        Json parents = Json::array();
        for (const auto& e : n.parents) parents.push_back(Json::array({b.node(e.parent).id, e.weight}));
        Json j{{"id", n.id},
               {"kind", n.kind == NodeKind::Ce ? "ce" : "world"},
               {"parents", std::move(parents)},
               {"risks", n.risks},
               {"is_output", n.is_output}};
        j["absolute"] = n.absolute ? Json(*n.absolute) : Json();
        nodes.push_back(std::move(j));
    }
    return Json{{"nodes", std::move(nodes)}};
}

CompiledBbn compiled_bbn_from_json(const Json& j) {
    std::vector<BbnNode> nodes;
    std::unordered_map<std::string, std::size_t> seen;
    try {
        for (const auto& e : j.at("nodes")) {
            BbnNode n;
            n.id = e.at("id").get<std::string>();
            const std::string kind = e.value("kind", "world");
            if (kind != "world" && kind != "ce") throw ParseError("unknown node kind '" + kind + "'");
            n.kind = kind == "ce" ? NodeKind::Ce : NodeKind::World;
            for (const auto& p : e.value("parents", Json::array())) {
                const auto pid = p.at(0).get<std::string>();
                auto it = seen.find(pid);
                if (it == seen.end()) throw ParseError("node " + n.id + " lists parent " + pid + " before defining it");
                n.parents.push_back({it->second, p.at(1).get<double>()});
            }
            n.risks = e.value("risks", std::vector<double>{});
            if (e.contains("absolute") && !e["absolute"].is_null()) n.absolute = e["absolute"].get<double>();
            n.is_output = e.value("is_output", false);
            seen.emplace(n.id, nodes.size());
            nodes.push_back(std::move(n));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed BBN file: ") + e.what());
    }
    return CompiledBbn(std::move(nodes));
}

void write_sample_dump(std::ostream& out, const SampleBatch& batch) {
    const std::size_t nodes = batch.n_nodes();
    if (nodes >= (std::size_t{1} << 24)) throw SemanticError("too many nodes for a sample dump");
    const char header[8] = {'T', 'B', 'B', 'N', 1, static_cast<char>(nodes & 0xff),
                            static_cast<char>((nodes >> 8) & 0xff), static_cast<char>((nodes >> 16) & 0xff)};
    out.write(header, sizeof header);
    std::vector<char> record((nodes + 7) / 8);
    for (std::size_t s = 0; s < batch.n_samples(); ++s) {
        std::fill(record.begin(), record.end(), 0);
        for (std::size_t i = 0; i < nodes; ++i)
            if (batch.get(i, s)) record[i / 8] = static_cast<char>(record[i / 8] | (1 << (i % 8)));
        out.write(record.data(), static_cast<std::streamsize>(record.size()));
    }
    if (!out) throw IoError("failed to write sample dump");
}

std::vector<std::vector<bool>> read_sample_dump(std::istream& in) {
    unsigned char header[8];
    if (!in.read(reinterpret_cast<char*>(header), sizeof header) || header[0] != 'T' || header[1] != 'B' ||
        header[2] != 'B' || header[3] != 'N')
        throw ParseError("not a sample dump");
    if (header[4] != 1) throw ParseError("unsupported sample dump version " + std::to_string(header[4]));
    const std::size_t nodes = header[5] | (std::size_t{header[6]} << 8) | (std::size_t{header[7]} << 16);
    std::vector<std::vector<bool>> out;
    std::vector<unsigned char> record((nodes + 7) / 8);
    if (record.empty()) return out;
    while (in.read(reinterpret_cast<char*>(record.data()), static_cast<std::streamsize>(record.size()))) {
        std::vector<bool> s(nodes);
        for (std::size_t i = 0; i < nodes; ++i) s[i] = (record[i / 8] >> (i % 8)) & 1U;
        out.push_back(std::move(s));
    }
    if (in.gcount() != 0) throw ParseError("truncated sample dump");
    return out;
}

}  // namespace tortrust
