#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tortrust/beliefs.hpp"
#include "tortrust/editor.hpp"

namespace tortrust {

/// 1 - prod_{p in S}(1 - p) * prod_{q in R}(1 - q). Throws SemanticError for
/// values outside [0, 1].
double compromise_probability(std::span<const double> propagation, std::span<const double> risks);

enum class NodeKind { World, Ce };

struct ParentEdge {
    std::size_t parent = 0;
    double weight = 1.0;
    bool operator==(const ParentEdge&) const = default;
};

/// One binary compromise variable. Its conditional table is implicit: given
/// the compromised parents, it is compromised with
/// compromise_probability(weights of those edges, risks), unless `absolute`
/// is set. A CE node has a single parent whose edge weight is the activation
/// probability.
struct BbnNode {
    NodeId id;
    NodeKind kind = NodeKind::World;
    std::vector<ParentEdge> parents;
    std::vector<double> risks;
    std::optional<double> absolute;
    bool is_output = false;
    bool operator==(const BbnNode&) const = default;
};

/// Topologically ordered belief network. Immutable.
class CompiledBbn {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    CompiledBbn() = default;
    /// Throws SemanticError unless every parent precedes its child, ids are
    /// unique and all probabilities lie in [0, 1].
    explicit CompiledBbn(std::vector<BbnNode> nodes);

    const std::vector<BbnNode>& nodes() const noexcept { return nodes_; }
    const BbnNode& node(std::size_t i) const { return nodes_[i]; }
    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t index_of(std::string_view id) const;
    /// Throws SemanticError for an unknown id.
    std::size_t require(std::string_view id) const;

    /// Compromise probability of node i given the compromise state of every
    /// earlier node.
    template <typename StateFn>
    double conditional(std::size_t i, StateFn&& compromised) const {
        const BbnNode& n = nodes_[i];
        if (n.absolute) return *n.absolute;
        double keep = 1.0;
        for (const ParentEdge& e : n.parents)
            if (compromised(e.parent)) keep *= 1.0 - e.weight;
        for (double r : n.risks) keep *= 1.0 - r;
        return 1.0 - keep;
    }

    bool operator==(const CompiledBbn& o) const { return nodes_ == o.nodes_; }

private:
    std::vector<BbnNode> nodes_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct CompileOptions {
    /// Propagation weight of every world edge not otherwise specified.
    double default_weight = 1.0;
    /// Receives predicate warnings (missing or mistyped attributes) when set.
    std::vector<std::string>* warnings = nullptr;
};

/// Translates an edited world and its trust beliefs into a belief network:
/// one node per world instance, a CE node per compromise-effectiveness spec,
/// budget-scaled edge weights, relative-belief risk sets and absolute
/// overrides (last match wins). Budget and CE entries of `trust` are ignored;
/// they come from `ew`.
CompiledBbn compile(const EditedWorld& ew, const std::vector<TrustBelief>& trust, const TrustScale& scale,
                    const CompileOptions& options = {});

/// The sub-network of `targets` and all their ancestors, in the same order.
/// The joint distribution of the kept nodes is unchanged.
CompiledBbn ancestral_subnet(const CompiledBbn& b, std::span<const NodeId> targets);

struct SampleResult {
    std::vector<bool> compromised;
    std::uint64_t seed = 0;
    bool operator==(const SampleResult&) const = default;
};

/// One joint sample drawn node by node in topological order.
SampleResult sample(const CompiledBbn& b, std::uint64_t seed);

/// n joint samples stored bit-sliced: one row of 64-bit words per node,
/// bit j of the row is sample j.
///
/// Samples are drawn a block of words at a time; each block has its own
/// random stream derived from (seed, block index), so the result does not
/// depend on the number of worker threads.
class SampleBatch {
public:
    static constexpr std::size_t kBlockWords = 16;

    SampleBatch() = default;
    SampleBatch(const CompiledBbn& b, std::size_t n, std::uint64_t seed);

    std::size_t n_samples() const noexcept { return n_; }
    std::size_t n_nodes() const noexcept { return nodes_; }
    std::size_t words() const noexcept { return words_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::span<const std::uint64_t> row(std::size_t node) const {
        return {bits_.data() + node * words_, words_};
    }
    bool get(std::size_t node, std::size_t sample) const {
        return (bits_[node * words_ + sample / 64] >> (sample % 64)) & 1U;
    }
    std::size_t count(std::size_t node) const;

private:
    std::size_t n_ = 0;
    std::size_t nodes_ = 0;
    std::size_t words_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<std::uint64_t> bits_;
};

std::size_t popcount(std::span<const std::uint64_t> words);

struct MarginalEstimate {
    NodeId node;
    double estimate = 0.0;
    std::size_t n_samples = 0;
    double standard_error() const;
};

/// Fraction of n samples in which each node is compromised. Only the
/// ancestral sub-network of `nodes` is sampled.
std::vector<MarginalEstimate> estimate_marginals(const CompiledBbn& b, std::span<const NodeId> nodes, std::size_t n,
                                                 std::uint64_t seed);

/// Boolean expression over node compromise indicators, using the predicate
/// connectives: `g or (l and not x)`. Atoms are node ids, bare or quoted.
class EventExpr {
public:
    struct Node;
    EventExpr() = default;
    explicit EventExpr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
    const Node& root() const { return *root_; }
    /// Node ids referenced, in first-appearance order.
    std::vector<NodeId> atoms() const;

private:
    std::shared_ptr<const Node> root_;
};

struct EventExpr::Node {
    enum class Kind { Atom, Const, Not, And, Or } kind = Kind::Const;
    NodeId id;
    bool value = false;
    std::vector<EventExpr> operands;
};

EventExpr parse_event(std::string_view text);

/// Evaluates an event over every sample of a batch; the result is a bit row.
/// `index` maps node ids to batch rows.
std::vector<std::uint64_t> eval_event(const EventExpr& e, const SampleBatch& batch,
                                      const std::function<std::size_t(std::string_view)>& index);

/// Monte Carlo estimate of P(event). Throws SemanticError for unknown ids.
double estimate_event(const CompiledBbn& b, const EventExpr& event, std::size_t n, std::uint64_t seed);
double estimate_event(const CompiledBbn& b, std::string_view event, std::size_t n, std::uint64_t seed);

/// Full joint distribution: entry s is the probability of the state whose
/// bit i is node i's compromise indicator. Throws SemanticError when the
/// network has more than `max_nodes` nodes.
std::vector<double> enumerate_exact(const CompiledBbn& b, std::size_t max_nodes = 24);
std::vector<double> exact_marginals(const std::vector<double>& joint, std::size_t n_nodes);

Json to_json(const CompiledBbn& b);
CompiledBbn compiled_bbn_from_json(const Json& j);

/// Bit-packed sample dump: "TBBN", version byte, 24-bit little-endian node
/// count, then ceil(nodes / 8) bytes per sample with node i at bit i % 8 of
/// byte i / 8.
void write_sample_dump(std::ostream& out, const SampleBatch& batch);
std::vector<std::vector<bool>> read_sample_dump(std::istream& in);

}  // namespace tortrust
