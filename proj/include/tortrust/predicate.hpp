#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tortrust/world.hpp"

namespace tortrust {

enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };
std::string_view to_string(CmpOp op);

/// Literal in a predicate: string, integer or real.
using Literal = std::variant<std::string, std::int64_t, double>;

class Predicate;

namespace pred {

struct Const {
    bool value = true;
    bool operator==(const Const&) const = default;
};
struct TypeTest {
    std::string type_name;
    bool operator==(const TypeTest&) const = default;
};
struct IdIn {
    std::vector<std::string> ids;
    bool operator==(const IdIn&) const = default;
};
struct AttrCmp {
    std::string name;
    CmpOp op = CmpOp::Eq;
    Literal value;
    bool operator==(const AttrCmp&) const = default;
};
struct AttrIn {
    std::string name;
    std::vector<Literal> values;
    bool operator==(const AttrIn&) const = default;
};
struct ChildCount;
struct HasParent;
struct HasChild;
struct Not;
struct And;
struct Or;

}  // namespace pred

/// Immutable predicate AST over world instances. Copies share the tree.
///
/// Grammar (precedence not > and > or):
///
///     expr  := and ("or" and)*
///     and   := unary ("and" unary)*
///     unary := "not" unary | atom
///     atom  := "(" expr ")" | "true" | "false" | "is" IDENT
///            | "id" "in" "{" STRING,... "}"
///            | "attr(" STRING ")" CMP literal | "attr(" STRING ")" "in" "{" literal,... "}"
///            | "child_count(" expr ")" CMP INT | "has_parent(" expr ")" | "has_child(" expr ")"
///
/// CMP is one of = != < <= > >= (also ≠ ≤ ≥).
class Predicate {
public:
    using Node = std::variant<pred::Const, pred::TypeTest, pred::IdIn, pred::AttrCmp, pred::AttrIn,
                              pred::ChildCount, pred::HasParent, pred::HasChild, pred::Not, pred::And, pred::Or>;

    /// Always-true predicate.
    Predicate();
    explicit Predicate(Node node);

    const Node& node() const noexcept;

    bool operator==(const Predicate& other) const;

private:
    std::shared_ptr<const Node> node_;
};

namespace pred {
struct ChildCount {
    Predicate inner;
    CmpOp op = CmpOp::Ge;
    std::int64_t count = 0;
    bool operator==(const ChildCount&) const = default;
};
struct HasParent {
    Predicate inner;
    bool operator==(const HasParent&) const = default;
};
struct HasChild {
    Predicate inner;
    bool operator==(const HasChild&) const = default;
};
struct Not {
    Predicate operand;
    bool operator==(const Not&) const = default;
};
struct And {
    std::vector<Predicate> operands;
    bool operator==(const And&) const = default;
};
struct Or {
    std::vector<Predicate> operands;
    bool operator==(const Or&) const = default;
};
}  // namespace pred

inline const Predicate::Node& Predicate::node() const noexcept { return *node_; }

/// Throws ParseError (1-based line/column within `text`).
Predicate parse_predicate(std::string_view text);

/// Canonical text; parse_predicate(to_string(p)) == p.
std::string to_string(const Predicate& p);

/// True when the predicate contains child_count/has_parent/has_child.
bool uses_structure(const Predicate& p);

enum class EvalContext { Structural, Trust };

/// Missing or mistyped attributes make a comparison unknown; unknown
/// propagates through the connectives (Kleene logic) and is reported as false.
/// One warning per unknown comparison is appended to `warnings` when given.
///
/// For a string-set attribute, `=` tests membership, `!=` non-membership and
/// `in` a non-empty intersection.
///
/// Throws SemanticError when a structural test is evaluated in structural
/// context.
bool eval_predicate(const Predicate& p, const World& w, World::Index n, EvalContext ctx,
                    std::vector<std::string>* warnings = nullptr);
/// Throws SemanticError if `id` is not in the world.
bool eval_predicate(const Predicate& p, const World& w, std::string_view id, EvalContext ctx,
                    std::vector<std::string>* warnings = nullptr);

}  // namespace tortrust
