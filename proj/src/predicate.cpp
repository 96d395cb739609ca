#include "tortrust/predicate.hpp"

#include <algorithm>
#include <charconv>

#include "detail.hpp"
#include "lexer.hpp"
#include "tortrust/error.hpp"

namespace tortrust {

using detail::overloaded;
using detail::Tok;
using detail::TokenStream;

std::string_view to_string(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return "=";
        case CmpOp::Ne: return "!=";
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
    }
    return "=";
}

Predicate::Predicate() : node_(std::make_shared<const Node>(pred::Const{true})) {}
Predicate::Predicate(Node node) : node_(std::make_shared<const Node>(std::move(node))) {}

bool Predicate::operator==(const Predicate& other) const {
    return node_ == other.node_ || *node_ == *other.node_;
}

namespace {

class PredicateParser {
public:
    explicit PredicateParser(std::string_view text) : ts_(text, detail::tokenize(text, false)) {}

    Predicate parse() {
        if (ts_.peek().kind == Tok::End) ts_.fail(ts_.peek(), "empty predicate");
        Predicate p = parse_or();
        if (ts_.peek().kind != Tok::End) ts_.fail(ts_.peek(), "unexpected " + detail::describe(ts_.peek()));
        return p;
    }

private:
    Predicate parse_or() {
        std::vector<Predicate> ops{parse_and()};
        while (ts_.accept_keyword("or")) ops.push_back(parse_and());
        return ops.size() == 1 ? ops.front() : Predicate(pred::Or{std::move(ops)});
    }

    Predicate parse_and() {
        std::vector<Predicate> ops{parse_unary()};
        while (ts_.accept_keyword("and")) ops.push_back(parse_unary());
        return ops.size() == 1 ? ops.front() : Predicate(pred::And{std::move(ops)});
    }

    Predicate parse_unary() {
        if (ts_.accept_keyword("not")) return Predicate(pred::Not{parse_unary()});
        return parse_atom();
    }

    Literal parse_literal() {
        const auto& t = ts_.peek();
        switch (t.kind) {
            case Tok::String: return ts_.next().text;
            case Tok::Int: return ts_.next().int_value;
            case Tok::Real: return ts_.next().real_value;
            default: ts_.fail(t, "expected literal, found " + detail::describe(t));
        }
    }

    std::vector<Literal> parse_set() {
        ts_.expect(Tok::LBrace, "'{'");
        std::vector<Literal> out;
        if (ts_.peek().kind != Tok::RBrace) {
            out.push_back(parse_literal());
            while (ts_.peek().kind == Tok::Comma) {
                ts_.next();
                out.push_back(parse_literal());
            }
        }
        ts_.expect(Tok::RBrace, "'}' or ','");
        return out;
    }

    Predicate parse_inner() {
        ts_.expect(Tok::LParen, "'('");
        Predicate p = parse_or();
        ts_.expect(Tok::RParen, "')'");
        return p;
    }

    Predicate parse_atom() {
        const auto& t = ts_.peek();
        if (t.kind == Tok::LParen) {
            ts_.next();
            Predicate p = parse_or();
            ts_.expect(Tok::RParen, "')'");
            return p;
        }
        if (t.kind != Tok::Ident) ts_.fail(t, "expected predicate, found " + detail::describe(t));
        const std::string word = t.text;
        if (word == "true" || word == "false") {
            ts_.next();
            return Predicate(pred::Const{word == "true"});
        }
        if (word == "is") {
            ts_.next();
            return Predicate(pred::TypeTest{ts_.expect(Tok::Ident, "type name").text});
        }
        if (word == "id") {
            ts_.next();
            ts_.expect_keyword("in");
            const auto& open = ts_.peek();
            std::vector<std::string> ids;
            for (auto& lit : parse_set()) {
                if (!std::holds_alternative<std::string>(lit)) ts_.fail(open, "id sets must contain strings");
                ids.push_back(std::get<std::string>(std::move(lit)));
            }
            return Predicate(pred::IdIn{std::move(ids)});
        }
        if (word == "attr") {
            ts_.next();
            ts_.expect(Tok::LParen, "'('");
            std::string name = ts_.expect(Tok::String, "attribute name string").text;
            ts_.expect(Tok::RParen, "')'");
            if (ts_.accept_keyword("in")) return Predicate(pred::AttrIn{std::move(name), parse_set()});
            const CmpOp op = ts_.expect(Tok::Cmp, "comparison operator or 'in'").op;
            return Predicate(pred::AttrCmp{std::move(name), op, parse_literal()});
        }
        if (word == "child_count") {
            ts_.next();
            Predicate inner = parse_inner();
            const CmpOp op = ts_.expect(Tok::Cmp, "comparison operator").op;
            const std::int64_t n = ts_.expect(Tok::Int, "integer").int_value;
            return Predicate(pred::ChildCount{std::move(inner), op, n});
        }
        if (word == "has_parent") {
            ts_.next();
            return Predicate(pred::HasParent{parse_inner()});
        }
        if (word == "has_child") {
            ts_.next();
            return Predicate(pred::HasChild{parse_inner()});
        }
        ts_.fail(t, "unknown predicate '" + word + "'");
    }

    TokenStream ts_;
};

std::string literal_text(const Literal& l) {
    return std::visit(overloaded{
                          [](const std::string& s) { return detail::quote(s); },
                          [](std::int64_t i) { return std::to_string(i); },
                          [](double d) {
                              char buf[64];
                              auto r = std::to_chars(buf, buf + sizeof buf, d);
                              std::string s(buf, r.ptr);
                              if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
                              return s;
                          },
                      },
                      l);
}

template <class T>
std::string join_set(const std::vector<T>& items) {
    std::string out = "{";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_same_v<T, std::string>) out += detail::quote(items[i]);
        else out += literal_text(items[i]);
    }
    return out + "}";
}

bool is_junction(const Predicate& p) {
    return std::holds_alternative<pred::And>(p.node()) || std::holds_alternative<pred::Or>(p.node());
}

enum class Tri { False, True, Unknown };

Tri tri(bool b) { return b ? Tri::True : Tri::False; }

template <class T>
bool compare(const T& a, const T& b, CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return a == b;
        case CmpOp::Ne: return a != b;
        case CmpOp::Lt: return a < b;
        case CmpOp::Le: return a <= b;
        case CmpOp::Gt: return a > b;
        case CmpOp::Ge: return a >= b;
    }
    return false;
}

/// nullopt when the value and literal are not comparable.
std::optional<bool> compare_value(const AttrValue& v, CmpOp op, const Literal& lit) {
    if (const auto* s = std::get_if<std::string>(&v)) {
        if (const auto* ls = std::get_if<std::string>(&lit)) return compare(*s, *ls, op);
        return std::nullopt;
    }
    if (const auto* set = std::get_if<StringSet>(&v)) {
        const auto* ls = std::get_if<std::string>(&lit);
        if (ls == nullptr) return std::nullopt;
        if (op == CmpOp::Eq) return set->contains(*ls);
        if (op == CmpOp::Ne) return !set->contains(*ls);
        return std::nullopt;
    }
    if (std::holds_alternative<std::int64_t>(v) && std::holds_alternative<std::int64_t>(lit))
        return compare(std::get<std::int64_t>(v), std::get<std::int64_t>(lit), op);
    auto as_double = [](const auto& x) -> std::optional<double> {
        if (const auto* i = std::get_if<std::int64_t>(&x)) return static_cast<double>(*i);
        if (const auto* d = std::get_if<double>(&x)) return *d;
        return std::nullopt;
    };
    auto a = as_double(v);
    auto b = as_double(lit);
    if (a && b) return compare(*a, *b, op);
    return std::nullopt;
}

class Evaluator {
public:
    Evaluator(const World& w, EvalContext ctx, std::vector<std::string>* warnings)
        : w_(w), ctx_(ctx), warnings_(warnings) {}

    Tri eval(const Predicate& p, World::Index n) const {
        return std::visit([&](const auto& node) { return eval_node(node, n); }, p.node());
    }

private:
    void warn(World::Index n, const std::string& message) const {
        if (warnings_ != nullptr) warnings_->push_back(w_.at(n).id + ": " + message);
    }

    void require_trust(std::string_view what) const {
        if (ctx_ != EvalContext::Trust)
            throw SemanticError(std::string(what) + " tests the world structure and is only allowed in trust beliefs");
    }

    const AttrValue* attribute(World::Index n, const std::string& name) const {
        const auto& attrs = w_.at(n).attributes;
        auto it = attrs.find(name);
        if (it == attrs.end()) {
            warn(n, "missing attribute '" + name + "'");
            return nullptr;
        }
        return &it->second;
    }

    Tri eval_node(const pred::Const& c, World::Index) const { return tri(c.value); }
    Tri eval_node(const pred::TypeTest& t, World::Index n) const { return tri(w_.at(n).type_name == t.type_name); }
    Tri eval_node(const pred::IdIn& t, World::Index n) const {
        const auto& id = w_.at(n).id;
        return tri(std::find(t.ids.begin(), t.ids.end(), id) != t.ids.end());
    }
    Tri eval_node(const pred::AttrCmp& t, World::Index n) const {
        const AttrValue* v = attribute(n, t.name);
        if (v == nullptr) return Tri::Unknown;
        auto r = compare_value(*v, t.op, t.value);
        if (!r) {
            warn(n, "attribute '" + t.name + "' of kind " + std::string(value_kind(*v)) + " cannot be compared with " +
                        literal_text(t.value) + " using " + std::string(to_string(t.op)));
            return Tri::Unknown;
        }
        return tri(*r);
    }
    Tri eval_node(const pred::AttrIn& t, World::Index n) const {
        const AttrValue* v = attribute(n, t.name);
        if (v == nullptr) return Tri::Unknown;
        if (std::holds_alternative<Coordinate>(*v)) {
            warn(n, "attribute '" + t.name + "' is a coordinate pair and has no set membership");
            return Tri::Unknown;
        }
        for (const auto& lit : t.values)
            if (compare_value(*v, CmpOp::Eq, lit).value_or(false)) return Tri::True;
        return Tri::False;
    }
    Tri eval_node(const pred::ChildCount& t, World::Index n) const {
        require_trust("child_count");
        std::int64_t count = 0;
        for (World::Index c : w_.children(n))
            if (eval(t.inner, c) == Tri::True) ++count;
        return tri(compare(count, t.count, t.op));
    }
    Tri eval_node(const pred::HasParent& t, World::Index n) const {
        require_trust("has_parent");
        for (World::Index p : w_.parents(n))
            if (eval(t.inner, p) == Tri::True) return Tri::True;
        return Tri::False;
    }
    Tri eval_node(const pred::HasChild& t, World::Index n) const {
        require_trust("has_child");
        for (World::Index c : w_.children(n))
            if (eval(t.inner, c) == Tri::True) return Tri::True;
        return Tri::False;
    }
    Tri eval_node(const pred::Not& t, World::Index n) const {
        switch (eval(t.operand, n)) {
            case Tri::True: return Tri::False;
            case Tri::False: return Tri::True;
            case Tri::Unknown: return Tri::Unknown;
        }
        return Tri::Unknown;
    }
    Tri eval_node(const pred::And& t, World::Index n) const {
        Tri acc = Tri::True;
        for (const auto& op : t.operands) {
            const Tri r = eval(op, n);
            if (r == Tri::False) return Tri::False;
            if (r == Tri::Unknown) acc = Tri::Unknown;
        }
        return acc;
    }
    Tri eval_node(const pred::Or& t, World::Index n) const {
        Tri acc = Tri::False;
        for (const auto& op : t.operands) {
            const Tri r = eval(op, n);
            if (r == Tri::True) return Tri::True;
            if (r == Tri::Unknown) acc = Tri::Unknown;
        }
        return acc;
    }

    const World& w_;
    EvalContext ctx_;
    std::vector<std::string>* warnings_;
};

}  // namespace

Predicate parse_predicate(std::string_view text) { return PredicateParser(text).parse(); }

std::string to_string(const Predicate& p) {
    auto sub = [](const Predicate& q, bool wrap) { return wrap ? "(" + to_string(q) + ")" : to_string(q); };
    return std::visit(
        overloaded{
            [](const pred::Const& c) { return std::string(c.value ? "true" : "false"); },
            [](const pred::TypeTest& t) { return "is " + t.type_name; },
            [](const pred::IdIn& t) { return "id in " + join_set(t.ids); },
            [](const pred::AttrCmp& t) {
                return "attr(" + detail::quote(t.name) + ") " + std::string(to_string(t.op)) + " " + literal_text(t.value);
            },
            [](const pred::AttrIn& t) { return "attr(" + detail::quote(t.name) + ") in " + join_set(t.values); },
            [](const pred::ChildCount& t) {
                return "child_count(" + to_string(t.inner) + ") " + std::string(to_string(t.op)) + " " +
                       std::to_string(t.count);
            },
            [](const pred::HasParent& t) { return "has_parent(" + to_string(t.inner) + ")"; },
            [](const pred::HasChild& t) { return "has_child(" + to_string(t.inner) + ")"; },
            [&](const pred::Not& t) { return "not " + sub(t.operand, is_junction(t.operand)); },
            [&](const pred::And& t) {
                std::string out;
                for (std::size_t i = 0; i < t.operands.size(); ++i)
                    out += (i ? " and " : "") + sub(t.operands[i], is_junction(t.operands[i]));
                return out;
            },
            [&](const pred::Or& t) {
                std::string out;
                for (std::size_t i = 0; i < t.operands.size(); ++i)
                    out += (i ? " or " : "") +
                           sub(t.operands[i], std::holds_alternative<pred::Or>(t.operands[i].node()));
                return out;
            },
        },
        p.node());
}

bool uses_structure(const Predicate& p) {
    return std::visit(overloaded{
                          [](const pred::ChildCount&) { return true; },
                          [](const pred::HasParent&) { return true; },
                          [](const pred::HasChild&) { return true; },
                          [](const pred::Not& t) { return uses_structure(t.operand); },
                          [](const pred::And& t) {
                              return std::any_of(t.operands.begin(), t.operands.end(),
                                                 [](const Predicate& q) { return uses_structure(q); });
                          },
                          [](const pred::Or& t) {
                              return std::any_of(t.operands.begin(), t.operands.end(),
                                                 [](const Predicate& q) { return uses_structure(q); });
                          },
                          [](const auto&) { return false; },
                      },
                      p.node());
}

bool eval_predicate(const Predicate& p, const World& w, World::Index n, EvalContext ctx,
                    std::vector<std::string>* warnings) {
    return Evaluator(w, ctx, warnings).eval(p, n) == Tri::True;
}

bool eval_predicate(const Predicate& p, const World& w, std::string_view id, EvalContext ctx,
                    std::vector<std::string>* warnings) {
    const World::Index n = w.index_of(id);
    if (n == World::npos) throw SemanticError("unknown instance id: " + std::string(id));
    return eval_predicate(p, w, n, ctx, warnings);
}

}  // namespace tortrust
