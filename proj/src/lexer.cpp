#include "lexer.hpp"

#include <cctype>
#include <charconv>

#include "tortrust/error.hpp"
#include "tortrust/io.hpp"

namespace tortrust::detail {

namespace {

[[noreturn]] void lex_fail(std::string_view text, std::size_t offset, const std::string& message) {
    auto [line, col] = line_column(text, offset);
    throw ParseError(message, line, col);
}

bool word_start(char c, bool node_ids) {
    const auto u = static_cast<unsigned char>(c);
    return std::isalpha(u) || c == '_' || (node_ids && std::isdigit(u));
}

bool word_char(char c, bool node_ids) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '_') return true;
    return node_ids && (c == ':' || c == '-' || c == '.' || c == '#' || c == '/');
}

}  // namespace

std::vector<Token> tokenize(std::string_view text, bool node_ids) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        Token t;
        t.offset = i;
        switch (c) {
            case '(': t.kind = Tok::LParen; ++i; out.push_back(t); continue;
            case ')': t.kind = Tok::RParen; ++i; out.push_back(t); continue;
            case '{': t.kind = Tok::LBrace; ++i; out.push_back(t); continue;
            case '}': t.kind = Tok::RBrace; ++i; out.push_back(t); continue;
            case ',': t.kind = Tok::Comma; ++i; out.push_back(t); continue;
            default: break;
        }
        if (c == '"') {
            ++i;
            std::string s;
            bool closed = false;
            while (i < text.size()) {
                const char d = text[i++];
                if (d == '"') {
                    closed = true;
                    break;
                }
                if (d == '\\') {
                    if (i >= text.size()) break;
                    const char e = text[i++];
                    switch (e) {
                        case 'n': s += '\n'; break;
                        case 't': s += '\t'; break;
                        case '"': s += '"'; break;
                        case '\\': s += '\\'; break;
                        default: lex_fail(text, i - 2, std::string("unknown escape \\") + e);
                    }
                    continue;
                }
                s += d;
            }
            if (!closed) lex_fail(text, t.offset, "unterminated string");
            t.kind = Tok::String;
            t.text = std::move(s);
            out.push_back(std::move(t));
            continue;
        }
        const bool digit_next = i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1]));
        if (!node_ids && (std::isdigit(static_cast<unsigned char>(c)) || (c == '-' && digit_next))) {
            std::size_t j = i + (c == '-' ? 1 : 0);
            bool real = false;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            if (j < text.size() && text[j] == '.') {
                real = true;
                ++j;
                while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            }
            if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
                real = true;
                ++j;
                if (j < text.size() && (text[j] == '+' || text[j] == '-')) ++j;
                while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            }
            const char* first = text.data() + i;
            const char* last = text.data() + j;
            if (real) {
                t.kind = Tok::Real;
                auto r = std::from_chars(first, last, t.real_value);
                if (r.ec != std::errc() || r.ptr != last) lex_fail(text, i, "malformed number");
            } else {
                t.kind = Tok::Int;
                auto r = std::from_chars(first, last, t.int_value);
                if (r.ec != std::errc() || r.ptr != last) lex_fail(text, i, "integer out of range");
            }
            t.text = std::string(text.substr(i, j - i));
            i = j;
            out.push_back(std::move(t));
            continue;
        }
        if (word_start(c, node_ids)) {
            std::size_t j = i;
            while (j < text.size() && word_char(text[j], node_ids)) ++j;
            t.kind = Tok::Ident;
            t.text = std::string(text.substr(i, j - i));
            i = j;
            out.push_back(std::move(t));
            continue;
        }
        // Comparison operators, including the UTF-8 forms of != <= >=.
        static constexpr std::pair<std::string_view, CmpOp> kUnicode[] = {
            {"\xE2\x89\xA0", CmpOp::Ne}, {"\xE2\x89\xA4", CmpOp::Le}, {"\xE2\x89\xA5", CmpOp::Ge}};
        bool matched = false;
        for (const auto& [spelling, op] : kUnicode)
            if (text.substr(i).starts_with(spelling)) {
                t.kind = Tok::Cmp;
                t.op = op;
                t.text = std::string(spelling);
                i += spelling.size();
                matched = true;
                break;
            }
        if (matched) {
            out.push_back(std::move(t));
            continue;
        }
        if (c == '=' || c == '!' || c == '<' || c == '>') {
            std::size_t j = i;
            while (j < text.size() && (text[j] == '=' || text[j] == '!' || text[j] == '<' || text[j] == '>')) ++j;
            const std::string_view op = text.substr(i, j - i);
            t.kind = Tok::Cmp;
            t.text = std::string(op);
            if (op == "=") t.op = CmpOp::Eq;
            else if (op == "!=") t.op = CmpOp::Ne;
            else if (op == "<") t.op = CmpOp::Lt;
            else if (op == "<=") t.op = CmpOp::Le;
            else if (op == ">") t.op = CmpOp::Gt;
            else if (op == ">=") t.op = CmpOp::Ge;
            else lex_fail(text, i, "unknown operator '" + std::string(op) + "'");
            i = j;
            out.push_back(std::move(t));
            continue;
        }
        lex_fail(text, i, std::string("unexpected character '") + c + "'");
    }
    Token end;
    end.kind = Tok::End;
    end.offset = text.size();
    out.push_back(end);
    return out;
}

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out + "\"";
}

std::string describe(const Token& t) {
    switch (t.kind) {
        case Tok::Ident: return "'" + t.text + "'";
        case Tok::String: return "string " + quote(t.text);
        case Tok::Int:
        case Tok::Real: return "number " + t.text;
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::LBrace: return "'{'";
        case Tok::RBrace: return "'}'";
        case Tok::Comma: return "','";
        case Tok::Cmp: return "operator '" + t.text + "'";
        case Tok::End: return "end of input";
    }
    return "token";
}

void TokenStream::fail(const Token& at, const std::string& message) const { lex_fail(text_, at.offset, message); }

const Token& TokenStream::expect(Tok kind, std::string_view what) {
    if (peek().kind != kind) fail(peek(), "expected " + std::string(what) + ", found " + describe(peek()));
    return next();
}

void TokenStream::expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) fail(peek(), "expected '" + std::string(kw) + "', found " + describe(peek()));
}

}  // namespace tortrust::detail
