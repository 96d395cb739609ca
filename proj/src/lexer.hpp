#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tortrust/predicate.hpp"

namespace tortrust::detail {

enum class Tok { Ident, String, Int, Real, LParen, RParen, LBrace, RBrace, Comma, Cmp, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;  // identifier or decoded string
    std::int64_t int_value = 0;
    double real_value = 0.0;
    CmpOp op = CmpOp::Eq;
    std::size_t offset = 0;
};

/// Tokenizer shared by predicates and event expressions. In `node_ids` mode
/// bare words may contain ':', '-', '.', '#', '/' and start with a digit.
std::vector<Token> tokenize(std::string_view text, bool node_ids);

std::string describe(const Token& t);
std::string quote(std::string_view s);

/// Token cursor with positioned errors.
class TokenStream {
public:
    TokenStream(std::string_view text, std::vector<Token> tokens) : text_(text), tokens_(std::move(tokens)) {}

    const Token& peek() const { return tokens_[pos_]; }
    const Token& next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
    bool at_keyword(std::string_view kw) const { return peek().kind == Tok::Ident && peek().text == kw; }
    bool accept_keyword(std::string_view kw) {
        if (!at_keyword(kw)) return false;
        next();
        return true;
    }
    const Token& expect(Tok kind, std::string_view what);
    void expect_keyword(std::string_view kw);
    [[noreturn]] void fail(const Token& at, const std::string& message) const;

private:
    std::string_view text_;
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

}  // namespace tortrust::detail
