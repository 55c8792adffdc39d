#include "tamc/sexpr.hpp"

#include <cctype>

namespace tamc {

std::string SExpr::str() const {
    if (is_atom) return atom;
    std::string out = "(";
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? " " : "") + items[i].str();
    return out + ")";
}

namespace {

class Reader {
public:
    explicit Reader(const std::string& t) : text_(t) {}

    std::vector<SExpr> all() {
        std::vector<SExpr> out;
        skip();
        while (pos_ < text_.size()) {
            out.push_back(read());
            skip();
        }
        return out;
    }

private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    SExpr read() {
        SExpr e;
        e.line = line_;
        e.column = col_;
        char c = text_[pos_];
        if (c == ')') throw SExprError("unexpected ')'", line_, col_);
        if (c == '(') {
            e.is_atom = false;
            advance();
            skip();
            while (pos_ < text_.size() && text_[pos_] != ')') {
                e.items.push_back(read());
                skip();
            }
            if (pos_ >= text_.size()) throw SExprError("unterminated list", e.line, e.column);
            advance();
            return e;
        }
        if (c == '"') {
            std::size_t start = pos_;
            advance();
            while (pos_ < text_.size() && text_[pos_] != '"') advance();
            if (pos_ >= text_.size()) throw SExprError("unterminated string", e.line, e.column);
            advance();
            e.atom = text_.substr(start, pos_ - start);
            return e;
        }
        if (c == '|') {
            std::size_t start = pos_;
            advance();
            while (pos_ < text_.size() && text_[pos_] != '|') advance();
            if (pos_ >= text_.size()) throw SExprError("unterminated quoted symbol", e.line, e.column);
            advance();
            e.atom = text_.substr(start, pos_ - start);
            return e;
        }
        std::size_t start = pos_;
        while (pos_ < text_.size()) {
            char d = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == ';') break;
            advance();
        }
        e.atom = text_.substr(start, pos_ - start);
        return e;
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

}  // namespace

std::vector<SExpr> parse_sexprs(const std::string& text) { return Reader(text).all(); }

}  // namespace tamc
