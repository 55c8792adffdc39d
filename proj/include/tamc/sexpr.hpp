#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tamc {

struct SExpr {
    bool is_atom = true;
    std::string atom;
    std::vector<SExpr> items;
    std::size_t line = 0;
    std::size_t column = 0;

    bool is_list() const { return !is_atom; }
    std::string str() const;
};

struct SExprError : std::runtime_error {
    SExprError(const std::string& msg, std::size_t line, std::size_t column)
        : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
          line(line), column(column) {}
    std::size_t line;
    std::size_t column;
};

// Reads every top-level expression; ';' starts a comment running to end of line.
std::vector<SExpr> parse_sexprs(const std::string& text);

}  // namespace tamc
