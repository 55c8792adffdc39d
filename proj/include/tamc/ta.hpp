#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tamc/rational.hpp"

namespace tamc {

// A guard coefficient is either a known rational or a synthesis unknown.
struct Coefficient {
    Rational value;
    std::string indeterminate;  // empty for a constant

    static Coefficient constant(Rational v) { return {v, {}}; }
    static Coefficient unknown(std::string id) { return {Rational(0), std::move(id)}; }

    bool is_constant() const { return indeterminate.empty(); }
    friend bool operator==(const Coefficient&, const Coefficient&) = default;
};

// a0 + a1*p1 + ... + ak*pk, one coefficient slot per declared parameter.
struct LinearExpr {
    Coefficient constant;
    std::vector<Coefficient> coeffs;

    bool is_concrete() const;
    Rational eval(const std::vector<std::int64_t>& params) const;
    Rational eval(const std::vector<Rational>& params) const;
    friend bool operator==(const LinearExpr&, const LinearExpr&) = default;
};

// Parameter-only affine form with known coefficients.
struct AffineForm {
    std::vector<Rational> coeffs;
    Rational constant;

    Rational eval(const std::vector<std::int64_t>& params) const;
    Rational eval(const std::vector<Rational>& params) const;
    // Smallest positive integer clearing every denominator.
    std::int64_t denominator_lcm() const;
    friend bool operator==(const AffineForm&, const AffineForm&) = default;
};

enum class Relation { Lt, Le, Eq, Ge, Gt };

const char* relation_symbol(Relation r);
bool compare(const Rational& lhs, Relation rel, const Rational& rhs);

// lhs (relation) 0
struct LinearConstraint {
    AffineForm lhs;
    Relation rel = Relation::Ge;

    bool holds(const std::vector<std::int64_t>& params) const;
    bool holds(const std::vector<Rational>& params) const;
    friend bool operator==(const LinearConstraint&, const LinearConstraint&) = default;
};

enum class GuardKind { Rise, Fall };

struct Guard {
    std::size_t var = 0;
    GuardKind kind = GuardKind::Rise;
    LinearExpr rhs;
    friend bool operator==(const Guard&, const Guard&) = default;
};

// D*x >= c + sum a_i p_i (rise) or D*x < c + sum a_i p_i (fall), all integers.
struct IntegerGuard {
    std::size_t var = 0;
    GuardKind kind = GuardKind::Rise;
    std::int64_t scale = 1;  // D
    std::vector<std::int64_t> coeffs;
    std::int64_t constant = 0;

    std::int64_t threshold(const std::vector<std::int64_t>& params) const;
    bool holds(std::int64_t x, const std::vector<std::int64_t>& params) const;
    bool parameter_free() const;
    friend bool operator==(const IntegerGuard&, const IntegerGuard&) = default;
};

// Requires only constant coefficients.
IntegerGuard normalize_guard(const Guard& g);

struct Rule {
    std::string id;
    std::size_t from = 0;
    std::size_t to = 0;
    std::vector<Guard> guards;
    std::vector<std::uint64_t> update;  // one entry per shared variable
    friend bool operator==(const Rule&, const Rule&) = default;
};

struct Environment {
    std::vector<std::string> params;
    std::vector<LinearConstraint> resilience;
    AffineForm size_fn;

    bool admissible(const std::vector<std::int64_t>& params) const;
    // N(p) when it is a natural number.
    std::optional<std::int64_t> system_size(const std::vector<std::int64_t>& params) const;
    friend bool operator==(const Environment&, const Environment&) = default;
};

// A sketch is the same structure with a nonempty `indeterminates` list.
struct ThresholdAutomaton {
    std::string name;
    Environment env;
    std::vector<std::string> locations;
    std::vector<std::size_t> initial;
    std::vector<std::string> shared;
    std::vector<Rule> rules;
    std::vector<std::string> indeterminates;

    bool is_sketch() const { return !indeterminates.empty(); }
    bool is_initial(std::size_t loc) const;

    std::optional<std::size_t> location_index(const std::string& name) const;
    std::optional<std::size_t> shared_index(const std::string& name) const;
    std::optional<std::size_t> param_index(const std::string& name) const;
    std::optional<std::size_t> rule_index(const std::string& id) const;

    friend bool operator==(const ThresholdAutomaton&, const ThresholdAutomaton&) = default;
};

// Distinct normalized guards of a concrete TA (the set Phi) and, per rule,
// the indices of its guards. Rise guards that hold for every valuation
// (x >= c with c <= 0 and no parameters) are dropped.
struct GuardIndex {
    std::vector<IntegerGuard> guards;
    std::vector<std::vector<std::size_t>> by_rule;

    // Index of g, appending it if absent.
    std::size_t intern(const IntegerGuard& g);
};

GuardIndex index_guards(const ThresholdAutomaton& ta);
bool trivially_true(const IntegerGuard& g);

struct ParseError : std::runtime_error {
    // line/column are 1-based for syntax errors and 0 for semantic ones.
    ParseError(const std::string& msg, std::size_t line = 0, std::size_t column = 0)
        : std::runtime_error(msg), line(line), column(column) {}
    std::size_t line;
    std::size_t column;
};

struct ParseOptions {
    bool strict = false;  // updates must be 0 or 1
};

struct ParsedTa {
    ThresholdAutomaton ta;
    std::vector<std::string> warnings;
};

ParsedTa parse_ta(const std::string& text, const ParseOptions& options = {});
ThresholdAutomaton load_ta(const std::string& path, const ParseOptions& options = {});
std::string print_ta(const ThresholdAutomaton& ta);

// Expression helpers shared with the spec parser and the generators.
LinearExpr parse_linear_expr(const std::string& text, const std::vector<std::string>& params,
                             const std::vector<std::string>& indeterminates);
Guard parse_guard(const std::string& text, const ThresholdAutomaton& ta);
LinearConstraint parse_constraint(const std::string& text, const std::vector<std::string>& params);
std::string format_linear(const LinearExpr& e, const std::vector<std::string>& params);
std::string format_affine(const AffineForm& e, const std::vector<std::string>& params);
std::string format_guard(const Guard& g, const ThresholdAutomaton& ta);
std::string format_constraint(const LinearConstraint& c, const std::vector<std::string>& params);

AffineForm to_affine(const LinearExpr& e);  // throws on indeterminates

struct Multiplicativity {
    enum class Kind { Yes, No, Unknown };
    Kind kind = Kind::Unknown;
    std::string reason;
};

const char* to_string(Multiplicativity::Kind k);
Multiplicativity check_multiplicative(const ThresholdAutomaton& ta);

}  // namespace tamc
