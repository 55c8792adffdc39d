#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tamc/ta.hpp"

namespace tamc {

using VarId = std::size_t;

enum class Sort { Integer, Natural };

// Variable declarations of one query. Names are sanitized and made unique.
class VarPool {
public:
    VarId add(const std::string& name, Sort sort = Sort::Natural);
    const std::string& name(VarId v) const { return names_.at(v); }
    Sort sort(VarId v) const { return sorts_.at(v); }
    std::size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::vector<Sort> sorts_;
    std::unordered_set<std::string> taken_;
};

// sum c_i * v_i + constant
struct LinTerm {
    std::vector<std::pair<VarId, std::int64_t>> terms;
    std::int64_t constant = 0;

    LinTerm() = default;
    LinTerm(std::int64_t c) : constant(c) {}  // NOLINT(implicit)
    static LinTerm var(VarId v, std::int64_t coeff = 1);

    LinTerm& operator+=(const LinTerm& o);
    LinTerm& operator-=(const LinTerm& o);
    LinTerm& operator*=(std::int64_t k);
    friend LinTerm operator+(LinTerm a, const LinTerm& b) { return a += b; }
    friend LinTerm operator-(LinTerm a, const LinTerm& b) { return a -= b; }
    friend LinTerm operator*(LinTerm a, std::int64_t k) { return a *= k; }
    friend LinTerm operator*(std::int64_t k, LinTerm a) { return a *= k; }

    // merges duplicate variables and drops zero coefficients
    void canonicalize();
    bool is_constant() const { return terms.empty(); }
};

LinTerm sum_of(const std::vector<VarId>& vars);

struct FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
    enum class Kind { True, False, Atom, NotAtom, And, Or, Implies };
    Kind kind = Kind::True;
    LinTerm lhs;
    Relation rel = Relation::Eq;
    LinTerm rhs;
    std::vector<Formula> kids;
};

Formula f_true();
Formula f_false();
Formula atom(LinTerm lhs, Relation rel, LinTerm rhs);
Formula negate(const Formula& atom_formula);  // only on atoms (and constants)
Formula conj(std::vector<Formula> fs);
Formula disj(std::vector<Formula> fs);
Formula conj(Formula a, Formula b);
Formula disj(Formula a, Formula b);
Formula implies(Formula a, Formula b);

inline Formula eq(LinTerm a, LinTerm b) { return atom(std::move(a), Relation::Eq, std::move(b)); }
inline Formula ge(LinTerm a, LinTerm b) { return atom(std::move(a), Relation::Ge, std::move(b)); }
inline Formula gt(LinTerm a, LinTerm b) { return atom(std::move(a), Relation::Gt, std::move(b)); }
inline Formula le(LinTerm a, LinTerm b) { return atom(std::move(a), Relation::Le, std::move(b)); }
inline Formula lt(LinTerm a, LinTerm b) { return atom(std::move(a), Relation::Lt, std::move(b)); }

struct MissingAssignment : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Model {
public:
    Model() = default;
    explicit Model(std::size_t nvars) : values_(nvars, 0), assigned_(nvars, false) {}

    void set(VarId v, std::int64_t value);
    bool has(VarId v) const { return v < assigned_.size() && assigned_[v]; }
    std::int64_t operator[](VarId v) const;
    std::int64_t eval(const LinTerm& t) const;
    std::size_t size() const { return values_.size(); }

private:
    std::vector<std::int64_t> values_;
    std::vector<bool> assigned_;
};

bool eval(const Formula& f, const Model& m);

std::string to_smtlib(const VarPool& pool, const Formula& f, unsigned seed);
std::string print_formula(const VarPool& pool, const Formula& f);

struct SolverConfig {
    std::string path = "z3";
    std::vector<std::string> args;  // empty: chosen from the binary name
    unsigned timeout_ms = 60000;
    unsigned seed = 0;

    // Defaults overridden by TAMC_SOLVER and TAMC_TIMEOUT_MS.
    static SolverConfig from_env();
    std::vector<std::string> effective_args() const;
};

struct SolverUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MalformedSolverOutput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Verdict {
    enum class Kind { Sat, Unsat, Unknown };
    Kind kind = Kind::Unknown;
    Model model;
    std::string reason;

    bool sat() const { return kind == Kind::Sat; }
    bool unsat() const { return kind == Kind::Unsat; }
    bool unknown() const { return kind == Kind::Unknown; }
};

const char* to_string(Verdict::Kind k);

// Runs one solver process; every Sat model is checked with eval.
Verdict solve(const VarPool& pool, const Formula& f, const SolverConfig& config);

// First line of `<solver> --version`, or "unknown".
std::string solver_version(const SolverConfig& config);

}  // namespace tamc
