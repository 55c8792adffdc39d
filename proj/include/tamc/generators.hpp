#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tamc/eltl.hpp"
#include "tamc/ta.hpp"

namespace tamc {

struct TooLarge : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Literals are signed 1-based variable indices, as in DIMACS.
struct Cnf3 {
    std::size_t num_vars = 0;
    std::vector<std::vector<int>> clauses;  // at most 3 literals each
};

// `p cnf <vars> <clauses>` followed by 0-terminated clauses; 'c' lines are comments.
Cnf3 parse_dimacs(const std::string& text);
Cnf3 load_dimacs(const std::string& path);
std::string print_dimacs(const Cnf3& f);

enum class SatVariant {
    Param,     // parameterized coverability of l_F
    NonParam,  // initial-exit rules lose guards and updates; one process per l_i
};

ThresholdAutomaton gen_3sat(const Cnf3& f, SatVariant variant = SatVariant::Param);
// One process in each l_i, k = number of variables.
Configuration nonparam_initial(const ThresholdAutomaton& ta, const Cnf3& f);

bool brute_sat(const Cnf3& f);

// Exists x_1..x_m forall y_1..y_k of a DNF. Literal v in 1..m is x_v,
// m+1..m+k is y_{v-m}.
struct Sigma2Instance {
    std::size_t exists_vars = 0;
    std::size_t forall_vars = 0;
    std::vector<std::vector<int>> dnf;  // conjuncts of at most 3 literals
};

// QDIMACS-like: `p dnf <vars> <terms>`, optional `e ... 0` and `a ... 0`
// quantifier lines, then 0-terminated terms. Variables are renumbered so
// that existential ones come first; unquantified variables are existential.
Sigma2Instance parse_sigma2(const std::string& text);
Sigma2Instance load_sigma2(const std::string& path);
std::string print_sigma2(const Sigma2Instance& q);

struct Sigma2Reduction {
    ThresholdAutomaton sketch;
    std::string spec_text;
    EltlFormula spec;
};

Sigma2Reduction gen_sigma2(const Sigma2Instance& q);

bool brute_sigma2(const Sigma2Instance& q);

Cnf3 random_cnf(std::mt19937_64& rng, std::size_t max_vars, std::size_t max_clauses);
Sigma2Instance random_sigma2(std::mt19937_64& rng, std::size_t max_exists, std::size_t max_forall,
                             std::size_t max_terms);

}  // namespace tamc
