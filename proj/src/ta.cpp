#include "tamc/ta.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace tamc {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- evaluation

bool LinearExpr::is_concrete() const {
    if (!constant.is_constant()) return false;
    return std::all_of(coeffs.begin(), coeffs.end(), [](const Coefficient& c) { return c.is_constant(); });
}

Rational LinearExpr::eval(const std::vector<std::int64_t>& params) const {
    return to_affine(*this).eval(params);
}

Rational LinearExpr::eval(const std::vector<Rational>& params) const {
    return to_affine(*this).eval(params);
}

Rational AffineForm::eval(const std::vector<std::int64_t>& params) const {
    Rational v = constant;
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        if (!coeffs[i].is_zero()) v += coeffs[i] * Rational(params.at(i));
    return v;
}

Rational AffineForm::eval(const std::vector<Rational>& params) const {
    Rational v = constant;
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        if (!coeffs[i].is_zero()) v += coeffs[i] * params.at(i);
    return v;
}

std::int64_t AffineForm::denominator_lcm() const {
    std::int64_t d = constant.den();
    for (const auto& c : coeffs) d = checked_lcm(d, c.den());
    return d;
}

AffineForm to_affine(const LinearExpr& e) {
    if (!e.is_concrete()) throw std::invalid_argument("expression contains indeterminates");
    AffineForm f;
    f.constant = e.constant.value;
    for (const auto& c : e.coeffs) f.coeffs.push_back(c.value);
    return f;
}

const char* relation_symbol(Relation r) {
    switch (r) {
        case Relation::Lt: return "<";
        case Relation::Le: return "<=";
        case Relation::Eq: return "=";
        case Relation::Ge: return ">=";
        case Relation::Gt: return ">";
    }
    return "?";
}

bool compare(const Rational& lhs, Relation rel, const Rational& rhs) {
    switch (rel) {
        case Relation::Lt: return lhs < rhs;
        case Relation::Le: return lhs <= rhs;
        case Relation::Eq: return lhs == rhs;
        case Relation::Ge: return lhs >= rhs;
        case Relation::Gt: return lhs > rhs;
    }
    return false;
}

bool LinearConstraint::holds(const std::vector<std::int64_t>& params) const {
    return compare(lhs.eval(params), rel, Rational(0));
}

bool LinearConstraint::holds(const std::vector<Rational>& params) const {
    return compare(lhs.eval(params), rel, Rational(0));
}

bool Environment::admissible(const std::vector<std::int64_t>& p) const {
    for (auto v : p)
        if (v < 0) return false;
    return std::all_of(resilience.begin(), resilience.end(), [&](const LinearConstraint& c) { return c.holds(p); });
}

std::optional<std::int64_t> Environment::system_size(const std::vector<std::int64_t>& p) const {
    Rational n = size_fn.eval(p);
    if (!n.is_integer() || n.num() < 0) return std::nullopt;
    return n.num();
}

std::int64_t IntegerGuard::threshold(const std::vector<std::int64_t>& params) const {
    std::int64_t v = constant;
    for (std::size_t i = 0; i < coeffs.size(); ++i) v += coeffs[i] * params.at(i);
    return v;
}

bool IntegerGuard::holds(std::int64_t x, const std::vector<std::int64_t>& params) const {
    std::int64_t t = threshold(params);
    return kind == GuardKind::Rise ? scale * x >= t : scale * x < t;
}

bool IntegerGuard::parameter_free() const {
    return std::all_of(coeffs.begin(), coeffs.end(), [](std::int64_t c) { return c == 0; });
}

IntegerGuard normalize_guard(const Guard& g) {
    AffineForm rhs = to_affine(g.rhs);
    std::int64_t d = rhs.denominator_lcm();
    IntegerGuard ig;
    ig.var = g.var;
    ig.kind = g.kind;
    ig.scale = d;
    ig.constant = (rhs.constant * Rational(d)).num();
    for (const auto& c : rhs.coeffs) ig.coeffs.push_back((c * Rational(d)).num());
    return ig;
}

bool trivially_true(const IntegerGuard& g) {
    return g.kind == GuardKind::Rise && g.parameter_free() && g.constant <= 0;
}

std::size_t GuardIndex::intern(const IntegerGuard& g) {
    auto it = std::find(guards.begin(), guards.end(), g);
    if (it != guards.end()) return static_cast<std::size_t>(it - guards.begin());
    guards.push_back(g);
    return guards.size() - 1;
}

GuardIndex index_guards(const ThresholdAutomaton& ta) {
    GuardIndex idx;
    for (const auto& r : ta.rules) {
        std::vector<std::size_t> ids;
        for (const auto& g : r.guards) {
            IntegerGuard ig = normalize_guard(g);
            if (trivially_true(ig)) continue;
            std::size_t id = idx.intern(ig);
            if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
        }
        idx.by_rule.push_back(std::move(ids));
    }
    return idx;
}

// ---------------------------------------------------------------- lookups

namespace {

std::optional<std::size_t> find_name(const std::vector<std::string>& v, const std::string& n) {
    auto it = std::find(v.begin(), v.end(), n);
    if (it == v.end()) return std::nullopt;
    return static_cast<std::size_t>(it - v.begin());
}

}  // namespace

bool ThresholdAutomaton::is_initial(std::size_t loc) const {
    return std::find(initial.begin(), initial.end(), loc) != initial.end();
}

std::optional<std::size_t> ThresholdAutomaton::location_index(const std::string& n) const { return find_name(locations, n); }
std::optional<std::size_t> ThresholdAutomaton::shared_index(const std::string& n) const { return find_name(shared, n); }
std::optional<std::size_t> ThresholdAutomaton::param_index(const std::string& n) const { return find_name(env.params, n); }

std::optional<std::size_t> ThresholdAutomaton::rule_index(const std::string& id) const {
    for (std::size_t i = 0; i < rules.size(); ++i)
        if (rules[i].id == id) return i;
    return std::nullopt;
}

// ---------------------------------------------------------------- expressions

namespace {

struct Token {
    enum Kind { Ident, Number, Op, End } kind;
    std::string text;
};

std::vector<Token> tokenize(const std::string& s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_' || s[j] == '\'')) ++j;
            out.push_back({Token::Ident, s.substr(i, j - i)});
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            if (j < s.size() && s[j] == '/' && j + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
                ++j;
                while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            }
            if (j < s.size() && s[j] == '.') throw std::invalid_argument("decimal literals are not allowed in '" + s + "'");
            out.push_back({Token::Number, s.substr(i, j - i)});
            i = j;
        } else if (c == '>' || c == '<' || c == '=' || c == '!') {
            if (i + 1 < s.size() && s[i + 1] == '=') {
                out.push_back({Token::Op, s.substr(i, 2)});
                i += 2;
            } else {
                out.push_back({Token::Op, std::string(1, c)});
                ++i;
            }
        } else if (c == '+' || c == '-' || c == '*' || c == '(' || c == ')') {
            out.push_back({Token::Op, std::string(1, c)});
            ++i;
        } else {
            throw std::invalid_argument(std::string("unexpected character '") + c + "' in '" + s + "'");
        }
    }
    out.push_back({Token::End, ""});
    return out;
}

// Monomial: coeff * [indeterminate] * [param]
struct Monomial {
    Rational coeff;
    std::string indet;
    long param = -1;
};

using Poly = std::vector<Monomial>;

class ExprParser {
public:
    ExprParser(std::vector<Token> toks, const std::vector<std::string>& params,
               const std::vector<std::string>& indets, std::string source)
        : toks_(std::move(toks)), params_(params), indets_(indets), source_(std::move(source)) {}

    Poly expr() {
        Poly acc = term();
        while (peek().kind == Token::Op && (peek().text == "+" || peek().text == "-")) {
            bool neg = next().text == "-";
            Poly t = term();
            if (neg) scale(t, Rational(-1));
            acc.insert(acc.end(), t.begin(), t.end());
        }
        return acc;
    }

    const Token& peek() const { return toks_[pos_]; }
    const Token& next() { return toks_[pos_++]; }
    bool at_end() const { return peek().kind == Token::End; }

private:
    static void scale(Poly& p, const Rational& k) {
        for (auto& m : p) m.coeff *= k;
    }

    Poly term() {
        Poly acc = factor();
        while (peek().kind == Token::Op && peek().text == "*") {
            next();
            acc = multiply(acc, factor());
        }
        return acc;
    }

    Poly factor() {
        const Token& t = next();
        if (t.kind == Token::Op && t.text == "-") {
            Poly p = factor();
            scale(p, Rational(-1));
            return p;
        }
        if (t.kind == Token::Op && t.text == "+") return factor();
        if (t.kind == Token::Op && t.text == "(") {
            Poly p = expr();
            if (next().text != ")") fail("expected ')'");
            return p;
        }
        if (t.kind == Token::Number) return {Monomial{Rational::parse(t.text), {}, -1}};
        if (t.kind == Token::Ident) {
            if (auto i = find_name(params_, t.text)) return {Monomial{Rational(1), {}, static_cast<long>(*i)}};
            if (find_name(indets_, t.text)) return {Monomial{Rational(1), t.text, -1}};
            throw std::invalid_argument("undeclared identifier '" + t.text + "' in '" + source_ + "'");
        }
        fail("unexpected token '" + t.text + "'");
        return {};
    }

    Poly multiply(const Poly& a, const Poly& b) {
        Poly out;
        for (const auto& x : a)
            for (const auto& y : b) {
                if ((!x.indet.empty() && !y.indet.empty()) || (x.param >= 0 && y.param >= 0))
                    fail("nonlinear product");
                out.push_back({x.coeff * y.coeff, x.indet.empty() ? y.indet : x.indet, std::max(x.param, y.param)});
            }
        return out;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument(what + " in '" + source_ + "'");
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    const std::vector<std::string>& params_;
    const std::vector<std::string>& indets_;
    std::string source_;
};

LinearExpr fold(const Poly& poly, std::size_t nparams, const std::string& source) {
    // slot nparams is the constant term
    std::vector<std::vector<const Monomial*>> slots(nparams + 1);
    for (const auto& m : poly) {
        if (m.coeff.is_zero() && m.indet.empty()) continue;
        slots[m.param < 0 ? nparams : static_cast<std::size_t>(m.param)].push_back(&m);
    }
    auto slot_value = [&](const std::vector<const Monomial*>& ms) -> Coefficient {
        bool any_indet = std::any_of(ms.begin(), ms.end(), [](const Monomial* m) { return !m->indet.empty(); });
        if (any_indet) {
            if (ms.size() != 1 || ms[0]->coeff != Rational(1))
                throw std::invalid_argument("an indeterminate must stand alone as a coefficient in '" + source + "'");
            return Coefficient::unknown(ms[0]->indet);
        }
        Rational v;
        for (const auto* m : ms) v += m->coeff;
        return Coefficient::constant(v);
    };
    LinearExpr e;
    for (std::size_t i = 0; i < nparams; ++i) e.coeffs.push_back(slot_value(slots[i]));
    e.constant = slot_value(slots[nparams]);
    return e;
}

std::string format_coefficient_term(const Coefficient& c, const std::string& param, bool first) {
    // returns "" for a zero constant coefficient
    if (!c.is_constant()) {
        std::string body = param.empty() ? c.indeterminate : c.indeterminate + "*" + param;
        return first ? body : " + " + body;
    }
    if (c.value.is_zero()) return "";
    Rational mag = c.value.sign() < 0 ? -c.value : c.value;
    std::string body;
    if (param.empty()) body = mag.str();
    else if (mag == Rational(1)) body = param;
    else body = mag.str() + "*" + param;
    if (first) return (c.value.sign() < 0 ? "-" : "") + body;
    return (c.value.sign() < 0 ? " - " : " + ") + body;
}

}  // namespace

LinearExpr parse_linear_expr(const std::string& text, const std::vector<std::string>& params,
                             const std::vector<std::string>& indeterminates) {
    ExprParser p(tokenize(text), params, indeterminates, text);
    Poly poly = p.expr();
    if (!p.at_end()) throw std::invalid_argument("trailing input '" + p.peek().text + "' in '" + text + "'");
    return fold(poly, params.size(), text);
}

std::string format_linear(const LinearExpr& e, const std::vector<std::string>& params) {
    std::string out;
    for (std::size_t i = 0; i < e.coeffs.size(); ++i) out += format_coefficient_term(e.coeffs[i], params.at(i), out.empty());
    out += format_coefficient_term(e.constant, "", out.empty());
    return out.empty() ? "0" : out;
}

std::string format_affine(const AffineForm& e, const std::vector<std::string>& params) {
    LinearExpr le;
    le.constant = Coefficient::constant(e.constant);
    for (const auto& c : e.coeffs) le.coeffs.push_back(Coefficient::constant(c));
    return format_linear(le, params);
}

Guard parse_guard(const std::string& text, const ThresholdAutomaton& ta) {
    auto toks = tokenize(text);
    if (toks.size() < 3 || toks[0].kind != Token::Ident || toks[1].kind != Token::Op ||
        (toks[1].text != ">=" && toks[1].text != "<"))
        throw std::invalid_argument("guard must have the form '<shared> >= <expr>' or '<shared> < <expr>': '" + text + "'");
    auto var = ta.shared_index(toks[0].text);
    if (!var) throw std::invalid_argument("undeclared shared variable '" + toks[0].text + "' in guard '" + text + "'");
    auto op = text.find(toks[1].text);
    Guard g;
    g.var = *var;
    g.kind = toks[1].text == ">=" ? GuardKind::Rise : GuardKind::Fall;
    g.rhs = parse_linear_expr(text.substr(op + toks[1].text.size()), ta.env.params, ta.indeterminates);
    return g;
}

std::string format_guard(const Guard& g, const ThresholdAutomaton& ta) {
    return ta.shared.at(g.var) + (g.kind == GuardKind::Rise ? " >= " : " < ") + format_linear(g.rhs, ta.env.params);
}

LinearConstraint parse_constraint(const std::string& text, const std::vector<std::string>& params) {
    std::size_t at = std::string::npos;
    std::string op;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c != '<' && c != '>' && c != '=') continue;
        if (at != std::string::npos) throw std::invalid_argument("more than one relation in '" + text + "'");
        at = i;
        op = (i + 1 < text.size() && text[i + 1] == '=') ? text.substr(i, 2) : text.substr(i, 1);
        i += op.size() - 1;
    }
    if (at == std::string::npos) throw std::invalid_argument("missing relation in constraint '" + text + "'");
    static const std::vector<std::string> no_indets;
    AffineForm lhs = to_affine(parse_linear_expr(text.substr(0, at), params, no_indets));
    AffineForm rhs = to_affine(parse_linear_expr(text.substr(at + op.size()), params, no_indets));
    LinearConstraint c;
    c.lhs.constant = lhs.constant - rhs.constant;
    for (std::size_t i = 0; i < params.size(); ++i) c.lhs.coeffs.push_back(lhs.coeffs[i] - rhs.coeffs[i]);
    if (op == ">=") c.rel = Relation::Ge;
    else if (op == "<=") c.rel = Relation::Le;
    else if (op == ">") c.rel = Relation::Gt;
    else if (op == "<") c.rel = Relation::Lt;
    else c.rel = Relation::Eq;
    return c;
}

std::string format_constraint(const LinearConstraint& c, const std::vector<std::string>& params) {
    return format_affine(c.lhs, params) + " " + relation_symbol(c.rel) + " 0";
}

// ---------------------------------------------------------------- documents

namespace {

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

std::vector<std::string> string_list(const json& doc, const char* key, bool required) {
    if (!doc.contains(key)) {
        if (required) throw ParseError(std::string("missing field '") + key + "'");
        return {};
    }
    const auto& v = doc.at(key);
    if (!v.is_array()) throw ParseError(std::string("field '") + key + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) throw ParseError(std::string("field '") + key + "' must be an array of strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

void require_unique(const std::vector<std::string>& names, const char* what) {
    std::set<std::string> seen;
    for (const auto& n : names)
        if (!seen.insert(n).second) throw ParseError(std::string("duplicate ") + what + " '" + n + "'");
}

void collect_indeterminates(const LinearExpr& e, std::set<std::string>& out) {
    if (!e.constant.is_constant()) out.insert(e.constant.indeterminate);
    for (const auto& c : e.coeffs)
        if (!c.is_constant()) out.insert(c.indeterminate);
}

}  // namespace

ParsedTa parse_ta(const std::string& text, const ParseOptions& options) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ParseError(std::string("syntax error: ") + e.what(), line, col);
    }
    if (!doc.is_object()) throw ParseError("syntax error: top-level value must be an object", 1, 1);

    ParsedTa out;
    auto& ta = out.ta;
    try {
        if (doc.contains("name")) ta.name = doc.at("name").get<std::string>();
        ta.env.params = string_list(doc, "parameters", false);
        require_unique(ta.env.params, "parameter");
        ta.indeterminates = string_list(doc, "indeterminates", false);
        require_unique(ta.indeterminates, "indeterminate");
        for (const auto& v : ta.indeterminates)
            if (ta.param_index(v)) throw ParseError("indeterminate '" + v + "' clashes with a parameter");

        for (const auto& c : string_list(doc, "resilience", false)) {
            try {
                ta.env.resilience.push_back(parse_constraint(c, ta.env.params));
            } catch (const std::invalid_argument& e) {
                throw ParseError(std::string("resilience condition: ") + e.what());
            }
        }
        if (!doc.contains("system_size")) throw ParseError("missing field 'system_size'");
        try {
            ta.env.size_fn = to_affine(parse_linear_expr(doc.at("system_size").get<std::string>(), ta.env.params, {}));
        } catch (const std::invalid_argument& e) {
            throw ParseError(std::string("system_size: ") + e.what());
        }

        ta.locations = string_list(doc, "locations", true);
        if (ta.locations.empty()) throw ParseError("location set is empty");
        require_unique(ta.locations, "location");
        for (const auto& l : string_list(doc, "initial", true)) {
            auto i = ta.location_index(l);
            if (!i) throw ParseError("initial location '" + l + "' is not declared");
            if (!ta.is_initial(*i)) ta.initial.push_back(*i);
        }
        if (ta.initial.empty()) throw ParseError("initial location set is empty");
        ta.shared = string_list(doc, "shared", false);
        require_unique(ta.shared, "shared variable");

        if (!doc.contains("rules") || !doc.at("rules").is_array()) throw ParseError("missing array field 'rules'");
        std::set<std::string> ids;
        std::set<std::string> used_indets;
        for (const auto& jr : doc.at("rules")) {
            Rule r;
            if (!jr.is_object() || !jr.contains("id")) throw ParseError("rule without 'id'");
            r.id = jr.at("id").get<std::string>();
            if (!ids.insert(r.id).second) throw ParseError("duplicate rule id '" + r.id + "'");
            auto loc = [&](const char* key) {
                if (!jr.contains(key)) throw ParseError("rule '" + r.id + "' lacks '" + key + "'");
                auto name = jr.at(key).get<std::string>();
                auto i = ta.location_index(name);
                if (!i) throw ParseError("rule '" + r.id + "' refers to undeclared location '" + name + "'");
                return *i;
            };
            r.from = loc("from");
            r.to = loc("to");
            if (jr.contains("guard")) {
                for (const auto& jg : jr.at("guard")) {
                    try {
                        r.guards.push_back(parse_guard(jg.get<std::string>(), ta));
                    } catch (const std::invalid_argument& e) {
                        throw ParseError("rule '" + r.id + "': " + e.what());
                    }
                    collect_indeterminates(r.guards.back().rhs, used_indets);
                }
            }
            r.update.assign(ta.shared.size(), 0);
            if (jr.contains("update")) {
                for (const auto& [k, v] : jr.at("update").items()) {
                    auto i = ta.shared_index(k);
                    if (!i) throw ParseError("rule '" + r.id + "' updates undeclared shared variable '" + k + "'");
                    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
                        throw ParseError("rule '" + r.id + "' has a non-natural update of '" + k + "'");
                    auto u = v.get<std::uint64_t>();
                    if (u > 1) {
                        if (options.strict) throw ParseError("rule '" + r.id + "' updates '" + k + "' by " + std::to_string(u) + " (strict mode allows 0 or 1)");
                        out.warnings.push_back("rule '" + r.id + "' updates '" + k + "' by " + std::to_string(u));
                    }
                    r.update[*i] = u;
                }
            }
            ta.rules.push_back(std::move(r));
        }
        for (const auto& v : ta.indeterminates)
            if (!used_indets.count(v)) throw ParseError("indeterminate '" + v + "' does not occur in any guard");
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed document: ") + e.what());
    }
    return out;
}

ThresholdAutomaton load_ta(const std::string& path, const ParseOptions& options) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_ta(ss.str(), options).ta;
}

std::string print_ta(const ThresholdAutomaton& ta) {
    json doc;
    if (!ta.name.empty()) doc["name"] = ta.name;
    doc["parameters"] = ta.env.params;
    if (!ta.indeterminates.empty()) doc["indeterminates"] = ta.indeterminates;
    json rc = json::array();
    for (const auto& c : ta.env.resilience) rc.push_back(format_constraint(c, ta.env.params));
    doc["resilience"] = rc;
    doc["system_size"] = format_affine(ta.env.size_fn, ta.env.params);
    doc["locations"] = ta.locations;
    json init = json::array();
    for (auto i : ta.initial) init.push_back(ta.locations[i]);
    doc["initial"] = init;
    doc["shared"] = ta.shared;
    json rules = json::array();
    for (const auto& r : ta.rules) {
        json jr;
        jr["id"] = r.id;
        jr["from"] = ta.locations[r.from];
        jr["to"] = ta.locations[r.to];
        json guards = json::array();
        for (const auto& g : r.guards) guards.push_back(format_guard(g, ta));
        jr["guard"] = guards;
        json upd = json::object();
        for (std::size_t i = 0; i < r.update.size(); ++i)
            if (r.update[i] != 0) upd[ta.shared[i]] = r.update[i];
        jr["update"] = upd;
        rules.push_back(jr);
    }
    doc["rules"] = rules;
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------- multiplicativity

const char* to_string(Multiplicativity::Kind k) {
    switch (k) {
        case Multiplicativity::Kind::Yes: return "yes";
        case Multiplicativity::Kind::No: return "no";
        case Multiplicativity::Kind::Unknown: return "unknown";
    }
    return "?";
}

namespace {

// Admissible integer parameter points in a small box, in lexicographic order.
std::vector<std::vector<std::int64_t>> sample_points(const Environment& env) {
    std::size_t k = env.params.size();
    std::int64_t hi = k <= 3 ? 10 : (k <= 5 ? 4 : 2);
    std::vector<std::vector<std::int64_t>> out;
    std::vector<std::int64_t> p(k, 0);
    while (true) {
        if (env.admissible(p)) out.push_back(p);
        std::size_t i = 0;
        while (i < k && p[i] == hi) p[i++] = 0;
        if (i == k) break;
        ++p[i];
    }
    return out;
}

}  // namespace

Multiplicativity check_multiplicative(const ThresholdAutomaton& ta) {
    using K = Multiplicativity::Kind;
    const auto& env = ta.env;
    std::vector<std::string> problems;
    for (const auto& c : env.resilience)
        if (!c.lhs.constant.is_zero())
            problems.push_back("resilience constraint '" + format_constraint(c, env.params) + "' has a constant term");
    if (!env.size_fn.constant.is_zero()) problems.push_back("system size has a constant term");
    struct BadGuard {
        const Rule* rule;
        AffineForm rhs;
        GuardKind kind;
        std::size_t var;
    };
    std::vector<BadGuard> bad_guards;
    for (const auto& r : ta.rules)
        for (const auto& g : r.guards) {
            AffineForm rhs = to_affine(g.rhs);
            bool bad = g.kind == GuardKind::Rise ? rhs.constant.sign() < 0 : rhs.constant.sign() > 0;
            if (bad) {
                problems.push_back("guard '" + format_guard(g, ta) + "' of rule '" + r.id + "' has a constant of the wrong sign");
                bad_guards.push_back({&r, rhs, g.kind, g.var});
            }
        }
    if (problems.empty()) return {K::Yes, "homogeneous resilience condition and system size, guard constants of the right sign"};

    auto points = sample_points(env);
    auto show = [&](const std::vector<std::int64_t>& p) {
        std::string s = "(";
        for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + env.params[i] + "=" + std::to_string(p[i]);
        return s + ")";
    };
    for (const auto& p : points) {
        for (std::int64_t mu = 2; mu <= 4; ++mu) {
            std::vector<std::int64_t> q(p);
            for (auto& v : q) v *= mu;
            if (!env.admissible(q))
                return {K::No, "p=" + show(p) + " is admissible but " + std::to_string(mu) + "*p is not"};
            if (env.size_fn.eval(q) != env.size_fn.eval(p) * Rational(mu))
                return {K::No, "N(" + std::to_string(mu) + "*p) != " + std::to_string(mu) + "*N(p) at p=" + show(p)};
        }
    }
    for (const auto& bg : bad_guards) {
        Rational a0 = bg.rhs.constant;
        Rational quarter = (a0.sign() < 0 ? -a0 : a0) / Rational(4);
        for (const auto& p : points) {
            Rational rhs = bg.rhs.eval(p);
            Rational y = bg.kind == GuardKind::Fall ? rhs - quarter : rhs + quarter;
            if (y.sign() < 0) continue;
            std::vector<Rational> pr, p2;
            for (auto v : p) {
                pr.emplace_back(v);
                p2.emplace_back(2 * v);
            }
            auto sat = [&](const Rational& yy, const std::vector<Rational>& pp) {
                Rational t = bg.rhs.eval(pp);
                return bg.kind == GuardKind::Rise ? yy >= t : yy < t;
            };
            if (sat(y, pr) && !sat(y * Rational(2), p2))
                return {K::No, "guard of rule '" + bg.rule->id + "' holds at " + ta.shared[bg.var] + "=" + y.str() + ", p=" + show(p) +
                                   " but not after scaling by 2"};
        }
    }
    std::string reason;
    for (const auto& p : problems) reason += (reason.empty() ? "" : "; ") + p;
    return {K::Unknown, reason};
}

}  // namespace tamc
