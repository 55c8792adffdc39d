#include "tamc/presburger.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <map>
#include <mutex>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include "tamc/sexpr.hpp"

extern char** environ;

namespace tamc {

// ---------------------------------------------------------------- variables and terms

VarId VarPool::add(const std::string& name, Sort sort) {
    std::string clean;
    for (char c : name) clean += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') ? c : '_';
    if (clean.empty() || std::isdigit(static_cast<unsigned char>(clean[0]))) clean = "v_" + clean;
    std::string unique = clean;
    for (int k = 1; taken_.count(unique); ++k) unique = clean + "_" + std::to_string(k);
    taken_.insert(unique);
    names_.push_back(unique);
    sorts_.push_back(sort);
    return names_.size() - 1;
}

LinTerm LinTerm::var(VarId v, std::int64_t coeff) {
    LinTerm t;
    if (coeff != 0) t.terms.emplace_back(v, coeff);
    return t;
}

LinTerm& LinTerm::operator+=(const LinTerm& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
}

LinTerm& LinTerm::operator-=(const LinTerm& o) {
    for (const auto& [v, c] : o.terms) terms.emplace_back(v, -c);
    constant -= o.constant;
    return *this;
}

LinTerm& LinTerm::operator*=(std::int64_t k) {
    for (auto& t : terms) t.second *= k;
    constant *= k;
    if (k == 0) terms.clear();
    return *this;
}

void LinTerm::canonicalize() {
    std::map<VarId, std::int64_t> acc;
    for (const auto& [v, c] : terms) acc[v] += c;
    terms.clear();
    for (const auto& [v, c] : acc)
        if (c != 0) terms.emplace_back(v, c);
}

LinTerm sum_of(const std::vector<VarId>& vars) {
    LinTerm t;
    for (auto v : vars) t.terms.emplace_back(v, 1);
    return t;
}

// ---------------------------------------------------------------- formulas

namespace {

Formula make(FormulaNode n) { return std::make_shared<const FormulaNode>(std::move(n)); }

}  // namespace

Formula f_true() {
    static const Formula t = make(FormulaNode{FormulaNode::Kind::True, {}, Relation::Eq, {}, {}});
    return t;
}

Formula f_false() {
    static const Formula f = make(FormulaNode{FormulaNode::Kind::False, {}, Relation::Eq, {}, {}});
    return f;
}

Formula atom(LinTerm lhs, Relation rel, LinTerm rhs) {
    lhs.canonicalize();
    rhs.canonicalize();
    LinTerm diff = lhs - rhs;
    diff.canonicalize();
    if (diff.is_constant()) return compare(Rational(diff.constant), rel, Rational(0)) ? f_true() : f_false();
    return make(FormulaNode{FormulaNode::Kind::Atom, std::move(lhs), rel, std::move(rhs), {}});
}

Formula negate(const Formula& a) {
    switch (a->kind) {
        case FormulaNode::Kind::True: return f_false();
        case FormulaNode::Kind::False: return f_true();
        case FormulaNode::Kind::Atom: {
            FormulaNode n = *a;
            n.kind = FormulaNode::Kind::NotAtom;
            return make(std::move(n));
        }
        case FormulaNode::Kind::NotAtom: {
            FormulaNode n = *a;
            n.kind = FormulaNode::Kind::Atom;
            return make(std::move(n));
        }
        default: throw std::invalid_argument("negation is only allowed on atoms");
    }
}

Formula conj(std::vector<Formula> fs) {
    std::vector<Formula> kids;
    for (auto& f : fs) {
        if (f->kind == FormulaNode::Kind::False) return f_false();
        if (f->kind == FormulaNode::Kind::True) continue;
        if (f->kind == FormulaNode::Kind::And) kids.insert(kids.end(), f->kids.begin(), f->kids.end());
        else kids.push_back(std::move(f));
    }
    if (kids.empty()) return f_true();
    if (kids.size() == 1) return kids[0];
    return make(FormulaNode{FormulaNode::Kind::And, {}, Relation::Eq, {}, std::move(kids)});
}

Formula disj(std::vector<Formula> fs) {
    std::vector<Formula> kids;
    for (auto& f : fs) {
        if (f->kind == FormulaNode::Kind::True) return f_true();
        if (f->kind == FormulaNode::Kind::False) continue;
        if (f->kind == FormulaNode::Kind::Or) kids.insert(kids.end(), f->kids.begin(), f->kids.end());
        else kids.push_back(std::move(f));
    }
    if (kids.empty()) return f_false();
    if (kids.size() == 1) return kids[0];
    return make(FormulaNode{FormulaNode::Kind::Or, {}, Relation::Eq, {}, std::move(kids)});
}

Formula conj(Formula a, Formula b) { return conj(std::vector<Formula>{std::move(a), std::move(b)}); }
Formula disj(Formula a, Formula b) { return disj(std::vector<Formula>{std::move(a), std::move(b)}); }

Formula implies(Formula a, Formula b) {
    if (a->kind == FormulaNode::Kind::False || b->kind == FormulaNode::Kind::True) return f_true();
    if (a->kind == FormulaNode::Kind::True) return b;
    if (b->kind == FormulaNode::Kind::False && (a->kind == FormulaNode::Kind::Atom || a->kind == FormulaNode::Kind::NotAtom))
        return negate(a);
    return make(FormulaNode{FormulaNode::Kind::Implies, {}, Relation::Eq, {}, {std::move(a), std::move(b)}});
}

// ---------------------------------------------------------------- evaluation

void Model::set(VarId v, std::int64_t value) {
    if (v >= values_.size()) {
        values_.resize(v + 1, 0);
        assigned_.resize(v + 1, false);
    }
    values_[v] = value;
    assigned_[v] = true;
}

std::int64_t Model::operator[](VarId v) const {
    if (!has(v)) throw MissingAssignment("no value for variable #" + std::to_string(v));
    return values_[v];
}

std::int64_t Model::eval(const LinTerm& t) const {
    __int128 acc = t.constant;
    for (const auto& [v, c] : t.terms) acc += static_cast<__int128>(c) * (*this)[v];
    return static_cast<std::int64_t>(acc);
}

bool eval(const Formula& f, const Model& m) {
    using K = FormulaNode::Kind;
    switch (f->kind) {
        case K::True: return true;
        case K::False: return false;
        case K::Atom: return compare(Rational(m.eval(f->lhs)), f->rel, Rational(m.eval(f->rhs)));
        case K::NotAtom: return !compare(Rational(m.eval(f->lhs)), f->rel, Rational(m.eval(f->rhs)));
        case K::And:
            return std::all_of(f->kids.begin(), f->kids.end(), [&](const Formula& k) { return eval(k, m); });
        case K::Or:
            return std::any_of(f->kids.begin(), f->kids.end(), [&](const Formula& k) { return eval(k, m); });
        case K::Implies: return !eval(f->kids[0], m) || eval(f->kids[1], m);
    }
    return false;
}

// ---------------------------------------------------------------- printing

namespace {

void print_int(std::ostream& os, std::int64_t v) {
    if (v < 0) os << "(- " << (0ULL - static_cast<unsigned long long>(v)) << ")";
    else os << v;
}

void print_term(std::ostream& os, const VarPool& pool, const LinTerm& t) {
    std::vector<std::string> parts;
    auto one = [&](VarId v, std::int64_t c) {
        std::ostringstream s;
        if (c == 1) {
            s << pool.name(v);
        } else {
            s << "(* ";
            print_int(s, c);
            s << " " << pool.name(v) << ")";
        }
        return s.str();
    };
    for (const auto& [v, c] : t.terms) parts.push_back(one(v, c));
    if (t.constant != 0 || parts.empty()) {
        std::ostringstream s;
        print_int(s, t.constant);
        parts.push_back(s.str());
    }
    if (parts.size() == 1) {
        os << parts[0];
        return;
    }
    os << "(+";
    for (const auto& p : parts) os << " " << p;
    os << ")";
}

void print_node(std::ostream& os, const VarPool& pool, const Formula& f) {
    using K = FormulaNode::Kind;
    switch (f->kind) {
        case K::True: os << "true"; return;
        case K::False: os << "false"; return;
        case K::Atom:
        case K::NotAtom:
            if (f->kind == K::NotAtom) os << "(not ";
            os << "(" << relation_symbol(f->rel) << " ";
            print_term(os, pool, f->lhs);
            os << " ";
            print_term(os, pool, f->rhs);
            os << ")";
            if (f->kind == K::NotAtom) os << ")";
            return;
        case K::And:
        case K::Or:
        case K::Implies:
            os << (f->kind == K::And ? "(and" : f->kind == K::Or ? "(or" : "(=>");
            for (const auto& k : f->kids) {
                os << " ";
                print_node(os, pool, k);
            }
            os << ")";
            return;
    }
}

}  // namespace

std::string print_formula(const VarPool& pool, const Formula& f) {
    std::ostringstream os;
    print_node(os, pool, f);
    return os.str();
}

std::string to_smtlib(const VarPool& pool, const Formula& f, unsigned seed) {
    std::ostringstream os;
    os << "(set-option :produce-models true)\n";
    os << "(set-option :random-seed " << seed << ")\n";
    os << "(set-logic QF_LIA)\n";
    for (VarId v = 0; v < pool.size(); ++v) os << "(declare-fun " << pool.name(v) << " () Int)\n";
    for (VarId v = 0; v < pool.size(); ++v)
        if (pool.sort(v) == Sort::Natural) os << "(assert (>= " << pool.name(v) << " 0))\n";
    if (f->kind == FormulaNode::Kind::And) {
        for (const auto& k : f->kids) {
            os << "(assert ";
            print_node(os, pool, k);
            os << ")\n";
        }
    } else {
        os << "(assert ";
        print_node(os, pool, f);
        os << ")\n";
    }
    os << "(check-sat)\n";
    if (pool.size() > 0) {
        os << "(get-value (";
        for (VarId v = 0; v < pool.size(); ++v) os << (v ? " " : "") << pool.name(v);
        os << "))\n";
    }
    return os.str();
}

// ---------------------------------------------------------------- solver process

const char* to_string(Verdict::Kind k) {
    switch (k) {
        case Verdict::Kind::Sat: return "sat";
        case Verdict::Kind::Unsat: return "unsat";
        case Verdict::Kind::Unknown: return "unknown";
    }
    return "?";
}

SolverConfig SolverConfig::from_env() {
    SolverConfig c;
    if (const char* s = std::getenv("TAMC_SOLVER"); s && *s) c.path = s;
    if (const char* t = std::getenv("TAMC_TIMEOUT_MS"); t && *t) c.timeout_ms = static_cast<unsigned>(std::stoul(t));
    return c;
}

std::vector<std::string> SolverConfig::effective_args() const {
    if (!args.empty()) return args;
    std::string base = path.substr(path.find_last_of('/') == std::string::npos ? 0 : path.find_last_of('/') + 1);
    if (base.rfind("z3", 0) == 0) return {"-in", "-smt2", "-t:" + std::to_string(timeout_ms)};
    if (base.rfind("cvc", 0) == 0) return {"--lang=smt2", "--tlimit=" + std::to_string(timeout_ms)};
    return {};
}

namespace {

struct ProcessResult {
    std::string out;
    int status = 0;
    bool timed_out = false;
};

ProcessResult run_process(const std::string& path, const std::vector<std::string>& args, const std::string& input,
                          unsigned timeout_ms) {
    static std::once_flag ignore_sigpipe;
    std::call_once(ignore_sigpipe, [] { std::signal(SIGPIPE, SIG_IGN); });

    int in_pipe[2], out_pipe[2];
    if (pipe2(in_pipe, O_CLOEXEC) != 0) throw SolverUnavailable("pipe failed");
    if (pipe2(out_pipe, O_CLOEXEC) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        throw SolverUnavailable("pipe failed");
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], 0);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], 1);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], 2);

    std::vector<std::string> argv_s{path};
    argv_s.insert(argv_s.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_s) argv.push_back(a.data());
    argv.push_back(nullptr);

    pid_t pid = 0;
    int rc = posix_spawnp(&pid, path.c_str(), &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    close(in_pipe[0]);
    close(out_pipe[1]);
    if (rc != 0) {
        close(in_pipe[1]);
        close(out_pipe[0]);
        throw SolverUnavailable("cannot start solver '" + path + "': " + std::strerror(rc));
    }
    fcntl(in_pipe[1], F_SETFL, O_NONBLOCK);
    fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);

    ProcessResult res;
    std::size_t written = 0;
    int wfd = in_pipe[1];
    if (input.empty()) {
        close(wfd);
        wfd = -1;
    }
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms + 2000);
    bool out_open = true;
    char buf[65536];
    while (out_open) {
        auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            res.timed_out = true;
            kill(pid, SIGKILL);
            break;
        }
        int wait_ms = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count());
        pollfd fds[2];
        int nfds = 0;
        fds[nfds++] = {out_pipe[0], POLLIN, 0};
        if (wfd >= 0) fds[nfds++] = {wfd, POLLOUT, 0};
        int pr = poll(fds, nfds, std::min(wait_ms, 1000));
        if (pr < 0 && errno != EINTR) break;
        if (pr <= 0) continue;
        if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
            ssize_t n = read(out_pipe[0], buf, sizeof buf);
            if (n > 0) res.out.append(buf, static_cast<std::size_t>(n));
            else if (n == 0 || (errno != EAGAIN && errno != EINTR)) out_open = false;
        }
        if (nfds == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
            ssize_t n = write(wfd, input.data() + written, input.size() - written);
            if (n > 0) written += static_cast<std::size_t>(n);
            if ((n < 0 && errno != EAGAIN && errno != EINTR) || written == input.size()) {
                close(wfd);
                wfd = -1;
            }
        }
    }
    if (wfd >= 0) close(wfd);
    close(out_pipe[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    res.status = status;
    return res;
}

std::int64_t parse_value(const SExpr& e) {
    if (e.is_atom) return std::stoll(e.atom);
    if (e.items.size() == 2 && e.items[0].is_atom && e.items[0].atom == "-" && e.items[1].is_atom)
        return -std::stoll(e.items[1].atom);
    throw MalformedSolverOutput("unexpected model value '" + e.str() + "'");
}

}  // namespace

Verdict solve(const VarPool& pool, const Formula& f, const SolverConfig& config) {
    Verdict v;
    if (f->kind == FormulaNode::Kind::False) {
        v.kind = Verdict::Kind::Unsat;
        return v;
    }
    std::string script = to_smtlib(pool, f, config.seed);
    ProcessResult pr = run_process(config.path, config.effective_args(), script, config.timeout_ms);
    if (pr.timed_out) {
        v.reason = "solver timeout after " + std::to_string(config.timeout_ms) + " ms";
        return v;
    }
    if (WIFEXITED(pr.status) && WEXITSTATUS(pr.status) == 127)
        throw SolverUnavailable("solver '" + config.path + "' could not be executed");
    std::vector<SExpr> out;
    try {
        out = parse_sexprs(pr.out);
    } catch (const SExprError& e) {
        throw MalformedSolverOutput(std::string("cannot read solver output: ") + e.what());
    }
    if (out.empty()) throw MalformedSolverOutput("empty solver output");
    const SExpr& head = out[0];
    if (head.is_atom && head.atom == "unsat") {
        v.kind = Verdict::Kind::Unsat;
        return v;
    }
    if (head.is_atom && (head.atom == "unknown" || head.atom == "timeout")) {
        v.reason = "solver returned unknown";
        return v;
    }
    if (!head.is_atom || head.atom != "sat")
        throw MalformedSolverOutput("unexpected solver answer: " + pr.out.substr(0, 400));
    v.kind = Verdict::Kind::Sat;
    v.model = Model(pool.size());
    std::map<std::string, VarId> by_name;
    for (VarId i = 0; i < pool.size(); ++i) by_name[pool.name(i)] = i;
    if (pool.size() > 0) {
        if (out.size() < 2 || out[1].is_atom) throw MalformedSolverOutput("missing get-value response");
        for (const auto& pair : out[1].items) {
            if (pair.is_atom || pair.items.size() != 2 || !pair.items[0].is_atom)
                throw MalformedSolverOutput("bad get-value entry '" + pair.str() + "'");
            auto it = by_name.find(pair.items[0].atom);
            if (it == by_name.end()) throw MalformedSolverOutput("model names unknown variable '" + pair.items[0].atom + "'");
            v.model.set(it->second, parse_value(pair.items[1]));
        }
    }
    for (VarId i = 0; i < pool.size(); ++i) {
        if (!v.model.has(i)) throw MalformedSolverOutput("model misses variable '" + pool.name(i) + "'");
        if (pool.sort(i) == Sort::Natural && v.model[i] < 0)
            throw MalformedSolverOutput("negative value for natural variable '" + pool.name(i) + "'");
    }
    if (!eval(f, v.model)) throw MalformedSolverOutput("solver model does not satisfy the query");
    return v;
}

std::string solver_version(const SolverConfig& config) {
    try {
        ProcessResult pr = run_process(config.path, {"--version"}, "", 5000);
        std::string line = pr.out.substr(0, pr.out.find('\n'));
        return line.empty() ? "unknown" : line;
    } catch (const SolverUnavailable&) {
        return "unavailable";
    }
}

}  // namespace tamc
