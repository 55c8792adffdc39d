// tamc: command-line front end for threshold automata verification.
//
// Exit codes: 0 positive verdict, 1 negative verdict, 2 usage or input
// error, 3 unknown or resource limit.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tamc/cover.hpp"
#include "tamc/eltl.hpp"
#include "tamc/generators.hpp"
#include "tamc/reach.hpp"
#include "tamc/synthesis.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tamc;

namespace {

constexpr int kPositive = 0;
constexpr int kNegative = 1;
constexpr int kInputError = 2;
constexpr int kUnknown = 3;

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write " + path);
    out << text;
}

std::string fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << h;
    return ss.str();
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::size_t location_of(const ThresholdAutomaton& ta, const std::string& name) {
    auto l = ta.location_index(name);
    if (!l) throw UsageError("unknown location '" + name + "'");
    return *l;
}

std::vector<std::size_t> locations_of(const ThresholdAutomaton& ta, const std::string& list) {
    std::vector<std::size_t> out;
    for (const auto& name : split_list(list)) out.push_back(location_of(ta, name));
    return out;
}

// --init takes a JSON file or an inline JSON object.
Configuration read_init(const Semantics& sem, const std::string& arg) {
    json j;
    try {
        j = json::parse(!arg.empty() && arg.front() == '{' ? arg : read_file(arg));
    } catch (const json::exception& e) {
        throw UsageError("initial configuration: " + std::string(e.what()));
    }
    Configuration c = sem.from_json(j);
    if (!sem.is_valid(c)) throw UsageError("initial configuration is not admissible or has the wrong size");
    if (!sem.is_initial(c)) throw UsageError("initial configuration occupies non-initial locations");
    return c;
}

std::vector<std::int64_t> parse_ints(const std::string& s, std::size_t n, const char* what) {
    std::vector<std::int64_t> out;
    for (const auto& item : split_list(s)) {
        try {
            out.push_back(std::stoll(item));
        } catch (const std::exception&) {
            throw UsageError(std::string("bad number '") + item + "' in " + what);
        }
    }
    if (out.size() == 1 && n > 1) out.assign(n, out[0]);
    if (out.size() != n) throw UsageError(std::string(what) + " needs one value per parameter");
    return out;
}

// ------------------------------------------------------------------ settings

struct Global {
    std::string solver;
    unsigned timeout_ms = 0;
    unsigned seed = 0;
    bool quiet = false;

    SolverConfig solver_config() const {
        SolverConfig c = SolverConfig::from_env();
        if (!solver.empty()) c.path = solver;
        if (timeout_ms) c.timeout_ms = timeout_ms;
        c.seed = seed;
        return c;
    }
};

// ------------------------------------------------------------------ reports

class Report {
public:
    explicit Report(std::string command) : start_(std::chrono::steady_clock::now()) {
        j_["command"] = std::move(command);
        j_["inputs"] = json::array();
    }

    void input(const std::string& path) {
        j_["inputs"].push_back({{"path", path}, {"fnv1a", fnv1a(read_file(path))}});
    }
    void solver(const SolverConfig& c) {
        std::string version;
        try {
            version = solver_version(c);
        } catch (const std::exception&) {
            version = "unavailable";
        }
        j_["solver"] = {{"binary", c.path}, {"version", version}, {"seed", c.seed}, {"timeout_ms", c.timeout_ms}};
    }
    json& operator[](const char* key) { return j_[key]; }

    // Timing is excluded from the digest so identical runs agree on it.
    void finish(const std::string& json_path) {
        j_.erase("wall_ms");
        j_.erase("digest");
        j_["digest"] = fnv1a(j_.dump());
        j_["wall_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_).count();
        if (!json_path.empty()) write_file(json_path, j_.dump(2) + "\n");
    }

private:
    json j_;
    std::chrono::steady_clock::time_point start_;
};

std::string witness_path(const std::string& explicit_path, const std::string& json_path) {
    if (!explicit_path.empty()) return explicit_path;
    if (json_path.empty()) return "";
    fs::path p(json_path);
    return (p.parent_path() / (p.stem().string() + ".witness.json")).string();
}

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

void say(const Global& g, const std::string& line) {
    if (!g.quiet) std::cout << line << "\n";
}

// ------------------------------------------------------------------ parse

struct ParseArgs {
    std::string file;
    bool strict = false;
    bool print = false;
};

int run_parse(const Global& g, const ParseArgs& a) {
    ParseOptions opts;
    opts.strict = a.strict;
    ParsedTa parsed;
    try {
        parsed = parse_ta(read_file(a.file), opts);
    } catch (const ParseError& e) {
        std::cerr << a.file << ":" << e.line << ":" << e.column << ": error: " << e.what() << "\n";
        return kInputError;
    }
    for (const auto& w : parsed.warnings) std::cerr << a.file << ": warning: " << w << "\n";
    const auto& ta = parsed.ta;
    if (a.print) {
        std::cout << print_ta(ta);
        return kPositive;
    }
    say(g, "automaton " + (ta.name.empty() ? std::string("(unnamed)") : ta.name) + ": " +
               std::to_string(ta.locations.size()) + " locations, " + std::to_string(ta.rules.size()) + " rules, " +
               std::to_string(ta.shared.size()) + " shared variables, " + std::to_string(ta.env.params.size()) +
               " parameters");
    if (ta.is_sketch()) {
        std::string ids;
        for (const auto& v : ta.indeterminates) ids += (ids.empty() ? "" : ", ") + v;
        say(g, "sketch with indeterminates " + ids);
    } else {
        auto m = check_multiplicative(ta);
        say(g, std::string("multiplicative: ") + to_string(m.kind) + (m.reason.empty() ? "" : " (" + m.reason + ")"));
    }
    return kPositive;
}

// ------------------------------------------------------------------ reach / cover

struct ReachArgs {
    std::string file;
    std::string init;
    std::string zero;
    std::string pos;
    std::string location;
    std::optional<std::int64_t> bound;
    bool param_mode = false;
    bool assume_multiplicative = false;
    std::string json_out;
    std::string witness;
};

int exit_for(Verdict::Kind k) {
    return k == Verdict::Kind::Sat ? kPositive : k == Verdict::Kind::Unsat ? kNegative : kUnknown;
}

json trace_witness(const Semantics& sem, const ReachArgs& a, const ReachWitness& w, const Schedule& schedule,
                   const std::vector<std::size_t>& zero, const std::vector<std::size_t>& pos) {
    json j = reach_witness_to_json(sem, w, schedule);
    j["kind"] = "trace";
    j["ta"] = absolute(a.file);
    j["ta_fnv1a"] = fnv1a(read_file(a.file));
    json target = {{"zero", json::array()}, {"pos", json::array()}};
    for (auto l : zero) target["zero"].push_back(sem.ta().locations[l]);
    for (auto l : pos) target["pos"].push_back(sem.ta().locations[l]);
    j["target"] = target;
    return j;
}

int run_reach(const Global& g, const ReachArgs& a, bool is_cover) {
    auto ta = load_ta(a.file);
    Semantics sem(ta);
    SolverConfig solver = g.solver_config();
    Report report(is_cover ? "cover" : "reach");
    report.input(a.file);
    report.solver(solver);

    std::optional<Configuration> init;
    if (!a.init.empty()) {
        if (a.param_mode) throw UsageError("--init and --param-mode exclude each other");
        init = read_init(sem, a.init);
    }
    std::vector<std::size_t> zero, pos;
    Verdict::Kind kind;
    std::optional<ReachResult> reach;
    std::string reason;
    if (is_cover) {
        pos = {location_of(ta, a.location)};
        CoverQuery q;
        q.location = pos[0];
        q.init = init;
        q.bound = a.bound;
        q.assume_multiplicative = a.assume_multiplicative;
        auto res = cover(ta, q, solver);
        kind = res.kind;
        reason = res.reason;
        reach = res.reach;
        report["method"] = res.method;
        if (res.fixpoint) {
            json cov = json::array();
            for (auto l : res.fixpoint->locations) cov.push_back(ta.locations[l]);
            report["coverable"] = cov;
        }
    } else {
        zero = locations_of(ta, a.zero);
        pos = locations_of(ta, a.pos);
        ReachQuery q;
        q.init = init;
        q.zero = zero;
        q.pos = pos;
        q.bound = a.bound;
        reach = solve_reach(ta, q, solver);
        kind = reach->kind;
        reason = reach->reason;
    }
    report["verdict"] = to_string(kind);
    if (!reason.empty()) report["reason"] = reason;
    report["witness"] = nullptr;
    std::string wpath = witness_path(a.witness, a.json_out);
    if (kind == Verdict::Kind::Sat && reach && reach->witness) {
        json w = trace_witness(sem, a, *reach->witness, reach->schedule, zero, pos);
        report["schedule"] = sem.schedule_ids(reach->schedule);
        report["params"] = sem.to_json(reach->witness->points.front())["params"];
        if (!wpath.empty()) {
            write_file(wpath, w.dump(2) + "\n");
            report["witness"] = wpath;
        }
        std::string sched;
        for (const auto& id : sem.schedule_ids(reach->schedule)) sched += (sched.empty() ? "" : " ") + id;
        say(g, std::string(is_cover ? "coverable" : "reachable") + " via [" + sched + "]");
    } else {
        say(g, kind == Verdict::Kind::Sat     ? std::string("coverable")
               : kind == Verdict::Kind::Unsat ? std::string(is_cover ? "not coverable" : "unreachable")
                                              : "unknown: " + reason);
    }
    report.finish(a.json_out);
    return exit_for(kind);
}

// ------------------------------------------------------------------ mc

struct McArgs {
    std::string file;
    std::string spec;
    std::size_t max_orders = 0;
    unsigned jobs = 1;
    bool assume_multiplicative = false;
    std::string json_out;
    std::string witness;
};

int run_mc(const Global& g, const McArgs& a) {
    auto ta = load_ta(a.file);
    auto spec = load_eltl(a.spec, ta);
    SolverConfig solver = g.solver_config();
    Report report("mc");
    report.input(a.file);
    report.input(a.spec);
    report.solver(solver);
    CheckOptions opts;
    opts.max_orders = a.max_orders;
    opts.jobs = std::max(1u, a.jobs);
    opts.assume_multiplicative = a.assume_multiplicative;
    auto res = check_spec(ta, spec, solver, opts);
    report["verdict"] = to_string(res.kind);
    report["orders_checked"] = res.orders_checked;
    if (!res.reason.empty()) report["reason"] = res.reason;
    report["witness"] = nullptr;
    int code = res.kind == CheckResult::Kind::Violated ? kPositive
               : res.kind == CheckResult::Kind::Holds  ? kNegative
                                                       : kUnknown;
    if (res.witness) {
        Semantics sem(ta);
        auto graph = cut_graph(to_normal_form(spec));
        json w;
        w["kind"] = "lasso";
        w["ta"] = absolute(a.file);
        w["ta_fnv1a"] = fnv1a(read_file(a.file));
        w["spec"] = absolute(a.spec);
        w["spec_fnv1a"] = fnv1a(read_file(a.spec));
        w["lasso"] = lasso_to_json(sem, graph, *res.witness);
        report["params"] = sem.to_json(res.witness->milestones.front())["params"];
        report["stem"] = sem.schedule_ids(res.witness->stem());
        report["loop"] = sem.schedule_ids(res.witness->loop());
        std::string wpath = witness_path(a.witness, a.json_out);
        if (!wpath.empty()) {
            write_file(wpath, w.dump(2) + "\n");
            report["witness"] = wpath;
        }
        say(g, "violated: lasso with stem of " + std::to_string(res.witness->stem().size()) + " and loop of " +
                   std::to_string(res.witness->loop().size()) + " rules");
    } else {
        say(g, res.kind == CheckResult::Kind::Holds ? "holds: no run satisfies the formula (" +
                                                          std::to_string(res.orders_checked) + " orders)"
                                                    : "unknown: " + res.reason);
    }
    report.finish(a.json_out);
    return code;
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
    std::string file;
    std::string spec;
    std::int64_t denom = 1;
    std::optional<std::int64_t> bound;
    double budget_s = 300;
    unsigned recheck = 5;
    std::string json_out;
};

int run_synth(const Global& g, const SynthArgs& a) {
    auto sketch = load_ta(a.file);
    auto spec = load_eltl(a.spec, sketch);
    SolverConfig solver = g.solver_config();
    Report report("synth");
    report.input(a.file);
    report.input(a.spec);
    report.solver(solver);
    SynthesisOptions opts;
    opts.space.denominator = a.denom;
    opts.space.bound = a.bound;
    opts.budget_s = a.budget_s;
    opts.recheck = a.recheck;
    opts.seed = g.seed;
    auto res = synthesize(sketch, spec, solver, opts);
    json j = synthesis_to_json(res);
    for (auto it = j.begin(); it != j.end(); ++it) report[it.key().c_str()] = it.value();
    if (res.assignment)
        say(g, "found " + format_assignment(*res.assignment));
    else
        say(g, res.kind == SynthesisResult::Kind::NoneInSpace ? "no assignment in the candidate space"
                                                              : "unknown: " + res.reason);
    say(g, std::to_string(res.candidates_tried) + " checked, " + std::to_string(res.pruned) + " pruned of " +
               std::to_string(res.space_size));
    report.finish(a.json_out);
    if (res.recheck_failures > 0) {
        std::cerr << "error: " << res.recheck_failures << " pruned candidates did not re-verify as violated\n";
        return kUnknown;
    }
    return res.kind == SynthesisResult::Kind::Found ? kPositive
           : res.kind == SynthesisResult::Kind::NoneInSpace ? kNegative
                                                            : kUnknown;
}

// ------------------------------------------------------------------ oracle

struct OracleArgs {
    std::string file;
    std::string replay;
    std::string init;
    std::string location;
    std::string spec;
    std::string params_max = "3";
    std::string params_min = "0";
    std::size_t bound = 6;
    std::size_t stem = 6;
    std::size_t loop = 4;
    std::size_t max_states = 4000000;
    std::string json_out;
};

void check_digest(const json& w, const char* path_key, const char* digest_key) {
    std::string path = w.at(path_key);
    if (w.contains(digest_key) && fnv1a(read_file(path)) != w.at(digest_key).get<std::string>())
        throw CertificateInvalid(path + " changed since the witness was written");
}

// Throws on any defect.
std::string replay_witness(const json& w) {
    std::string kind = w.at("kind");
    check_digest(w, "ta", "ta_fnv1a");
    auto ta = load_ta(w.at("ta"));
    Semantics sem(ta);
    if (kind == "trace") {
        Configuration init = sem.from_json(w.at("init"));
        if (!sem.is_valid(init) || !sem.is_initial(init)) throw CertificateInvalid("start is not an initial configuration");
        std::vector<std::string> ids = w.at("schedule");
        Schedule tau = sem.parse_schedule(ids);
        auto states = sem.trace(init, tau);
        if (w.contains("states")) {
            if (w.at("states").size() != states.size()) throw CertificateInvalid("state count differs from the schedule");
            for (std::size_t i = 0; i < states.size(); ++i)
                if (sem.from_json(w.at("states")[i]) != states[i])
                    throw CertificateInvalid("state " + std::to_string(i) + " differs from the replay");
        }
        const auto& last = states.back();
        for (const auto& l : w.at("target").at("zero"))
            if (last.counters[location_of(ta, l)] != 0) throw CertificateInvalid("location " + l.get<std::string>() + " is not empty");
        for (const auto& l : w.at("target").at("pos"))
            if (last.counters[location_of(ta, l)] == 0) throw CertificateInvalid("location " + l.get<std::string>() + " is empty");
        return "trace of " + std::to_string(tau.size()) + " steps replays";
    }
    if (kind == "lasso") {
        check_digest(w, "spec", "spec_fnv1a");
        auto spec = load_eltl(w.at("spec"), ta);
        auto graph = cut_graph(to_normal_form(spec));
        auto lasso = lasso_from_json(sem, graph, w.at("lasso"));
        replay_lasso(sem, graph, lasso);
        // two loop iterations return to the loop start
        Configuration at_loop = sem.run(lasso.milestones.front(), lasso.stem());
        Configuration twice = sem.run(sem.run(at_loop, lasso.loop()), lasso.loop());
        if (twice.counters != at_loop.counters) throw CertificateInvalid("loop does not return the counters");
        if (!eval_on_lasso(sem, spec, lasso.milestones.front(), lasso.stem(), lasso.loop()))
            throw CertificateInvalid("the run does not satisfy the formula");
        return "lasso with stem " + std::to_string(lasso.stem().size()) + " and loop " +
               std::to_string(lasso.loop().size()) + " replays";
    }
    throw UsageError("unknown witness kind '" + kind + "'");
}

int run_oracle(const Global& g, const OracleArgs& a) {
    if (!a.replay.empty()) {
        json w;
        try {
            w = json::parse(read_file(a.replay));
        } catch (const json::exception& e) {
            throw UsageError(a.replay + ": " + e.what());
        }
        try {
            say(g, replay_witness(w));
            return kPositive;
        } catch (const std::exception& e) {
            std::cerr << "replay failed: " << e.what() << "\n";
            return kNegative;
        }
    }
    if (a.file.empty()) throw UsageError("oracle needs an automaton or --replay");
    auto ta = load_ta(a.file);
    Semantics sem(ta);
    Report report("oracle");
    report.input(a.file);
    const std::size_t np = ta.env.params.size();
    ParamBounds bounds{parse_ints(a.params_min, np, "--params-min"), parse_ints(a.params_max, np, "--params-max")};
    std::vector<Configuration> inits;
    if (!a.init.empty())
        inits = {read_init(sem, a.init)};
    else
        inits = initial_configurations(ta, bounds);

    if (!a.spec.empty()) {
        report.input(a.spec);
        auto spec = load_eltl(a.spec, ta);
        auto hit = oracle_lasso(sem, spec, bounds, a.stem, a.loop, a.max_states);
        report["verdict"] = hit ? "found" : "none";
        report["bounds"] = {{"stem", a.stem}, {"loop", a.loop}, {"params_max", bounds.hi}};
        if (hit) {
            report["init"] = sem.to_json(hit->init);
            report["stem"] = sem.schedule_ids(hit->stem);
            report["loop"] = sem.schedule_ids(hit->loop);
            say(g, "found lasso with stem " + std::to_string(hit->stem.size()) + " and loop " +
                       std::to_string(hit->loop.size()));
        } else {
            say(g, "no lasso within the bounds");
        }
        report.finish(a.json_out);
        return hit ? kPositive : kNegative;
    }
    if (a.location.empty()) throw UsageError("oracle needs --location, --spec or --replay");
    std::size_t target = location_of(ta, a.location);
    auto hit = oracle_search(
        sem, inits, [&](const Configuration& c) { return c.counters[target] > 0; }, a.bound);
    report["verdict"] = hit ? "found" : "none";
    report["bound"] = a.bound;
    if (hit) {
        json w = trace_to_json(sem, hit->init, hit->schedule);
        report["trace"] = w;
        say(g, "covered after " + std::to_string(hit->schedule.size()) + " steps");
    } else {
        say(g, "not covered within " + std::to_string(a.bound) + " steps");
    }
    report.finish(a.json_out);
    return hit ? kPositive : kNegative;
}

// ------------------------------------------------------------------ gen

struct GenArgs {
    std::string kind;
    std::string file;
    std::string variant = "param";
    std::string out;
    std::string spec_out;
};

int run_gen(const Global& g, const GenArgs& a) {
    std::string ta_text;
    if (a.kind == "3sat") {
        auto f = load_dimacs(a.file);
        SatVariant v;
        if (a.variant == "param")
            v = SatVariant::Param;
        else if (a.variant == "nonparam")
            v = SatVariant::NonParam;
        else
            throw UsageError("--variant must be param or nonparam");
        auto ta = gen_3sat(f, v);
        ta_text = print_ta(ta);
        if (v == SatVariant::NonParam && !a.spec_out.empty())
            write_file(a.spec_out, Semantics(ta).to_json(nonparam_initial(ta, f)).dump(2) + "\n");
    } else if (a.kind == "sigma2") {
        auto red = gen_sigma2(load_sigma2(a.file));
        ta_text = print_ta(red.sketch);
        if (!a.spec_out.empty()) write_file(a.spec_out, red.spec_text + "\n");
    } else {
        throw UsageError("generator must be 3sat or sigma2");
    }
    if (a.out.empty())
        std::cout << ta_text;
    else
        write_file(a.out, ta_text);
    (void)g;
    return kPositive;
}

// ------------------------------------------------------------------ bench

struct BenchArgs {
    std::string manifest;
    unsigned jobs = 1;
    std::string csv_out;
    std::string json_out;
};

struct BenchRow {
    std::string name;
    std::string file;
    std::string task;
    std::size_t locations = 0;
    std::size_t rules = 0;
    std::string verdict;
    std::int64_t ms = 0;
    std::string note;
};

// Manifest: {"cases": [{"name", "ta" | "cnf", "spec" | "cover", "init"?, "assume_multiplicative"?}]}
// with paths relative to the manifest.
BenchRow run_case(const json& c, const fs::path& dir, const SolverConfig& solver) {
    BenchRow row;
    row.name = c.value("name", "");
    auto start = std::chrono::steady_clock::now();
    try {
        ThresholdAutomaton ta;
        if (c.contains("ta")) {
            row.file = c.at("ta").get<std::string>();
            ta = load_ta((dir / row.file).string());
        } else if (c.contains("cnf")) {
            row.file = c.at("cnf").get<std::string>();
            ta = gen_3sat(load_dimacs((dir / row.file).string()));
        } else {
            throw UsageError("case needs 'ta' or 'cnf'");
        }
        row.locations = ta.locations.size();
        row.rules = ta.rules.size();
        bool assume = c.value("assume_multiplicative", false);
        if (c.contains("spec")) {
            row.task = "mc " + c.at("spec").get<std::string>();
            CheckOptions opts;
            opts.assume_multiplicative = assume;
            auto res = check_spec(ta, load_eltl((dir / c.at("spec").get<std::string>()).string(), ta), solver, opts);
            row.verdict = to_string(res.kind);
            row.note = res.reason;
        } else if (c.contains("cover")) {
            row.task = "cover " + c.at("cover").get<std::string>();
            CoverQuery q;
            q.location = location_of(ta, c.at("cover"));
            q.assume_multiplicative = assume;
            if (c.contains("init")) q.init = Semantics(ta).from_json(c.at("init"));
            auto res = cover(ta, q, solver);
            row.verdict = res.kind == Verdict::Kind::Sat     ? "coverable"
                          : res.kind == Verdict::Kind::Unsat ? "not-coverable"
                                                             : "unknown";
            row.note = res.reason;
        } else {
            row.task = "parse";
            row.verdict = "ok";
        }
    } catch (const ResourceLimit& e) {
        row.verdict = "unknown";
        row.note = e.what();
    } catch (const std::exception& e) {
        row.verdict = "error";
        row.note = e.what();
    }
    row.ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    return row;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

int run_bench(const Global& g, const BenchArgs& a) {
    json manifest;
    try {
        manifest = json::parse(read_file(a.manifest));
    } catch (const json::exception& e) {
        throw UsageError(a.manifest + ": " + e.what());
    }
    const fs::path dir = fs::path(a.manifest).parent_path();
    const json cases = manifest.value("cases", json::array());
    SolverConfig solver = g.solver_config();
    std::vector<BenchRow> rows(cases.size());
    const unsigned jobs = std::max(1u, a.jobs);
    for (std::size_t begin = 0; begin < cases.size(); begin += jobs) {
        std::vector<std::future<BenchRow>> running;
        for (std::size_t i = begin; i < std::min(cases.size(), begin + jobs); ++i)
            running.push_back(std::async(std::launch::async, run_case, std::cref(cases[i]), dir, solver));
        for (std::size_t i = 0; i < running.size(); ++i) rows[begin + i] = running[i].get();
    }

    std::ostringstream csv;
    csv << "name,file,task,locations,rules,verdict,time_ms\n";
    json out = json::array();
    for (const auto& r : rows) {
        csv << csv_field(r.name) << "," << csv_field(r.file) << "," << csv_field(r.task) << "," << r.locations << ","
            << r.rules << "," << r.verdict << "," << r.ms << "\n";
        json j = {{"name", r.name}, {"file", r.file},       {"task", r.task}, {"locations", r.locations},
                  {"rules", r.rules}, {"verdict", r.verdict}, {"time_ms", r.ms}};
        if (!r.note.empty()) j["note"] = r.note;
        out.push_back(j);
    }
    if (!a.csv_out.empty()) write_file(a.csv_out, csv.str());
    if (!g.quiet) std::cout << csv.str();
    Report report("bench");
    report.input(a.manifest);
    report.solver(solver);
    report["cases"] = out;
    report["note"] = "timings are from this machine and are not comparable with published tool timings";
    report.finish(a.json_out);
    bool any_error = std::any_of(rows.begin(), rows.end(), [](const BenchRow& r) { return r.verdict == "error"; });
    return any_error ? kInputError : kPositive;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parameterized verification and synthesis for threshold automata"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Read options from a key=value file (subcommand keys as [section] or cmd.key)");
    Global g;
    app.add_option("--solver", g.solver, "SMT-LIB solver binary")->envname("TAMC_SOLVER");
    app.add_option("--timeout-ms", g.timeout_ms, "Per-query solver timeout")->envname("TAMC_TIMEOUT_MS");
    app.add_option("--seed", g.seed, "Solver and sampling seed");
    app.add_flag("-q,--quiet", g.quiet, "Only write reports");

    ParseArgs pa;
    auto* parse = app.add_subcommand("parse", "Validate an automaton file");
    parse->add_option("file", pa.file)->required();
    parse->add_flag("--strict", pa.strict, "Reject updates other than 0 and 1");
    parse->add_flag("--print", pa.print, "Print the normalized automaton");

    ReachArgs ca;
    auto* cov = app.add_subcommand("cover", "Can a location become occupied");
    cov->add_option("file", ca.file)->required();
    cov->add_option("--location", ca.location)->required();
    cov->add_option("--init", ca.init, "Initial configuration (JSON file or inline object)");
    cov->add_flag("--param-mode", ca.param_mode, "Any admissible parameters and initial configuration");
    cov->add_option("--bound", ca.bound, "Bound on the schedule length");
    cov->add_flag("--assume-multiplicative", ca.assume_multiplicative);
    cov->add_option("--json", ca.json_out, "Report file");
    cov->add_option("--witness", ca.witness, "Witness file");

    ReachArgs ra;
    auto* reach = app.add_subcommand("reach", "Reachability of a counter pattern");
    reach->add_option("file", ra.file)->required();
    reach->add_option("--init", ra.init, "Initial configuration (JSON file or inline object)");
    reach->add_option("--zero", ra.zero, "Locations that must be empty");
    reach->add_option("--pos", ra.pos, "Locations that must be occupied");
    reach->add_option("--bound", ra.bound, "Bound on the schedule length");
    reach->add_option("--json", ra.json_out, "Report file");
    reach->add_option("--witness", ra.witness, "Witness file");

    McArgs ma;
    auto* mc = app.add_subcommand("mc", "Search for a run satisfying a formula");
    mc->add_option("file", ma.file)->required();
    mc->add_option("--spec", ma.spec)->required();
    mc->add_option("--max-orders", ma.max_orders, "Stop after this many cut-graph orders (0: all)");
    mc->add_option("--jobs", ma.jobs, "Orders checked in parallel");
    mc->add_flag("--assume-multiplicative", ma.assume_multiplicative);
    mc->add_option("--json", ma.json_out, "Report file");
    mc->add_option("--witness", ma.witness, "Witness file");

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "Bounded synthesis of guard coefficients");
    synth->add_option("file", sa.file)->required();
    synth->add_option("--spec", sa.spec, "Formula describing the bad runs")->required();
    synth->add_option("--denom", sa.denom, "Common denominator of candidate values");
    synth->add_option("--num-bound", sa.bound, "Bound on |value|");
    synth->add_option("--budget-s", sa.budget_s, "Wall-clock budget");
    synth->add_option("--recheck", sa.recheck, "Pruned candidates re-verified at the end");
    synth->add_option("--json", sa.json_out, "Report file");

    OracleArgs oa;
    auto* oracle = app.add_subcommand("oracle", "Explicit-state bounded search and witness replay");
    oracle->add_option("file", oa.file);
    oracle->add_option("--replay", oa.replay, "Witness file to replay");
    oracle->add_option("--init", oa.init, "Initial configuration");
    oracle->add_option("--location", oa.location, "Target location");
    oracle->add_option("--spec", oa.spec, "Formula for the lasso search");
    oracle->add_option("--params-max", oa.params_max, "Upper parameter bounds, comma separated");
    oracle->add_option("--params-min", oa.params_min, "Lower parameter bounds, comma separated");
    oracle->add_option("--bound", oa.bound, "Schedule length bound");
    oracle->add_option("--stem", oa.stem, "Stem length bound");
    oracle->add_option("--loop", oa.loop, "Loop length bound");
    oracle->add_option("--max-states", oa.max_states);
    oracle->add_option("--json", oa.json_out, "Report file");

    GenArgs ga;
    auto* gen = app.add_subcommand("gen", "Generate automata from 3-SAT or sigma2 instances");
    gen->add_option("kind", ga.kind, "3sat or sigma2")->required();
    gen->add_option("file", ga.file)->required();
    gen->add_option("--variant", ga.variant, "param or nonparam (3sat)");
    gen->add_option("-o,--output", ga.out, "Automaton file");
    gen->add_option("--spec-out", ga.spec_out, "Formula file (sigma2) or initial configuration (nonparam)");

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "Run a benchmark manifest");
    bench->add_option("manifest", ba.manifest)->required();
    bench->add_option("--jobs", ba.jobs, "Cases run concurrently");
    bench->add_option("--csv", ba.csv_out, "CSV table");
    bench->add_option("--json", ba.json_out, "JSON report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kInputError;
    }

    try {
        if (*parse) return run_parse(g, pa);
        if (*cov) return run_reach(g, ca, true);
        if (*reach) return run_reach(g, ra, false);
        if (*mc) return run_mc(g, ma);
        if (*synth) return run_synth(g, sa);
        if (*oracle) return run_oracle(g, oa);
        if (*gen) return run_gen(g, ga);
        if (*bench) return run_bench(g, ba);
    } catch (const ParseError& e) {
        std::cerr << "error";
        if (e.line) std::cerr << " at line " << e.line << ", column " << e.column;
        std::cerr << ": " << e.what() << "\n";
        return kInputError;
    } catch (const NotMultiplicative& e) {
        std::cerr << "error: " << e.what() << " (use --assume-multiplicative to proceed)\n";
        return kInputError;
    } catch (const ResourceLimit& e) {
        std::cerr << "resource limit: " << e.what() << "\n";
        return kUnknown;
    } catch (const SolverUnavailable& e) {
        std::cerr << "solver unavailable: " << e.what() << "\n";
        return kUnknown;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kUnknown;
    }
    return kInputError;
}
