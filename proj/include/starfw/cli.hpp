#pragma once

#include <starfw/io.hpp>
#include <starfw/solver.hpp>
#include <starfw/verify.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace starfw::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kFailure = 2 };

// =======================================================================
// Problem and experiment specs
// =======================================================================

struct ProblemSpec {
    std::string name;
    json objective_json;
    json set_json;
    ObjectivePtr objective;
    SetPtr set;
    std::optional<Vector> x_star;
    std::optional<double> f_star;
    json config_json;   // per-problem overrides (bench suites)
};

struct ExperimentSpec {
    ProblemSpec problem;
    std::vector<std::string> strategies;
    SolverConfig config;
    std::string out_dir = "starfw_out";
    std::optional<std::uint64_t> seed;
};

inline json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw SpecError(path + ": cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SpecError(path + ": invalid JSON (" + std::string(e.what()) + ")");
    }
}

/*
 * Keys: objective, set, optional name/x_star/f_star/config. f* resolves as
 * explicit f_star, else f(x_star), else the objective's declared optimum when
 * its minimizer lies in the set.
 */
inline ProblemSpec parse_problem(const json& j, const std::string& path)
{
    using namespace io_detail;
    ProblemSpec p;
    if (!j.is_object()) throw SpecError(path + ": expected a JSON object");
    p.name = j.contains("name") ? to_string(j["name"], path + ".name") : "problem";
    p.objective_json = require(j, "objective", path);
    p.set_json = require(j, "set", path);
    p.objective = objective_from_json(p.objective_json, path + ".objective");
    p.set = set_from_json(p.set_json, path + ".set");
    if (p.objective->dimension() != p.set->dimension()) {
        throw SpecError(path + ".set: dimension " + std::to_string(p.set->dimension()) +
                        " does not match objective dimension " + std::to_string(p.objective->dimension()));
    }
    if (j.contains("x_star") && !j["x_star"].is_null()) {
        p.x_star = to_vector(j["x_star"], path + ".x_star");
        if (p.x_star->size() != p.set->dimension()) throw SpecError(path + ".x_star: dimension mismatch");
    }
    p.f_star = optional_double(j, "f_star", path);
    if (!p.f_star && p.x_star) p.f_star = p.objective->value(*p.x_star);
    if (!p.f_star) {
        if (auto xs = p.objective->minimizer(); xs && p.set->contains(*xs, 1e-9)) p.f_star = p.objective->optimal_value();
    }
    if (j.contains("config")) p.config_json = j["config"];
    return p;
}

inline std::optional<std::uint64_t> env_seed()
{
    const char* s = std::getenv("STARFW_SEED");
    if (!s || !*s) return std::nullopt;
    try {
        return static_cast<std::uint64_t>(std::stoull(s));
    } catch (const std::exception&) {
        throw SpecError("STARFW_SEED: expected a non-negative integer");
    }
}

inline std::vector<std::string> parse_strategies(const json& j, const std::string& path)
{
    std::vector<std::string> out;
    if (j.is_string()) {
        out.push_back(j.get<std::string>());
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) out.push_back(io_detail::to_string(j[i], path + "[" + std::to_string(i) + "]"));
    } else {
        throw SpecError(path + ": expected a string or an array of strings");
    }
    for (const auto& s : out) {
        if (!is_strategy_name(s)) throw SpecError(path + ": unknown strategy '" + s + "'");
    }
    return out;
}

inline ExperimentSpec parse_experiment(const json& j)
{
    static const std::vector<std::string> known = {"name", "objective", "set", "x_star", "f_star", "config",
                                                   "strategies", "strategy", "out", "seed"};
    if (!j.is_object()) throw SpecError("spec: expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
            throw SpecError("spec." + it.key() + ": unknown key");
        }
    }
    ExperimentSpec e;
    e.problem = parse_problem(j, "spec");
    if (j.contains("strategies")) e.strategies = parse_strategies(j["strategies"], "spec.strategies");
    else if (j.contains("strategy")) e.strategies = parse_strategies(j["strategy"], "spec.strategy");
    else e.strategies = {"armijo", "adaptive", "known-l", "diminishing"};
    if (e.strategies.empty()) throw SpecError("spec.strategies: at least one strategy is required");
    if (!e.problem.config_json.is_null()) {
        e.config = config_from_json(e.problem.config_json, {}, "spec.config");
        if (e.problem.config_json.contains("seed")) e.seed = e.config.seed;
    }
    if (j.contains("out")) e.out_dir = io_detail::to_string(j["out"], "spec.out");
    if (j.contains("seed")) {
        long s = io_detail::to_long(j["seed"], "spec.seed");
        if (s < 0) throw SpecError("spec.seed: must be >= 0");
        e.seed = static_cast<std::uint64_t>(s);
    }
    return e;
}

inline json problem_to_json(const ProblemSpec& p)
{
    json j;
    j["name"] = p.name;
    j["objective"] = p.objective_json;
    j["set"] = p.set_json;
    j["f_star"] = io_detail::from_optional(p.f_star);
    j["x_star"] = p.x_star ? io_detail::from_vector(*p.x_star) : json(nullptr);
    return j;
}

inline void write_text(const fs::path& path, const std::string& text)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw Error(path.string() + ": write failed");
}

inline std::string trace_csv_string(const RunReport& rep)
{
    std::ostringstream os;
    write_trace_csv(os, rep.records);
    return os.str();
}

inline std::string summary_line(const RunReport& rep)
{
    const auto& last = rep.records.back();
    std::ostringstream os;
    os << rep.strategy() << ": f=" << format_double(last.f) << " gap=" << format_double(std::abs(last.gap))
       << " iters=" << last.k << " fevals=" << last.fevals_cum << " termination=" << to_string(rep.termination);
    char ms[32];
    std::snprintf(ms, sizeof(ms), "%.1f", rep.wall_time_ms);
    os << " time_ms=" << ms;
    return os.str();
}

// =======================================================================
// run
// =======================================================================

struct RunOptions {
    std::string spec_path;
    std::optional<std::string> strategy;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

inline int cmd_run(const RunOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    ExperimentSpec spec;
    std::uint64_t seed = 0;
    try {
        spec = parse_experiment(read_json_file(opts.spec_path));
        if (opts.strategy) {
            if (!is_strategy_name(*opts.strategy)) throw SpecError("--strategy: unknown strategy '" + *opts.strategy + "'");
            spec.strategies = {*opts.strategy};
        }
        if (opts.out_dir) spec.out_dir = *opts.out_dir;
        if (opts.seed) seed = *opts.seed;
        else if (spec.seed) seed = *spec.seed;
        else if (auto s = env_seed()) seed = *s;
        if (spec.problem.objective->checker_only()) throw SpecError("objective is checker-only");
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    int status = kOk;
    for (const auto& strategy : spec.strategies) {
        SolverConfig cfg = spec.config;
        cfg.strategy.name = strategy;
        cfg.seed = seed;
        try {
            RunReport rep = solve(*spec.problem.objective, *spec.problem.set, cfg);
            const fs::path dir = fs::path(spec.out_dir) / strategy;
            write_text(dir / "trace.csv", trace_csv_string(rep));
            json j = report_to_json(rep);
            j["problem"] = problem_to_json(spec.problem);
            write_text(dir / "report.json", j.dump(2) + "\n");
            out << summary_line(rep) << '\n';
            if (rep.termination == Termination::LineSearchFailure) {
                err << strategy << ": " << rep.failure_message << '\n';
                status = kFailure;
            }
        } catch (const SpecError& e) {
            err << "error: " << e.what() << '\n';
            return kUsage;
        } catch (const std::exception& e) {
            err << strategy << ": solver failure: " << e.what() << '\n';
            status = kFailure;
        }
    }
    return status;
}

// =======================================================================
// audit
// =======================================================================

struct AuditOptions {
    std::string report_path;
    bool allow_estimate = false;
    double tol_rel = 1e-9;
    long samples = 10000;
    std::uint64_t seed = 12345;
};

inline int cmd_audit(const AuditOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    json j;
    RunReport rep;
    ProblemSpec problem;
    try {
        j = read_json_file(opts.report_path);
        rep = report_from_json(j);
        problem = parse_problem(io_detail::require(j, "problem", "report"), "report.problem");
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    std::vector<BoundAuditReport> audits;
    try {
        ReplayOptions ro;
        ro.allow_estimate = opts.allow_estimate;
        ro.samples = opts.samples;
        ro.seed = opts.seed;
        ro.f_star = problem.f_star;
        BoundConstants c = replay_bound_inputs(rep, *problem.objective, *problem.set, ro);
        audits = run_audits(rep, c, opts.tol_rel);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    const fs::path dir = fs::path(opts.report_path).parent_path();
    json arr = json::array();
    bool all_passed = true;
    for (const auto& a : audits) {
        const fs::path csv = dir / ("audit_" + a.name + ".csv");
        std::ostringstream os;
        write_audit_csv(os, a);
        write_text(csv, os.str());
        arr.push_back(audit_to_json(a, csv.string()));
        if (a.passed) {
            out << a.name << ": PASS\n";
        } else {
            all_passed = false;
            out << a.name << ": FAIL (first_violation_k=" << *a.first_violation_k << ")\n";
        }
        if (!a.note.empty()) out << "  note: " << a.note << '\n';
    }
    j["audits"] = arr;
    write_text(opts.report_path, j.dump(2) + "\n");
    return all_passed ? kOk : kFailure;
}

// =======================================================================
// check
// =======================================================================

struct CheckOptions {
    std::string spec_path;
    long samples = 10000;
    long lambdas = 101;
    double tol = 1e-9;
    std::uint64_t seed = 0;
    bool star = true;
};

inline std::string vec_str(const Vector& v)
{
    std::string s = "(";
    for (Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s + ")";
}

inline int cmd_check(const CheckOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    ProblemSpec p;
    try {
        p = parse_problem(read_json_file(opts.spec_path), "spec");
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    const Objective& f = *p.objective;
    const FeasibleSet& set = *p.set;

    std::optional<Vector> x_star = p.x_star;
    if (!x_star) {
        if (auto xs = f.minimizer(); xs && set.contains(*xs, 1e-9)) x_star = xs;
    }
    if (opts.star && !x_star) {
        err << "error: star-convexity check requested but no minimizer is declared (x_star)\n";
        return kUsage;
    }

    out << "objective: " << f.type_name() << (f.checker_only() ? " (checker-only)" : "") << ", set: "
        << set.type_name() << ", n=" << f.dimension() << '\n';

    GradientCheckReport gc = gradient_check(f, set, 100, 1e-6, opts.seed);
    out << "gradient: max relative finite-difference error " << format_double(gc.max_rel_error) << " over "
        << (gc.n_points - gc.n_skipped) << " points";
    if (gc.n_skipped) out << " (" << gc.n_skipped << " singular points skipped)";
    out << '\n';

    double l_est = estimate_lipschitz(f, set, opts.samples, opts.seed);
    out << "lipschitz: sampled estimate " << format_double(l_est);
    if (auto l = f.lipschitz_on(set)) out << ", trusted " << format_double(*l);
    out << '\n';

    if (auto w = find_convexity_violation(f, set, opts.samples, opts.seed)) {
        out << "convex: witness x=" << vec_str(w->x) << " y=" << vec_str(w->y)
            << " violation=" << format_double(w->violation) << '\n';
    } else {
        out << "convex: no witness in " << opts.samples << " sampled pairs\n";
    }

    int status = kOk;
    if (opts.star) {
        StarConvexityReport sr;
        try {
            sr = check_star_convexity(f, set, *x_star, opts.samples, opts.lambdas, opts.tol, opts.seed);
        } catch (const Error& e) {
            err << "error: " << e.what() << '\n';
            return kUsage;
        }
        if (sr.passed()) {
            out << "star-convex: PASS (" << sr.n_samples << " samples x " << sr.n_lambdas
                << " lambdas, max lhs-rhs " << format_double(sr.max_violation) << ")\n";
        } else {
            out << "star-convex: FAIL (" << sr.n_violations << " violations, max lhs-rhs "
                << format_double(sr.max_violation) << ", " << sr.n_below_minimum << " samples below f(x*))\n";
            for (std::size_t i = 0; i < std::min<std::size_t>(sr.below_minimum.size(), 5); ++i) {
                const Vector& x = sr.below_minimum[i];
                out << "  x=" << vec_str(x) << " f(x)=" << format_double(f.value(x)) << " < f(x*)="
                    << format_double(f.value(*x_star)) << '\n';
            }
            for (std::size_t i = 0; i < std::min<std::size_t>(sr.violations.size(), 5); ++i) {
                const auto& v = sr.violations[i];
                out << "  x=" << vec_str(v.x) << " lambda=" << format_double(v.lambda) << " lhs="
                    << format_double(v.lhs) << " rhs=" << format_double(v.rhs) << '\n';
            }
            status = kUsage;
        }
        try {
            GradientInequalityReport gi =
                check_star_gradient_inequality(f, set, *x_star, opts.samples, opts.tol, opts.seed);
            out << "gradient inequality f*-f(x) >= grad'(x*-x): " << (gi.passed() ? "PASS" : "FAIL") << " ("
                << gi.n_violations << " violations)\n";
        } catch (const SingularityError& e) {
            out << "gradient inequality: skipped (" << e.what() << ")\n";
        }
    }
    return status;
}

// =======================================================================
// bench
// =======================================================================

struct BenchOptions {
    std::string suite_path;
    std::optional<int> workers;
    std::optional<std::string> out_dir;
};

struct BenchRow {
    std::string problem;
    std::string strategy;
    std::optional<long> k_to_tol;
    double final_gap = std::numeric_limits<double>::quiet_NaN();
    long fevals = 0;
    double slope = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
    std::string audits = "n/a";
};

/// Least-squares slope of log(f - f*) against log k over k in [K/10, K].
inline double rate_slope(const std::vector<IterationRecord>& records, double f_star)
{
    if (records.empty()) return std::numeric_limits<double>::quiet_NaN();
    const long last = records.back().k;
    const long first = std::max<long>(1, last / 10);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long n = 0;
    for (const auto& r : records) {
        if (r.k < first) continue;
        const double excess = r.f - f_star;
        if (!(excess > 0.0)) continue;
        const double x = std::log(static_cast<double>(r.k));
        const double y = std::log(excess);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    if (n < 2 || denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (static_cast<double>(n) * sxy - sx * sy) / denom;
}

inline int cmd_bench(const BenchOptions& opts, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    std::vector<ProblemSpec> problems;
    std::vector<std::string> strategies;
    SolverConfig base;
    std::string out_dir = "starfw_bench";
    int workers = 1;
    double k_tol = 1e-6;
    try {
        json j = read_json_file(opts.suite_path);
        if (!j.is_object()) throw SpecError("suite: expected a JSON object");
        const json& pj = io_detail::require(j, "problems", "suite");
        if (!pj.is_array() || pj.empty()) throw SpecError("suite.problems: expected a non-empty array");
        for (std::size_t i = 0; i < pj.size(); ++i) problems.push_back(parse_problem(pj[i], "suite.problems[" + std::to_string(i) + "]"));
        strategies = parse_strategies(io_detail::require(j, "strategies", "suite"), "suite.strategies");
        if (strategies.empty()) throw SpecError("suite.strategies: at least one strategy is required");
        if (j.contains("config")) base = config_from_json(j["config"], {}, "suite.config");
        if (j.contains("seed")) base.seed = static_cast<std::uint64_t>(io_detail::to_long(j["seed"], "suite.seed"));
        else if (auto s = env_seed()) base.seed = *s;
        if (j.contains("out")) out_dir = io_detail::to_string(j["out"], "suite.out");
        if (j.contains("workers")) workers = static_cast<int>(io_detail::to_long(j["workers"], "suite.workers"));
        if (j.contains("k_tol")) k_tol = io_detail::to_double(j["k_tol"], "suite.k_tol");
        for (const auto& p : problems) {
            if (p.objective->checker_only()) throw SpecError("suite.problems." + p.name + ": objective is checker-only");
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    if (opts.workers) workers = *opts.workers;
    if (opts.out_dir) out_dir = *opts.out_dir;
    workers = std::max(1, workers);

    std::vector<BenchRow> rows(problems.size() * strategies.size());
    auto run_one = [&](std::size_t idx) {
        const ProblemSpec& p = problems[idx / strategies.size()];
        const std::string& s = strategies[idx % strategies.size()];
        BenchRow& row = rows[idx];
        row.problem = p.name;
        row.strategy = s;
        try {
            SolverConfig cfg = p.config_json.is_null() ? base : config_from_json(p.config_json, base, "suite.problems." + p.name + ".config");
            cfg.strategy.name = s;
            RunReport rep = solve(*p.objective, *p.set, cfg);
            for (const auto& r : rep.records) {
                if (std::abs(r.gap) <= k_tol) {
                    row.k_to_tol = r.k;
                    break;
                }
            }
            row.final_gap = std::abs(rep.records.back().gap);
            row.fevals = rep.records.back().fevals_cum;
            if (p.f_star) row.slope = rate_slope(rep.records, *p.f_star);
            if (rep.termination == Termination::LineSearchFailure) row.status = "line_search_failure";
            write_text(fs::path(out_dir) / p.name / s / "trace.csv", trace_csv_string(rep));
            if (p.f_star) {
                ReplayOptions ro;
                ro.allow_estimate = true;
                ro.f_star = p.f_star;
                BoundConstants c = replay_bound_inputs(rep, *p.objective, *p.set, ro);
                bool ok = true;
                for (const auto& a : run_audits(rep, c)) ok = ok && a.passed;
                row.audits = ok ? "true" : "false";
            }
        } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
        }
    };

    if (workers == 1) {
        for (std::size_t i = 0; i < rows.size(); ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < rows.size(); i = next++) run_one(i);
            });
        }
        for (auto& t : pool) t.join();
    }

    std::ostringstream csv;
    csv << "problem,strategy,k_to_tol,final_gap,fevals,slope,status,audits_passed\n";
    bool failed = false;
    for (const auto& r : rows) {
        std::string status = r.status;
        for (auto& ch : status) {
            if (ch == ',' || ch == '\n') ch = ';';
        }
        csv << r.problem << ',' << r.strategy << ',' << (r.k_to_tol ? std::to_string(*r.k_to_tol) : "") << ','
            << (std::isnan(r.final_gap) ? "" : format_double(r.final_gap)) << ',' << r.fevals << ','
            << (std::isnan(r.slope) ? "" : format_double(r.slope)) << ',' << status << ',' << r.audits << '\n';
        out << r.problem << " / " << r.strategy << ": " << status << ", final_gap="
            << (std::isnan(r.final_gap) ? std::string("-") : format_double(r.final_gap))
            << ", slope=" << (std::isnan(r.slope) ? std::string("-") : format_double(r.slope))
            << ", audits=" << r.audits << '\n';
        if (r.status != "ok") failed = true;
    }
    try {
        write_text(fs::path(out_dir) / "summary.csv", csv.str());
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return failed ? kFailure : kOk;
}

} // namespace starfw::cli
