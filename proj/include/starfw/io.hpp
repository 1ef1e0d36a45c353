#pragma once

#include <starfw/errors.hpp>
#include <starfw/geometry.hpp>
#include <starfw/objectives.hpp>
#include <starfw/solver.hpp>
#include <starfw/verify.hpp>

#include <nlohmann/json.hpp>

#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace starfw {

using json = nlohmann::json;

// =======================================================================
// JSON field access with key-path diagnostics
// =======================================================================

namespace io_detail {

inline const json& require(const json& j, const std::string& key, const std::string& path)
{
    if (!j.is_object()) throw SpecError(path + ": expected a JSON object");
    auto it = j.find(key);
    if (it == j.end()) throw SpecError(path + "." + key + ": missing required key");
    return *it;
}

inline double to_double(const json& j, const std::string& path)
{
    if (!j.is_number()) throw SpecError(path + ": expected a number");
    return j.get<double>();
}

inline long to_long(const json& j, const std::string& path)
{
    if (!j.is_number_integer()) throw SpecError(path + ": expected an integer");
    return j.get<long>();
}

inline std::string to_string(const json& j, const std::string& path)
{
    if (!j.is_string()) throw SpecError(path + ": expected a string");
    return j.get<std::string>();
}

inline Vector to_vector(const json& j, const std::string& path)
{
    if (!j.is_array()) throw SpecError(path + ": expected an array of numbers");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = to_double(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

inline Matrix to_matrix(const json& j, const std::string& path)
{
    if (!j.is_array() || j.empty()) throw SpecError(path + ": expected a non-empty array of rows");
    const std::size_t rows = j.size();
    Vector first = to_vector(j[0], path + "[0]");
    Matrix m(static_cast<Index>(rows), first.size());
    for (std::size_t r = 0; r < rows; ++r) {
        Vector row = to_vector(j[r], path + "[" + std::to_string(r) + "]");
        if (row.size() != first.size()) throw SpecError(path + "[" + std::to_string(r) + "]: ragged row");
        m.row(static_cast<Index>(r)) = row.transpose();
    }
    return m;
}

inline json from_vector(const Vector& v)
{
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline json from_optional(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<double> optional_double(const json& j, const std::string& key, const std::string& path)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return to_double(*it, path + "." + key);
}

template <class Fn>
auto wrap_domain(const std::string& path, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const SpecError&) {
        throw;
    } catch (const CapabilityError&) {
        throw;
    } catch (const Error& e) {
        throw SpecError(path + ": " + e.what());
    }
}

} // namespace io_detail

// =======================================================================
// Sets and objectives
// =======================================================================

inline SetPtr set_from_json(const json& j, const std::string& path = "set")
{
    using namespace io_detail;
    const std::string type = to_string(require(j, "type", path), path + ".type");
    return wrap_domain(path, [&]() -> SetPtr {
        if (type == "simplex") {
            return std::make_shared<ProbabilitySimplex>(to_long(require(j, "n", path), path + ".n"));
        }
        if (type == "box") {
            return std::make_shared<BoxSet>(to_vector(require(j, "lower", path), path + ".lower"),
                                            to_vector(require(j, "upper", path), path + ".upper"));
        }
        if (type == "l1" || type == "l2") {
            double r = to_double(require(j, "radius", path), path + ".radius");
            Vector c = to_vector(require(j, "center", path), path + ".center");
            if (type == "l1") return std::make_shared<L1Ball>(r, std::move(c));
            return std::make_shared<L2Ball>(r, std::move(c));
        }
        if (type == "polytope") {
            Matrix rows = to_matrix(require(j, "vertices", path), path + ".vertices");
            return std::make_shared<VertexPolytope>(Matrix(rows.transpose()));
        }
        throw SpecError(path + ".type: unknown set type '" + type + "'");
    });
}

inline UnionMember member_from_json(const json& j, const std::string& path)
{
    using namespace io_detail;
    const std::string type = to_string(require(j, "type", path), path + ".type");
    if (type == "box") {
        BoxMember m{to_vector(require(j, "lower", path), path + ".lower"),
                    to_vector(require(j, "upper", path), path + ".upper")};
        if (m.lower.size() != m.upper.size() || (m.lower.array() > m.upper.array()).any()) {
            throw SpecError(path + ": box bounds must have equal size and lower <= upper");
        }
        return m;
    }
    if (type == "ball") {
        BallMember m{to_vector(require(j, "center", path), path + ".center"),
                     to_double(require(j, "radius", path), path + ".radius")};
        if (!(m.radius >= 0.0)) throw SpecError(path + ".radius: must be >= 0");
        return m;
    }
    if (type == "segment") {
        SegmentMember m{to_vector(require(j, "a", path), path + ".a"), to_vector(require(j, "b", path), path + ".b")};
        if (m.a.size() != m.b.size()) throw SpecError(path + ": segment endpoints differ in dimension");
        return m;
    }
    throw CapabilityError(path + ".type: unsupported union member shape '" + type + "'");
}

inline ObjectivePtr objective_from_json(const json& j, const std::string& path = "objective")
{
    using namespace io_detail;
    const std::string type = to_string(require(j, "type", path), path + ".type");
    return wrap_domain(path, [&]() -> ObjectivePtr {
        if (type == "quadratic") {
            Matrix q = to_matrix(require(j, "Q", path), path + ".Q");
            Vector b = j.contains("b") ? to_vector(j["b"], path + ".b") : Vector::Zero(q.rows());
            double c = j.contains("c") ? to_double(j["c"], path + ".c") : 0.0;
            std::optional<Vector> xs;
            if (j.contains("x_star") && !j["x_star"].is_null()) xs = to_vector(j["x_star"], path + ".x_star");
            return std::make_shared<Quadratic>(std::move(q), std::move(b), c, std::move(xs),
                                               optional_double(j, "f_star", path));
        }
        if (type == "quartic_cross") return std::make_shared<QuarticCross>();
        if (type == "absexp") return std::make_shared<AbsExp1D>();
        if (type == "pnorm") {
            long n = j.contains("n") ? to_long(j["n"], path + ".n") : 2;
            return std::make_shared<HomogeneousPower>(
                HomogeneousPower::lp(to_double(require(j, "p", path), path + ".p"), n));
        }
        if (type == "norm_power") {
            long n = j.contains("n") ? to_long(j["n"], path + ".n") : 2;
            return std::make_shared<HomogeneousPower>(
                HomogeneousPower::norm_power(to_double(require(j, "r", path), path + ".r"), n));
        }
        if (type == "star_distance") {
            const json& pieces = require(j, "pieces", path);
            if (!pieces.is_array()) throw SpecError(path + ".pieces: expected an array");
            std::vector<WeightedPiece> ws;
            for (std::size_t i = 0; i < pieces.size(); ++i) {
                const std::string pp = path + ".pieces[" + std::to_string(i) + "]";
                WeightedPiece wp;
                wp.weight = to_double(require(pieces[i], "weight", pp), pp + ".weight");
                const json& members = require(pieces[i], "members", pp);
                if (!members.is_array()) throw SpecError(pp + ".members: expected an array");
                for (std::size_t m = 0; m < members.size(); ++m) {
                    wp.set.members.push_back(member_from_json(members[m], pp + ".members[" + std::to_string(m) + "]"));
                }
                ws.push_back(std::move(wp));
            }
            const json& cps = require(j, "common_points", path);
            if (!cps.is_array()) throw SpecError(path + ".common_points: expected an array");
            std::vector<Vector> common;
            for (std::size_t i = 0; i < cps.size(); ++i) {
                common.push_back(to_vector(cps[i], path + ".common_points[" + std::to_string(i) + "]"));
            }
            return std::make_shared<StarShapedDistanceSum>(std::move(ws), std::move(common));
        }
        throw SpecError(path + ".type: unknown objective type '" + type + "'");
    });
}

// =======================================================================
// Solver configuration
// =======================================================================

inline json config_to_json(const SolverConfig& cfg)
{
    json j;
    j["strategy"] = cfg.strategy.name;
    j["max_iters"] = cfg.max_iters;
    j["gap_tol"] = cfg.gap_tol;
    j["feasibility_tol"] = cfg.feasibility_tol;
    j["zeta"] = cfg.strategy.zeta;
    j["beta"] = cfg.strategy.beta;
    j["l0"] = cfg.strategy.l0;
    j["l"] = io_detail::from_optional(cfg.strategy.l);
    j["enforce_floor"] = cfg.strategy.enforce_floor;
    j["max_backtracks"] = cfg.strategy.max_backtracks;
    j["max_doublings"] = cfg.strategy.max_doublings;
    j["seed"] = cfg.seed;
    j["x0"] = cfg.x0 ? io_detail::from_vector(*cfg.x0) : json(nullptr);
    return j;
}

/// Overlays the keys present in `j` on top of `base`. Unknown keys are rejected.
inline SolverConfig config_from_json(const json& j, SolverConfig base = {}, const std::string& path = "config")
{
    using namespace io_detail;
    if (!j.is_object()) throw SpecError(path + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        const json& v = it.value();
        const std::string kp = path + "." + key;
        if (key == "strategy") {
            base.strategy.name = to_string(v, kp);
            if (!is_strategy_name(base.strategy.name)) throw SpecError(kp + ": unknown strategy '" + base.strategy.name + "'");
        } else if (key == "max_iters") base.max_iters = to_long(v, kp);
        else if (key == "gap_tol") base.gap_tol = to_double(v, kp);
        else if (key == "feasibility_tol") base.feasibility_tol = to_double(v, kp);
        else if (key == "zeta") base.strategy.zeta = to_double(v, kp);
        else if (key == "beta") base.strategy.beta = to_double(v, kp);
        else if (key == "l0") base.strategy.l0 = to_double(v, kp);
        else if (key == "l") base.strategy.l = v.is_null() ? std::nullopt : std::optional<double>(to_double(v, kp));
        else if (key == "enforce_floor") {
            if (!v.is_boolean()) throw SpecError(kp + ": expected a boolean");
            base.strategy.enforce_floor = v.get<bool>();
        } else if (key == "max_backtracks") base.strategy.max_backtracks = static_cast<int>(to_long(v, kp));
        else if (key == "max_doublings") base.strategy.max_doublings = static_cast<int>(to_long(v, kp));
        else if (key == "seed") {
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long>() >= 0)) {
                throw SpecError(kp + ": expected a non-negative integer");
            }
            base.seed = v.get<std::uint64_t>();
        } else if (key == "x0") base.x0 = v.is_null() ? std::nullopt : std::optional<Vector>(to_vector(v, kp));
        else throw SpecError(kp + ": unknown configuration key");
    }
    if (base.max_iters < 1) throw SpecError(path + ".max_iters: must be >= 1");
    if (!(base.gap_tol >= 0.0)) throw SpecError(path + ".gap_tol: must be >= 0");
    if (!(base.feasibility_tol >= 0.0)) throw SpecError(path + ".feasibility_tol: must be >= 0");
    if (!(base.strategy.zeta > 0.0 && base.strategy.zeta < 1.0)) throw SpecError(path + ".zeta: must lie in (0,1)");
    if (!(base.strategy.beta > 0.0 && base.strategy.beta < 1.0)) throw SpecError(path + ".beta: must lie in (0,1)");
    if (!(base.strategy.l0 > 0.0)) throw SpecError(path + ".l0: must be > 0");
    if (base.strategy.l && !(*base.strategy.l > 0.0)) throw SpecError(path + ".l: must be > 0");
    return base;
}

// =======================================================================
// Trace CSV and report JSON
// =======================================================================

/// 17 significant digits: doubles survive a text round trip unchanged.
inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline constexpr const char* kTraceHeader = "k,f,gap,lambda,L_est,fevals_iter,fevals_cum";

inline void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& records)
{
    os << kTraceHeader << '\n';
    for (const auto& r : records) {
        os << r.k << ',' << format_double(r.f) << ',' << format_double(r.gap) << ','
           << (r.lambda ? format_double(*r.lambda) : "") << ','
           << (r.l_estimate ? format_double(*r.l_estimate) : "") << ',' << r.fevals_iter << ',' << r.fevals_cum
           << '\n';
    }
}

inline std::vector<IterationRecord> read_trace_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != kTraceHeader) throw SpecError("trace.csv: unexpected header");
    std::vector<IterationRecord> out;
    long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cols.push_back(cell);
        if (line.back() == ',') cols.emplace_back();
        if (cols.size() != 7) throw SpecError("trace.csv line " + std::to_string(lineno) + ": expected 7 columns");
        try {
            IterationRecord r;
            r.k = std::stol(cols[0]);
            r.f = std::stod(cols[1]);
            r.gap = std::stod(cols[2]);
            if (!cols[3].empty()) r.lambda = std::stod(cols[3]);
            if (!cols[4].empty()) r.l_estimate = std::stod(cols[4]);
            r.fevals_iter = std::stoi(cols[5]);
            r.fevals_cum = std::stol(cols[6]);
            out.push_back(r);
        } catch (const std::logic_error&) {
            throw SpecError("trace.csv line " + std::to_string(lineno) + ": malformed number");
        }
    }
    return out;
}

inline json records_to_json(const std::vector<IterationRecord>& records)
{
    json a = json::array();
    for (const auto& r : records) {
        a.push_back({{"k", r.k},
                     {"f", r.f},
                     {"gap", r.gap},
                     {"lambda", io_detail::from_optional(r.lambda)},
                     {"L_est", io_detail::from_optional(r.l_estimate)},
                     {"fevals_iter", r.fevals_iter},
                     {"fevals_cum", r.fevals_cum}});
    }
    return a;
}

/// Wall time is left out unless asked for, so written reports stay byte-reproducible.
inline json report_to_json(const RunReport& rep, bool include_timing = false)
{
    json j;
    j["strategy"] = rep.strategy();
    j["config"] = config_to_json(rep.config);
    j["termination"] = to_string(rep.termination);
    if (!rep.failure_message.empty()) j["failure_message"] = rep.failure_message;
    j["final_x"] = io_detail::from_vector(rep.final_x);
    if (include_timing) j["wall_time_ms"] = rep.wall_time_ms;
    j["records"] = records_to_json(rep.records);
    return j;
}

inline RunReport report_from_json(const json& j)
{
    using namespace io_detail;
    const std::string path = "report";
    RunReport rep;
    rep.config = config_from_json(require(j, "config", path), {}, path + ".config");
    rep.termination = termination_from_string(to_string(require(j, "termination", path), path + ".termination"));
    if (j.contains("failure_message")) rep.failure_message = to_string(j["failure_message"], path + ".failure_message");
    rep.final_x = to_vector(require(j, "final_x", path), path + ".final_x");
    if (j.contains("wall_time_ms")) rep.wall_time_ms = to_double(j["wall_time_ms"], path + ".wall_time_ms");
    const json& recs = require(j, "records", path);
    if (!recs.is_array() || recs.empty()) throw SpecError(path + ".records: expected a non-empty array");
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const std::string rp = path + ".records[" + std::to_string(i) + "]";
        IterationRecord r;
        r.k = to_long(require(recs[i], "k", rp), rp + ".k");
        if (r.k != static_cast<long>(i)) throw SpecError(rp + ".k: records must be indexed 0,1,2,...");
        r.f = to_double(require(recs[i], "f", rp), rp + ".f");
        r.gap = to_double(require(recs[i], "gap", rp), rp + ".gap");
        r.lambda = optional_double(recs[i], "lambda", rp);
        r.l_estimate = optional_double(recs[i], "L_est", rp);
        r.fevals_iter = static_cast<int>(to_long(require(recs[i], "fevals_iter", rp), rp + ".fevals_iter"));
        r.fevals_cum = to_long(require(recs[i], "fevals_cum", rp), rp + ".fevals_cum");
        rep.records.push_back(r);
    }
    return rep;
}

inline json audit_to_json(const BoundAuditReport& a, const std::string& details_csv_path)
{
    json j;
    j["name"] = a.name;
    j["passed"] = a.passed;
    j["first_violation_k"] = a.first_violation_k ? json(*a.first_violation_k) : json(nullptr);
    j["details_csv_path"] = details_csv_path;
    if (!a.note.empty()) j["note"] = a.note;
    return j;
}

inline void write_audit_csv(std::ostream& os, const BoundAuditReport& a)
{
    os << "k,observed,lower,upper\n";
    for (const auto& r : a.rows) {
        os << r.k << ',' << format_double(r.observed) << ','
           << (std::isfinite(r.lower) ? format_double(r.lower) : "") << ','
           << (std::isfinite(r.upper) ? format_double(r.upper) : "") << '\n';
    }
}

} // namespace starfw
