#pragma once

// Pipelines behind the command line: each add_* runs one group of checks and appends its
// verdicts and data to a Report.

#include "bounds.hpp"
#include "composition.hpp"
#include "cross_ratio.hpp"
#include "discs.hpp"
#include "exact.hpp"
#include "flow.hpp"
#include "branch_model.hpp"
#include "normalized.hpp"
#include "petal.hpp"
#include "profile.hpp"
#include "report.hpp"
#include "svg.hpp"

#include <map>
#include <memory>
#include <optional>
#include <random>

namespace fiblab {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    std::string command;
    int degree = 16;
    int depth = 10;
    unsigned bits = 0; // 0: chosen from the depth
    unsigned long seed = 1;
    std::optional<std::pair<std::string, std::string>> bracket;
    long sweep = 1000;
    std::string mode;
    int levels = 8;
    std::string json_out, render_out, csv_out;

    void validate() const
    {
        static const std::vector<std::string> commands{"find-parameter", "points",  "bounds", "distortion",
                                                       "asymptotics",    "discs",   "suite"};
        if (std::find(commands.begin(), commands.end(), command) == commands.end())
            throw ConfigError("unknown command: " + command);
        if (degree < 2 || degree % 2 != 0)
            throw ConfigError("--degree must be even and >= 2");
        if (depth < 2 || depth > 40)
            throw ConfigError("--depth must be in [2, 40]");
        if (bits != 0 && bits < 53)
            throw ConfigError("precision must be >= 53 bits");
        if (sweep < 1)
            throw ConfigError("--sweep must be positive");
        if (levels < 1 || levels > 30)
            throw ConfigError("--levels must be in [1, 30]");
        if (command == "asymptotics" && mode != "flow" && mode != "gamma" && mode != "comdv" && mode != "miracle2")
            throw ConfigError("--mode must be one of flow, gamma, comdv, miracle2");
        if (bracket) {
            try {
                Real a(bracket->first), b(bracket->second);
                if (!(a < b) && !(b < a))
                    throw ConfigError("--bracket endpoints must differ");
            } catch (const std::runtime_error&) {
                throw ConfigError("--bracket needs two decimal numbers a,b");
            }
        }
    }

    Json to_json() const
    {
        Json j;
        j["command"] = command;
        j["degree"] = degree;
        j["depth"] = depth;
        j["bits"] = bits;
        j["seed"] = seed;
        j["bracket"] = bracket ? Json::array({bracket->first, bracket->second}) : Json(nullptr);
        j["sweep"] = sweep;
        j["mode"] = mode;
        j["levels"] = levels;
        j["json_out"] = json_out;
        j["render_out"] = render_out;
        j["csv_out"] = csv_out;
        return j;
    }
};

inline Check make_check(std::string name, std::string property, Json measured, Json tolerance, bool pass)
{
    return {std::move(name), std::move(property), std::move(measured), std::move(tolerance), pass};
}

inline std::string tag_l(const std::string& name, int l) { return name + "[l=" + std::to_string(l) + "]"; }

// Parameter bisection to depth N + 4 followed by the level points to depth N; when the points
// cannot be certified the precision is doubled (at most twice) and the retry is recorded.
inline LevelPoints certified_points(int l, int N, unsigned bits, Json* retries = nullptr)
{
    unsigned b = bits ? bits : bits_for_depth(N + 4);
    for (int attempt = 0;; ++attempt) {
        try {
            Precision pr = Precision::with_bits(b);
            WorkingPrecision wp(b);
            auto r = bisect_parameter(l, N + 4, Real(-2), Real(-1), pr);
            MapParams mp(l, (r.lo + r.hi) / 2, pr);
            return compute_level_points(mp, N);
        } catch (const std::runtime_error& e) {
            bool precision_issue = dynamic_cast<const UncertifiedParameter*>(&e) ||
                                   dynamic_cast<const PrecisionExhausted*>(&e) ||
                                   dynamic_cast<const NonMonotoneBranch*>(&e) ||
                                   dynamic_cast<const TargetOutsideRange*>(&e);
            if (!precision_issue || attempt >= 2)
                throw;
            if (retries)
                retries->push_back(Json{{"stage", "level-points"}, {"degree", l}, {"depth", N}, {"bits", b},
                                        {"error", e.what()}, {"retry_bits", 2 * b}});
            b *= 2;
        }
    }
}

// Shared state of one run: level points are computed once per (degree, depth).
class Context {
public:
    Context(Report& r, unsigned bits = 0) : report(r), bits_(bits) {}

    const LevelPoints& points(int l, int N)
    {
        auto key = std::make_pair(l, N);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            StageTimer t(report, "level-points[l=" + std::to_string(l) + ",N=" + std::to_string(N) + "]");
            it = cache_.emplace(key, std::make_unique<LevelPoints>(certified_points(l, N, bits_, &report.precision_retries)))
                     .first;
        }
        return *it->second;
    }

    Report& report;

private:
    unsigned bits_;
    std::map<std::pair<int, int>, std::unique_ptr<LevelPoints>> cache_;
};

// ---------------------------------------------------------------- parameter search

inline void add_parameter_search(Report& rep, int l, int N, unsigned bits, const std::string& a = "-2",
                                 const std::string& b = "-1")
{
    StageTimer timer(rep, "parameter-search[l=" + std::to_string(l) + "]");
    if (bits == 0)
        bits = bits_for_depth(N + 4);
    Precision pr = Precision::with_bits(bits);
    WorkingPrecision wp(bits);
    auto r = bisect_parameter(l, N, make_real(a, bits), make_real(b, bits), pr);
    Real mid = (r.lo + r.hi) / 2;
    MapParams mp(l, mid, pr);
    FibSchedule S = fibonacci_times(N);
    auto trace = closest_returns(mp, S.back());
    std::vector<long> times;
    Json table = Json::array();
    for (const auto& e : trace.entries) {
        times.push_back(e.time);
        table.push_back(Json{{"time", e.time}, {"distance", tagged(e.distance, bits)}, {"side", e.side}});
    }
    const unsigned bits2 = 2 * bits;
    MapParams mp2 = mp.with_precision(Precision::with_bits(bits2));
    FibVerdict v2 = check_fibonacci(mp2, N);
    std::vector<long> times2;
    for (const auto& e : closest_returns(mp2, S.back()).entries)
        times2.push_back(e.time);

    auto verdict_json = [&](const FibVerdict& v) {
        Json j{{"ok", v.ok}, {"depth_certified", v.depth_certified}};
        if (v.first_violation)
            j["first_violation"] = Json{{"time", v.first_violation->time}, {"kind", to_string(v.first_violation->kind)}};
        return j;
    };
    Json d;
    d["degree"] = l;
    d["depth"] = N;
    d["bits"] = bits;
    d["parameter_interval"] = Json::array({tagged(r.lo, bits), tagged(r.hi, bits)});
    d["midpoint"] = tagged(mid, bits);
    d["width"] = tagged(r.hi - r.lo, bits);
    d["steps"] = r.steps;
    d["target_length"] = r.target_length;
    d["verdict"] = verdict_json(r.verdict);
    d["closest_return_table"] = table;
    d["reverify"] = verdict_json(v2);
    d["reverify"]["bits"] = bits2;
    rep.data["parameter_search"][std::to_string(l)] = d;

    double width = (r.hi - r.lo).convert_to<double>();
    rep.add(make_check(tag_l("parameter-width", l), "bisection interval width", Json{{"width", width}},
                       Json{{"max", 1e-12}}, width < 1e-12));
    rep.add(make_check(tag_l("closest-return-times", l), "closest returns of the midpoint are the Fibonacci times",
                       Json{{"times", times}, {"depth_certified", r.verdict.depth_certified}}, Json{{"expected", S}},
                       times == S && r.verdict.ok));
    rep.add(make_check(tag_l("closest-return-reverify", l), "closest-return times unchanged at doubled precision",
                       Json{{"bits", bits2}, {"times", times2}, {"depth_certified", v2.depth_certified}},
                       Json{{"expected", S}}, times2 == S && v2.ok));
}

// ---------------------------------------------------------------- level points

inline Json points_json(const LevelPoints& L)
{
    const unsigned b = L.params.precision.mantissa_bits;
    const int N = L.depth;
    Json levels = Json::object();
    auto at = [&](const std::vector<Real>& v, int n, int lo, int hi) -> Json {
        return n >= lo && n <= hi ? tagged(v[static_cast<size_t>(n)], b) : Json(nullptr);
    };
    for (int n = 0; n <= N + 2; ++n) {
        Json e;
        e["S"] = L.S[static_cast<size_t>(n)];
        e["side"] = L.side[static_cast<size_t>(n)];
        e["d"] = tagged(L.d[static_cast<size_t>(n)], b);
        e["z"] = at(L.z, n, 0, N + 2);
        e["u"] = at(L.u, n, 0, N + 2);
        e["x"] = at(L.x, n, 2, N + 2);
        e["v"] = at(L.v, n, 2, N + 1);
        e["y"] = at(L.y, n, 0, N + 2);
        if (n >= 2 && n <= N + 1) {
            const auto& T = L.T[static_cast<size_t>(n)];
            e["T"] = Json::array({tagged(T.lo, b), tagged(T.hi, b)});
            e["w_f"] = tagged(L.w_f[static_cast<size_t>(n)], b);
            e["r_f"] = tagged(L.r_f[static_cast<size_t>(n)], b);
        }
        levels[std::to_string(n)] = e;
    }
    return Json{{"degree", L.params.degree}, {"depth", N}, {"bits", b}, {"parameter", tagged(L.params.param, b)},
                {"q", tagged(L.q, b)}, {"levels", levels}};
}

inline void add_points(Context& ctx, int l, int N)
{
    const LevelPoints& L = ctx.points(l, N);
    StageTimer timer(ctx.report, "points-checks[l=" + std::to_string(l) + "]");
    WorkingPrecision wp(L.params.precision.mantissa_bits);
    auto res = level_residuals(L);
    double worst = 0;
    std::string worst_name;
    int worst_level = 0;
    for (const auto& r : res) {
        double v = r.value.convert_to<double>();
        if (v >= worst) {
            worst = v;
            worst_name = r.name;
            worst_level = r.level;
        }
    }
    auto ord = verify_ordering(L);
    Json failures = Json::array();
    for (const auto& pc : ord.pairs)
        if (!pc.ok)
            failures.push_back(Json{{"level", pc.level}, {"line", pc.line}, {"left", pc.left}, {"right", pc.right}});
    bool base = base_case_ordering(L);

    Json d = points_json(L);
    d["max_residual"] = worst;
    d["ordering"] = Json{{"first_level", ord.first_level}, {"last_level", ord.last_level}, {"pairs", ord.pairs.size()},
                         {"failures", failures}, {"base_case", base}};
    ctx.report.data["points"][std::to_string(l)] = d;

    ctx.report.add(make_check(tag_l("point-residuals", l), "defining equations of the level points",
                              Json{{"max_residual", worst}, {"worst", worst_name}, {"level", worst_level},
                                   {"equations", res.size()}},
                              Json{{"max", 1e-20}}, worst < 1e-20));
    ctx.report.add(make_check(tag_l("point-ordering", l), "order of the level points on both lines",
                              Json{{"pairs", ord.pairs.size()}, {"failures", failures.size()}, {"base_case", base},
                                   {"levels", Json::array({ord.first_level, ord.last_level})}},
                              Json{{"failures", 0}}, ord.all_ok && base));
}

// ---------------------------------------------------------------- real bounds

inline void add_bounds(Context& ctx, int l, int N)
{
    const LevelPoints& L = ctx.points(l, N);
    StageTimer timer(ctx.report, "bounds[l=" + std::to_string(l) + "]");
    auto b = real_bounds_report(L);
    Json rows = Json::array();
    for (const auto& r : b.rows)
        rows.push_back(Json{{"n", r.n}, {"chain_ok", r.chain_ok}, {"ratio_d2", r.ratio_d2}, {"ratio_d4", r.ratio_d4},
                            {"ratio_43", r.ratio_43}, {"double_ratio", r.double_ratio}, {"u_ratio", r.u_ratio},
                            {"r_over_u", r.r_over_u}});
    Json d{{"degree", l}, {"depth", N}, {"levels", Json::array({b.first_level, b.last_level})},
           {"lambda", b.lambda}, {"mu", b.mu}, {"deepest_double_ratio", b.deepest_double_ratio},
           {"k0", choose_k0(L)}, {"rows", rows}};

    std::vector<CoveringFn> gens;
    for (int n = 2; n <= std::min(N, 9); ++n)
        gens.push_back(covering_Fn(L, n));
    bool cover_ok = true;
    Json cov = Json::array();
    for (size_t i = 0; i < gens.size(); ++i) {
        const int g = gens[i].generation;
        auto c = check_coverings(L, gens[i], i + 1 < gens.size() ? &gens[i + 1] : nullptr, L.S[static_cast<size_t>(g + 4)]);
        cov.push_back(Json{{"generation", g}, {"components", gens[i].intervals.size()}, {"count_ok", c.count_ok},
                           {"two_children", c.two_children}, {"orbit_covered", c.orbit_covered},
                           {"orbit_points", c.orbit_points_checked}});
        cover_ok = cover_ok && c.count_ok && c.two_children && c.orbit_covered;
    }
    auto geo = bounded_geometry_stats(gens);
    d["coverings"] = cov;
    d["bounded_geometry"] = Json{{"min_ratio", geo.min_ratio}, {"max_ratio", geo.max_ratio}, {"mu", geo.mu}};
    ctx.report.data["bounds"][std::to_string(l)] = d;

    auto& R = ctx.report;
    R.add(make_check(tag_l("bounds-chain", l), "d_{n+1} < u_n < z_{n-1} < d_n near c1 at every level",
                     Json{{"lambda", b.lambda}, {"mu", b.mu}}, Json{{"all_levels", true}}, b.chain_ok));
    R.add(make_check(tag_l("bounds-ratio-d2", l), "|d_{n-2}^f - c1| / |d_n^f - c1|", Json{{"min", b.worst_3_85}},
                     Json{{"min", 3.85}}, b.ge_3_85));
    R.add(make_check(tag_l("bounds-ratio-d4", l), "|d_{n-4}^f - c1| / |d_n^f - c1|", Json{{"min", b.worst_14}},
                     Json{{"min", 14}}, b.ge_14));
    R.add(make_check(tag_l("bounds-ratio-u-w", l), "|u_{n-1}^f - c1| / |w_n^f - c1|", Json{{"min", b.worst_4_3}},
                     Json{{"min", 4.0 / 3.0}}, b.ge_4_3));
    R.add(make_check(tag_l("covering-structure", l), "F_n: 2^n components, two children each, orbit covered",
                     Json{{"generations", gens.size()}}, Json{{"all_generations", true}}, cover_ok));
    R.add(make_check(tag_l("bounded-geometry", l), "child/parent length ratios stay in (1 - mu, mu)",
                     Json{{"mu", geo.mu}}, Json{{"max", 1}}, geo.mu < 1));
}

// |u_n| / |u_{n+1}| for every computed n; for l = 2 the ratios increase without bound.
inline void add_u_ratio_contrast(Context& ctx, int l, int N)
{
    const LevelPoints& L = ctx.points(l, N);
    WorkingPrecision wp(L.params.precision.mantissa_bits);
    std::vector<double> q;
    for (int n = 2; n <= N + 1; ++n)
        q.push_back((abs(L.u[static_cast<size_t>(n)]) / abs(L.u[static_cast<size_t>(n + 1)])).convert_to<double>());
    bool inc = true;
    for (size_t k = 1; k < q.size(); ++k)
        inc = inc && q[k] > q[k - 1];
    ctx.report.add(make_check(tag_l("u-ratio-increasing", l), "|u_n| / |u_{n+1}| increases with n",
                              Json{{"first_level", 2}, {"ratios", q}}, Json{{"strictly_increasing", true}}, inc));
}

// ---------------------------------------------------------------- distortion

inline void add_cross_ratio_sweep(Context& ctx, int l, int N, long samples, unsigned long seed)
{
    const LevelPoints& L = ctx.points(l, N);
    StageTimer timer(ctx.report, "cross-ratio-sweep[l=" + std::to_string(l) + "]");
    auto br = branches_from_points(L, 2, std::min(N, 12));
    auto s = random_B_sweep(br, samples, seed);
    ctx.report.add(make_check(tag_l("cross-ratio-B", l), "B >= 1 on random pairs inside monotone branches",
                              Json{{"branches", br.size()}, {"samples", s.samples}, {"violations", s.violations},
                                   {"min_B", s.min_B}, {"seed", seed}},
                              Json{{"violations", 0}}, s.samples == samples && s.violations == 0));

    // Koebe on each branch: j the preimage of the middle third of the image, so tau = 1
    bool ok = true;
    double worst = 0;
    for (const auto& b : br) {
        if (b.time < 2)
            continue;
        WorkingPrecision wp(b.params.precision.mantissa_bits);
        Real a = b.value(b.domain.lo), c = b.value(b.domain.hi);
        Real j0 = solve_on_branch(b.params, b.time, a + (c - a) / 3, b.domain);
        Real j1 = solve_on_branch(b.params, b.time, c - (c - a) / 3, b.domain);
        if (j1 < j0)
            std::swap(j0, j1);
        auto k = koebe_distortion_check<Real>(b, b.domain.lo, b.domain.hi, j0, j1, 1.0, 17);
        ok = ok && k.holds;
        worst = std::max(worst, k.ratio / k.bound);
    }
    ctx.report.add(make_check(tag_l("koebe-bound", l), "derivative ratio on the preimage of the middle third within the Koebe bound",
                              Json{{"max_ratio_over_bound", worst}}, Json{{"max", 1}}, ok));
}

inline void add_pure_power(Report& rep, int l, unsigned long seed, int samples = 200)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.02, 0.98), G(0.1, 10.0);
    WorkingPrecision wp(256);
    double worst = 0;
    for (int k = 0; k < samples; ++k) {
        double gamma = G(rng), alpha = gamma * U(rng);
        Real g(gamma), a(alpha);
        Real numeric = cross_ratio_B(PowerMap<Real>{l}, IntervalPair<Real>(Real(0), g, a, a));
        double closed = pure_power_B(l, gamma, alpha).value;
        worst = std::max(worst, std::fabs(closed / numeric.convert_to<double>() - 1));
    }
    rep.add(make_check(tag_l("pure-power-B", l), "closed form of B for x^l against the numeric cross-ratio",
                       Json{{"samples", samples}, {"max_relative_error", worst}, {"seed", seed}},
                       Json{{"max_relative_error", 1e-12}}, worst < 1e-12));
}

inline void add_A_inequality(Report& rep, int l, long samples, unsigned long seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    WorkingPrecision wp(256);
    long violations = 0;
    double min_margin = 1e300;
    for (long k = 0; k < samples; ++k) {
        double c[3] = {U(rng), U(rng), U(rng)};
        std::sort(c, c + 3);
        if (!(c[0] > 0 && c[0] < c[1] && c[1] < c[2]))
            continue;
        double sgn = (k % 2 == 0) ? 1 : -1;
        Real a(c[0]), x(c[1]), b(c[2]);
        auto r = sgn > 0 ? verify_A_inequality(l, a, x, b) : verify_A_inequality(l, Real(-b), Real(-x), Real(-a));
        min_margin = std::min(min_margin, r.margin);
        if (!r.holds)
            ++violations;
    }
    rep.add(make_check(tag_l("A-inequality", l), "A(T') A(T'') >= sqrt(A(T' u T'')) for adjacent intervals",
                       Json{{"samples", samples}, {"violations", violations}, {"min_margin", min_margin}, {"seed", seed}},
                       Json{{"violations", 0}}, violations == 0));
}

inline void add_exact_checks(Report& rep)
{
    Json coeffs = Json::object();
    bool ok = true;
    for (unsigned n = 2; n <= 7; ++n) {
        Rational c = taylor_coefficient_check(n);
        coeffs[std::to_string(n)] = c.str();
        ok = ok && c == taylor_coefficient_series(n);
        ok = ok && (n < 7 ? c == 0 : c == Rational(1, 240));
    }
    rep.add(make_check("taylor-coefficients", "Taylor coefficients of the difference of the two expansions",
                       Json{{"coefficients", coeffs}}, Json{{"zero_for", Json::array({2, 6})}, {"at_7", "1/240"}}, ok));
    BigInt worst = -1;
    std::vector<unsigned> zeros;
    bool nonneg = true;
    for (unsigned n = 1; n <= 60; ++n) {
        BigInt m = quadratic_inequality_check(n);
        if (m == 0)
            zeros.push_back(n);
        nonneg = nonneg && m >= 0;
        if (n > 3 && (worst < 0 || m < worst))
            worst = m;
    }
    rep.add(make_check("quadratic-inequality", "4^n + 6 2^n - 4 3^n - 4 >= 0",
                       Json{{"range", Json::array({1, 60})}, {"zeros", zeros}, {"min_beyond_zeros", worst.str()}},
                       Json{{"zeros", Json::array({1, 2, 3})}}, nonneg && zeros == std::vector<unsigned>{1, 2, 3}));
}

// Fitted exponent of the normalized derivative over the annuli, at the shallowest level the
// depth allows.
inline void add_profile(Context& ctx, int l, int N)
{
    const LevelPoints& L = ctx.points(l, N);
    StageTimer timer(ctx.report, "profile[l=" + std::to_string(l) + "]");
    const int n = 4;
    auto P = derivative_profile(L, n);
    Json rows = Json::array();
    for (const auto& r : P.rows)
        rows.push_back(Json{{"i", r.i}, {"max", r.max_norm}, {"min", r.min_norm}});
    ctx.report.data["profile"][std::to_string(l)] =
        Json{{"level", n}, {"rows", rows}, {"exponent", P.exponent}, {"r2", P.fit.r2}, {"fitted_C", P.fitted_C},
             {"C_n", P.C_n}, {"C_n_prime", P.C_n_prime}, {"at_z", P.at_z}, {"sqrt_l_bound", P.sqrt_l_bound}};
    ctx.report.add(make_check(tag_l("profile-exponent", l), "log-log slope of the normalized derivative over i in [2, l]",
                              Json{{"exponent", P.exponent}, {"r2", P.fit.r2}, {"points", P.fit.points}},
                              Json{{"target", 1.5}, {"abs", 0.3}}, std::fabs(P.exponent - 1.5) <= 0.3));
    ctx.report.add(make_check(tag_l("profile-value-at-z", l), "normalized derivative at z_{n-2} below C sqrt(l)",
                              Json{{"at_z", P.at_z}, {"bound", P.sqrt_l_bound}}, Json{{"max", "bound"}},
                              P.z_below_bound));
}

// ---------------------------------------------------------------- asymptotics

struct FlowGrid {
    std::vector<double> degrees{4, 16, 64, 256};
    int tmax = 100;
    int xs = 21;          // x = -1 .. 1
    long per_unit = 200;  // integrator steps per unit time
};

inline void add_flow(Report& rep, const FlowGrid& g = {}, std::vector<std::vector<double>>* traces = nullptr)
{
    StageTimer timer(rep, "flow");
    double worst = 0, worst_semi = 0;
    Json consts = Json::array();
    double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {0, 0, 0};
    for (double l : g.degrees) {
        FlowParams fp{1, 1, l};
        for (int k = 0; k < g.xs; ++k) {
            double x = -1 + 2.0 * k / (g.xs - 1);
            auto tr = flow_phi_numeric_track(fp, x, g.tmax, g.per_unit);
            for (int t = 1; t <= g.tmax; ++t) {
                double c = flow_phi(fp, t, x);
                if (c != 0)
                    worst = std::max(worst, std::fabs(tr[static_cast<size_t>(t)] - c) / std::fabs(c));
                if (traces)
                    traces->push_back({l, x, double(t), c, tr[static_cast<size_t>(t)]});
            }
            for (double s : {0.5, 1.0, 3.0, 10.0, 40.0})
                for (double t : {0.25, 1.0, 7.0, 30.0}) {
                    double a = flow_phi(fp, s + t, x), b = flow_phi(fp, s, flow_phi(fp, t, x));
                    if (a != 0)
                        worst_semi = std::max(worst_semi, std::fabs(a - b) / std::fabs(a));
                }
        }
        auto S = flow_sums(fp, 1.0, default_flow_cutoff(fp));
        double c[3] = {S.c_sqrt, S.c_log, S.c_one};
        for (int i = 0; i < 3; ++i) {
            lo[i] = std::min(lo[i], c[i]);
            hi[i] = std::max(hi[i], c[i]);
        }
        consts.push_back(Json{{"l", l}, {"S1_over_sqrt_l", S.c_sqrt}, {"S2_over_log_l", S.c_log}, {"S3", S.c_one}});
    }
    rep.data["flow"] = Json{{"constants", consts}};
    rep.add(make_check("flow-closed-form", "closed-form flow against a fourth-order integrator",
                       Json{{"max_relative_error", worst}, {"steps_per_unit", g.per_unit}},
                       Json{{"max_relative_error", 1e-9}}, worst < 1e-9));
    rep.add(make_check("flow-semigroup", "phi_{s+t} = phi_s o phi_t", Json{{"max_relative_error", worst_semi}},
                       Json{{"max_relative_error", 1e-10}}, worst_semi < 1e-10));
    double f[3] = {hi[0] / lo[0], hi[1] / lo[1], hi[2] / lo[2]};
    rep.add(make_check("flow-sum-constants", "S1/sqrt(l), S2/log(l), S3 bounded across the degree sweep",
                       Json{{"spread_S1", f[0]}, {"spread_S2", f[1]}, {"spread_S3", f[2]}}, Json{{"max_spread", 3}},
                       f[0] < 3 && f[1] < 3 && f[2] < 3));
}

inline void add_gamma(Report& rep)
{
    double worst_inv = 0, worst_fix = 0, worst_deriv = 0, worst_moebius = 0;
    bool monotone = true;
    for (double K : {0.1, 0.33, 1.0, 3.0})
        for (double l : {4.0, 16.0, 64.0}) {
            worst_fix = std::max({worst_fix, std::fabs(gamma_map(K, l, 1) - 1), std::fabs(gamma_map(K, l, -1) + 1)});
            double prev = -2;
            for (int k = 0; k <= 200; ++k) {
                double x = -1 + k / 100.0;
                double y = gamma_map(K, l, x);
                monotone = monotone && y > prev;
                prev = y;
                worst_inv = std::max(worst_inv, std::fabs(gamma_inverse(K, l, y) - x));
                double h = 1e-6;
                if (std::fabs(x) < 1 - h) {
                    double fd = (gamma_map(K, l, x + h) - gamma_map(K, l, x - h)) / (2 * h);
                    worst_deriv = std::max(worst_deriv, std::fabs(fd / gamma_deriv(K, l, x) - 1));
                }
                double m = std::copysign(std::sqrt(gamma_moebius(K, l, x * x)), x);
                worst_moebius = std::max(worst_moebius, std::fabs(m - y));
            }
        }
    rep.add(make_check("gamma-map", "Gamma: odd increasing self-map of [-1, 1] fixing the endpoints, with inverse",
                       Json{{"inverse_error", worst_inv}, {"endpoint_error", worst_fix}, {"moebius_error", worst_moebius},
                            {"monotone", monotone}},
                       Json{{"max_error", 1e-12}},
                       monotone && worst_inv < 1e-12 && worst_fix < 1e-12 && worst_moebius < 1e-12));
    rep.add(make_check("gamma-derivative", "closed-form derivative against central differences",
                       Json{{"max_relative_error", worst_deriv}}, Json{{"max_relative_error", 1e-6}}, worst_deriv < 1e-6));
}

// Normalized return maps Psi_i and the coefficients of Theta_i = Psi_{i-2} o Psi_i.
inline void add_return_maps(Context& ctx, int l, int N)
{
    const LevelPoints& L = ctx.points(l, N);
    StageTimer timer(ctx.report, "return-maps[l=" + std::to_string(l) + "]");
    Json rows = Json::array();
    bool gamma_pos = true;
    std::vector<NormalizedMap> maps;
    for (int i = 2; i <= N; ++i)
        maps.push_back(normalize_return_map(L, i));
    for (int i = 4; i <= N; ++i) {
        auto t = theta_coefficients(L, i);
        gamma_pos = gamma_pos && t.gamma > 0;
        double dist = i + 2 <= N ? normalized_map_distance(maps[static_cast<size_t>(i - 2)], maps[static_cast<size_t>(i)])
                                 : -1;
        rows.push_back(Json{{"i", i}, {"a1", t.theta.a1}, {"a2", t.theta.a2}, {"a3", t.theta.a3}, {"psi_a1", t.psi.a1}, {"alpha", t.alpha},
                            {"beta", t.beta}, {"gamma", t.gamma}, {"chain_defect", t.chain_defect},
                            {"psi_distance_to_i_plus_2", dist}});
    }
    ctx.report.data["return_maps"][std::to_string(l)] = rows;
    ctx.report.add(make_check(tag_l("theta-cubic-sign", l), "cubic coefficient of Theta_i is negative (gamma > 0)",
                              Json{{"levels", rows.size()}}, Json{{"gamma", "> 0"}}, gamma_pos && !rows.empty()));
}

struct CompositionSetup {
    std::vector<double> degrees{50, 200, 800};
    double gamma = 0.25;
    std::vector<double> xs;

    CompositionSetup()
    {
        for (int k = 1; k <= 19; ++k)
            xs.push_back(-0.95 + 0.1 * (k - 1) + (k == 10 ? 0.01 : 0));
    }
};

inline void add_composition(Report& rep, unsigned long seed, const CompositionSetup& cs = {})
{
    StageTimer timer(rep, "composition");
    Json rows = Json::array();
    std::vector<double> devs;
    bool below = true, family = true;
    double exact = 0, ldmax = 0;
    for (double l : cs.degrees) {
        FlowParams fp{1, cs.gamma, l};
        family = family && synthetic_family_self_map(fp, 1 / l);
        auto s = composition_sweep(fp, 1 / l, cs.xs, seed);
        devs.push_back(s.max_dev);
        below = below && s.all_below;
        ldmax = std::max(ldmax, s.max_F_main * l);
        auto ex = exact_flow_thetas(fp, s.m);
        for (double x : cs.xs) {
            auto tr = compose_track(ex, fp, x, s.m);
            for (double r : tr.ratio)
                exact = std::max(exact, std::fabs(r - 1));
        }
        rows.push_back(Json{{"l", l}, {"m", s.m}, {"max_dev", s.max_dev}, {"max_ddev", s.max_ddev},
                            {"max_F_main", s.max_F_main}, {"tail_distortion", s.tail_distortion}});
    }
    rep.data["composition"] = Json{{"gamma", cs.gamma}, {"seed", seed}, {"rows", rows}};
    bool dec = true;
    for (size_t k = 1; k < devs.size(); ++k)
        dec = dec && devs[k] < devs[k - 1];
    rep.add(make_check("composition-hypothesis", "each perturbed map sends (-1, 1) into itself contracting",
                       Json{{"family_ok", family}}, Json{{"all_degrees", true}}, family));
    rep.add(make_check("composition-deviation", "max |F_m / phi_m - 1| decreases along the degree sweep",
                       Json{{"max_dev", devs}}, Json{{"strictly_decreasing", true}}, dec));
    rep.add(make_check("composition-main-term", "|F_k(x)| < 1/l at k = ceil(l^{3/2})",
                       Json{{"max_l_times_F", ldmax}}, Json{{"max", 1}}, below));
    rep.add(make_check("composition-exact-flow", "composition of exact time-one flows equals the flow",
                       Json{{"max_abs_ratio_minus_1", exact}}, Json{{"max", 1e-10}}, exact < 1e-10));
}

inline void add_branch_model(Context& ctx, int l, int N, int parity = 0)
{
    const LevelPoints& L = ctx.points(l, N);
    StageTimer timer(ctx.report, "branch-model[l=" + std::to_string(l) + "]");
    auto m = verify_branch_model(L, parity, 4);
    Json rows = Json::array();
    std::vector<double> devs;
    for (const auto& v : m.levels) {
        rows.push_back(Json{{"n", v.n}, {"K", v.K}, {"value_dev", v.value_dev}, {"deriv_dev", v.deriv_dev},
                            {"anchor_dev", v.anchor_dev}, {"h_left", v.h_left}});
        devs.push_back(v.value_dev);
    }
    ctx.report.data["branch_model"][std::to_string(l)] =
        Json{{"parity", m.parity}, {"levels", rows}, {"K_spread", m.K_spread}, {"final_deviation", m.final_deviation}};
    ctx.report.add(make_check(tag_l("branch-model-K-stable", l), "fitted K varies little across the deepest levels",
                              Json{{"K_spread", m.K_spread}}, Json{{"max_spread", 0.2}}, m.K_spread < 0.2));
    ctx.report.add(make_check(tag_l("branch-model-deviation", l), "model deviation decreases with the level",
                              Json{{"value_dev", devs}, {"final_deviation", m.final_deviation}},
                              Json{{"strictly_decreasing", true}}, m.deviation_decreasing));
}

// ---------------------------------------------------------------- complex geometry

inline Json containment_json(const std::optional<ContainmentReport>& c)
{
    if (!c)
        return nullptr;
    return Json{{"verdict", to_string(c->verdict)}, {"separation", c->separation}, {"resolution", c->resolution},
                {"outside", c->outside}};
}

inline std::string render_ladder(const DiscLadder& lad, const SvgOptions& opt = {})
{
    std::vector<const Region*> rs;
    for (const auto& lv : lad.levels)
        rs.push_back(&lv.D);
    return render_svg(rs, opt);
}

inline void add_render_checks(Report& rep, const DiscLadder& lad, const std::string& path)
{
    std::string a = render_ladder(lad), b = render_ladder(lad);
    auto paths = svg_paths(a);
    bool conj = paths.size() == lad.levels.size();
    bool rot = conj;
    double worst_rot = 0;
    for (size_t k = 0; k < paths.size() && k < lad.levels.size(); ++k) {
        const auto& P = paths[k];
        // the path lists the closed boundary without its repeated first point
        const size_t m = P.size();
        for (size_t j = 1; j < m; ++j)
            conj = conj && P[m - j] == std::conj(P[j]);
        if (lad.levels[k].D.kind == RegionKind::RootLift) {
            Region r;
            r.boundary = P;
            r.boundary.push_back(P.front());
            double R = 0;
            for (auto q : P)
                R = std::max(R, std::abs(q));
            double d = rotation_defect(r, lad.degree);
            worst_rot = std::max(worst_rot, d * 2 * R / resolution(r.boundary));
            rot = rot && d <= resolution(r.boundary) / (2 * R);
        }
    }
    if (!path.empty())
        write_text_file(path, a);
    rep.data["render"] = Json{{"paths", paths.size()}, {"bytes", a.size()}, {"path", path}};
    rep.add(make_check("render-deterministic", "two renderings of the ladder are identical",
                       Json{{"bytes", a.size()}, {"identical", a == b}}, Json{{"identical", true}}, a == b && !a.empty()));
    rep.add(make_check("render-conjugation", "every rendered path is symmetric under complex conjugation",
                       Json{{"paths", paths.size()}}, Json{{"exact", true}}, conj));
    rep.add(make_check("render-rotation", "rendered lifted discs are invariant under rotation by 2 pi / l",
                       Json{{"max_defect_in_sampling_steps", worst_rot}}, Json{{"max_defect_in_sampling_steps", 1}},
                       rot));
}

inline void add_discs(Context& ctx, int l, int N, int levels, const std::string& render_path = "")
{
    int depth = N;
    {
        const LevelPoints& L0 = ctx.points(l, N);
        int k0 = choose_k0(L0);
        if (k0 > 0 && k0 + levels > depth)
            depth = k0 + levels;
    }
    const LevelPoints& L = ctx.points(l, depth);
    StageTimer timer(ctx.report, "discs[l=" + std::to_string(l) + "]");
    LadderOptions opt;
    opt.levels_past_k0 = levels;
    auto lad = build_nested_discs(L, opt);
    auto ann = annulus_report(lad);

    Json rows = Json::array();
    bool trace = true, dstar = true, nest = true, rot = true, fwd = true;
    for (const auto& lv : lad.levels) {
        trace = trace && lv.trace_ok && lv.trace1_ok;
        dstar = dstar && lv.in_dstar && lv.in_dstar1;
        nest = nest && (!lv.nested || lv.nested->verdict == Containment::Contained);
        rot = rot && lv.rotation_ok;
        fwd = fwd && lv.forward_ok;
        rows.push_back(Json{{"n", lv.n},
                            {"kind", to_string(lv.D.kind)},
                            {"area", lv.area},
                            {"area1", lv.area1},
                            {"trace_error", lv.trace_error},
                            {"trace1_error", lv.trace1_error},
                            {"dstar_excess", lv.dstar_excess},
                            {"dstar1_excess", lv.dstar1_excess},
                            {"nested", containment_json(lv.nested)},
                            {"rotation_defect", lv.rotation_defect},
                            {"forward_D1", lv.forward_D1},
                            {"forward_Df_D1", lv.forward_Df_D1},
                            {"forward_Df_D", lv.forward_Df_D},
                            {"forward_tol", lv.forward_tol},
                            {"precondition_ratio", lv.precondition_ratio},
                            {"kappa", lv.kappa},
                            {"star_ok", lv.star_ok},
                            {"pullback_evaluations", lv.stats1.evaluations + lv.statsf.evaluations},
                            {"min_orbit_modulus", std::min(lv.stats1.min_orbit_modulus, lv.statsf.min_orbit_modulus)}});
    }
    Json annulus{{"n", ann.n},         {"area", ann.annulus},       {"tau", ann.tau},
                 {"tau_min", ann.tau_min}, {"tau_max", ann.tau_max}, {"fit_slope", ann.fit.slope},
                 {"fit_r2", ann.fit.r2}, {"rate", ann.rate},         {"model_rate", ann.model_rate},
                 {"C_min", ann.C_min},   {"C_max", ann.C_max}};
    ctx.report.data["discs"][std::to_string(l)] =
        Json{{"k0", lad.k0}, {"depth", depth}, {"levels", rows}, {"annulus", annulus}};

    auto& R = ctx.report;
    const int lev = static_cast<int>(lad.levels.size());
    R.add(make_check(tag_l("ladder-nesting", l), "closure of D_n inside D_{n-1}", Json{{"levels", lev}},
                     Json{{"separation_over_resolution", "> 10"}}, nest));
    R.add(make_check(tag_l("ladder-real-trace", l), "D_n meets the real line in (-|u_{n-1}|, |u_{n-1}|), D_n^1 in (u_n, x_n)",
                     Json{{"levels", lev}}, Json{{"relative_endpoint_error", 1e-9}}, trace));
    R.add(make_check(tag_l("ladder-rotation", l), "D_n invariant under rotation by 2 pi / l", Json{{"levels", lev}},
                     Json{{"max_defect_in_sampling_steps", 1}}, rot));
    R.add(make_check(tag_l("ladder-dstar", l), "D_n inside D_*(u_{n-1}, -u_{n-1}) and D_n^1 inside D_*(u_n, x_n)",
                     Json{{"levels", lev}}, Json{{"max_excess", 1e-9}}, dstar));
    R.add(make_check(tag_l("ladder-forward", l), "forward images of the pulled-back boundaries land on their targets",
                     Json{{"levels", lev}}, Json{{"max_defect_in_sampling_steps", 1}}, fwd));
    const bool tau_ok = ann.tau_min > 0 && ann.tau_max < 2 * ann.tau_min;
    R.add(make_check(tag_l("annulus-tau", l), "l |D_n \\ D_{n+1}| / |D_n| positive and within a factor 2 across levels",
                     Json{{"tau_min", ann.tau_min}, {"tau_max", ann.tau_max}}, Json{{"min", 0}, {"max_spread", 2}},
                     tau_ok));
    R.add(make_check(tag_l("annulus-fit", l), "exponential fit of the annulus areas",
                     Json{{"r2", ann.fit.r2}, {"rate", ann.rate}, {"model_rate", ann.model_rate}},
                     Json{{"min_r2", 0.9}}, ann.fit.r2 > 0.9));
    add_render_checks(R, lad, render_path);
}

inline void add_petal(Context& ctx, int l, int N)
{
    const LevelPoints& L = ctx.points(l, N);
    StageTimer timer(ctx.report, "petal[l=" + std::to_string(l) + "]");
    Json rows = Json::array();
    std::vector<double> Cs;
    std::vector<int> ms;
    bool mult = true, shift = true, into = true;
    double min_delta2 = 1e300;
    for (int n = 3; n + 2 <= N + 1; ++n) {
        auto P = psi_petal_check(L, n);
        rows.push_back(Json{{"n", n},
                            {"multiplier", P.multiplier},
                            {"C", P.C},
                            {"fixed_point_residual", P.fixed_point_residual},
                            {"maps_into", P.maps_into},
                            {"gamma1", P.gamma1},
                            {"delta1", P.delta1},
                            {"gamma2", P.gamma2},
                            {"delta2", P.delta2},
                            {"m_eps", P.m_eps},
                            {"a_ambiguous", P.a_ambiguous}});
        Cs.push_back(P.C);
        ms.push_back(P.m_eps);
        mult = mult && P.multiplier_ok;
        shift = shift && P.shift_ok;
        into = into && P.maps_into;
        min_delta2 = std::min(min_delta2, P.delta2);
    }
    ctx.report.data["petal"][std::to_string(l)] = rows;
    // stability over the deepest four levels
    const size_t k = Cs.size() >= 4 ? Cs.size() - 4 : 0;
    double cmin = *std::min_element(Cs.begin() + static_cast<long>(k), Cs.end());
    double cmax = *std::max_element(Cs.begin() + static_cast<long>(k), Cs.end());
    double spread = (cmax - cmin) / cmin;
    int mmin = *std::min_element(ms.begin(), ms.end()), mmax = *std::max_element(ms.begin(), ms.end());
    auto& R = ctx.report;
    R.add(make_check(tag_l("petal-multiplier", l), "D psi_n(z_{n+1}) = -1 + C/l with C > 0, stable over the deepest levels",
                     Json{{"C", Cs}, {"deep_spread", spread}}, Json{{"C", "> 0"}, {"max_spread", 0.2}},
                     mult && cmin > 0 && spread < 0.2));
    R.add(make_check(tag_l("petal-invariant", l), "psi_n maps [c, a_{n+1}] into itself", Json{{"levels", rows.size()}},
                     Json{{"all_levels", true}}, into));
    R.add(make_check(tag_l("petal-line-shift", l), "Re Theta(w) >= Re w + delta2 on the line Re w = gamma2",
                     Json{{"min_delta2", min_delta2}}, Json{{"delta2", "> 0"}}, shift));
    R.add(make_check(tag_l("petal-basin", l), "iterations to reach |x| < 0.1 bounded over the levels",
                     Json{{"m", ms}, {"min", mmin}, {"max", mmax}}, Json{{"finite", true}, {"max_over_min", 2}},
                     mmin >= 0 && mmax <= 2 * std::max(mmin, 1)));
}

// ---------------------------------------------------------------- dispatch

// Runs a stage and turns a module error into a failing check that names the stage.
template <class F>
void guarded(Report& rep, const std::string& stage, F&& f)
{
    try {
        f();
    } catch (const std::exception& e) {
        rep.add(make_check(stage + "-error", "stage completed without a module error", Json{{"error", e.what()}},
                           Json{{"error", nullptr}}, false));
    }
}

inline Report dispatch(const RunConfig& cfg)
{
    cfg.validate();
    Report rep;
    rep.config = cfg.to_json();
    const auto t0 = std::chrono::steady_clock::now();
    Context ctx(rep, cfg.bits);
    const int l = cfg.degree, N = cfg.depth;
    if (cfg.command == "find-parameter") {
        guarded(rep, "find-parameter", [&] {
            if (cfg.bracket)
                add_parameter_search(rep, l, N, cfg.bits, cfg.bracket->first, cfg.bracket->second);
            else
                add_parameter_search(rep, l, N, cfg.bits);
        });
    } else if (cfg.command == "points") {
        guarded(rep, "points", [&] { add_points(ctx, l, N); });
    } else if (cfg.command == "bounds") {
        guarded(rep, "bounds", [&] { add_bounds(ctx, l, N); });
        if (l == 2)
            guarded(rep, "u-ratio", [&] { add_u_ratio_contrast(ctx, l, N); });
    } else if (cfg.command == "distortion") {
        guarded(rep, "cross-ratio", [&] { add_cross_ratio_sweep(ctx, l, N, cfg.sweep, cfg.seed); });
        guarded(rep, "pure-power", [&] { add_pure_power(rep, l, cfg.seed); });
        guarded(rep, "A-inequality", [&] { add_A_inequality(rep, l, cfg.sweep, cfg.seed); });
        guarded(rep, "exact", [&] { add_exact_checks(rep); });
        if (N + 2 >= 4 + l + 1)
            guarded(rep, "profile", [&] { add_profile(ctx, l, N); });
        else
            rep.data["profile"]["skipped"] = "depth " + std::to_string(N) + " < " + std::to_string(l + 3) +
                                             " needed for annuli i = 2 .. l";
    } else if (cfg.command == "asymptotics") {
        if (cfg.mode == "flow") {
            std::vector<std::vector<double>> traces;
            guarded(rep, "flow", [&] { add_flow(rep, {}, cfg.csv_out.empty() ? nullptr : &traces); });
            if (!cfg.csv_out.empty()) {
                std::ostringstream os;
                os << "l,x,t,closed_form,integrator\n";
                os.precision(17);
                for (const auto& r : traces)
                    os << r[0] << ',' << r[1] << ',' << r[2] << ',' << r[3] << ',' << r[4] << '\n';
                write_text_file(cfg.csv_out, os.str());
            }
        } else if (cfg.mode == "gamma") {
            guarded(rep, "gamma", [&] { add_gamma(rep); });
            guarded(rep, "return-maps", [&] { add_return_maps(ctx, l, N); });
        } else if (cfg.mode == "comdv") {
            guarded(rep, "composition", [&] { add_composition(rep, cfg.seed); });
        } else {
            guarded(rep, "branch-model", [&] { add_branch_model(ctx, l, N); });
        }
    } else if (cfg.command == "discs") {
        guarded(rep, "discs", [&] { add_discs(ctx, l, N, cfg.levels, cfg.render_out); });
        guarded(rep, "petal", [&] { add_petal(ctx, l, std::max(N, 5)); });
    } else {
        // every acceptance property: fixed parameters where the property names them,
        // the configured map otherwise
        guarded(rep, "find-parameter", [&] { add_parameter_search(rep, 2, 16, 256); });
        for (int d : {8, 16})
            guarded(rep, "points", [&] { add_points(ctx, d, N); });
        guarded(rep, "bounds", [&] { add_bounds(ctx, l, N); });
        guarded(rep, "u-ratio", [&] { add_u_ratio_contrast(ctx, 2, N); });
        guarded(rep, "cross-ratio", [&] { add_cross_ratio_sweep(ctx, l, N, cfg.sweep, cfg.seed); });
        guarded(rep, "pure-power", [&] { add_pure_power(rep, l, cfg.seed); });
        for (int d : {2, 20})
            guarded(rep, "A-inequality", [&] { add_A_inequality(rep, d, cfg.sweep, cfg.seed); });
        guarded(rep, "exact", [&] { add_exact_checks(rep); });
        guarded(rep, "flow", [&] { add_flow(rep); });
        guarded(rep, "composition", [&] { add_composition(rep, cfg.seed); });
        guarded(rep, "branch-model", [&] { add_branch_model(ctx, l, N); });
        guarded(rep, "profile", [&] { add_profile(ctx, l, std::max(N, l + 3)); });
        guarded(rep, "discs", [&] { add_discs(ctx, l, N, cfg.levels, cfg.render_out); });
        guarded(rep, "petal", [&] { add_petal(ctx, l, N); });
    }
    rep.time("total", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return rep;
}

} // namespace fiblab
