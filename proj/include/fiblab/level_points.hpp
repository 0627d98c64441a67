#pragma once

#include "fibonacci.hpp"

#include <boost/math/tools/roots.hpp>

#include <map>
#include <string>

namespace fiblab {

struct Interval {
    Real lo, hi;
    Real length() const { return abs(hi - lo); }
    bool contains(const Real& x) const { return (lo < x && x < hi) || (hi < x && x < lo); }
};

struct NonMonotoneBranch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TargetOutsideRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoFixedPoint : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline int sgn_of(mpfr_srcptr x) { return mpfr_sgn(x) > 0 ? 1 : (mpfr_sgn(x) < 0 ? -1 : 0); }

// Signs of f^k(x) for k = 0..T-1.
inline std::vector<signed char> signs_along(const MapParams& p, const Real& x, long T)
{
    std::vector<signed char> out(static_cast<size_t>(T));
    Stepper s(p);
    s.load(x);
    for (long k = 0; k < T; ++k) {
        out[static_cast<size_t>(k)] = static_cast<signed char>(sgn_of(s.raw()));
        s.step();
    }
    return out;
}

// First k < ref.size() where sign(f^k(x)) differs from ref, or -1.
inline long first_sign_difference(const MapParams& p, const Real& x, const std::vector<signed char>& ref)
{
    Stepper s(p);
    s.load(x);
    for (size_t k = 0; k < ref.size(); ++k) {
        if (sgn_of(s.raw()) != ref[k])
            return static_cast<long>(k);
        s.step();
    }
    return -1;
}

// Stops once |a - b| is below 2^-(bits-6) relative to the larger endpoint.
struct RelTol {
    Real eps;
    bool operator()(const Real& a, const Real& b) const
    {
        Real m = std::max(abs(a), abs(b));
        if (m < 1)
            m = 1;
        return abs(a - b) <= eps * m;
    }
};

inline RelTol rel_tol(unsigned bits)
{
    WorkingPrecision wp(bits);
    return RelTol{ldexp(Real(1), -static_cast<int>(bits) + 6)};
}

template <class F>
Real bracketed_root(F&& g, Real a, Real b, unsigned bits)
{
    WorkingPrecision wp(bits);
    Real ga = g(a), gb = g(b);
    if (ga == 0)
        return a;
    if (gb == 0)
        return b;
    if ((ga > 0) == (gb > 0))
        throw TargetOutsideRange("bracketed_root: no sign change");
    if (a > b) {
        std::swap(a, b);
        std::swap(ga, gb);
    }
    std::uintmax_t iters = 400;
    auto r = boost::math::tools::toms748_solve(g, a, b, ga, gb, rel_tol(bits), iters);
    return (r.first + r.second) / 2;
}

} // namespace detail

// Maximal interval around p (inside [lim_lo, lim_hi]) on which the signs of f^k, k < T,
// agree with those of p. Endpoints are precritical points, refined as roots of f^k.
inline Interval branch_interval(const MapParams& p, long T, const Real& x, const Real& lim_lo, const Real& lim_hi)
{
    const unsigned bits = p.precision.mantissa_bits;
    WorkingPrecision wp(bits);
    auto ref = detail::signs_along(p, x, T);
    Interval out;
    for (int side = 0; side < 2; ++side) {
        Real a = x, b = side == 0 ? lim_lo : lim_hi;
        long kb = detail::first_sign_difference(p, b, ref);
        if (kb < 0) {
            (side == 0 ? out.lo : out.hi) = b;
            continue;
        }
        Real e;
        for (;;) {
            while (abs(b - a) > ldexp(abs(b - x), -50)) {
                Real m = (a + b) / 2;
                long km = detail::first_sign_difference(p, m, ref);
                if (km < 0) {
                    a = m;
                } else {
                    b = m;
                    kb = km;
                }
            }
            // Signs of f^j agree at a and b for j < kb, so f^kb is monotone on [a, b] with one root.
            long k = kb;
            e = detail::bracketed_root([&](const Real& t) { return iterate_to(p, t, k); }, a, b, bits);
            // A higher-order precritical point may still sit between a and e.
            Real inner = e - ldexp(e - a, -30);
            long ki = detail::first_sign_difference(p, inner, ref);
            if (ki < 0)
                break;
            b = inner;
            kb = ki;
        }
        (side == 0 ? out.lo : out.hi) = e;
    }
    return out;
}

// Monotone-branch precondition: the two bracket ends share the sign of f^k for all k < T,
// except at times where an end sits on a precritical point (|f^k| below sqrt(ulp)).
inline bool monotone_on(const MapParams& p, long T, const Interval& br)
{
    WorkingPrecision wp(p.precision.mantissa_bits);
    Stepper a(p), b(p);
    a.load(br.lo);
    b.load(br.hi);
    mpfr_t small, t;
    mpfr_inits2(p.precision.mantissa_bits, small, t, static_cast<mpfr_ptr>(nullptr));
    mpfr_set_ui_2exp(small, 1, -static_cast<long>(p.precision.mantissa_bits / 2), MPFR_RNDN);
    bool ok = true;
    for (long k = 0; k < T && ok; ++k) {
        int sa = detail::sgn_of(a.raw()), sb = detail::sgn_of(b.raw());
        if (sa != sb) {
            mpfr_abs(t, a.raw(), MPFR_RNDN);
            bool a_on = mpfr_less_p(t, small);
            mpfr_abs(t, b.raw(), MPFR_RNDN);
            bool b_on = mpfr_less_p(t, small);
            if (!a_on && !b_on)
                ok = false;
        }
        a.step();
        b.step();
    }
    mpfr_clears(small, t, static_cast<mpfr_ptr>(nullptr));
    return ok;
}

// x in the bracket with f^T(x) = target.
inline Real solve_on_branch(const MapParams& p, long T, const Real& target, const Interval& bracket)
{
    if (!monotone_on(p, T, bracket))
        throw NonMonotoneBranch("solve_on_branch: f^" + std::to_string(T) + " is not monotone on the bracket");
    return detail::bracketed_root([&](const Real& t) { return iterate_to(p, t, T) - target; }, bracket.lo, bracket.hi,
                                  p.precision.mantissa_bits);
}

// Orientation-reversing fixed point; the unique negative root of x^l + c1 - x.
inline Real fixed_point_q(const MapParams& p)
{
    WorkingPrecision wp(p.precision.mantissa_bits);
    if (p.param >= 0)
        throw NoFixedPoint("fixed_point_q: no orientation-reversing fixed point for c1 >= 0");
    Real R = escape_radius(p);
    Real q = detail::bracketed_root([&](const Real& x) { return pow(x, p.degree) + p.param - x; }, -R, Real(0),
                                    p.precision.mantissa_bits);
    if (deriv(p, q) >= 0)
        throw NoFixedPoint("fixed_point_q: fixed point is not orientation reversing");
    return q;
}

struct UncertifiedParameter : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Points near 0 at each level n, and their images near c1. Indices are levels; entries that
// do not exist at a level are left at 0 and flagged by the index ranges below.
struct LevelPoints {
    MapParams params;
    int depth = 0;
    FibSchedule S;
    Real q;
    std::vector<int> side;       // sign of d_n
    std::vector<Real> d;         // 0..N+4
    std::vector<Real> z;         // 0..N+2, on the side of d_{n+2}
    std::vector<Real> u;         // 0..N+2
    std::vector<Real> x;         // 2..N+2
    std::vector<Real> v;         // 2..N+1
    std::vector<Real> y;         // 0..N+2
    std::vector<Interval> T;     // 2..N+1, branch of f^{S_n - 1} around c1
    std::vector<Real> w_f, r_f;  // 2..N+1

    Real t_f(int n) const { return T[static_cast<size_t>(n)].lo; }
    Real f_of(const Real& a) const { return eval(params, a); }
    // copy of |a| on the side s
    static Real on_side(int s, const Real& a) { return s > 0 ? Real(abs(a)) : Real(-abs(a)); }
};

struct Residual {
    std::string name;
    int level;
    Real value;
};

inline LevelPoints compute_level_points(const MapParams& p, int N, bool require_certified = true)
{
    if (N < 2)
        throw std::invalid_argument("compute_level_points: N >= 2 required");
    const unsigned bits = p.precision.mantissa_bits;
    WorkingPrecision wp(bits);
    if (require_certified) {
        FibVerdict fv = check_fibonacci(p, N + 2);
        if (!fv.ok)
            throw UncertifiedParameter("compute_level_points: parameter not certified Fibonacci to depth " +
                                       std::to_string(N + 2));
    }
    LevelPoints L;
    L.params = p;
    L.depth = N;
    L.S = fibonacci_times(N + 4);
    const auto& S = L.S;
    const size_t nd = static_cast<size_t>(N) + 5;
    L.d.resize(nd);
    L.side.resize(nd);
    {
        Stepper s(p);
        s.load(Real(0));
        long t = 0;
        for (size_t n = 0; n < nd; ++n) {
            s.run(S[n] - t);
            t = S[n];
            L.d[n] = s.value();
            L.side[n] = L.d[n] > 0 ? 1 : -1;
        }
    }
    L.q = fixed_point_q(p);
    const Real R = escape_radius(p);
    const Real tiny = ldexp(Real(1), -static_cast<int>(bits / 4));
    const size_t nz = static_cast<size_t>(N) + 3;

    // |z_n|: zero of f^{S_n} on the branch (0, hi) next to the critical point.
    L.z.resize(nz);
    for (size_t n = 0; n < nz; ++n) {
        Interval br = branch_interval(p, S[n], tiny, tiny, R);
        Real m = solve_on_branch(p, S[n], Real(0), Interval{tiny, br.hi});
        L.z[n] = LevelPoints::on_side(L.side[n + 2], m);
    }

    L.u.resize(nz);
    L.x.resize(nz);
    L.u[0] = L.q;
    L.u[1] = -L.q;
    for (size_t n = 2; n < nz; ++n) {
        int s = L.side[n];
        long Tn = S[n - 1];
        Real pz = LevelPoints::on_side(s, L.z[n - 1]);
        Interval br = branch_interval(p, Tn, pz, Real(0), s * R);
        Real toward0 = abs(br.lo) < abs(br.hi) ? br.lo : br.hi;
        Real away = abs(br.lo) < abs(br.hi) ? br.hi : br.lo;
        L.u[n] = solve_on_branch(p, Tn, L.u[n - 1], Interval{pz, toward0});
        L.x[n] = solve_on_branch(p, Tn, -L.u[n - 1], Interval{pz, away});
    }

    L.v.resize(nz);
    for (size_t n = 2; n + 1 < nz; ++n) {
        int s = L.side[n];
        Real start = s * tiny;
        Interval br = branch_interval(p, S[n], start, start, s * R);
        Real far = abs(br.lo) > abs(br.hi) ? br.lo : br.hi;
        L.v[n] = solve_on_branch(p, S[n], LevelPoints::on_side(-s, L.u[n - 1]), Interval{start, far});
    }

    L.y.resize(nz);
    for (size_t n = 0; n < nz; ++n)
        L.y[n] = iterate_to(p, L.d[n + 2], S[n]);

    L.T.resize(nz);
    L.w_f.resize(nz);
    L.r_f.resize(nz);
    for (size_t n = 2; n + 1 < nz; ++n) {
        long Tn = S[n] - 1;
        L.T[n] = branch_interval(p, Tn, p.param, -R, R);
        int s = L.side[n];
        Interval left{L.T[n].lo, p.param};
        L.w_f[n] = solve_on_branch(p, Tn, LevelPoints::on_side(s, L.u[n - 1]), left);
        L.r_f[n] = solve_on_branch(p, Tn, LevelPoints::on_side(s, L.u[n - 2]), left);
    }
    return L;
}

// |f^T(point) - target| for every defining equation, evaluated at `bits` (default: doubled).
inline std::vector<Residual> level_residuals(const LevelPoints& L, unsigned bits = 0)
{
    if (bits == 0)
        bits = 2 * L.params.precision.mantissa_bits;
    MapParams p = L.params.with_precision(Precision::with_bits(bits));
    WorkingPrecision wp(bits);
    std::vector<Residual> out;
    const auto& S = L.S;
    auto res = [&](const std::string& name, int n, const Real& pt, long T, const Real& target) {
        out.push_back({name, n, abs(iterate_to(p, pt, T) - target)});
    };
    const int N = L.depth;
    res("q", 0, L.q, 1, L.q);
    for (int n = 0; n <= N + 2; ++n)
        res("z", n, L.z[n], S[n], Real(0));
    for (int n = 2; n <= N + 2; ++n) {
        res("u", n, L.u[n], S[n - 1], L.u[n - 1]);
        res("x", n, L.x[n], S[n - 1], -L.u[n - 1]);
    }
    for (int n = 2; n <= N + 1; ++n) {
        res("v", n, L.v[n], S[n], LevelPoints::on_side(-L.side[n], L.u[n - 1]));
        res("w_f", n, L.w_f[n], S[n] - 1, LevelPoints::on_side(L.side[n], L.u[n - 1]));
        res("r_f", n, L.r_f[n], S[n] - 1, LevelPoints::on_side(L.side[n], L.u[n - 2]));
    }
    return out;
}

struct OrderCheck {
    int level;
    std::string line; // "top" or "bottom"
    std::string left, right;
    Real gap;         // right - left in the line's orientation
    bool ok;
};

struct OrderingReport {
    std::vector<OrderCheck> pairs;
    bool all_ok = true;
    int first_level = 0, last_level = 0;
};

inline std::vector<std::pair<std::string, Real>> top_line(const LevelPoints& L, int n)
{
    const int s = L.side[n];
    auto U = [&](int k) { return L.u[k]; };
    auto Z = [&](int k) { return LevelPoints::on_side(s, L.z[k]); };
    // u_{n-1} and its mirror trade places with the parity of n
    Real uh1 = n % 2 ? Real(-U(n - 1)) : U(n - 1);
    Real u1 = n % 2 ? U(n - 1) : Real(-U(n - 1));
    return {{"d_{n-4}", L.d[n - 4]}, {"^u_{n-2}", -U(n - 2)}, {"z_{n-2}", Z(n - 2)}, {"^u_{n-1}", uh1},
            {"d_n", L.d[n]},         {"z_{n-1}", Z(n - 1)},   {"y_n", L.y[n]},     {"u_n", U(n)},
            {"d_{n+4}", L.d[n + 4]}, {"c", Real(0)},          {"d_{n+2}", L.d[n + 2]}, {"^u_n", -U(n)},
            {"u_{n-1}", u1},         {"u_{n-2}", U(n - 2)},   {"d_{n-2}", L.d[n - 2]}};
}

// Near c1, ascending.
inline std::vector<std::pair<std::string, Real>> bottom_line(const LevelPoints& L, int n)
{
    auto F = [&](const Real& a) { return L.f_of(a); };
    return {{"t_n^f", L.t_f(n)},           {"r_n^f", L.r_f[n]},         {"t_{n+1}^f", L.t_f(n + 1)},
            {"w_n^f", L.w_f[n]},           {"c_1", L.params.param},     {"z_{n+1}^f", F(L.z[n + 1])},
            {"d_{n+2}^f", F(L.d[n + 2])},  {"u_{n+1}^f", F(L.u[n + 1])}, {"y_{n+1}^f", F(L.y[n + 1])},
            {"z_n^f", F(L.z[n])},          {"d_{n+1}^f", F(L.d[n + 1])}, {"x_{n+1}^f", F(L.x[n + 1])},
            {"v_n^f", F(L.v[n])},          {"u_n^f", F(L.u[n])},         {"z_{n-1}^f", F(L.z[n - 1])}};
}

// Variant orders with z_{n-2} after ^u_{n-1} and t_{n+1}^f after w_n^f; the computed points
// never satisfy them, and the check reports exactly those pairs.
inline std::vector<std::pair<std::string, Real>> top_line_as_drawn(const LevelPoints& L, int n)
{
    auto v = top_line(L, n);
    std::swap(v[2], v[3]);
    return v;
}
inline std::vector<std::pair<std::string, Real>> bottom_line_as_drawn(const LevelPoints& L, int n)
{
    auto v = bottom_line(L, n);
    std::swap(v[2], v[3]);
    return v;
}

inline void check_line(OrderingReport& rep, const std::vector<std::pair<std::string, Real>>& pts, int n,
                       const std::string& line, int orient, const Real& tol)
{
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        Real gap = orient * (pts[i + 1].second - pts[i].second);
        bool ok = gap > 4 * tol;
        rep.pairs.push_back({n, line, pts[i].first, pts[i + 1].first, gap, ok});
        rep.all_ok = rep.all_ok && ok;
    }
}

inline OrderingReport verify_ordering(const LevelPoints& L, int from = 4, int to = -1, bool as_drawn = false)
{
    WorkingPrecision wp(L.params.precision.mantissa_bits);
    OrderingReport rep;
    if (to < 0)
        to = L.depth;
    from = std::max(from, 4);
    rep.first_level = from;
    rep.last_level = to;
    const Real& tol = L.params.precision.abs_tol;
    for (int n = from; n <= to; ++n) {
        // the top line is drawn with d_n on the left
        check_line(rep, as_drawn ? top_line_as_drawn(L, n) : top_line(L, n), n, "top", -L.side[n], tol);
        check_line(rep, as_drawn ? bottom_line_as_drawn(L, n) : bottom_line(L, n), n, "bottom", 1, tol);
    }
    return rep;
}

// Base case of the ordering: c_3 lies between c and the mirror of q.
inline bool base_case_ordering(const LevelPoints& L)
{
    return L.d[2] > 0 && L.d[2] < -L.q;
}

} // namespace fiblab
