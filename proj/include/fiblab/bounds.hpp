#pragma once

#include "level_points.hpp"

#include <algorithm>

namespace fiblab {

struct BoundsRow {
    int n;
    // |p^f - c1| = |p|^l for the chain d_{n+1} < u_n < z_{n-1} < d_n
    Real d_next, u, z_prev, d;
    bool chain_ok;
    double ratio_d2 = 0;    // |d_{n-2}^f - c1| / |d_n^f - c1|
    double ratio_d4 = 0;    // |d_{n-4}^f - c1| / |d_n^f - c1|
    double ratio_43 = 0;    // |u_{n-1}^f - c1| / |w_n^f - c1|
    double double_ratio = 0; // (|d_n|/|d_{n-2}|) / (|d_{n-2}|/|d_{n-4}|)
    double u_ratio = 0;     // |u_n| / |u_{n+1}|
    double r_over_u = 0;    // |r_n^f - c1| / |u_n^f - c1|
};

struct BoundsReport {
    int degree = 0;
    int first_level = 0, last_level = 0;
    std::vector<BoundsRow> rows;
    double lambda = 1, mu = 0; // extreme consecutive ratios along the chains
    bool chain_ok = true;
    bool ge_3_85 = true, ge_14 = true, ge_4_3 = true;
    bool u_ratio_increasing = true;
    double deepest_double_ratio = 0;
    double worst_3_85 = 1e300, worst_14 = 1e300, worst_4_3 = 1e300;
};

// Ratios near c1 are powers of the ratios near 0: |p^f - c1| = |p|^l.
inline BoundsReport real_bounds_report(const LevelPoints& L, int first = 4, int last = -1)
{
    WorkingPrecision wp(L.params.precision.mantissa_bits);
    const int l = L.params.degree;
    if (last < 0)
        last = L.depth;
    first = std::max(first, 4);
    BoundsReport rep;
    rep.degree = l;
    rep.first_level = first;
    rep.last_level = last;
    auto P = [&](const Real& a) { return Real(pow(abs(a), l)); };
    auto dbl = [](const Real& a) { return a.convert_to<double>(); };
    for (int n = first; n <= last; ++n) {
        BoundsRow r;
        r.n = n;
        r.d_next = P(L.d[n + 1]);
        r.u = P(L.u[n]);
        r.z_prev = P(L.z[n - 1]);
        r.d = P(L.d[n]);
        r.chain_ok = r.d_next < r.u && r.u < r.z_prev && r.z_prev < r.d;
        for (double q : {dbl(r.d_next / r.u), dbl(r.u / r.z_prev), dbl(r.z_prev / r.d)}) {
            rep.lambda = std::min(rep.lambda, q);
            rep.mu = std::max(rep.mu, q);
        }
        r.ratio_d2 = dbl(P(L.d[n - 2]) / r.d);
        r.ratio_d4 = dbl(P(L.d[n - 4]) / r.d);
        r.ratio_43 = dbl(P(L.u[n - 1]) / abs(L.w_f[n] - L.params.param));
        r.double_ratio = dbl((abs(L.d[n]) / abs(L.d[n - 2])) / (abs(L.d[n - 2]) / abs(L.d[n - 4])));
        r.u_ratio = dbl(abs(L.u[n]) / abs(L.u[n + 1]));
        r.r_over_u = dbl(abs(L.r_f[n] - L.params.param) / r.u);
        rep.chain_ok = rep.chain_ok && r.chain_ok;
        rep.ge_3_85 = rep.ge_3_85 && r.ratio_d2 >= 3.85;
        rep.ge_14 = rep.ge_14 && r.ratio_d4 >= 14;
        rep.ge_4_3 = rep.ge_4_3 && r.ratio_43 >= 4.0 / 3.0;
        rep.worst_3_85 = std::min(rep.worst_3_85, r.ratio_d2);
        rep.worst_14 = std::min(rep.worst_14, r.ratio_d4);
        rep.worst_4_3 = std::min(rep.worst_4_3, r.ratio_43);
        if (!rep.rows.empty() && !(r.u_ratio > rep.rows.back().u_ratio))
            rep.u_ratio_increasing = false;
        rep.rows.push_back(r);
    }
    if (!rep.rows.empty())
        rep.deepest_double_ratio = rep.rows.back().double_ratio;
    return rep;
}

// Smallest level from which |r_n^f - c1| < |u_n^f - c1| holds at every deeper computed level.
inline int choose_k0(const LevelPoints& L, int min_level = 4)
{
    int k0 = -1;
    for (int n = L.depth + 1; n >= 2; --n) {
        Real r = abs(L.r_f[n] - L.params.param), u = pow(abs(L.u[n]), L.params.degree);
        if (r < u)
            k0 = n;
        else
            break;
    }
    return k0 < 0 ? -1 : std::max(k0, min_level);
}

struct CoveringFn {
    int generation = 0;
    std::vector<Interval> intervals; // sorted, lo < hi
};

struct OverlapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline Interval sorted(const Real& a, const Real& b) { return a < b ? Interval{a, b} : Interval{b, a}; }

// Open intervals may share an endpoint (this happens at n = 2, where v_2 = u_2); anything
// beyond a shared endpoint at tolerance tol is an overlap.
inline void sort_and_check(std::vector<Interval>& v, const Real& tol)
{
    std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    for (size_t i = 0; i + 1 < v.size(); ++i)
        if (v[i].hi - v[i + 1].lo > tol)
            throw OverlapError("covering: intervals overlap");
}

} // namespace detail

// F_n: {U_n^0, U_n^1} pulled back through f^{S_{k-1}} on U_k^1 for k = n..2, then through
// the branch W of f that maps onto U_2 on the side of c1.
inline CoveringFn covering_Fn(const LevelPoints& L, int n)
{
    if (n < 2 || n > L.depth + 1)
        throw std::invalid_argument("covering_Fn: level outside computed range");
    const MapParams& p = L.params;
    WorkingPrecision wp(p.precision.mantissa_bits);
    std::vector<Interval> F{detail::sorted(-abs(L.v[n]), abs(L.v[n])), detail::sorted(L.u[n], L.x[n])};
    for (int k = n - 1; k >= 2; --k) {
        // branch f^{S_{k-1}} : U_k^1 = (u_k, x_k) -> U_k
        Interval br{L.u[k], L.x[k]};
        long T = L.S[k - 1];
        std::vector<Interval> pulled;
        for (const auto& J : F) {
            Real a = solve_on_branch(p, T, J.lo, br);
            Real b = solve_on_branch(p, T, J.hi, br);
            pulled.push_back(detail::sorted(a, b));
        }
        F.insert(F.end(), pulled.begin(), pulled.end());
        detail::sort_and_check(F, p.precision.abs_tol);
    }
    // f|W onto U_2: the negative branch y = -(x - c1)^(1/l)
    std::vector<Interval> pulled;
    Real inv_l = Real(1) / p.degree;
    for (const auto& J : F)
        pulled.push_back(detail::sorted(-pow(J.lo - p.param, inv_l), -pow(J.hi - p.param, inv_l)));
    F.insert(F.end(), pulled.begin(), pulled.end());
    detail::sort_and_check(F, p.precision.abs_tol);
    return {n, F};
}

struct CoveringChecks {
    bool count_ok = true;          // 2^n components
    bool two_children = true;      // each component of F_n holds exactly two of F_{n+1}
    bool orbit_covered = true;     // critical orbit points in U_n lie in the union
    long orbit_points_checked = 0;
};

inline CoveringChecks check_coverings(const LevelPoints& L, const CoveringFn& Fn, const CoveringFn* Fnext,
                                      long orbit_length)
{
    WorkingPrecision wp(L.params.precision.mantissa_bits);
    CoveringChecks c;
    c.count_ok = Fn.intervals.size() == (size_t{1} << Fn.generation);
    if (Fnext) {
        for (const auto& I : Fn.intervals) {
            int inside = 0;
            for (const auto& J : Fnext->intervals)
                if (I.lo <= J.lo && J.hi <= I.hi)
                    ++inside;
            c.two_children = c.two_children && inside == 2;
        }
    }
    const int n = Fn.generation;
    Real un = abs(L.u[n - 1]);
    Stepper s(L.params);
    s.load(Real(0));
    for (long k = 1; k <= orbit_length; ++k) {
        s.step();
        Real x = s.value();
        if (abs(x) >= un)
            continue;
        ++c.orbit_points_checked;
        auto it = std::upper_bound(Fn.intervals.begin(), Fn.intervals.end(), x,
                                   [](const Real& a, const Interval& I) { return a < I.lo; });
        bool in = it != Fn.intervals.begin() && x <= std::prev(it)->hi;
        c.orbit_covered = c.orbit_covered && in;
    }
    return c;
}

struct GeometryStats {
    double min_ratio = 1, max_ratio = 0;
    double mu = 0; // all ratios lie in (1 - mu, mu)
    std::vector<std::pair<int, std::pair<double, double>>> per_generation; // gen -> (min, max)
};

// Child/parent length ratios for pieces and gaps between consecutive generations.
inline GeometryStats bounded_geometry_stats(const std::vector<CoveringFn>& gens)
{
    GeometryStats g;
    for (size_t i = 0; i + 1 < gens.size(); ++i) {
        double lo = 1, hi = 0;
        for (const auto& I : gens[i].intervals) {
            std::vector<const Interval*> kids;
            for (const auto& J : gens[i + 1].intervals)
                if (I.lo <= J.lo && J.hi <= I.hi)
                    kids.push_back(&J);
            if (kids.size() != 2)
                continue;
            double len = (I.hi - I.lo).convert_to<double>();
            double r1 = (kids[0]->hi - kids[0]->lo).convert_to<double>() / len;
            double r2 = (kids[1]->hi - kids[1]->lo).convert_to<double>() / len;
            double gap = (kids[1]->lo - kids[0]->hi).convert_to<double>() / len;
            for (double r : {r1, r2, gap}) {
                lo = std::min(lo, r);
                hi = std::max(hi, r);
            }
        }
        g.per_generation.push_back({gens[i].generation, {lo, hi}});
        g.min_ratio = std::min(g.min_ratio, lo);
        g.max_ratio = std::max(g.max_ratio, hi);
    }
    if (!g.per_generation.empty())
        g.mu = std::max(g.max_ratio, 1 - g.min_ratio);
    return g;
}

} // namespace fiblab
