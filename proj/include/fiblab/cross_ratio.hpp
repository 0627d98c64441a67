#pragma once

#include "bounds.hpp"

#include <cmath>
#include <random>

namespace fiblab {

struct DegenerateInterval : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct BranchViolation : std::domain_error {
    using std::domain_error::domain_error;
};
struct ZeroDerivative : std::domain_error {
    using std::domain_error::domain_error;
};

// j inside t; l and r are the two components of t \ j. j may be a single point.
template <class S>
struct IntervalPair {
    S t_lo, t_hi, j_lo, j_hi;

    IntervalPair(S a, S b, S c, S d) : t_lo(a), t_hi(b), j_lo(c), j_hi(d)
    {
        if (!(t_lo < j_lo && j_lo <= j_hi && j_hi < t_hi))
            throw DegenerateInterval("IntervalPair: need t_lo < j_lo <= j_hi < t_hi");
    }
    S t() const { return t_hi - t_lo; }
    S j() const { return j_hi - j_lo; }
    S l() const { return j_lo - t_lo; }
    S r() const { return t_hi - j_hi; }
    bool point() const { return j_lo == j_hi; }
};

template <class S>
S cross_ratio_C(const IntervalPair<S>& p)
{
    return (p.t() / p.l()) * (p.j() / p.r());
}

// A map for cross-ratio purposes: value(x) and deriv(x).
template <class S>
struct PowerMap {
    int l;
    S value(const S& x) const
    {
        using std::pow;
        return pow(x, l);
    }
    S deriv(const S& x) const
    {
        using std::pow;
        return l * pow(x, l - 1);
    }
};

// B = C(g(t), g(j)) / C(t, j) for a monotone g. A point j uses |g(j)|/|j| -> |Dg(j)|.
template <class S, class G>
S cross_ratio_B(const G& g, const IntervalPair<S>& p)
{
    using std::abs;
    S T0 = g.value(p.t_lo), T1 = g.value(p.t_hi);
    S J0 = g.value(p.j_lo), J1 = g.value(p.j_hi);
    if (!((T0 < J0 && J0 <= J1 && J1 < T1) || (T0 > J0 && J0 >= J1 && J1 > T1)))
        throw BranchViolation("cross_ratio_B: map is not monotone on the pair");
    S T = abs(T1 - T0), L = abs(J0 - T0), R = abs(T1 - J1);
    S jscale = p.point() ? S(abs(g.deriv(p.j_lo))) : S(abs(J1 - J0) / p.j());
    return (T / p.t()) * jscale * (p.l() * p.r()) / (L * R);
}

struct PurePowerB {
    double value;
    double lower_bound; // l (1 - alpha/gamma)
};

// B(x^l, (0, gamma), {alpha}) in closed form.
inline PurePowerB pure_power_B(int l, double gamma, double alpha)
{
    if (!(0 < alpha && alpha < gamma))
        throw std::domain_error("pure_power_B: need 0 < alpha < gamma");
    double q = alpha / gamma;
    double lb = l * (1 - q);
    // gamma^l / (gamma^l - alpha^l) = 1 / (1 - q^l)
    return {lb / -std::expm1(l * std::log(q)), lb};
}

template <class S>
S pure_power_B_exact(int l, const S& gamma, const S& alpha)
{
    using std::pow;
    if (!(0 < alpha && alpha < gamma))
        throw std::domain_error("pure_power_B: need 0 < alpha < gamma");
    S gl = pow(gamma, l);
    return l * (1 - alpha / gamma) * gl / (gl - pow(alpha, l));
}

// A(g, [a, b]) = (|g(J)|/|J|)^2 / (|Dg(a)| |Dg(b)|).
template <class S, class G>
S cross_ratio_A(const G& g, const S& a, const S& b)
{
    using std::abs;
    if (!(a < b))
        throw DegenerateInterval("cross_ratio_A: need a < b");
    S da = abs(g.deriv(a)), db = abs(g.deriv(b));
    if (da == 0 || db == 0)
        throw ZeroDerivative("cross_ratio_A: zero derivative at an endpoint");
    S q = abs(g.value(b) - g.value(a)) / (b - a);
    return q * q / (da * db);
}

struct AInequality {
    Real lhs, rhs;
    double margin = 0; // lhs/rhs - 1
    bool holds = false;
};

// A(f,T') A(f,T'') >= sqrt(A(f, T' u T'')) for f = x^l, T' = [a, x], T'' = [x, b].
inline AInequality verify_A_inequality(int l, const Real& a, const Real& x, const Real& b)
{
    if (!(a < x && x < b))
        throw std::invalid_argument("verify_A_inequality: need a < x < b");
    if ((a < 0) != (b < 0) || a == 0 || b == 0)
        throw std::invalid_argument("verify_A_inequality: intervals must avoid 0");
    PowerMap<Real> f{l};
    AInequality r;
    r.lhs = cross_ratio_A(f, a, x) * cross_ratio_A(f, x, b);
    r.rhs = sqrt(cross_ratio_A(f, a, b));
    r.margin = (r.lhs / r.rhs - 1).convert_to<double>();
    r.holds = r.lhs >= r.rhs;
    return r;
}

// f^T restricted to a verified monotone domain.
struct MonotoneBranch {
    MapParams params;
    long time = 0;
    Interval domain;

    MonotoneBranch(const MapParams& p, long T, const Interval& dom, bool verify = true)
        : params(p), time(T), domain(dom)
    {
        if (verify && T > 0 && !monotone_on(p, T, dom))
            throw BranchViolation("MonotoneBranch: f^T is not monotone on the domain");
    }
    Real value(const Real& x) const
    {
        check(x);
        return iterate_to(params, x, time);
    }
    Real deriv(const Real& x) const
    {
        check(x);
        return iterate_deriv(params, x, time).second;
    }

private:
    void check(const Real& x) const
    {
        if (x < domain.lo || x > domain.hi)
            throw BranchViolation("MonotoneBranch: point outside the domain");
    }
};

// Branches read off the level points: f on each side of 0, f^{S_{n-1}} on U_n^1,
// f^{S_n} on (0, v_n), f^{S_n - 1} on T_n.
inline std::vector<MonotoneBranch> branches_from_points(const LevelPoints& L, int first = 2, int last = -1)
{
    WorkingPrecision wp(L.params.precision.mantissa_bits);
    if (last < 0)
        last = L.depth;
    std::vector<MonotoneBranch> out;
    const MapParams& p = L.params;
    out.emplace_back(p, 1, Interval{Real(0), abs(L.q)}, false);
    out.emplace_back(p, 1, Interval{-abs(L.q), Real(0)}, false);
    for (int n = first; n <= last; ++n) {
        out.emplace_back(p, L.S[n - 1], detail::sorted(L.u[n], L.x[n]));
        out.emplace_back(p, L.S[n], detail::sorted(Real(0), L.v[n]));
        if (n + 1 <= L.depth + 1)
            out.emplace_back(p, L.S[n] - 1, Interval{L.T[n].lo, L.w_f[n]});
    }
    return out;
}

struct BSweep {
    long samples = 0;
    long violations = 0;
    double min_B = 1e300;
    unsigned long seed = 0;
};

// Random pairs j inside t inside each branch domain; B >= 1 is expected throughout.
inline BSweep random_B_sweep(const std::vector<MonotoneBranch>& branches, long samples, unsigned long seed)
{
    BSweep s;
    s.seed = seed;
    if (branches.empty())
        return s;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (long k = 0; k < samples; ++k) {
        const auto& br = branches[static_cast<size_t>(k) % branches.size()];
        WorkingPrecision wp(br.params.precision.mantissa_bits);
        double c[4];
        for (double& v : c)
            v = U(rng);
        std::sort(c, c + 4);
        // keep the pair strictly nested and away from the precritical endpoints
        Real len = br.domain.hi - br.domain.lo;
        auto at = [&](double s) { return Real(br.domain.lo + len * (0.001 + 0.998 * s)); };
        if (!(c[0] < c[1] && c[1] < c[2] && c[2] < c[3]))
            continue;
        IntervalPair<Real> pr(at(c[0]), at(c[3]), at(c[1]), at(c[2]));
        Real B = cross_ratio_B(br, pr);
        double b = B.convert_to<double>();
        ++s.samples;
        s.min_B = std::min(s.min_B, b);
        if (B < 1)
            ++s.violations;
    }
    return s;
}

struct KoebeReport {
    double tau_measured = 0; // image of the domain contains this scaled neighbourhood of g(j)
    double tau_used = 0;
    double ratio = 0;        // max |Dg(x)| / |Dg(y)| over samples in j
    double bound = 0;        // ((1 + tau)/tau)^2
    bool holds = false;
};

struct ScalingViolation : std::domain_error {
    using std::domain_error::domain_error;
};

// Koebe: if g(domain) contains the tau-scaled neighbourhood of g(j) (the ball of radius
// (1+tau)|g(j)|/2 about its midpoint), derivative ratios on j are at most ((1+tau)/tau)^2.
template <class S, class G>
KoebeReport koebe_distortion_check(const G& g, const S& dom_lo, const S& dom_hi, const S& j_lo, const S& j_hi,
                                   double tau, int samples = 65)
{
    using std::abs;
    using std::max;
    using std::min;
    S a = g.value(dom_lo), b = g.value(dom_hi), c = g.value(j_lo), d = g.value(j_hi);
    S Tlo = min(a, b), Thi = max(a, b), Jlo = min(c, d), Jhi = max(c, d);
    S mid = (Jlo + Jhi) / 2, rad = (Jhi - Jlo) / 2;
    KoebeReport r;
    r.tau_measured = static_cast<double>(min(mid - Tlo, Thi - mid) / rad) - 1;
    if (tau <= 0)
        tau = r.tau_measured;
    if (tau <= 0 || tau > r.tau_measured)
        throw ScalingViolation("koebe_distortion_check: image lacks the requested scaled neighbourhood");
    r.tau_used = tau;
    S lo = S(1e300), hi = S(0);
    for (int i = 0; i < samples; ++i) {
        S x = j_lo + (j_hi - j_lo) * S(i) / S(samples - 1);
        S dv = abs(g.deriv(x));
        lo = min(lo, dv);
        hi = max(hi, dv);
    }
    r.ratio = static_cast<double>(hi / lo);
    r.bound = ((1 + tau) / tau) * ((1 + tau) / tau);
    r.holds = r.ratio <= r.bound;
    return r;
}

} // namespace fiblab
