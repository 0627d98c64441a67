#pragma once

#include "bounds.hpp"
#include "profile.hpp"
#include "pullback.hpp"

#include <optional>

namespace fiblab {

struct PreconditionViolation : std::runtime_error {
    int level;
    PreconditionViolation(const std::string& what, int n) : std::runtime_error(what + " (level " + std::to_string(n) + ")"), level(n) {}
};

struct LadderOptions {
    int k0 = -1;                  // -1: choose_k0
    int levels_past_k0 = 8;       // build D_n for n = k0 - 2 .. k0 + levels_past_k0
    size_t disc_samples = 512;    // upper-arc samples of the initial round discs
    size_t lift_samples = 1024;   // full boundary samples of D_n^f before the root lift
    size_t arc_samples = 2048;    // upper-arc samples kept for D_n and D_n^1
    unsigned bits = 192;
    size_t consistency_samples = 48;
    PullbackOptions pullback;
};

struct DiscLevel {
    int n = 0;
    Region D, D1;
    std::optional<Region> Df; // D_n^f, local coordinates around c1 (lifted levels only)
    double area = 0, area1 = 0;
    // D_n
    double trace_error = 0;         // real endpoints against u_{n-1}, -u_{n-1}, relative
    bool trace_ok = false;          // endpoints match and the open arc avoids the real line
    double dstar_excess = 0;        // max |z| / |u_{n-1}| - 1
    bool in_dstar = false;
    std::optional<ContainmentReport> nested; // closure(D_n) in D_{n-1}
    double rotation_defect = 0;
    bool rotation_ok = false;
    // D_n^1
    double trace1_error = 0;
    bool trace1_ok = false;
    double dstar1_excess = 0;       // max over the boundary of |z - m| / r - 1 for D_*(u_n, x_n)
    bool in_dstar1 = false;
    // forward images, relative to the target diameter
    double forward_D1 = 0;          // f^{S_{n-1}}(bd D_n^1) on bd D_n
    double forward_Df_D1 = 0;       // f^{S_{n-2}-1}(bd D_n^f) on bd D_{n-2}^1
    double forward_Df_D = 0;        // f^{S_{n-1}-1}(bd D_n^f) on bd D_{n-2}
    double forward_tol = 0;         // target sampling resolution / diameter
    bool forward_ok = false;
    double precondition_ratio = 0;  // |r_{n-1}^f - c1| / |u_{n-1}^f - c1|
    PullbackStats stats1, statsf;
    // star
    double kappa = 0;               // largest kappa with S_kappa(|z_n|, |y_n|) in D_n (bisection)
    bool star_ok = false;           // |z_n| < |y_n| < |u_{n-1}| and kappa > 0
};

struct DiscLadder {
    int degree = 0;
    int k0 = 0;
    std::vector<DiscLevel> levels;
    bool all_ok() const;
};

struct AnnulusReport {
    std::vector<int> n;
    std::vector<double> annulus;    // |D_n \ D_{n+1}|
    std::vector<double> tau;        // l |D_n \ D_{n+1}| / |D_n|
    double tau_min = 0, tau_max = 0;
    double tau_spread = 0;          // (max - min) / min
    LineFit fit;                    // log(|D_{n0+i} \ D_{n0+i+1}| / |D_{n0}|) against i
    double rate = 0;                // exp(slope), per index step
    double model_rate = 0;          // exp(-1/l)
    double C_min = 0, C_max = 0;    // range of the ratio to e^{-i/l}/l
};

namespace detail {

// max over sampled boundary points of dist(f^T(point), target boundary) / target diameter.
inline double forward_defect(const MapParams& p, long T, const Region& src, const Region& target, size_t samples, unsigned bits)
{
    WorkingPrecision wp(bits);
    LocalIterate g{&p, T, bits, src.origin, src.scale, target.origin, target.scale};
    EdgeIndex idx(target.boundary);
    double diam = 0;
    for (size_t k = 0; k < target.size(); ++k)
        diam = std::max(diam, std::abs(target.boundary[k] - target.boundary[0]));
    double d = 0;
    size_t stride = std::max<size_t>(1, src.size() / samples);
    for (size_t k = 0; k < src.size(); k += stride)
        d = std::max(d, idx.distance(g(src.boundary[k]).value));
    return d / diam;
}

// {z : z^l in rho D}: D given by its closed boundary around 0 in local coordinates, lifted with
// the continuous argument; returns the upper arc of the lift (angles 0 .. pi).
inline std::vector<Cplx> root_lift_arc(const std::vector<Cplx>& closed, int l, double radius)
{
    std::vector<double> rho, theta;
    double th = 0;
    for (size_t k = 0; k < closed.size(); ++k) {
        if (k > 0)
            th += std::arg(closed[k] / closed[k - 1]);
        rho.push_back(std::abs(closed[k]));
        theta.push_back(th);
    }
    if (std::fabs(theta.back() - 2 * std::numbers::pi) > 1e-6)
        throw GeometryError("root_lift: boundary does not wind once around the critical value");
    theta.back() = 2 * std::numbers::pi;
    std::vector<Cplx> arc;
    for (int k = 0; k < l / 2; ++k)
        for (size_t j = (k == 0 ? 0 : 1); j < closed.size(); ++j)
            arc.push_back(std::polar(radius * std::pow(rho[j], 1.0 / l), (theta[j] + 2 * std::numbers::pi * k) / l));
    arc.front() = {radius * std::pow(rho.front(), 1.0 / l), 0.0};
    arc.back() = {-radius * std::pow(rho.back(), 1.0 / l), 0.0};
    return arc;
}

inline bool star_fits(const Region& D, double kappa, double z, double y, int l)
{
    // by the rotation symmetry of D it is enough to test the pieces of sector 0
    auto pieces = star_region(kappa, z, y, l);
    double h = resolution(D.boundary);
    EdgeIndex idx(D.boundary);
    for (size_t k = 0; k < 2; ++k) {
        auto pts = densify(pieces[k].boundary, h);
        for (auto q : pts)
            if (!idx.inside(q) || idx.distance(q) <= 10 * h)
                return false;
    }
    return true;
}

} // namespace detail

// Largest kappa (to 1e-4) with S_kappa(z, y) inside D; 0 if none.
inline double contains_star_kappa(const Region& D, double z, double y, int l)
{
    double lo = 0, hi = std::numbers::pi / 2 - 1e-9;
    if (!detail::star_fits(D, 1e-6, z, y, l))
        return 0;
    while (hi - lo > 1e-4) {
        double mid = (lo + hi) / 2;
        (detail::star_fits(D, mid, z, y, l) ? lo : hi) = mid;
    }
    return lo;
}

inline bool DiscLadder::all_ok() const
{
    for (const auto& lv : levels) {
        bool ok = lv.trace_ok && lv.in_dstar && lv.rotation_ok && lv.trace1_ok && lv.in_dstar1 && lv.forward_ok;
        if (lv.nested && lv.nested->verdict != Containment::Contained)
            ok = false;
        if (!ok)
            return false;
    }
    return true;
}

inline DiscLadder build_nested_discs(const LevelPoints& L, const LadderOptions& opt = {})
{
    const MapParams& p = L.params;
    const int l = p.degree;
    DiscLadder lad;
    lad.degree = l;
    lad.k0 = opt.k0 > 0 ? opt.k0 : choose_k0(L);
    if (lad.k0 < 3)
        throw PreconditionViolation("build_nested_discs: no level with |r^f - c1| < |u^f - c1|", lad.k0);
    const int last = lad.k0 + opt.levels_past_k0;
    if (last + 1 > L.depth + 1)
        throw InsufficientDepth("build_nested_discs: level points too shallow for the requested ladder");
    PullbackOptions po = opt.pullback;
    po.bits = opt.bits;
    po.out_samples = opt.arc_samples;
    WorkingPrecision wp(opt.bits);
    auto dbl = [](const Real& x) { return x.convert_to<double>(); };
    auto level_of = [&](int n) -> DiscLevel& { return lad.levels[static_cast<size_t>(n - (lad.k0 - 2))]; };

    for (int n = lad.k0 - 2; n <= last; ++n) {
        DiscLevel lv;
        lv.n = n;
        const double R = std::fabs(dbl(L.u[n - 1]));
        if (n < lad.k0) {
            lv.D = euclid_disc(0.0, R, static_cast<int>(opt.disc_samples));
        } else {
            // D_n^f: pullback of D_{n-2}^1 under f^{S_{n-2}-1}, around c1 in units of |u_{n-1}|^l
            const DiscLevel& prev = level_of(n - 2);
            Real s = pow(abs(L.u[n - 1]), l);
            Real zr = (L.r_f[n - 1] - p.param) / s;
            lv.precondition_ratio = std::fabs(dbl(zr));
            if (!(lv.precondition_ratio < 1))
                throw PreconditionViolation("build_nested_discs: |r^f - c1| >= |u^f - c1|", n);
            PullbackOptions pf = po;
            pf.out_samples = opt.lift_samples / 2 + 1;
            lv.Df = pullback_diffeo(p, L.S[n - 2] - 1, prev.D1, p.param, s, Cplx(1.0, 0.0), Cplx(dbl(zr), 0.0), pf,
                                    &lv.statsf);
            lv.Df->level = n;
            lv.Df->label = "Df" + std::to_string(n);
            auto arc = detail::root_lift_arc(lv.Df->boundary, l, R);
            lv.D = region_from_upper_arc(RegionKind::RootLift, resample_arc(arc, opt.arc_samples));
        }
        lv.D.level = n;
        lv.D.label = "D" + std::to_string(n);
        // D_n^1: pullback of D_n under f^{S_{n-1}} through (u_n, x_n)
        lv.D1 = pullback_diffeo(p, L.S[n - 1], lv.D, Real(0), Real(1), Cplx(dbl(L.u[n]), 0), Cplx(dbl(L.x[n]), 0), po,
                                &lv.stats1);
        lv.D1.level = n;
        lv.D1.label = "D1_" + std::to_string(n);
        lv.area = region_area(lv.D);
        lv.area1 = region_area(lv.D1);

        // real trace and D_*(u_{n-1}, -u_{n-1})
        const auto& b = lv.D.boundary;
        lv.trace_error = std::max(std::fabs(b.front().real() - R), std::fabs(b[lv.D.arc_end].real() + R)) / R;
        bool open_arc = true;
        for (size_t k = 1; k < lv.D.arc_end; ++k)
            open_arc = open_arc && b[k].imag() > 0;
        lv.trace_ok = open_arc && lv.trace_error < 1e-9;
        double rmax = 0;
        for (auto q : b)
            rmax = std::max(rmax, std::abs(q));
        lv.dstar_excess = rmax / R - 1;
        lv.in_dstar = lv.dstar_excess <= 1e-9;
        // nesting and rotation
        if (n > lad.k0 - 2)
            lv.nested = region_contains(level_of(n - 1).D, lv.D);
        lv.rotation_defect = rotation_defect(lv.D, l);
        lv.rotation_ok = lv.rotation_defect <= resolution(lv.D.boundary) / (2 * R);
        // D_n^1: real trace (u_n, x_n) and D_* containment
        {
            double un = dbl(L.u[n]), xn = dbl(L.x[n]);
            double hi = std::max(un, xn), lo = std::min(un, xn);
            const auto& c = lv.D1.boundary;
            lv.trace1_error = std::max(std::fabs(c.front().real() - hi), std::fabs(c[lv.D1.arc_end].real() - lo)) / (hi - lo);
            lv.trace1_ok = lv.trace1_error < 1e-9;
            double m = (hi + lo) / 2, r = (hi - lo) / 2, ex = -1;
            for (auto q : c)
                ex = std::max(ex, std::abs(q - m) / r - 1);
            lv.dstar1_excess = ex;
            lv.in_dstar1 = ex <= 1e-9;
        }
        // forward images land on the target boundaries
        {
            auto rel_res = [](const Region& r) {
                double d = 0;
                for (auto q : r.boundary)
                    d = std::max(d, std::abs(q - r.boundary[0]));
                return resolution(r.boundary) / d;
            };
            lv.forward_tol = rel_res(lv.D);
            if (lv.Df)
                lv.forward_tol = std::max({lv.forward_tol, rel_res(level_of(n - 2).D1), rel_res(level_of(n - 2).D)});
        }
        lv.forward_D1 = detail::forward_defect(p, L.S[n - 1], lv.D1, lv.D, opt.consistency_samples, opt.bits);
        if (lv.Df) {
            lv.forward_Df_D1 = detail::forward_defect(p, L.S[n - 2] - 1, *lv.Df, level_of(n - 2).D1, opt.consistency_samples, opt.bits);
            lv.forward_Df_D = detail::forward_defect(p, L.S[n - 1] - 1, *lv.Df, level_of(n - 2).D, opt.consistency_samples, opt.bits);
        }
        // within one sampling step of the target boundary (the arcs are resampled linearly)
        lv.forward_ok = std::max({lv.forward_D1, lv.forward_Df_D1, lv.forward_Df_D}) <= lv.forward_tol;
        // star
        double zn = std::fabs(dbl(L.z[n])), yn = std::fabs(dbl(L.y[n]));
        if (zn < yn && yn < R) {
            lv.kappa = contains_star_kappa(lv.D, zn, yn, l);
            lv.star_ok = lv.kappa > 0;
        }
        lad.levels.push_back(std::move(lv));
    }
    return lad;
}

inline AnnulusReport annulus_report(const DiscLadder& lad)
{
    AnnulusReport rep;
    const double l = lad.degree;
    rep.model_rate = std::exp(-1 / l);
    const auto& L = lad.levels;
    rep.tau_min = 1e300;
    size_t first = L.size();
    for (size_t k = 0; k + 1 < L.size(); ++k) {
        double a = L[k].area - L[k + 1].area;
        rep.n.push_back(L[k].n);
        rep.annulus.push_back(a);
        rep.tau.push_back(l * a / L[k].area);
        if (L[k].n >= lad.k0 && first == L.size())
            first = k;
    }
    for (double t : rep.tau) {
        rep.tau_min = std::min(rep.tau_min, t);
        rep.tau_max = std::max(rep.tau_max, t);
    }
    rep.tau_spread = rep.tau.empty() ? 0 : (rep.tau_max - rep.tau_min) / rep.tau_min;
    // fit over the lifted levels
    std::vector<double> xs, ys;
    rep.C_min = 1e300;
    if (first < rep.annulus.size()) {
        const double base = L[first].area;
        for (size_t k = first; k < rep.annulus.size(); ++k) {
            double i = static_cast<double>(k - first);
            double y = rep.annulus[k] / base;
            xs.push_back(i);
            ys.push_back(std::log(y));
            double C = y / (std::exp(-i / l) / l);
            rep.C_min = std::min(rep.C_min, C);
            rep.C_max = std::max(rep.C_max, C);
        }
    }
    rep.fit = fit_line(xs, ys);
    rep.rate = std::exp(rep.fit.slope);
    return rep;
}

} // namespace fiblab
