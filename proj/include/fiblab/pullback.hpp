#pragma once

#include "region.hpp"

namespace fiblab {

struct ContinuationDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CriticalCollision : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PullbackOptions {
    unsigned bits = 192;
    double newton_tol = 1e-13;   // residual, relative to the target diameter
    double max_gap = 0.01;       // max distance of consecutive preimages, relative to the seed interval
    int max_split_depth = 30;
    size_t out_samples = 0;      // resample the upper arc of the result (0: keep adaptive samples)
};

struct PullbackStats {
    size_t evaluations = 0;
    size_t splits = 0;
    double min_orbit_modulus = 1e300;
    double max_residual = 0;
    double endpoint_error = 0;   // |end of continuation - second real preimage| / seed interval
};

namespace detail {

struct Continuation {
    LocalIterate g;
    PullbackOptions opt;
    double tol = 0, gap = 0;
    PullbackStats* stats = nullptr;
    std::vector<Cplx> out;
    std::vector<Cplx> orbit_prev, orbit_cur; // f^k of the last accepted preimage, for the winding check
    std::vector<double> winding;             // accumulated arg change of f^k along the arc

    LocalIterate::Result eval(Cplx z)
    {
        ++stats->evaluations;
        return g(z);
    }

    // Damped Newton for g(z) = w from z0.
    bool newton(Cplx& z, Cplx w, double& resid)
    {
        auto r = eval(z);
        resid = std::abs(r.value - w);
        for (int it = 0; it < 40 && resid > tol; ++it) {
            if (!r.finite || r.deriv == 0.0)
                return false;
            Cplx step = (r.value - w) / r.deriv;
            double lambda = 1;
            bool improved = false;
            for (int h = 0; h < 12; ++h, lambda /= 2) {
                auto r2 = eval(z - lambda * step);
                double res2 = std::abs(r2.value - w);
                if (r2.finite && res2 < resid) {
                    z -= lambda * step;
                    r = r2;
                    resid = res2;
                    improved = true;
                    break;
                }
            }
            if (!improved)
                return false;
        }
        return resid <= tol;
    }

    void record_orbit(Cplx z)
    {
        ComplexStepper s(*g.params, g.bits);
        s.load(g.src_origin, g.src_scale, z);
        orbit_cur.resize(static_cast<size_t>(g.T));
        for (long k = 0; k < g.T; ++k) {
            orbit_cur[static_cast<size_t>(k)] = s.value_in(Real(0), Real(1));
            stats->min_orbit_modulus = std::min(stats->min_orbit_modulus, s.step());
        }
        if (!orbit_prev.empty())
            for (size_t k = 0; k < orbit_cur.size(); ++k)
                winding[k] += std::arg(orbit_cur[k] / orbit_prev[k]);
        orbit_prev.swap(orbit_cur);
    }

    // Moves the preimage z (of w_from) to a preimage of w_to, splitting the target segment when
    // Newton fails or the step leaves the range of the linear prediction.
    void advance(Cplx& z, Cplx w_from, Cplx w_to, int depth)
    {
        auto r = eval(z);
        Cplx pred = z + (w_to - w_from) / r.deriv;
        Cplx cand = pred;
        double resid = 0;
        bool ok = r.finite && r.deriv != 0.0 && newton(cand, w_to, resid);
        if (ok) {
            double dz = std::abs(pred - z);
            ok = std::abs(cand - pred) <= 0.25 * dz + 1e-3 * gap && std::abs(cand - z) <= gap;
        }
        if (!ok) {
            if (depth >= opt.max_split_depth)
                throw ContinuationDivergence("pullback: continuation failed after repeated splitting");
            ++stats->splits;
            Cplx mid = 0.5 * (w_from + w_to);
            advance(z, w_from, mid, depth + 1);
            advance(z, mid, w_to, depth + 1);
            return;
        }
        z = cand;
        stats->max_residual = std::max(stats->max_residual, resid);
        out.push_back(z);
        record_orbit(z);
    }
};

} // namespace detail

// The component of (f^T)^{-1}(target) through the real interval with endpoints pre_a, pre_b
// (source local coordinates) that f^T maps onto the target's real trace. The target's upper
// arc is followed by continuation from the preimage of its right endpoint; the result must end
// at the preimage of the left endpoint, and no forward image f^k, k < T, of the new boundary
// may wind around the critical point.
inline Region pullback_diffeo(const MapParams& p, long T, const Region& target, const Real& src_origin,
                              const Real& src_scale, Cplx pre_a, Cplx pre_b, const PullbackOptions& opt = {},
                              PullbackStats* stats_out = nullptr)
{
    if (T == 0)
        return target;
    if (T < 0)
        throw std::invalid_argument("pullback_diffeo: T >= 0");
    PullbackStats stats;
    WorkingPrecision wp(opt.bits);
    detail::Continuation C;
    C.g.params = &p;
    C.g.T = T;
    C.g.bits = opt.bits;
    C.g.src_origin = src_origin;
    C.g.src_scale = src_scale;
    C.g.dst_origin = target.origin;
    C.g.dst_scale = target.scale;
    C.opt = opt;
    C.stats = &stats;
    C.winding.assign(static_cast<size_t>(T), 0.0);

    const auto arc = target.upper_arc();
    double diam = std::abs(arc.front() - arc.back());
    C.tol = opt.newton_tol * diam;
    C.gap = opt.max_gap * std::abs(pre_a - pre_b);

    // Which real preimage belongs to the right endpoint of the target.
    auto ga = C.eval(pre_a), gb = C.eval(pre_b);
    if (std::abs(ga.value - arc.front()) > std::abs(gb.value - arc.front()))
        std::swap(pre_a, pre_b);
    Cplx z = pre_a, end = pre_b;
    double resid = 0;
    if (!C.newton(z, arc.front(), resid) || !C.newton(end, arc.back(), resid))
        throw ContinuationDivergence("pullback: real seeds do not map to the target's real endpoints");
    z = {z.real(), 0.0};
    end = {end.real(), 0.0};
    C.out.push_back(z);
    C.record_orbit(z);
    for (size_t j = 1; j < arc.size(); ++j)
        C.advance(z, arc[j - 1], arc[j], 0);

    stats.endpoint_error = std::abs(C.out.back() - end) / std::abs(pre_a - pre_b);
    if (stats.endpoint_error > 1e-8)
        throw CriticalCollision("pullback: continuation ended on another branch");
    C.out.back() = end;
    for (size_t k = 0; k < C.winding.size(); ++k)
        if (std::fabs(C.winding[k]) > std::numbers::pi / 2)
            throw CriticalCollision("pullback: forward image " + std::to_string(k) + " surrounds the critical point");

    std::vector<Cplx> pre = C.out;
    double mean_im = 0;
    for (auto q : pre)
        mean_im += q.imag();
    if (mean_im < 0)
        for (auto& q : pre)
            q = std::conj(q);
    if (pre.front().real() < pre.back().real())
        std::reverse(pre.begin(), pre.end());
    for (size_t k = 1; k + 1 < pre.size(); ++k)
        if (!(pre[k].imag() > 0))
            throw GeometryError("pullback: preimage arc meets the real line");
    if (opt.out_samples > 0)
        pre = resample_arc(pre, opt.out_samples);
    Region r = region_from_upper_arc(RegionKind::Pullback, pre, src_origin, src_scale);
    if (stats_out)
        *stats_out = stats;
    return r;
}

} // namespace fiblab
