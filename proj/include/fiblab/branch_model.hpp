#pragma once

#include "flow.hpp"
#include "level_points.hpp"

#include <boost/math/tools/minima.hpp>

namespace fiblab {

struct BranchModelLevel {
    int n = 0;
    double K = 0;
    double value_dev = 0;  // max |f^{S_{n-2}} / (L o Gamma o H) - 1| on the grid
    double deriv_dev = 0;  // max |Df^{S_{n-2}} / D(L o Gamma o H) - 1|
    double anchor_dev = 0; // deviation at the frame anchors z_{n-2} -> 0 and u_{n-1} -> u_{n-2}
    double h_left = 0;     // H(x_{n-1}); the model assumes about -1
};

struct BranchModelReport {
    int degree = 0;
    int parity = 0;
    std::vector<BranchModelLevel> levels;
    double K_spread = 0;          // (max K - min K) / min K
    bool deviation_decreasing = false;
    double final_deviation = 0;
};

namespace detail {

struct SampledBranch {
    std::vector<double> h, value, deriv; // in the normalized coordinates
};

// f^{S_{n-2}} on T_{n-1}, with H(x) = (x - z)/(u_{n-1} - z) and values divided by f(u_{n-1}) = u_{n-2}.
// Dividing by the signed quantities folds the orientation of the branch into the frame, so the
// model is Gamma itself for both parity classes.
inline SampledBranch sample_branch(const LevelPoints& L, int n, int grid, Real& z, Real& hl)
{
    const MapParams& p = L.params;
    WorkingPrecision wp(p.precision.mantissa_bits);
    const long T = L.S[static_cast<size_t>(n - 2)];
    z = LevelPoints::on_side(L.side[n - 1], L.z[n - 2]);
    Real span = L.u[n - 1] - z;
    Real U = iterate_to(p, L.u[n - 1], T);
    hl = (L.x[n - 1] - z) / span;
    SampledBranch s;
    for (int k = 0; k < grid; ++k) {
        Real h = hl + (1 - hl) * k / (grid - 1);
        if (abs(h) < Real(1e-9))
            continue;
        auto [v, d] = iterate_deriv(p, z + h * span, T);
        s.h.push_back(h.convert_to<double>());
        s.value.push_back((v / U).convert_to<double>());
        s.deriv.push_back((d * span / U).convert_to<double>());
    }
    return s;
}

inline double value_deviation(const SampledBranch& s, double K, double l)
{
    double d = 0;
    for (size_t k = 0; k < s.h.size(); ++k)
        d = std::max(d, std::fabs(s.value[k] / gamma_map(K, l, s.h[k]) - 1));
    return d;
}

inline double deriv_deviation(const SampledBranch& s, double K, double l)
{
    double d = 0;
    for (size_t k = 0; k < s.h.size(); ++k)
        d = std::max(d, std::fabs(s.deriv[k] / gamma_deriv(K, l, s.h[k]) - 1));
    return d;
}

} // namespace detail

// Fits K by minimizing the max value deviation: a log-spaced scan, then Brent refinement
// around the best scan point.
inline BranchModelLevel fit_branch_model_level(const LevelPoints& L, int n, int grid = 201)
{
    if (n < 4 || n > L.depth + 3)
        throw std::invalid_argument("verify_branch_model: level needs points to depth n - 3");
    const double l = L.params.degree;
    Real z, hl;
    auto s = detail::sample_branch(L, n, grid, z, hl);
    auto obj = [&](double logK) { return detail::value_deviation(s, std::exp(logK), l); };
    double best = -7, bestv = obj(best);
    for (double g = -7; g <= 7; g += 0.1) {
        double v = obj(g);
        if (v < bestv) {
            bestv = v;
            best = g;
        }
    }
    auto r = boost::math::tools::brent_find_minima(obj, best - 0.1, best + 0.1, 40);
    BranchModelLevel lv;
    lv.n = n;
    lv.K = std::exp(r.first);
    lv.value_dev = r.second;
    lv.deriv_dev = detail::deriv_deviation(s, lv.K, l);
    lv.h_left = hl.convert_to<double>();
    {
        WorkingPrecision wp(L.params.precision.mantissa_bits);
        const long T = L.S[static_cast<size_t>(n - 2)];
        Real at_z = iterate_to(L.params, z, T);
        Real at_u = iterate_to(L.params, L.u[n - 1], T) - L.u[n - 2];
        lv.anchor_dev = std::max(std::fabs(at_z.convert_to<double>()), std::fabs(at_u.convert_to<double>()));
    }
    return lv;
}

// The deepest `count` levels n <= depth + 3 with n = parity (mod 2).
inline BranchModelReport verify_branch_model(const LevelPoints& L, int parity = 0, int count = 4, int grid = 201)
{
    BranchModelReport rep;
    rep.degree = L.params.degree;
    rep.parity = parity & 1;
    int top = L.depth + 3;
    if ((top & 1) != rep.parity)
        --top;
    std::vector<int> ns;
    for (int n = top; n >= 4 && static_cast<int>(ns.size()) < count; n -= 2)
        ns.insert(ns.begin(), n);
    if (static_cast<int>(ns.size()) < count)
        throw std::invalid_argument("verify_branch_model: insufficient depth");
    double kmin = 1e300, kmax = 0;
    for (int n : ns) {
        rep.levels.push_back(fit_branch_model_level(L, n, grid));
        kmin = std::min(kmin, rep.levels.back().K);
        kmax = std::max(kmax, rep.levels.back().K);
    }
    rep.K_spread = (kmax - kmin) / kmin;
    rep.deviation_decreasing = true;
    for (size_t k = 1; k < rep.levels.size(); ++k)
        if (!(rep.levels[k].value_dev < rep.levels[k - 1].value_dev))
            rep.deviation_decreasing = false;
    rep.final_deviation = rep.levels.back().value_dev;
    return rep;
}

} // namespace fiblab
