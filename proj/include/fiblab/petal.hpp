#pragma once

#include "complex_map.hpp"
#include "level_points.hpp"

#include <numbers>

namespace fiblab {

struct PetalOptions {
    unsigned bits = 192;
    std::vector<double> gamma1_grid{1, 2, 4, 8, 16, 32};
    std::vector<double> gamma2_grid{0.5, 1, 2, 4, 8, 16};
    int angles = 64;          // samples per circle for the circle growth test
    int line_samples = 201;   // samples on Re w = gamma2 for (shift)
    int basin_samples = 201;  // starting points in [c, a_{n+1}] for m(eps)
    double eps = 0.1;
    int max_iterations = 1000;
};

struct PetalAnalysis {
    int n = 0;
    Real z, a, b_f;            // z_{n+1}, a_{n+1}, b_{n+1}^f (f^{S_n - 1}(b_f) = a_{n-1})
    Real z_prev, a_prev;       // z_{n-1}, a_{n-1}
    bool a_ambiguous = false;  // both or neither copy of y lay in the selecting interval
    double fixed_point_residual = 0; // |Psi(0)| in sc coordinates
    double multiplier = 0;     // D psi_n(z_{n+1})
    double C = 0;              // l (1 + multiplier)
    bool multiplier_ok = false; // in (-1, 0)
    bool maps_into = false;     // psi_n([c, a_{n+1}]) inside [c, a_{n+1}]
    double gamma1 = 0, delta1 = 0;
    bool growth_ok = false;
    double gamma2 = 0, delta2 = 0;
    bool shift_ok = false;
    int m_eps = -1;             // -1: some start did not reach the eps-neighbourhood
};

namespace detail {

// The copy of |y_k| in the open interval between u_{k+1} and -u_{k-1}; flags the choice when
// not exactly one copy qualifies and falls back to the side of d_{k+1}.
inline Real select_a(const LevelPoints& L, int k, bool& ambiguous)
{
    Real lo = L.u[k + 1], hi = -L.u[k - 1];
    if (lo > hi)
        std::swap(lo, hi);
    Real y = abs(L.y[k]);
    bool plus = lo < y && y < hi, minus = lo < -y && -y < hi;
    if (plus != minus)
        return plus ? y : Real(-y);
    ambiguous = true;
    return LevelPoints::on_side(L.side[k + 1], y);
}

} // namespace detail

// psi_n = h_n o f^{S_n} with h_n affine, (z_{n-1}, a_{n-1}) -> (z_{n+1}, a_{n+1}), studied in the
// coordinate sc_n sending [z_{n+1}, a_{n+1}] to [0, 1]. In those coordinates
// Psi = sc_n o psi_n o sc_n^{-1} = (f^{S_n}(x) - z_{n-1}) / (a_{n-1} - z_{n-1}) with x = sc_n^{-1}(t).
inline PetalAnalysis psi_petal_check(const LevelPoints& L, int n, const PetalOptions& opt = {})
{
    if (n < 3 || n + 2 > L.depth + 1)
        throw std::invalid_argument("psi_petal_check: needs level points to n + 2");
    const MapParams& p = L.params;
    const double l = p.degree;
    WorkingPrecision wp(opt.bits);
    PetalAnalysis P;
    P.n = n;
    P.z = LevelPoints::on_side(L.side[n + 2], L.z[n + 1]);
    P.z_prev = LevelPoints::on_side(L.side[n], L.z[n - 1]);
    P.a = detail::select_a(L, n + 1, P.a_ambiguous);
    P.a_prev = detail::select_a(L, n - 1, P.a_ambiguous);
    // |a_{n-1}| > |u_{n-1}| = |f^{S_n - 1}(w_n^f)|, so b_{n+1}^f lies beyond w_n^f, in (t_n^f, w_n^f)
    P.b_f = solve_on_branch(p, L.S[n] - 1, P.a_prev, Interval{L.t_f(n), L.w_f[n]});

    LocalIterate g{&p, L.S[n], opt.bits, P.z, P.a - P.z, P.z_prev, P.a_prev - P.z_prev};
    auto Psi = [&](Cplx t) { return g(t).value; };
    auto r0 = g(Cplx(0, 0));
    P.fixed_point_residual = std::abs(r0.value);
    P.multiplier = r0.deriv.real();
    P.C = l * (1 + P.multiplier);
    P.multiplier_ok = P.multiplier > -1 && P.multiplier < 0;

    // [c, a_{n+1}] in sc coordinates is [t_c, 1]
    const double tc = ((-P.z) / (P.a - P.z)).convert_to<double>();
    const double tlo = std::min(tc, 1.0), thi = std::max(tc, 1.0);
    P.maps_into = true;
    P.m_eps = 0;
    for (int k = 0; k < opt.basin_samples; ++k) {
        double t = tlo + (thi - tlo) * k / (opt.basin_samples - 1);
        double v = Psi(Cplx(t, 0)).real();
        if (!(v >= tlo && v <= thi))
            P.maps_into = false;
        int m = 0;
        for (double s = t; std::fabs(s) > opt.eps; s = Psi(Cplx(s, 0)).real())
            if (++m > opt.max_iterations) {
                m = -1;
                break;
            }
        P.m_eps = (m < 0 || P.m_eps < 0) ? -1 : std::max(P.m_eps, m);
    }

    // Theta(w) = 1 / Psi^2(w^{-1/2})^2
    auto Theta = [&](Cplx w) {
        Cplx t = 1.0 / std::sqrt(w);
        Cplx v = Psi(Psi(t));
        return 1.0 / (v * v);
    };
    // circle growth: |Theta(w)| >= |w| + delta1 for |w| >= gamma1 l
    P.delta1 = -1e300;
    for (double g1 : opt.gamma1_grid) {
        double d1 = 1e300;
        for (double rad : {1.0, 2.0, 4.0, 8.0})
            for (int k = 0; k < opt.angles; ++k) {
                Cplx w = std::polar(g1 * l * rad, 2 * std::numbers::pi * (k + 0.5) / opt.angles);
                d1 = std::min(d1, std::abs(Theta(w)) - std::abs(w));
            }
        if (d1 > P.delta1 || d1 > 0) {
            P.gamma1 = g1;
            P.delta1 = d1;
        }
        if (d1 > 0)
            break;
    }
    P.growth_ok = P.delta1 > 0;
    // (shift): Re Theta(w) >= Re w + delta2 on Re w = gamma2, |w| <= gamma1 l
    P.delta2 = -1e300;
    const double W = P.gamma1 * l;
    for (double g2 : opt.gamma2_grid) {
        if (!(g2 < W))
            break;
        double S = std::sqrt(W * W - g2 * g2), d2 = 1e300;
        for (int k = 0; k < opt.line_samples; ++k) {
            Cplx w(g2, -S + 2 * S * k / (opt.line_samples - 1));
            d2 = std::min(d2, Theta(w).real() - w.real());
        }
        if (d2 > P.delta2 || d2 > 0) {
            P.gamma2 = g2;
            P.delta2 = d2;
        }
        if (d2 > 0)
            break;
    }
    P.shift_ok = P.delta2 > 0;
    return P;
}

} // namespace fiblab
