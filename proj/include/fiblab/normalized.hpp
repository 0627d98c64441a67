#pragma once

#include "level_points.hpp"

#include <array>
#include <functional>

namespace fiblab {

struct FrameDegenerate : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IllConditioned : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Affine H(x) = (x - center)/scale with a signed scale.
struct Frame {
    Real center, scale;
    Real to(const Real& x) const { return (x - center) / scale; }
    Real from(const Real& t) const { return center + t * scale; }
};

// H_i: the copy of z_{i-1} inside [u_i, x_i] goes to 0 and u_i goes to +1, so the side facing
// the critical point is positive at every level. (Orientation preserving frames would flip
// with the period-4 side pattern, conjugating Psi_i and Psi_{i+2} by t -> -t.)
inline Frame level_frame(const LevelPoints& L, int i)
{
    if (i < 2 || i > L.depth + 2)
        throw FrameDegenerate("level_frame: level outside computed range");
    WorkingPrecision wp(L.params.precision.mantissa_bits);
    Frame F;
    F.center = LevelPoints::on_side(L.side[i], L.z[i - 1]);
    F.scale = L.u[i] - F.center;
    if (F.scale == 0)
        throw FrameDegenerate("level_frame: u_i coincides with z_{i-1}");
    return F;
}

struct Coefficients {
    double a1 = 0, a2 = 0, a3 = 0;
    double residual = 0; // difference between the two Richardson levels, max over a1..a3
};

// Psi_i = H_i o f^{S_i} o H_{i+2}^{-1}, a self-map of a neighbourhood of 0.
struct NormalizedMap {
    const LevelPoints* L = nullptr;
    int level = 0;
    Frame out, in;
    long time = 0;
    Real dom_lo, dom_hi; // H_{i+2}([u_{i+2}, x_{i+2}])
    Real at_zero;        // Psi_i(0)
    Coefficients coef;

    Real operator()(const Real& t) const { return out.to(iterate_to(L->params, in.from(t), time)); }
    Real deriv(const Real& t) const { return iterate_deriv(L->params, in.from(t), time).second * in.scale / out.scale; }
};

using RealFn = std::function<Real(const Real&)>;

// Derivatives at 0 from 5-point central differences at h and h/2, Richardson-extrapolated
// (O(h^4) stencils for the first two, O(h^2) for the third).
inline Coefficients taylor_extract(const RealFn& g, double h, unsigned bits)
{
    if (!(h > 0 && h < 0.5))
        throw IllConditioned("taylor_extract: step must be in (0, 0.5)");
    WorkingPrecision wp(bits);
    auto stencil = [&](const Real& s) {
        Real f0 = g(Real(0)), p1 = g(s), m1 = g(-s), p2 = g(2 * s), m2 = g(-2 * s);
        Real d1 = (-p2 + 8 * p1 - 8 * m1 + m2) / (12 * s);
        Real d2 = (-p2 + 16 * p1 - 30 * f0 + 16 * m1 - m2) / (12 * s * s);
        Real d3 = (p2 - 2 * p1 + 2 * m1 - m2) / (2 * s * s * s);
        return std::array<Real, 3>{d1, d2, d3};
    };
    Real H = h;
    auto A = stencil(H), B = stencil(H / 2);
    const int order[3] = {4, 4, 2};
    Real out[3];
    double resid = 0;
    for (int k = 0; k < 3; ++k) {
        Real w = pow(Real(2), order[k]) - 1;
        out[k] = B[k] + (B[k] - A[k]) / w;
        double scale = std::max(1.0, std::fabs(out[k].convert_to<double>()));
        resid = std::max(resid, std::fabs((B[k] - A[k]).convert_to<double>()) / scale);
    }
    Coefficients c;
    c.a1 = out[0].convert_to<double>();
    c.a2 = (out[1] / 2).convert_to<double>();
    c.a3 = (out[2] / 6).convert_to<double>();
    c.residual = resid;
    return c;
}

inline NormalizedMap normalize_return_map(const LevelPoints& L, int i, double h = 1e-3)
{
    if (i < 2 || i + 2 > L.depth + 2)
        throw FrameDegenerate("normalize_return_map: needs level points to depth i");
    WorkingPrecision wp(L.params.precision.mantissa_bits);
    NormalizedMap m;
    m.L = &L;
    m.level = i;
    m.out = level_frame(L, i);
    m.in = level_frame(L, i + 2);
    m.time = L.S[static_cast<size_t>(i)];
    Real a = m.in.to(L.u[i + 2]), b = m.in.to(L.x[i + 2]);
    m.dom_lo = a < b ? a : b;
    m.dom_hi = a < b ? b : a;
    m.at_zero = m(Real(0));
    m.coef = taylor_extract([&m](const Real& t) { return m(t); }, h, L.params.precision.mantissa_bits);
    return m;
}

struct ThetaCoefficients {
    int level = 0;
    Coefficients psi_prev, psi, theta; // Psi_{i-2}, Psi_i, Theta_i = Psi_{i-2} o Psi_i
    double alpha = 0, beta = 0, gamma = 0; // a1 = 1 - alpha/l, a2 = beta/l, a3 = -gamma
    double chain_defect = 0;               // |a1(Theta) - a1(Psi_{i-2}) a1(Psi_i)|
    double fixed_point_residual = 0;       // max |Psi(0)| of the two factors
};

inline ThetaCoefficients theta_coefficients(const LevelPoints& L, int i, double h = 1e-3)
{
    NormalizedMap P = normalize_return_map(L, i, h);
    NormalizedMap Q = normalize_return_map(L, i - 2, h);
    ThetaCoefficients t;
    t.level = i;
    t.psi = P.coef;
    t.psi_prev = Q.coef;
    t.theta = taylor_extract([&](const Real& x) { return Q(P(x)); }, h, L.params.precision.mantissa_bits);
    const double l = L.params.degree;
    t.alpha = l * (1 - t.theta.a1);
    t.beta = l * t.theta.a2;
    t.gamma = -t.theta.a3;
    t.chain_defect = std::fabs(t.theta.a1 - t.psi.a1 * t.psi_prev.a1);
    t.fixed_point_residual = std::max(std::fabs(P.at_zero.convert_to<double>()), std::fabs(Q.at_zero.convert_to<double>()));
    return t;
}

// max |Psi_i(t) - Psi_j(t)| over a grid of the common domain, clipped to [-0.9, 0.9].
inline double normalized_map_distance(const NormalizedMap& A, const NormalizedMap& B, int grid = 41)
{
    WorkingPrecision wp(A.L->params.precision.mantissa_bits);
    Real lo = std::max(std::max(A.dom_lo, B.dom_lo), Real(-0.9));
    Real hi = std::min(std::min(A.dom_hi, B.dom_hi), Real(0.9));
    double d = 0;
    for (int k = 0; k < grid; ++k) {
        Real t = lo + (hi - lo) * k / (grid - 1);
        d = std::max(d, std::fabs((A(t) - B(t)).convert_to<double>()));
    }
    return d;
}

} // namespace fiblab
