#pragma once

#include "level_points.hpp"

#include <cmath>

namespace fiblab {

struct InsufficientDepth : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ProfileRow {
    int i;              // annulus index: |u_{n+i+1}| <= |y| <= |u_{n+i}|
    double max_norm;    // max normalized derivative over the sampled preimages
    double min_norm;
};

struct LineFit {
    double slope = 0, intercept = 0, r2 = 0;
    int points = 0;
};

// Least squares y = slope*x + intercept.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    LineFit f;
    const size_t n = x.size();
    f.points = static_cast<int>(n);
    if (n < 2)
        return f;
    double mx = 0, my = 0;
    for (size_t k = 0; k < n; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t k = 0; k < n; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

struct DerivativeProfile {
    int level = 0;   // n: the branch is f^{S_{n-2}} on T_{n-1} = [x_{n-1}, u_{n-1}]
    int degree = 0;
    std::vector<ProfileRow> rows;
    LineFit fit;              // log(max_norm) against log(i) over i in [2, l]
    double exponent = 0;
    double fitted_C = 0;      // max_norm ~ C i^exponent / l
    double C_n = 0;           // l |Df(u_{n-1})| |T| / |image|
    double C_n_prime = 0;     // same at x_{n-1}
    double at_z = 0;          // |Df(z_{n-2})| |T| / |image|
    double sqrt_l_bound = 0;  // fitted_C * sqrt(l)
    bool z_below_bound = false;
};

// Normalized derivative |Df^{S_{n-2}}(y)| |T_{n-1}| / |u_{n-2} - \hat u_{n-2}| over the
// preimages of the real annuli A_{n+i}, i = -2 .. l. Needs u up to index n + l + 1.
inline DerivativeProfile derivative_profile(const LevelPoints& L, int n, int samples_per_annulus = 9)
{
    const int l = L.params.degree;
    const int top = n + l + 1;
    if (n < 3 || top > L.depth + 2)
        throw InsufficientDepth("derivative_profile: needs level points to depth n + l - 1");
    const MapParams& p = L.params;
    WorkingPrecision wp(p.precision.mantissa_bits);
    const long Tm = L.S[static_cast<size_t>(n - 2)];
    Interval T = L.x[n - 1] < L.u[n - 1] ? Interval{L.x[n - 1], L.u[n - 1]} : Interval{L.u[n - 1], L.x[n - 1]};
    Real Tlen = T.hi - T.lo;
    Real image = 2 * abs(L.u[n - 2]);
    auto normalized = [&](const Real& y) { return (abs(iterate_deriv(p, y, Tm).second) * Tlen / image).convert_to<double>(); };
    // the outermost samples are the image endpoints, reached only at the ends of T
    const Real at_lo = iterate_to(p, T.lo, Tm), at_hi = iterate_to(p, T.hi, Tm);
    const bool rising = at_lo < at_hi;
    const Real& bottom = rising ? at_lo : at_hi;
    const Real& top_value = rising ? at_hi : at_lo;
    auto preimage = [&](const Real& target) -> Real {
        if (target <= bottom)
            return rising ? T.lo : T.hi;
        if (target >= top_value)
            return rising ? T.hi : T.lo;
        return solve_on_branch(p, Tm, target, T);
    };

    DerivativeProfile P;
    P.level = n;
    P.degree = l;
    for (int i = -2; i <= l; ++i) {
        Real outer = abs(L.u[n + i]), inner = abs(L.u[n + i + 1]);
        ProfileRow row{i, 0, 1e300};
        for (int sgn : {1, -1}) {
            for (int k = 0; k < samples_per_annulus; ++k) {
                // geometric spacing inside the annulus, endpoints included
                Real frac = Real(k) / (samples_per_annulus - 1);
                Real target = sgn * inner * pow(outer / inner, frac);
                Real y = preimage(target);
                double v = normalized(y);
                row.max_norm = std::max(row.max_norm, v);
                row.min_norm = std::min(row.min_norm, v);
            }
        }
        P.rows.push_back(row);
    }
    std::vector<double> lx, ly;
    for (const auto& r : P.rows)
        if (r.i >= 2 && r.i <= l) {
            lx.push_back(std::log(static_cast<double>(r.i)));
            ly.push_back(std::log(r.max_norm));
        }
    P.fit = fit_line(lx, ly);
    P.exponent = P.fit.slope;
    P.fitted_C = std::exp(P.fit.intercept) * l;
    P.C_n = l * normalized(L.u[n - 1]);
    P.C_n_prime = l * normalized(L.x[n - 1]);
    P.at_z = normalized(LevelPoints::on_side(L.side[n - 1], L.z[n - 2]));
    P.sqrt_l_bound = P.fitted_C * std::sqrt(static_cast<double>(l));
    P.z_below_bound = P.at_z <= P.sqrt_l_bound;
    return P;
}

} // namespace fiblab
