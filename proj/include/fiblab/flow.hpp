#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace fiblab {

// x' = -(alpha/l) x - gamma x^3
struct FlowParams {
    double alpha = 1, gamma = 1, l = 16;

    void validate() const
    {
        if (!(alpha > 0 && gamma > 0 && l > 0))
            throw std::invalid_argument("FlowParams: alpha, gamma, l must be positive");
    }
};

inline double flow_rhs(const FlowParams& fp, double x) { return -(fp.alpha / fp.l) * x - fp.gamma * x * x * x; }

inline double flow_phi(const FlowParams& fp, double t, double x)
{
    if (t < 0)
        throw std::invalid_argument("flow_phi: t >= 0");
    double a = fp.alpha / fp.l;
    // 1 - exp(-2at) via expm1 keeps small t accurate
    double s = -std::expm1(-2 * a * t);
    return x * std::exp(-a * t) / std::sqrt((fp.gamma / a) * s * x * x + 1);
}

// d phi_t / dx
inline double flow_dphi(const FlowParams& fp, double t, double x)
{
    double a = fp.alpha / fp.l;
    double k = (fp.gamma / a) * -std::expm1(-2 * a * t);
    double q = k * x * x + 1;
    return std::exp(-a * t) / (q * std::sqrt(q));
}

struct StepUnderflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Classical RK4 for the flow ODE.
inline double flow_phi_numeric(const FlowParams& fp, double t, double x, long steps)
{
    if (steps < 1)
        throw std::invalid_argument("flow_phi_numeric: steps >= 1");
    double h = t / static_cast<double>(steps);
    if (t > 0 && h < 1e-14 * t)
        throw StepUnderflow("flow_phi_numeric: step size underflow");
    for (long k = 0; k < steps; ++k) {
        double k1 = flow_rhs(fp, x);
        double k2 = flow_rhs(fp, x + 0.5 * h * k1);
        double k3 = flow_rhs(fp, x + 0.5 * h * k2);
        double k4 = flow_rhs(fp, x + h * k3);
        x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return x;
}

// Values at integer times 0..tmax from one RK4 pass with `per_unit` steps per unit time.
inline std::vector<double> flow_phi_numeric_track(const FlowParams& fp, double x, int tmax, long per_unit)
{
    std::vector<double> out{x};
    for (int t = 1; t <= tmax; ++t) {
        x = flow_phi_numeric(fp, 1.0, x, per_unit);
        out.push_back(x);
    }
    return out;
}

struct CutoffTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FlowSums {
    double S1 = 0, S2 = 0, S3 = 0;
    double tail1 = 0, tail2 = 0, tail3 = 0; // bounds on the omitted terms
    long cutoff = 0;
    double c_sqrt = 0; // S1 / sqrt(l)
    double c_log = 0;  // S2 / log(l)
    double c_one = 0;  // S3
};

// Sums over i = 0..cutoff of |phi_i(x)|^p. Beyond the cutoff |phi_i| decays at least like
// exp(-alpha i / l), which bounds the tails by a geometric series.
inline FlowSums flow_sums(const FlowParams& fp, double x, long cutoff, double tol = 1e-12)
{
    fp.validate();
    FlowSums s;
    s.cutoff = cutoff;
    for (long i = 0; i <= cutoff; ++i) {
        double v = std::fabs(flow_phi(fp, static_cast<double>(i), x));
        s.S1 += v;
        s.S2 += v * v;
        s.S3 += v * v * v;
    }
    double last = std::fabs(flow_phi(fp, static_cast<double>(cutoff + 1), x));
    double a = fp.alpha / fp.l;
    s.tail1 = last / -std::expm1(-a);
    s.tail2 = last * last / -std::expm1(-2 * a);
    s.tail3 = last * last * last / -std::expm1(-3 * a);
    if (s.tail1 > tol * std::max(s.S1, 1e-300) && x != 0)
        throw CutoffTooSmall("flow_sums: tail exceeds tolerance; raise the cutoff");
    s.c_sqrt = s.S1 / std::sqrt(fp.l);
    s.c_log = s.S2 / std::log(fp.l);
    s.c_one = s.S3;
    return s;
}

// Cutoff for which exp(-alpha cutoff / l) is below 1e-16.
inline long default_flow_cutoff(const FlowParams& fp) { return static_cast<long>(std::ceil(40 * fp.l / fp.alpha)); }

// Limit of phi_t(x)/phi_t(y) as t -> infinity.
inline double flow_limit_ratio(const FlowParams& fp, double x, double y)
{
    double k = fp.gamma * fp.l / fp.alpha;
    return (x / y) * std::sqrt((k * y * y + 1) / (k * x * x + 1));
}

// Gamma(x) = x sqrt(K l + 1) / sqrt(K l x^2 + 1)
inline double gamma_map(double K, double l, double x)
{
    if (!(K > 0 && l > 0))
        throw std::domain_error("gamma_map: K, l > 0");
    double k = K * l;
    return x * std::sqrt(k + 1) / std::sqrt(k * x * x + 1);
}

inline double gamma_inverse(double K, double l, double y)
{
    if (!(K > 0 && l > 0) || std::fabs(y) > 1)
        throw std::domain_error("gamma_inverse: K, l > 0 and |y| <= 1");
    return y / std::sqrt(K * l * (1 - y * y) + 1);
}

inline double gamma_deriv(double K, double l, double x)
{
    double k = K * l;
    double q = k * x * x + 1;
    return std::sqrt(k + 1) / (q * std::sqrt(q));
}

// The Moebius factor: Gamma(x) = sign(x) sqrt(M(x^2)).
inline double gamma_moebius(double K, double l, double t)
{
    double k = K * l;
    return t * (k + 1) / (k * t + 1);
}

} // namespace fiblab
