#pragma once

#include "flow.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <tuple>

namespace fiblab {

struct HypothesisViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EscapeFromInterval : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One map of the family: value and derivative.
struct Theta {
    std::function<double(double)> value;
    std::function<double(double)> deriv;
};

// theta(x) = (1 - a/l) x + (b/l) x^2 - g x^3 + r x^4
struct CubicTheta {
    double l, a, b, g, r;
    double value(double x) const { return (1 - a / l) * x + (b / l) * x * x - g * x * x * x + r * x * x * x * x; }
    double deriv(double x) const { return (1 - a / l) + 2 * (b / l) * x - 3 * g * x * x + 4 * r * x * x * x; }
    Theta as_theta() const
    {
        CubicTheta c = *this;
        return {[c](double x) { return c.value(x); }, [c](double x) { return c.deriv(x); }};
    }
};

struct SyntheticOptions {
    double beta = 0.5;     // unperturbed quadratic coefficient (times 1/l)
    double quartic = 0.02; // remainder coefficient
    unsigned long seed = 1;
};

// Verifies that theta maps (-1, 1) diffeomorphically into itself with |theta(x)| < |x|.
inline bool theta_self_map(const Theta& th, int grid = 1000)
{
    for (int k = 0; k <= grid; ++k) {
        double x = -1 + 2.0 * k / grid;
        if (x == 0)
            continue;
        double y = th.value(x);
        if (!(std::fabs(y) < std::fabs(x)) || !(th.deriv(x) > 0))
            return false;
    }
    return true;
}

// count maps theta_1..theta_count around the flow's cubic model, each coefficient perturbed by
// at most eps (uniform, seeded). The time-1 flow has linear part exp(-a/l) ~ 1 - a/l and cubic
// part -gamma x^3 to leading order, matching (alpha, gamma).
inline std::vector<CubicTheta> synthetic_theta(const FlowParams& fp, double eps, long count,
                                               const SyntheticOptions& opt = {})
{
    fp.validate();
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<CubicTheta> out;
    out.reserve(static_cast<size_t>(count));
    for (long i = 0; i < count; ++i) {
        double da = eps * U(rng), db = eps * U(rng), dg = eps * U(rng);
        CubicTheta c{fp.l, fp.alpha + da, opt.beta + db, fp.gamma + dg, opt.quartic};
        if (i < 4 || i == count - 1) // spot-check; the family is uniform in its bounds
            if (!theta_self_map(c.as_theta()))
                throw HypothesisViolation("synthetic_theta: a map fails the self-map hypothesis");
        out.push_back(c);
    }
    return out;
}

// The extreme members of the perturbed family, for a full hypothesis check.
inline bool synthetic_family_self_map(const FlowParams& fp, double eps, const SyntheticOptions& opt = {})
{
    for (double sa : {-1.0, 1.0})
        for (double sb : {-1.0, 1.0})
            for (double sg : {-1.0, 1.0}) {
                CubicTheta c{fp.l, fp.alpha + sa * eps, opt.beta + sb * eps, fp.gamma + sg * eps, opt.quartic};
                if (!theta_self_map(c.as_theta()))
                    return false;
            }
    return true;
}

struct CompositionTrace {
    double x = 0;
    long m = 0, k_main = 0;                  // k_main = ceil(l^{3/2})
    std::vector<double> F, DF;               // F_0..F_m and derivatives
    std::vector<double> ratio, dratio;       // F_k/phi_k, DF_k/Dphi_k
    double dev_main = 0, ddev_main = 0;      // |ratio - 1| at k_main
    double dev_end = 0, ddev_end = 0;        // at m
    double max_dev = 0, max_ddev = 0;        // over k in [k_main, m]
    double F_main_abs = 0;                   // |F_{k_main}(x)|
    bool below_one_over_l = false;
    double tail_distortion = 1;              // sup/inf of D(theta_m..theta_{k_main+1}) on [-1/l, 1/l]
};

inline long main_threshold(double l) { return static_cast<long>(std::ceil(std::pow(l, 1.5) - 1e-9)); }

// F_k = theta_k o ... o theta_1 compared with the flow at time k.
inline CompositionTrace compose_track(const std::vector<Theta>& thetas, const FlowParams& fp, double x, long m)
{
    if (!(std::fabs(x) < 1))
        throw std::invalid_argument("compose_track: |x| < 1");
    if (m > static_cast<long>(thetas.size()))
        throw std::invalid_argument("compose_track: not enough maps");
    CompositionTrace tr;
    tr.x = x;
    tr.m = m;
    tr.k_main = std::min(main_threshold(fp.l), m);
    tr.F.reserve(static_cast<size_t>(m) + 1);
    double F = x, DF = 1;
    tr.F.push_back(F);
    tr.DF.push_back(DF);
    tr.ratio.push_back(1);
    tr.dratio.push_back(1);
    for (long k = 1; k <= m; ++k) {
        const Theta& th = thetas[static_cast<size_t>(k - 1)];
        DF *= th.deriv(F);
        F = th.value(F);
        if (!(std::fabs(F) < 1))
            throw EscapeFromInterval("compose_track: orbit left (-1, 1)");
        tr.F.push_back(F);
        tr.DF.push_back(DF);
        double p = flow_phi(fp, static_cast<double>(k), x);
        double dp = flow_dphi(fp, static_cast<double>(k), x);
        tr.ratio.push_back(p != 0 ? F / p : 1.0);
        tr.dratio.push_back(DF / dp);
    }
    auto at = [&](long k) { return std::make_pair(std::fabs(tr.ratio[k] - 1), std::fabs(tr.dratio[k] - 1)); };
    std::tie(tr.dev_main, tr.ddev_main) = at(tr.k_main);
    std::tie(tr.dev_end, tr.ddev_end) = at(m);
    for (long k = tr.k_main; k <= m; ++k) {
        auto [d, dd] = at(k);
        tr.max_dev = std::max(tr.max_dev, d);
        tr.max_ddev = std::max(tr.max_ddev, dd);
    }
    tr.F_main_abs = std::fabs(tr.F[static_cast<size_t>(tr.k_main)]);
    tr.below_one_over_l = tr.F_main_abs < 1 / fp.l;
    if (m > tr.k_main) {
        double lo = 1e300, hi = 0;
        const int grid = 101;
        for (int g = 0; g < grid; ++g) {
            double y = (-1 + 2.0 * g / (grid - 1)) / fp.l, dy = 1;
            for (long k = tr.k_main + 1; k <= m; ++k) {
                const Theta& th = thetas[static_cast<size_t>(k - 1)];
                dy *= th.deriv(y);
                y = th.value(y);
            }
            lo = std::min(lo, std::fabs(dy));
            hi = std::max(hi, std::fabs(dy));
        }
        tr.tail_distortion = hi / lo;
    }
    return tr;
}

inline std::vector<Theta> as_thetas(const std::vector<CubicTheta>& cs)
{
    std::vector<Theta> out;
    out.reserve(cs.size());
    for (const auto& c : cs)
        out.push_back(c.as_theta());
    return out;
}

// theta_i = phi_1 for all i: the composition is exactly the flow.
inline std::vector<Theta> exact_flow_thetas(const FlowParams& fp, long count)
{
    Theta t{[fp](double x) { return flow_phi(fp, 1.0, x); }, [fp](double x) { return flow_dphi(fp, 1.0, x); }};
    return std::vector<Theta>(static_cast<size_t>(count), t);
}

struct CompositionSweep {
    double l = 0;
    long m = 0;
    double max_dev = 0, max_ddev = 0; // over x at k = m
    double max_F_main = 0;
    bool all_below = true;
    double tail_distortion = 1;
};

inline CompositionSweep composition_sweep(const FlowParams& fp, double eps, const std::vector<double>& xs,
                                          unsigned long seed, long m = 0)
{
    if (m <= 0)
        m = main_threshold(fp.l);
    SyntheticOptions opt;
    opt.seed = seed;
    auto thetas = as_thetas(synthetic_theta(fp, eps, m, opt));
    CompositionSweep s;
    s.l = fp.l;
    s.m = m;
    for (double x : xs) {
        auto tr = compose_track(thetas, fp, x, m);
        s.max_dev = std::max(s.max_dev, tr.dev_end);
        s.max_ddev = std::max(s.max_ddev, tr.ddev_end);
        s.max_F_main = std::max(s.max_F_main, tr.F_main_abs);
        s.all_below = s.all_below && tr.below_one_over_l;
        s.tail_distortion = std::max(s.tail_distortion, tr.tail_distortion);
    }
    return s;
}

} // namespace fiblab
