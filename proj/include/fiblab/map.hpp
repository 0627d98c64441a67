#pragma once

#include "precision.hpp"

#include <cstdint>
#include <vector>

namespace fiblab {

struct MapParams {
    int degree = 2;
    Real param;
    Precision precision;

    MapParams() = default;
    MapParams(int l, const Real& c1, const Precision& p) : degree(l), param(c1), precision(p)
    {
        if (l < 2 || l % 2 != 0)
            throw std::invalid_argument("degree must be even and >= 2");
    }
    MapParams with_precision(const Precision& p) const
    {
        WorkingPrecision wp(p.mantissa_bits);
        return MapParams(degree, Real(param), p);
    }
};

inline MapParams make_params(int l, const std::string& c1, unsigned bits = 256)
{
    Precision p = Precision::with_bits(bits);
    WorkingPrecision wp(bits);
    return MapParams(l, Real(c1), p);
}

struct EscapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PrecisionExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularityError : std::domain_error {
    using std::domain_error::domain_error;
};

inline double escape_radius(const MapParams& p)
{
    double c = std::fabs(p.param.convert_to<double>());
    return 2.0 * std::pow(std::max(1.0, c), 1.0 / (p.degree - 1)) + 1.0;
}

// Raw MPFR scratch for the hot loops: x <- x^l + c in place, no allocation per step.
class Stepper {
public:
    explicit Stepper(const MapParams& p) : l_(p.degree), bits_(p.precision.mantissa_bits)
    {
        mpfr_inits2(bits_, x_, c_, t_, d_, static_cast<mpfr_ptr>(nullptr));
        mpfr_set(c_, p.param.backend().data(), MPFR_RNDN);
        sq_ = 0;
        for (int m = l_; m > 1 && m % 2 == 0; m /= 2)
            ++sq_;
        pow2_ = (1 << sq_) == l_;
        radius_d_ = escape_radius(p);
    }
    ~Stepper() { mpfr_clears(x_, c_, t_, d_, static_cast<mpfr_ptr>(nullptr)); }
    Stepper(const Stepper&) = delete;
    Stepper& operator=(const Stepper&) = delete;

    void load(const Real& x) { mpfr_set(x_, x.backend().data(), MPFR_RNDN); }
    Real value() const
    {
        WorkingPrecision wp(bits_);
        Real r;
        mpfr_set(r.backend().data(), x_, MPFR_RNDN);
        return r;
    }
    Real deriv() const
    {
        WorkingPrecision wp(bits_);
        Real r;
        mpfr_set(r.backend().data(), d_, MPFR_RNDN);
        return r;
    }
    int sign() const { return mpfr_sgn(x_); }
    double as_double() const { return mpfr_get_d(x_, MPFR_RNDN); }
    bool escaped() const { return !mpfr_number_p(x_) || std::fabs(mpfr_get_d(x_, MPFR_RNDN)) > radius_d_; }

    void step()
    {
        power(t_, x_);
        mpfr_add(x_, t_, c_, MPFR_RNDN);
    }
    // Also multiplies the running derivative by Df(x) = l x^(l-1).
    void step_deriv()
    {
        if (mpfr_zero_p(x_)) {
            mpfr_set_zero(d_, 1);
            mpfr_set(x_, c_, MPFR_RNDN);
            return;
        }
        power(t_, x_);
        mpfr_mul_ui(d_, d_, static_cast<unsigned long>(l_), MPFR_RNDN);
        mpfr_mul(d_, d_, t_, MPFR_RNDN);
        mpfr_div(d_, d_, x_, MPFR_RNDN);
        mpfr_add(x_, t_, c_, MPFR_RNDN);
    }
    void reset_deriv() { mpfr_set_ui(d_, 1, MPFR_RNDN); }
    void run(long T)
    {
        for (long k = 0; k < T; ++k)
            step();
    }
    void run_deriv(long T)
    {
        reset_deriv();
        for (long k = 0; k < T; ++k)
            step_deriv();
    }
    mpfr_ptr raw() { return x_; }
    unsigned bits() const { return bits_; }
    int degree() const { return l_; }

private:
    void power(mpfr_ptr out, mpfr_srcptr in)
    {
        if (pow2_) {
            mpfr_sqr(out, in, MPFR_RNDN);
            for (int i = 1; i < sq_; ++i)
                mpfr_sqr(out, out, MPFR_RNDN);
        } else {
            mpfr_pow_ui(out, in, static_cast<unsigned long>(l_), MPFR_RNDN);
        }
    }

    int l_;
    unsigned bits_;
    int sq_;
    bool pow2_;
    mpfr_t x_, c_, t_, d_;
    double radius_d_;
};

inline Real eval(const MapParams& p, const Real& x)
{
    WorkingPrecision wp(p.precision.mantissa_bits);
    if (!isfinite(x))
        throw EscapeError("eval: non-finite input");
    Real r = pow(x, p.degree) + p.param;
    if (!isfinite(r))
        throw EscapeError("eval: overflow");
    return r;
}

inline Real deriv(const MapParams& p, const Real& x)
{
    WorkingPrecision wp(p.precision.mantissa_bits);
    return p.degree * pow(x, p.degree - 1);
}

inline Real schwarzian(const MapParams& p, const Real& x)
{
    if (x == 0)
        throw SingularityError("schwarzian: critical point");
    WorkingPrecision wp(p.precision.mantissa_bits);
    Real l = p.degree;
    return -(l * l - 1) / (2 * x * x);
}

// f^T(x).
inline Real iterate_to(const MapParams& p, const Real& x, long T)
{
    Stepper s(p);
    s.load(x);
    s.run(T);
    return s.value();
}

// (f^T(x), Df^T(x)).
inline std::pair<Real, Real> iterate_deriv(const MapParams& p, const Real& x, long T)
{
    Stepper s(p);
    s.load(x);
    s.run_deriv(T);
    return {s.value(), s.deriv()};
}

struct OrbitRecord {
    std::vector<long> times;
    std::vector<Real> values;
    std::vector<Real> deriv_chain;
    bool escaped = false;
    double error_estimate = 0; // absolute, at the last recorded time
};

// Values and |Df^t(x0)| at every time in `schedule`; time 0 is prepended.
// A first-order forward error bound is propagated alongside the orbit.
inline OrbitRecord iterate(const MapParams& p, const Real& x0, const std::vector<long>& schedule)
{
    for (size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i] < schedule[i - 1])
            throw std::invalid_argument("iterate: schedule must be sorted");
    WorkingPrecision wp(p.precision.mantissa_bits);
    OrbitRecord rec;
    rec.times.push_back(0);
    rec.values.push_back(x0);
    rec.deriv_chain.push_back(Real(1));

    Stepper s(p);
    s.load(x0);
    s.reset_deriv();
    const double ulp = std::ldexp(1.0, -static_cast<int>(p.precision.mantissa_bits));
    const double tol = p.precision.abs_tol.convert_to<double>();
    const double l = p.degree;
    double err = 0, cabs = std::fabs(p.param.convert_to<double>());
    long t = 0;
    for (long target : schedule) {
        while (t < target) {
            double x = s.as_double();
            double ax = std::fabs(x);
            err = l * std::pow(ax, l - 1) * err + ulp * (l * std::pow(ax, l) + cabs) + l * std::pow(ax, l - 2) * err * err;
            s.step_deriv();
            ++t;
            if (s.escaped()) {
                rec.escaped = true;
                rec.error_estimate = err;
                return rec;
            }
        }
        if (target == 0)
            continue;
        if (err > tol)
            throw PrecisionExhausted("iterate: error estimate " + std::to_string(err) + " exceeds abs_tol at t=" +
                                     std::to_string(t));
        rec.times.push_back(target);
        rec.values.push_back(s.value());
        rec.deriv_chain.push_back(abs(s.deriv()));
    }
    rec.error_estimate = err;
    return rec;
}

} // namespace fiblab
