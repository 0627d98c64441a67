#pragma once

#include "map.hpp"

#include <complex>

namespace fiblab {

using Cplx = std::complex<double>;

// z <- z^l + c1 on complex MPFR values, with a running derivative. Regions are stored in
// local double coordinates (z = origin + scale * zeta); the conversion to and from those
// coordinates happens here at full precision, so regions of size ~1e-20 around c1 are fine.
class ComplexStepper {
public:
    ComplexStepper(const MapParams& p, unsigned bits) : l_(p.degree), bits_(bits)
    {
        mpfr_inits2(bits_, xr_, xi_, dr_, di_, c_, pr_, pi_, tr_, ti_, t_, static_cast<mpfr_ptr>(nullptr));
        mpfr_inits2(bits_, sr_, si_, nr_, ni_, n2_, static_cast<mpfr_ptr>(nullptr));
        mpfr_set(c_, p.param.backend().data(), MPFR_RNDN);
    }
    ~ComplexStepper()
    {
        mpfr_clears(xr_, xi_, dr_, di_, c_, pr_, pi_, tr_, ti_, t_, static_cast<mpfr_ptr>(nullptr));
        mpfr_clears(sr_, si_, nr_, ni_, n2_, static_cast<mpfr_ptr>(nullptr));
    }
    ComplexStepper(const ComplexStepper&) = delete;
    ComplexStepper& operator=(const ComplexStepper&) = delete;

    // x = origin + scale * zeta, derivative reset to scale.
    void load(const Real& origin, const Real& scale, Cplx zeta)
    {
        mpfr_set_d(t_, zeta.real(), MPFR_RNDN);
        mpfr_mul(xr_, t_, scale.backend().data(), MPFR_RNDN);
        mpfr_add(xr_, xr_, origin.backend().data(), MPFR_RNDN);
        mpfr_set_d(t_, zeta.imag(), MPFR_RNDN);
        mpfr_mul(xi_, t_, scale.backend().data(), MPFR_RNDN);
        mpfr_set(dr_, scale.backend().data(), MPFR_RNDN);
        mpfr_set_zero(di_, 1);
    }

    // One step; returns |x| before the step as a double (for the critical-collision check).
    double step()
    {
        double m = std::hypot(mpfr_get_d(xr_, MPFR_RNDN), mpfr_get_d(xi_, MPFR_RNDN));
        power(); // p = x^l
        if (mpfr_zero_p(xr_) && mpfr_zero_p(xi_)) {
            mpfr_set_zero(dr_, 1);
            mpfr_set_zero(di_, 1);
        } else {
            // d <- l d p / x
            mul(tr_, ti_, dr_, di_, pr_, pi_);
            div_by_x(tr_, ti_);
            mpfr_mul_ui(dr_, tr_, static_cast<unsigned long>(l_), MPFR_RNDN);
            mpfr_mul_ui(di_, ti_, static_cast<unsigned long>(l_), MPFR_RNDN);
        }
        mpfr_add(xr_, pr_, c_, MPFR_RNDN);
        mpfr_set(xi_, pi_, MPFR_RNDN);
        return m;
    }

    // Local coordinates of the current value and derivative with respect to zeta.
    Cplx value_in(const Real& origin, const Real& scale)
    {
        mpfr_sub(t_, xr_, origin.backend().data(), MPFR_RNDN);
        mpfr_div(t_, t_, scale.backend().data(), MPFR_RNDN);
        double re = mpfr_get_d(t_, MPFR_RNDN);
        mpfr_div(t_, xi_, scale.backend().data(), MPFR_RNDN);
        return {re, mpfr_get_d(t_, MPFR_RNDN)};
    }
    Cplx deriv_in(const Real& scale)
    {
        mpfr_div(t_, dr_, scale.backend().data(), MPFR_RNDN);
        double re = mpfr_get_d(t_, MPFR_RNDN);
        mpfr_div(t_, di_, scale.backend().data(), MPFR_RNDN);
        return {re, mpfr_get_d(t_, MPFR_RNDN)};
    }
    bool finite() const { return mpfr_number_p(xr_) && mpfr_number_p(xi_); }

private:
    // (ar + i ai)(br + i bi) -> (or, oi); the outputs must not alias the inputs.
    void mul(mpfr_ptr o_r, mpfr_ptr o_i, mpfr_srcptr ar, mpfr_srcptr ai, mpfr_srcptr br, mpfr_srcptr bi)
    {
        mpfr_mul(o_r, ar, br, MPFR_RNDN);
        mpfr_mul(t_, ai, bi, MPFR_RNDN);
        mpfr_sub(o_r, o_r, t_, MPFR_RNDN);
        mpfr_mul(o_i, ar, bi, MPFR_RNDN);
        mpfr_mul(t_, ai, br, MPFR_RNDN);
        mpfr_add(o_i, o_i, t_, MPFR_RNDN);
    }
    void div_by_x(mpfr_ptr ar, mpfr_ptr ai)
    {
        // a / x = a conj(x) / |x|^2, written back to (ar, ai)
        mpfr_neg(ni_, xi_, MPFR_RNDN);
        mul(nr_, n2_, ar, ai, xr_, ni_); // n2_ holds the imaginary part temporarily
        mpfr_set(ni_, n2_, MPFR_RNDN);
        mpfr_sqr(n2_, xr_, MPFR_RNDN);
        mpfr_sqr(t_, xi_, MPFR_RNDN);
        mpfr_add(n2_, n2_, t_, MPFR_RNDN);
        mpfr_div(ar, nr_, n2_, MPFR_RNDN);
        mpfr_div(ai, ni_, n2_, MPFR_RNDN);
    }
    // p = x^l by binary powering.
    void power()
    {
        mpfr_set(sr_, xr_, MPFR_RNDN);
        mpfr_set(si_, xi_, MPFR_RNDN);
        mpfr_set_ui(pr_, 1, MPFR_RNDN);
        mpfr_set_zero(pi_, 1);
        for (int e = l_; e > 0; e >>= 1) {
            if (e & 1) {
                mul(tr_, ti_, pr_, pi_, sr_, si_);
                mpfr_swap(pr_, tr_);
                mpfr_swap(pi_, ti_);
            }
            if (e > 1) {
                mul(tr_, ti_, sr_, si_, sr_, si_);
                mpfr_swap(sr_, tr_);
                mpfr_swap(si_, ti_);
            }
        }
    }

    int l_;
    unsigned bits_;
    mpfr_t xr_, xi_, dr_, di_, c_, pr_, pi_, tr_, ti_, t_;
    mpfr_t sr_, si_, nr_, ni_, n2_; // scratch
};

// g(zeta) = (f^T(src_origin + src_scale zeta) - dst_origin) / dst_scale and g'(zeta).
struct LocalIterate {
    const MapParams* params = nullptr;
    long T = 0;
    unsigned bits = 192;
    Real src_origin, src_scale, dst_origin, dst_scale;

    struct Result {
        Cplx value, deriv;
        double min_orbit_modulus = 0; // min |f^k(z)| over 0 <= k < T
        bool finite = true;
    };

    Result operator()(Cplx zeta) const
    {
        ComplexStepper s(*params, bits);
        s.load(src_origin, src_scale, zeta);
        Result r;
        r.min_orbit_modulus = 1e300;
        for (long k = 0; k < T; ++k)
            r.min_orbit_modulus = std::min(r.min_orbit_modulus, s.step());
        r.finite = s.finite();
        r.value = s.value_in(dst_origin, dst_scale);
        r.deriv = s.deriv_in(dst_scale);
        return r;
    }
};

} // namespace fiblab
