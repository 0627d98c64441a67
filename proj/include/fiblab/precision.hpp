#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace fiblab {

namespace bmp = boost::multiprecision;

// Variable precision; the working precision of new values is set by WorkingPrecision.
using Real = bmp::number<bmp::mpfr_float_backend<0>, bmp::et_off>;

inline unsigned digits10_for_bits(unsigned bits)
{
    return static_cast<unsigned>(std::ceil(bits * 0.30102999566398120)) + 1;
}

// Sets the default precision of newly created Reals for the lifetime of the object.
class WorkingPrecision {
public:
    explicit WorkingPrecision(unsigned bits) : saved_(Real::default_precision())
    {
        Real::default_precision(digits10_for_bits(bits));
    }
    ~WorkingPrecision() { Real::default_precision(saved_); }
    WorkingPrecision(const WorkingPrecision&) = delete;
    WorkingPrecision& operator=(const WorkingPrecision&) = delete;

private:
    unsigned saved_;
};

struct Precision {
    unsigned mantissa_bits = 256;
    Real abs_tol;

    // abs_tol defaults to 2^-(bits/2): half the mantissa is reserved for error growth.
    static Precision with_bits(unsigned bits)
    {
        if (bits < 53)
            throw std::invalid_argument("mantissa_bits must be >= 53");
        WorkingPrecision wp(bits);
        Precision p;
        p.mantissa_bits = bits;
        p.abs_tol = ldexp(Real(1), -static_cast<int>(bits / 2));
        return p;
    }
    Precision doubled() const
    {
        Precision p = with_bits(2 * mantissa_bits);
        p.abs_tol = abs_tol;
        return p;
    }
};

inline unsigned default_bits_from_env(unsigned fallback = 256)
{
    if (const char* s = std::getenv("FIBLAB_PRECISION_BITS")) {
        char* end = nullptr;
        long v = std::strtol(s, &end, 10);
        if (end != s && *end == '\0' && v >= 53 && v <= 1 << 20)
            return static_cast<unsigned>(v);
        throw std::invalid_argument(std::string("bad FIBLAB_PRECISION_BITS: ") + s);
    }
    return fallback;
}

// Rule of thumb for orbits up to S_N.
inline unsigned bits_for_depth(int depth) { return 64 + 8 * static_cast<unsigned>(depth < 0 ? 0 : depth); }

// "-1.87052863216464e0@256": the value rounded to `bits`, printed with enough digits
// to round-trip, followed by the precision tag.
inline std::string to_tagged(const Real& x, unsigned bits)
{
    mpfr_t t;
    mpfr_init2(t, bits);
    mpfr_set(t, x.backend().data(), MPFR_RNDN);
    std::string out;
    if (mpfr_nan_p(t)) {
        out = "nan";
    } else if (mpfr_inf_p(t)) {
        out = mpfr_sgn(t) < 0 ? "-inf" : "inf";
    } else if (mpfr_zero_p(t)) {
        out = "0e0";
    } else {
        size_t nd = mpfr_get_str_ndigits(10, bits);
        mpfr_exp_t e = 0;
        char* s = mpfr_get_str(nullptr, &e, 10, nd, t, MPFR_RNDN);
        std::string digits(s);
        mpfr_free_str(s);
        if (digits[0] == '-') {
            out = "-";
            digits.erase(0, 1);
        }
        while (digits.size() > 1 && digits.back() == '0')
            digits.pop_back();
        out += digits.substr(0, 1);
        if (digits.size() > 1)
            out += "." + digits.substr(1);
        out += "e" + std::to_string(static_cast<long>(e) - 1);
    }
    mpfr_clear(t);
    return out + "@" + std::to_string(bits);
}

struct TaggedReal {
    Real value;
    unsigned bits;
};

inline TaggedReal from_tagged(const std::string& s)
{
    auto at = s.find('@');
    if (at == std::string::npos)
        throw std::invalid_argument("missing precision tag: " + s);
    unsigned bits = static_cast<unsigned>(std::stoul(s.substr(at + 1)));
    WorkingPrecision wp(bits);
    return {Real(s.substr(0, at)), bits};
}

inline Real make_real(const std::string& decimal, unsigned bits)
{
    WorkingPrecision wp(bits);
    return Real(decimal);
}

} // namespace fiblab
