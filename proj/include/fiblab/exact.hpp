#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>

namespace fiblab {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline BigInt ipow(long base, unsigned e)
{
    return boost::multiprecision::pow(BigInt(base), e);
}

inline BigInt factorial(unsigned n)
{
    BigInt r = 1;
    for (unsigned k = 2; k <= n; ++k)
        r *= k;
    return r;
}

// Coefficient of t^n in (e^t - 1)^3 - (e^{2t} + e^t) t^3 / 2:
// [(3^n - 3*2^n + 3) - n(n-1)(n-2)/2 * (2^{n-3} + 1)] / n!.
inline Rational taylor_coefficient_check(unsigned n)
{
    if (n < 2)
        throw std::invalid_argument("taylor_coefficient_check: n >= 2");
    BigInt a = ipow(3, n) - 3 * ipow(2, n) + 3;
    // n(n-1)(n-2)/2 * (2^{n-3} + 1); for n < 3 the falling factorial vanishes
    Rational b = 0;
    if (n >= 3)
        b = Rational(BigInt(n) * (n - 1) * (n - 2), 2) * Rational(ipow(2, n - 3) + 1);
    return (Rational(a) - b) / Rational(factorial(n));
}

// The same coefficient from the series directly, as an independent cross-check:
// (e^t-1)^3 = e^{3t} - 3e^{2t} + 3e^t - 1 and t^3 e^{kt} contributes k^{n-3}/(n-3)!.
inline Rational taylor_coefficient_series(unsigned n)
{
    Rational c = Rational(ipow(3, n) - 3 * ipow(2, n) + 3, factorial(n));
    if (n >= 3) {
        Rational shifted = Rational(ipow(2, n - 3) + 1, factorial(n - 3));
        c -= shifted / 2;
    }
    return c;
}

// 4^n + 6*2^n - 4*3^n - 4.
inline BigInt quadratic_inequality_check(unsigned n)
{
    if (n < 1)
        throw std::invalid_argument("quadratic_inequality_check: n >= 1");
    return ipow(4, n) + 6 * ipow(2, n) - 4 * ipow(3, n) - 4;
}

} // namespace fiblab
