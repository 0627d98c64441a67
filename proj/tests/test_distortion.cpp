#include <fiblab/cross_ratio.hpp>
#include <fiblab/exact.hpp>

#include <catch_amalgamated.hpp>

#include <random>

using namespace fiblab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Exact power series of (e^t - 1)^3 - (e^{2t} + e^t) t^3 / 2 by truncated multiplication,
// independent of the closed form in the library.
std::vector<Rational> series_oracle(unsigned order)
{
    auto expk = [&](int k) {
        std::vector<Rational> c(order + 1);
        Rational term = 1;
        for (unsigned n = 0; n <= order; ++n) {
            c[n] = term;
            term = term * k / (n + 1);
        }
        return c;
    };
    auto mul = [&](const std::vector<Rational>& a, const std::vector<Rational>& b) {
        std::vector<Rational> c(order + 1);
        for (unsigned i = 0; i <= order; ++i)
            for (unsigned j = 0; i + j <= order; ++j)
                c[i + j] += a[i] * b[j];
        return c;
    };
    auto em1 = expk(1);
    em1[0] -= 1;
    auto cube = mul(mul(em1, em1), em1);
    auto e1 = expk(1), e2 = expk(2);
    std::vector<Rational> out(order + 1);
    for (unsigned n = 0; n <= order; ++n) {
        Rational tail = n >= 3 ? (e1[n - 3] + e2[n - 3]) / 2 : Rational(0);
        out[n] = cube[n] - tail;
    }
    return out;
}

double d_of(const Real& x) { return x.convert_to<double>(); }

Real mp(const char* s)
{
    WorkingPrecision wp(128);
    return Real(s);
}

} // namespace

TEST_CASE("cross-ratio C on nested intervals", "[distortion]")
{
    CHECK(cross_ratio_C(IntervalPair<double>(0, 4, 1, 3)) == 8);
    CHECK(cross_ratio_C(IntervalPair<double>(0, 3, 1, 2)) == 3);
    CHECK_THROWS_AS(IntervalPair<double>(0, 1, 1, 0.5), DegenerateInterval);
    CHECK_THROWS_AS(IntervalPair<double>(0, 1, 0.6, 0.4), DegenerateInterval);
}

TEST_CASE("B of a pure power in closed form", "[distortion]")
{
    auto b = pure_power_B(2, 1, 0.5);
    CHECK_THAT(b.value, WithinRel(4.0 / 3.0, 1e-15));
    CHECK_THAT(b.lower_bound, WithinRel(1.0, 1e-15));
    CHECK_THROWS_AS(pure_power_B(2, 1, 1), std::domain_error);

    // against the direct cross-ratio of x^l on (0, gamma) with j = {alpha}
    WorkingPrecision wp(256);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.05, 0.95);
    for (int l : {2, 4, 20}) {
        for (int k = 0; k < 50; ++k) {
            double alpha = U(rng);
            Real direct = cross_ratio_B(PowerMap<Real>{l}, IntervalPair<Real>(Real(0), Real(1), Real(alpha), Real(alpha)));
            Real exact = pure_power_B_exact(l, Real(1), Real(alpha));
            CHECK_THAT(d_of(direct), WithinRel(d_of(exact), 1e-12));
            CHECK_THAT(pure_power_B(l, 1, alpha).value, WithinRel(d_of(exact), 1e-12));
            CHECK(pure_power_B(l, 1, alpha).value >= pure_power_B(l, 1, alpha).lower_bound);
        }
    }
}

TEST_CASE("A of simple maps", "[distortion]")
{
    CHECK_THAT(cross_ratio_A(PowerMap<double>{2}, 1.0, 2.0), WithinRel(9.0 / 8.0, 1e-15));
    struct Affine {
        double value(double x) const { return 3 * x - 1; }
        double deriv(double) const { return 3; }
    };
    CHECK_THAT(cross_ratio_A(Affine{}, -5.0, 7.0), WithinRel(1.0, 1e-15));
    CHECK_THROWS_AS(cross_ratio_A(PowerMap<double>{2}, 0.0, 1.0), ZeroDerivative);
    CHECK_THROWS_AS(cross_ratio_A(PowerMap<double>{2}, 1.0, 1.0), DegenerateInterval);
}

TEST_CASE("A inequality for powers on intervals avoiding 0", "[distortion]")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.01, 3.0);
    WorkingPrecision wp(192);
    for (int l : {2, 6, 20}) {
        for (int k = 0; k < 200; ++k) {
            double v[3] = {U(rng), U(rng), U(rng)};
            std::sort(v, v + 3);
            if (!(v[0] < v[1] && v[1] < v[2]))
                continue;
            double s = k % 2 ? -1 : 1;
            Real a(s * v[0]), x(s * v[1]), b(s * v[2]);
            if (s < 0)
                std::swap(a, b);
            CHECK(verify_A_inequality(l, a, x, b).holds);
        }
    }
    CHECK_THROWS_AS(verify_A_inequality(2, mp("-1"), mp("0.5"), mp("1")), std::invalid_argument);
}

TEST_CASE("B of a power never drops below one", "[distortion]")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int l : {2, 16}) {
        for (int k = 0; k < 500; ++k) {
            double c[4] = {U(rng), U(rng), U(rng), U(rng)};
            std::sort(c, c + 4);
            if (!(c[0] < c[1] && c[2] < c[3]) || c[0] == 0)
                continue;
            CHECK(cross_ratio_B(PowerMap<double>{l}, IntervalPair<double>(c[0], c[3], c[1], c[2])) >= 1 - 1e-12);
        }
    }
}

TEST_CASE("Koebe bound at unit scaling", "[distortion]")
{
    // x^2 on [1, 4]: g(j) = [4, 9] for j = [2, 3], the image [1, 16] holds the unit-scaled ball
    auto r = koebe_distortion_check(PowerMap<double>{2}, 1.0, 4.0, 2.0, 3.0, 1.0);
    CHECK(r.bound == 4);
    CHECK(r.holds);
    CHECK_THAT(r.ratio, WithinRel(1.5, 1e-12));
    CHECK_THROWS_AS(koebe_distortion_check(PowerMap<double>{2}, 1.0, 4.0, 2.0, 3.0, 2.0), ScalingViolation);
}

TEST_CASE("Taylor coefficients vanish below order seven", "[exact]")
{
    auto oracle = series_oracle(14);
    for (unsigned n = 2; n <= 14; ++n) {
        INFO("n = " << n);
        CHECK(taylor_coefficient_check(n) == oracle[n]);
        CHECK(taylor_coefficient_series(n) == oracle[n]);
    }
    for (unsigned n = 2; n <= 6; ++n)
        CHECK(taylor_coefficient_check(n) == 0);
    CHECK(taylor_coefficient_check(7) == Rational(1, 240));
    for (unsigned n = 7; n <= 14; ++n)
        CHECK(taylor_coefficient_check(n) > 0);
    CHECK_THROWS(taylor_coefficient_check(1));
}

TEST_CASE("quadratic inequality is tight at 1, 2, 3 and strict after", "[exact]")
{
    for (unsigned n = 1; n <= 30; ++n) {
        long long p4 = 1, p3 = 1, p2 = 1;
        for (unsigned k = 0; k < n; ++k) {
            p4 *= 4;
            p3 *= 3;
            p2 *= 2;
        }
        BigInt v = quadratic_inequality_check(n);
        CHECK(v == BigInt(p4 + 6 * p2 - 4 * p3 - 4));
        if (n <= 3)
            CHECK(v == 0);
        else
            CHECK(v > 0);
    }
}
