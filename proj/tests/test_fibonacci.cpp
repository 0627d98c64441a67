#include <fiblab/fibonacci.hpp>

#include <catch_amalgamated.hpp>

using namespace fiblab;

// Limit of the superattracting centers of the Fibonacci periods 3, 5, ..., 144 for x^2 + c,
// from tests/oracles/fibonacci_parameter.py (period 144: -1.870528632164381, period 89 differs
// by 6e-11). Frozen; the library never calls the oracle.
static const double kQuadraticFibonacci = -1.870528632164;

TEST_CASE("Fibonacci cutting times", "[fib]")
{
    CHECK(fibonacci_times(5) == FibSchedule{1, 2, 3, 5, 8, 13});
    CHECK(fibonacci_times(1) == FibSchedule{1, 2});
    CHECK(fibonacci_times(0) == FibSchedule{1});
    CHECK(fibonacci_times(9).back() == 89);
    CHECK_THROWS_AS(fibonacci_times(-1), std::invalid_argument);
}

TEST_CASE("closest returns of simple orbits", "[fib]")
{
    auto basilica = closest_returns(make_params(2, "-1"), 10);
    REQUIRE(basilica.entries.size() == 2);
    CHECK(basilica.entries[0].time == 1);
    CHECK(basilica.entries[0].distance == 1);
    CHECK(basilica.entries[1].time == 2);
    CHECK(basilica.entries[1].distance == 0);

    auto tip = closest_returns(make_params(2, "-2"), 10);
    REQUIRE(tip.entries.size() == 1);
    CHECK(tip.entries[0].time == 1);
}

TEST_CASE("a superattracting period-2 orbit is not Fibonacci", "[fib]")
{
    auto v = check_fibonacci(make_params(2, "-1"), 3);
    CHECK_FALSE(v.ok);
    REQUIRE(v.first_violation);
    CHECK(v.first_violation->time == 2);
    CHECK(v.first_violation->kind == ViolationKind::ExtraReturn);
}

TEST_CASE("bisection finds the quadratic Fibonacci parameter", "[fib]")
{
    auto prec = Precision::with_bits(192);
    WorkingPrecision wp(192);
    auto r = bisect_parameter(2, 12, Real(-2), Real(-1), prec);
    CHECK(r.verdict.ok);
    const double c = ((r.lo + r.hi) / 2).convert_to<double>();
    CHECK(std::fabs(c - kQuadraticFibonacci) < 1e-11);
    // certification is monotone in the depth
    for (int M = 0; M <= 12; ++M)
        CHECK(check_fibonacci(MapParams(2, (r.lo + r.hi) / 2, prec), M).ok);
}

TEST_CASE("a perturbed parameter loses the Fibonacci returns", "[fib]")
{
    auto prec = Precision::with_bits(128);
    WorkingPrecision wp(128);
    auto v = check_fibonacci(MapParams(2, Real(kQuadraticFibonacci + 1e-6), prec), 30);
    CHECK_FALSE(v.ok);
    CHECK(v.depth_certified < 30);
}

TEST_CASE("depth zero returns the bracket unchanged", "[fib]")
{
    auto prec = Precision::with_bits(128);
    WorkingPrecision wp(128);
    auto r = bisect_parameter(2, 0, Real(-2), Real(-1), prec);
    CHECK(r.lo == -2);
    CHECK(r.hi == -1);
    CHECK(r.steps == 0);
}

TEST_CASE("a bracket that misses the parameter is rejected", "[fib]")
{
    auto prec = Precision::with_bits(128);
    WorkingPrecision wp(128);
    CHECK_THROWS_AS(bisect_parameter(2, 8, Real(-1.5), Real(-1), prec), BracketError);
}

TEST_CASE("degree 16 parameter", "[fib]")
{
    auto prec = Precision::with_bits(bits_for_depth(12));
    WorkingPrecision wp(prec.mantissa_bits);
    auto r = bisect_parameter(16, 10, Real(-2), Real(-1), prec);
    CHECK(r.verdict.ok);
    CHECK(r.hi - r.lo < 1e-12);
}
