#include <fiblab/map.hpp>

#include <catch_amalgamated.hpp>

using namespace fiblab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double d(const Real& x) { return x.convert_to<double>(); }

} // namespace

TEST_CASE("eval at small integer points", "[map]")
{
    CHECK(d(eval(make_params(2, "0"), Real(0))) == 0);
    CHECK(d(eval(make_params(2, "-1"), Real(-1))) == 0);
    CHECK(d(eval(make_params(4, "-1"), Real(1))) == 0);
    CHECK(d(eval(make_params(6, "0.5"), Real(-2))) == 64.5);
}

TEST_CASE("derivative is l x^(l-1)", "[map]")
{
    CHECK(d(deriv(make_params(2, "0"), Real(1))) == 2);
    CHECK(d(deriv(make_params(6, "0"), Real(-1))) == -6);
    CHECK(d(deriv(make_params(4, "-1.5"), Real(0))) == 0);
}

TEST_CASE("schwarzian is -(l^2-1)/(2x^2) and singular at 0", "[map]")
{
    CHECK(d(schwarzian(make_params(2, "0"), Real(1))) == -1.5);
    CHECK(d(schwarzian(make_params(2, "0"), Real(2))) == -0.375);
    CHECK(d(schwarzian(make_params(4, "0"), Real(1))) == -7.5);
    CHECK(d(schwarzian(make_params(4, "0"), Real(-1))) == -7.5);
    CHECK_THROWS_AS(schwarzian(make_params(2, "-1"), Real(0)), SingularityError);
}

TEST_CASE("odd or small degrees are rejected", "[map]")
{
    CHECK_THROWS_AS(make_params(3, "-1"), std::invalid_argument);
    CHECK_THROWS_AS(make_params(0, "-1"), std::invalid_argument);
}

TEST_CASE("orbit of the critical point on a schedule", "[map]")
{
    auto rec = iterate(make_params(2, "-1"), Real(0), {1, 2, 3});
    REQUIRE(rec.times == std::vector<long>{0, 1, 2, 3});
    CHECK(d(rec.values[1]) == -1);
    CHECK(d(rec.values[2]) == 0);
    CHECK(d(rec.values[3]) == -1);
    CHECK_FALSE(rec.escaped);

    auto tip = iterate(make_params(2, "-2"), Real(0), {1, 2, 3});
    CHECK(d(tip.values[1]) == -2);
    CHECK(d(tip.values[2]) == 2);
    CHECK(d(tip.values[3]) == 2);
}

TEST_CASE("derivative chain matches the product of derivatives", "[map]")
{
    auto p = make_params(4, "-1");
    Real x0("0.37");
    auto rec = iterate(p, x0, {1, 2, 3, 4});
    REQUIRE_FALSE(rec.escaped);
    Real x = x0, chain = 1;
    for (int t = 1; t <= 4; ++t) {
        chain *= abs(deriv(p, x));
        x = eval(p, x);
        CHECK_THAT(d(rec.values[t]), WithinRel(d(x), 1e-14));
        CHECK_THAT(d(rec.deriv_chain[t]), WithinRel(d(chain), 1e-14));
    }
    auto [v, dv] = iterate_deriv(p, x0, 4);
    CHECK_THAT(d(v), WithinRel(d(x), 1e-14));
    CHECK_THAT(d(abs(dv)), WithinRel(d(chain), 1e-14));
    CHECK_THAT(d(iterate_to(p, x0, 4)), WithinRel(d(x), 1e-14));
}

TEST_CASE("escaping orbits are flagged, not followed", "[map]")
{
    auto rec = iterate(make_params(2, "1"), Real(0), {10, 40});
    CHECK(rec.escaped);
}

TEST_CASE("unsorted schedules are rejected", "[map]")
{
    CHECK_THROWS_AS(iterate(make_params(2, "-1"), Real(0), {3, 1}), std::invalid_argument);
}

TEST_CASE("error estimate exceeding the tolerance raises", "[map]")
{
    // 64 bits with a chaotic parameter: the forward bound passes 2^-32 quickly
    auto p = make_params(2, "-1.99", 64);
    CHECK_THROWS_AS(iterate(p, Real("0.1"), {200}), PrecisionExhausted);
}

TEST_CASE("tagged reals round-trip at the stated precision", "[precision]")
{
    WorkingPrecision wp(256);
    Real x = make_real("-1.8705286321646448", 256);
    std::string s = to_tagged(x, 256);
    CHECK(s.substr(s.size() - 4) == "@256");
    auto back = from_tagged(s);
    CHECK(back.bits == 256);
    CHECK_THAT(d(back.value - x), WithinAbs(0, 1e-70));
    CHECK_THROWS(from_tagged("1.5"));
}
