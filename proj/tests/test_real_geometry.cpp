#include <fiblab/bounds.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace fiblab;
using Catch::Matchers::WithinAbs;

namespace {

double d(const Real& x) { return x.convert_to<double>(); }

MapParams certified(int l, int depth)
{
    auto prec = Precision::with_bits(bits_for_depth(depth + 4));
    WorkingPrecision wp(prec.mantissa_bits);
    auto r = bisect_parameter(l, depth + 4, Real(-2), Real(-1), prec);
    REQUIRE(r.verdict.ok);
    return MapParams(l, (r.lo + r.hi) / 2, prec);
}

const LevelPoints& points(int l, int depth)
{
    static std::map<std::pair<int, int>, LevelPoints> cache;
    auto key = std::make_pair(l, depth);
    if (!cache.count(key))
        cache.emplace(key, compute_level_points(certified(l, depth), depth));
    return cache.at(key);
}

} // namespace

TEST_CASE("orientation-reversing fixed point", "[real]")
{
    auto p = make_params(2, "-1", 128);
    CHECK_THAT(d(fixed_point_q(p)), WithinAbs((1 - std::sqrt(5.0)) / 2, 1e-15));
    CHECK(d(deriv(p, fixed_point_q(p))) < 0);
    CHECK_THROWS_AS(fixed_point_q(make_params(2, "0")), NoFixedPoint);
}

TEST_CASE("root on a monotone branch", "[real]")
{
    auto p = make_params(2, "-1", 128);
    WorkingPrecision wp(128);
    Real r = solve_on_branch(p, 1, Real(0), Interval{Real("-1.5"), Real("-0.5")});
    CHECK_THAT(d(r), WithinAbs(-1, 1e-30));
    CHECK_THROWS_AS(solve_on_branch(p, 1, Real(0), Interval{Real(-1), Real(1)}), NonMonotoneBranch);
}

TEST_CASE("level points solve their defining equations", "[real]")
{
    for (int l : {2, 8, 16}) {
        const auto& L = points(l, 10);
        double worst = 0;
        for (const auto& r : level_residuals(L))
            worst = std::max(worst, d(r.value));
        INFO("l = " << l);
        CHECK(worst < 1e-20);
    }
}

TEST_CASE("level points are ordered level by level", "[real]")
{
    for (int l : {8, 16}) {
        const auto& L = points(l, 10);
        auto rep = verify_ordering(L);
        INFO("l = " << l);
        CHECK(rep.all_ok);
        CHECK(rep.pairs.size() > 100);
        CHECK(base_case_ordering(L));
    }
}

TEST_CASE("closest returns strictly improve", "[real]")
{
    const auto& L = points(16, 10);
    for (int n = 2; n <= L.depth; ++n)
        CHECK(abs(L.d[n]) < abs(L.d[n - 1]));
}

TEST_CASE("d_n alternates sides with period four", "[real]")
{
    const auto& L = points(8, 10);
    for (int n = 1; n + 4 <= L.depth; ++n) {
        CHECK(L.side[n] == L.side[n + 4]);
        CHECK(L.side[n] == -L.side[n + 2]);
    }
}

TEST_CASE("a perturbed parameter is not accepted", "[real]")
{
    auto p = certified(8, 10);
    WorkingPrecision wp(p.precision.mantissa_bits);
    MapParams off(8, p.param + Real("1e-3"), p.precision);
    CHECK_THROWS_AS(compute_level_points(off, 10), UncertifiedParameter);
}

TEST_CASE("real bounds at degree 16", "[real]")
{
    auto rep = real_bounds_report(points(16, 10));
    CHECK(rep.chain_ok);
    CHECK(rep.ge_3_85);
    CHECK(rep.ge_14);
    CHECK(rep.ge_4_3);
}

TEST_CASE("degree 4 ratios settle while degree 2 ratios grow", "[real]")
{
    auto four = real_bounds_report(points(4, 12));
    CHECK(four.chain_ok);
    REQUIRE(four.rows.size() >= 6);
    // consecutive d-ratios at degree 4 approach a constant
    const auto& a = four.rows[four.rows.size() - 2];
    const auto& b = four.rows.back();
    CHECK(std::fabs(b.double_ratio - a.double_ratio) < 0.1 * a.double_ratio);

    auto two = real_bounds_report(points(2, 10), 4, 10);
    CHECK(two.u_ratio_increasing);
}

TEST_CASE("coverings nest with two children and bounded geometry", "[real]")
{
    const auto& L = points(16, 10);
    std::vector<CoveringFn> gens;
    for (int n = 2; n <= 7; ++n)
        gens.push_back(covering_Fn(L, n));
    for (size_t i = 0; i < gens.size(); ++i) {
        auto c = check_coverings(L, gens[i], i + 1 < gens.size() ? &gens[i + 1] : nullptr, L.S[L.depth]);
        INFO("generation " << gens[i].generation);
        CHECK(c.count_ok);
        CHECK(c.two_children);
        CHECK(c.orbit_covered);
    }
    auto g = bounded_geometry_stats(gens);
    CHECK(g.mu < 1);
    CHECK(g.min_ratio > 0);
}
