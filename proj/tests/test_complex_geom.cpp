#include <fiblab/discs.hpp>
#include <fiblab/svg.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace fiblab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

} // namespace

TEST_CASE("polygon areas approach the disc", "[region]")
{
    CHECK_THAT(region_area(euclid_disc(0, 1, 2048)), WithinRel(pi, 1e-6));
    double annulus = region_area(euclid_disc(0, 1, 2048)) - region_area(euclid_disc(0, 0.5, 2048));
    CHECK_THAT(annulus, WithinRel(3 * pi / 4, 1e-6));
    // scale is applied to the local coordinates
    Region r = euclid_disc(0, 1, 2048);
    r.scale = 2;
    CHECK_THAT(region_area(r), WithinRel(4 * pi, 1e-6));
}

TEST_CASE("lens at a right angle is the round disc", "[region]")
{
    Region lens = poincare_lens(-1, 1, pi / 2, 256);
    for (auto z : lens.boundary)
        CHECK_THAT(std::abs(z), WithinAbs(1, 1e-12));
    // wider exterior angle gives a thinner lens
    double prev = region_area(lens);
    for (double a : {2.0, 2.5, 3.0, 3.1}) {
        double area = region_area(poincare_lens(-1, 1, a, 256));
        CHECK(area < prev);
        prev = area;
    }
    CHECK(prev < 0.1);
    CHECK_THROWS_AS(poincare_lens(-1, 1, pi, 256), GeometryError);
    CHECK_THROWS_AS(poincare_lens(1, -1, 1, 256), GeometryError);
}

TEST_CASE("containment of concentric discs", "[region]")
{
    auto rep = region_contains(euclid_disc(0, 1, 1024), euclid_disc(0, 0.5, 1024));
    CHECK(rep.verdict == Containment::Contained);
    CHECK_THAT(rep.separation, WithinAbs(0.5, 1e-4));
    CHECK(rep.outside == 0);

    auto out = region_contains(euclid_disc(0, 0.5, 1024), euclid_disc(0, 1, 1024));
    CHECK(out.verdict == Containment::NotContained);
    CHECK(out.outside > 0);

    // touching boundaries cannot be decided at sampling resolution
    auto touch = region_contains(euclid_disc(0, 1, 1024), euclid_disc(0.5, 0.5, 1024));
    CHECK(touch.verdict == Containment::Inconclusive);

    Region shifted = euclid_disc(0, 1);
    shifted.origin = 1;
    CHECK_THROWS_AS(region_contains(euclid_disc(0, 1), shifted), GeometryError);
}

TEST_CASE("symmetric regions are exact mirrors", "[region]")
{
    CHECK(conjugation_symmetric(d_star(-0.3, 2.0)));
    CHECK(conjugation_symmetric(poincare_lens(0, 1, 1.2)));
    Region r = d_star(-0.3, 2.0);
    r.boundary[r.size() - 3] += Cplx(0, 1e-9);
    CHECK_FALSE(conjugation_symmetric(r));
}

TEST_CASE("discs about the origin are rotation invariant", "[region]")
{
    CHECK(rotation_defect(euclid_disc(0, 1, 1024), 16) < 1e-5);
    CHECK(rotation_defect(d_star(0.2, 1.0, 1024), 16) > 0.01);
}

TEST_CASE("star regions", "[region]")
{
    auto pieces = star_region(0.3, 0.2, 0.6, 8);
    CHECK(pieces.size() == 16);
    for (const auto& p : pieces)
        CHECK(region_area(p) > 0);
    // the degenerate limit is a pair of segments per rotation
    auto flat = star_region(0, 0.2, 0.6, 8);
    CHECK(flat.size() == 16);
    for (const auto& p : flat)
        CHECK(region_area(p) == 0);
    CHECK_THROWS_AS(star_region(0.3, 0.6, 0.2, 8), GeometryError);
    CHECK_THROWS_AS(star_region(0.3, 0.2, 0.6, 2), GeometryError);
}

TEST_CASE("pullback by the zeroth iterate is the identity", "[pullback]")
{
    auto p = make_params(2, "-1", 128);
    Region D = d_star(0, 1, 64);
    Region same = pullback_diffeo(p, 0, D, Real(0), Real(1), Cplx(1, 0), Cplx(0, 0));
    CHECK(same.boundary == D.boundary);
}

TEST_CASE("preimage of a round disc lies in the disc on the preimage interval", "[pullback]")
{
    // f(x) = x^2 - 1 maps [1, sqrt 2] onto J = [0, 1]; the branch of the inverse is a
    // real diffeomorphism and must map D_*(J) into D_*([1, sqrt 2])
    auto p = make_params(2, "-1", 128);
    Region J = d_star(0, 1, 256);
    Region pre = pullback_diffeo(p, 1, J, Real(0), Real(1), Cplx(std::sqrt(2.0), 0), Cplx(1, 0));
    CHECK(conjugation_symmetric(pre));
    const double m = (1 + std::sqrt(2.0)) / 2, r = (std::sqrt(2.0) - 1) / 2;
    double excess = 0;
    for (auto z : pre.boundary)
        excess = std::max(excess, std::abs(z - m) / r - 1);
    CHECK(excess < 1e-9);
    // strictly inside away from the real endpoints
    auto mid = pre.boundary[pre.arc_end / 2];
    CHECK(std::abs(mid - m) < r * 0.999);
    // and the forward image lands on the target boundary
    for (size_t k = 0; k < pre.size(); k += 7) {
        Cplx w = pre.boundary[k] * pre.boundary[k] - 1.0;
        CHECK(std::abs(std::abs(w - 0.5) - 0.5) < 1e-6);
    }
}

TEST_CASE("SVG output", "[svg]")
{
    std::string empty = render_svg({});
    CHECK(empty.find("<svg") != std::string::npos);
    CHECK(svg_paths(empty).empty());

    Region a = euclid_disc(0, 1, 64), b = euclid_disc(0, 2, 64), c = euclid_disc(0, 3, 64);
    a.level = 1;
    b.level = 2;
    c.level = 3;
    std::string doc = render_svg({&a, &b, &c});
    CHECK(doc == render_svg({&a, &b, &c}));
    auto paths = svg_paths(doc);
    REQUIRE(paths.size() == 3);
    for (size_t k = 0; k < 3; ++k) {
        REQUIRE(paths[k].size() == a.size());
        for (auto z : paths[k])
            CHECK_THAT(std::abs(z), WithinAbs(k + 1.0, 1e-5));
    }
    CHECK_THROWS_AS(write_text_file("/nonexistent-dir/x.svg", doc), IoError);
}

TEST_CASE("small disc ladder at degree 16", "[discs]")
{
    auto prec = Precision::with_bits(bits_for_depth(14));
    WorkingPrecision wp(prec.mantissa_bits);
    auto r = bisect_parameter(16, 14, Real(-2), Real(-1), prec);
    auto L = compute_level_points(MapParams(16, (r.lo + r.hi) / 2, prec), 10);
    LadderOptions opt;
    opt.levels_past_k0 = 2;
    auto lad = build_nested_discs(L, opt);
    CHECK(lad.k0 >= 4);
    CHECK(lad.all_ok());
    for (const auto& lv : lad.levels) {
        INFO("level " << lv.n);
        CHECK(conjugation_symmetric(lv.D));
        CHECK(lv.trace_ok);
        CHECK(lv.in_dstar);
        if (lv.nested)
            CHECK(lv.nested->verdict == Containment::Contained);
    }
    auto ann = annulus_report(lad);
    CHECK(ann.tau_min > 0);
}
