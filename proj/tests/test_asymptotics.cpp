#include <fiblab/composition.hpp>
#include <fiblab/branch_model.hpp>
#include <fiblab/normalized.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace fiblab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const LevelPoints& points16()
{
    static const LevelPoints L = [] {
        auto prec = Precision::with_bits(bits_for_depth(14));
        WorkingPrecision wp(prec.mantissa_bits);
        auto r = bisect_parameter(16, 14, Real(-2), Real(-1), prec);
        return compute_level_points(MapParams(16, (r.lo + r.hi) / 2, prec), 10);
    }();
    return L;
}

} // namespace

TEST_CASE("flow at time zero and at the origin", "[flow]")
{
    FlowParams fp{1, 1, 16};
    for (double x : {-0.9, -0.1, 0.3, 1.0})
        CHECK(flow_phi(fp, 0, x) == x);
    for (double t : {0.0, 1.0, 50.0})
        CHECK(flow_phi(fp, t, 0) == 0);
    CHECK_THROWS_AS(flow_phi(fp, -1, 0.5), std::invalid_argument);
}

TEST_CASE("closed-form flow solves the ODE", "[flow]")
{
    for (double l : {4.0, 64.0}) {
        FlowParams fp{1.3, 0.7, l};
        for (double x : {-1.0, -0.25, 0.5, 0.9}) {
            CHECK_THAT(flow_phi_numeric(fp, 10, x, 4000), WithinAbs(flow_phi(fp, 10, x), 1e-11));
            // derivative by central difference
            double h = 1e-6;
            double fd = (flow_phi(fp, 3, x + h) - flow_phi(fp, 3, x - h)) / (2 * h);
            CHECK_THAT(flow_dphi(fp, 3, x), WithinRel(fd, 1e-8));
        }
    }
}

TEST_CASE("flow is a semigroup", "[flow]")
{
    FlowParams fp{1, 1, 16};
    for (double x : {-0.8, 0.2, 0.95})
        for (double s : {0.5, 3.0})
            for (double t : {1.0, 7.5})
                CHECK_THAT(flow_phi(fp, s + t, x), WithinAbs(flow_phi(fp, s, flow_phi(fp, t, x)), 1e-14));
}

TEST_CASE("flow with vanishing cubic term is linear", "[flow]")
{
    FlowParams fp{2, 1e-300, 8};
    CHECK_THAT(flow_phi(fp, 4, 0.5), WithinRel(0.5 * std::exp(-1.0), 1e-14));
}

TEST_CASE("flow sums vanish at the origin and scale with l", "[flow]")
{
    FlowParams fp{1, 1, 64};
    auto zero = flow_sums(fp, 0, default_flow_cutoff(fp));
    CHECK(zero.S1 == 0);
    CHECK(zero.S2 == 0);
    CHECK(zero.S3 == 0);
    CHECK_THROWS_AS(flow_sums(fp, 0.5, 10), CutoffTooSmall);

    // S1 ~ sqrt(l): the normalized constant changes little from l = 256 to l = 1024
    auto c = [](double l) {
        FlowParams f{1, 1, l};
        return flow_sums(f, 0.5, default_flow_cutoff(f)).c_sqrt;
    };
    CHECK(std::fabs(c(1024) / c(256) - 1) < 0.1);
}

TEST_CASE("flow limit ratio", "[flow]")
{
    FlowParams fp{1, 1, 16};
    double x = 0.7, y = 0.2;
    CHECK_THAT(flow_phi(fp, 2000, x) / flow_phi(fp, 2000, y), WithinRel(flow_limit_ratio(fp, x, y), 1e-10));
}

TEST_CASE("Gamma map and its inverse", "[gamma]")
{
    for (double K : {0.1, 0.33, 2.0}) {
        CHECK(gamma_map(K, 16, 0) == 0);
        CHECK_THAT(gamma_map(K, 16, 1), WithinRel(1.0, 1e-15));
        CHECK_THAT(gamma_map(K, 16, -1), WithinRel(-1.0, 1e-15));
        for (double x : {-0.9, -0.3, 0.1, 0.6}) {
            CHECK_THAT(gamma_inverse(K, 16, gamma_map(K, 16, x)), WithinAbs(x, 1e-14));
            double h = 1e-6;
            CHECK_THAT(gamma_deriv(K, 16, x), WithinRel((gamma_map(K, 16, x + h) - gamma_map(K, 16, x - h)) / (2 * h), 1e-8));
            double m = std::sqrt(gamma_moebius(K, 16, x * x));
            CHECK_THAT(std::copysign(m, x), WithinAbs(gamma_map(K, 16, x), 1e-14));
        }
    }
    // K -> 0 gives the identity
    CHECK_THAT(gamma_map(1e-12, 16, 0.4), WithinAbs(0.4, 1e-10));
    CHECK_THROWS_AS(gamma_map(0, 16, 0.4), std::domain_error);
    CHECK_THROWS_AS(gamma_inverse(1, 16, 1.5), std::domain_error);
}

TEST_CASE("unperturbed synthetic family is constant", "[composition]")
{
    FlowParams fp{1, 0.25, 50};
    auto cs = synthetic_theta(fp, 0, 20);
    for (const auto& c : cs) {
        CHECK(c.a == cs.front().a);
        CHECK(c.b == cs.front().b);
        CHECK(c.g == cs.front().g);
    }
    CHECK(synthetic_family_self_map(fp, 1 / fp.l));
    // a strong cubic term breaks monotonicity on (-1, 1)
    CHECK_FALSE(synthetic_family_self_map(FlowParams{1, 1, 50}, 0.02));
}

TEST_CASE("composing the exact time-one flow reproduces the flow", "[composition]")
{
    FlowParams fp{1, 0.25, 50};
    long m = main_threshold(fp.l);
    CHECK(m == 354);
    auto thetas = exact_flow_thetas(fp, m);
    for (double x : {-0.9, 0.3, 0.99}) {
        auto tr = compose_track(thetas, fp, x, m);
        CHECK(tr.max_dev < 1e-10);
        CHECK(tr.max_ddev < 1e-10);
    }
}

TEST_CASE("perturbed compositions track the flow more closely as l grows", "[composition]")
{
    std::vector<double> xs{-0.95, -0.5, 0.25, 0.75, 0.95};
    double prev = 1e300;
    for (double l : {50.0, 200.0, 800.0}) {
        FlowParams fp{1, 0.25, l};
        auto s = composition_sweep(fp, 1 / l, xs, 5);
        CHECK(s.max_dev < prev);
        prev = s.max_dev;
    }
}

TEST_CASE("return maps in level frames", "[normalized]")
{
    const auto& L = points16();
    for (int i = 4; i <= 8; i += 2) {
        auto t = theta_coefficients(L, i);
        INFO("level " << i);
        // Psi_i(0) = 0 and a negative linear part of the form -1 + alpha'/l
        CHECK(t.fixed_point_residual < 1e-12);
        CHECK(t.psi.a1 < 0);
        CHECK(t.psi.a1 > -1);
        // Theta_i contracts at 0 with a negative cubic coefficient
        CHECK(t.theta.a1 > 0);
        CHECK(t.theta.a1 < 1);
        CHECK(t.gamma > 0);
        CHECK(t.chain_defect < 1e-6);
    }
}

TEST_CASE("branch model fit at one level", "[branch-model]")
{
    const auto& L = points16();
    auto lv = fit_branch_model_level(L, 8);
    CHECK(lv.K > 0);
    CHECK(std::isfinite(lv.value_dev));
    CHECK(lv.anchor_dev < 1e-10);
}
