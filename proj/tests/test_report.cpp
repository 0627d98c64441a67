#include <fiblab/suite.hpp>

#include <catch_amalgamated.hpp>

#include <cstdlib>

using namespace fiblab;

TEST_CASE("run configuration is validated", "[config]")
{
    RunConfig ok;
    ok.command = "points";
    CHECK_NOTHROW(ok.validate());

    auto bad = [](auto mutate) {
        RunConfig c;
        c.command = "points";
        mutate(c);
        return c;
    };
    CHECK_THROWS_AS(bad([](RunConfig& c) { c.degree = 3; }).validate(), ConfigError);
    CHECK_THROWS_AS(bad([](RunConfig& c) { c.degree = 0; }).validate(), ConfigError);
    CHECK_THROWS_AS(bad([](RunConfig& c) { c.depth = -1; }).validate(), ConfigError);
    CHECK_THROWS_AS(bad([](RunConfig& c) { c.bits = 10; }).validate(), ConfigError);
    CHECK_THROWS_AS(bad([](RunConfig& c) {
                        c.command = "asymptotics";
                        c.mode = "bogus";
                    }).validate(),
                    ConfigError);
    CHECK_THROWS_AS(bad([](RunConfig& c) { c.command = "nope"; }).validate(), ConfigError);
}

TEST_CASE("checks serialize with a verdict", "[report]")
{
    Report rep;
    rep.add({"alpha", "first", Json{{"x", 1}}, Json{{"max", 2}}, true});
    CHECK(rep.all_pass());
    rep.add({"beta", "second", Json{{"x", 3}}, Json{{"max", 2}}, false});
    CHECK_FALSE(rep.all_pass());
    Json j = rep.to_json(false);
    REQUIRE(j["checks"].size() == 2);
    CHECK(j["checks"][0]["verdict"] == "pass");
    CHECK(j["checks"][1]["verdict"] == "fail");
    CHECK(j["all_pass"] == false);
    CHECK_FALSE(j.contains("timing"));
}

TEST_CASE("timing lives in its own section", "[report]")
{
    Report a, b;
    a.time("stage", 1.5);
    b.time("stage", 2.5);
    CHECK(a.dump(false) == b.dump(false));
    CHECK(a.dump(true) != b.dump(true));
    Json j = a.to_json(true);
    CHECK(j["timing"]["stage"] == 1.5);
    // timing is the last key, after everything that must be reproducible
    CHECK(std::prev(j.end()).key() == "timing");
}

TEST_CASE("reals serialize as tagged strings", "[report]")
{
    WorkingPrecision wp(256);
    Real x = make_real("-1.87052863216464", 256);
    Json j = tagged(x, 256);
    REQUIRE(j.is_string());
    std::string s = j.get<std::string>();
    CHECK(s.rfind("-1.8705286321646", 0) == 0);
    CHECK(s.substr(s.find('@')) == "@256");
    // the tag rounds to exactly 256 bits; the working mantissa may carry a few more
    CHECK(abs(from_tagged(s).value - x) < ldexp(Real(1), -254));
}

TEST_CASE("precision from the environment", "[config]")
{
    ::setenv("FIBLAB_PRECISION_BITS", "320", 1);
    CHECK(default_bits_from_env(0) == 320);
    ::setenv("FIBLAB_PRECISION_BITS", "abc", 1);
    CHECK_THROWS(default_bits_from_env(0));
    ::setenv("FIBLAB_PRECISION_BITS", "12", 1);
    CHECK_THROWS(default_bits_from_env(0));
    ::unsetenv("FIBLAB_PRECISION_BITS");
    CHECK(default_bits_from_env(77) == 77);
}

TEST_CASE("find-parameter report is reproducible", "[report]")
{
    RunConfig cfg;
    cfg.command = "find-parameter";
    cfg.degree = 2;
    cfg.depth = 12;
    Report a = dispatch(cfg), b = dispatch(cfg);
    CHECK(a.dump(false) == b.dump(false));
    CHECK(a.all_pass());
}
