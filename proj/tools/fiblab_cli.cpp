#include <fiblab/suite.hpp>

#include <CLI11.hpp>

#include <iostream>

using namespace fiblab;

namespace {

void common_options(CLI::App* sc, RunConfig& cfg)
{
    sc->add_option("--degree", cfg.degree, "even degree l of x^l + c1")->capture_default_str();
    sc->add_option("--depth", cfg.depth, "number of Fibonacci levels")->capture_default_str();
    sc->add_option("--bits", cfg.bits, "mantissa bits (default: FIBLAB_PRECISION_BITS or chosen from the depth)");
    sc->add_option("--seed", cfg.seed, "seed for randomized sweeps")->capture_default_str();
    sc->add_option("--json", cfg.json_out, "also write the report to this file");
}

} // namespace

int main(int argc, char** argv)
{
    RunConfig cfg;
    try {
        cfg.bits = default_bits_from_env(0);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    CLI::App app{"Fibonacci unimodal map laboratory"};
    app.require_subcommand(1);

    std::string bracket;
    auto* fp = app.add_subcommand("find-parameter", "bisect c1 for the Fibonacci itinerary");
    common_options(fp, cfg);
    fp->add_option("--bracket", bracket, "parameter bracket a,b (default -2,-1)");

    auto* pts = app.add_subcommand("points", "level points and their ordering");
    common_options(pts, cfg);

    auto* bnd = app.add_subcommand("bounds", "real bounds and coverings");
    common_options(bnd, cfg);

    auto* dis = app.add_subcommand("distortion", "cross-ratio sweeps, exact checks, derivative profile");
    common_options(dis, cfg);
    dis->add_option("--sweep", cfg.sweep, "random samples per sweep")->capture_default_str();

    auto* asy = app.add_subcommand("asymptotics", "flow, Gamma, composition tracking, branch model");
    common_options(asy, cfg);
    asy->add_option("--mode", cfg.mode, "flow | gamma | comdv | miracle2")->required();
    asy->add_option("--csv", cfg.csv_out, "dump the flow traces (mode flow)");

    auto* dsc = app.add_subcommand("discs", "nested disc ladder and petal analysis");
    common_options(dsc, cfg);
    dsc->add_option("--levels", cfg.levels, "levels past k0")->capture_default_str();
    dsc->add_option("--render", cfg.render_out, "write the ladder as SVG");

    auto* sui = app.add_subcommand("suite", "every acceptance property in one report");
    common_options(sui, cfg);
    sui->add_option("--sweep", cfg.sweep, "random samples per sweep")->capture_default_str();
    sui->add_option("--levels", cfg.levels, "disc levels past k0")->capture_default_str();
    sui->add_option("--render", cfg.render_out, "write the ladder as SVG");

    CLI11_PARSE(app, argc, argv);

    cfg.command = app.get_subcommands().front()->get_name();
    if (!bracket.empty()) {
        auto comma = bracket.find(',');
        if (comma == std::string::npos) {
            std::cerr << "--bracket needs the form a,b\n";
            return 2;
        }
        cfg.bracket = std::make_pair(bracket.substr(0, comma), bracket.substr(comma + 1));
    }

    Report rep;
    try {
        rep = dispatch(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n" << app.help();
        return 2;
    }
    const std::string out = rep.dump();
    std::cout << out;
    if (!cfg.json_out.empty()) {
        try {
            write_text_file(cfg.json_out, out);
        } catch (const IoError& e) {
            std::cerr << e.what() << "\n";
            return 2;
        }
    }
    return rep.all_pass() ? 0 : 1;
}
