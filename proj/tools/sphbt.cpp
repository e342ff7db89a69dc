#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sphbt/cli.hpp"

namespace {

const char* describe(const std::string& sub) {
    if (sub == "transform-convergence") return "DSBT of Gaussian orbitals against the quadrature transform";
    if (sub == "basis-compare") return "DSBT basis functions against spherical Bessel functions at fixed k";
    if (sub == "ftb-bench") return "timing of the FtB, Fourier and full transform stages";
    if (sub == "eigen") return "bound states of H and H2+ by imaginary-time propagation";
    if (sub == "oscillator") return "driven 3D oscillator against its exact solution";
    return "H2+ in overlapping XUV and IR pulses";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spherical Bessel transform and DSBT-DVR solver"};
    app.set_version_flag("--version", std::string(sphbt::cli::version));
    app.require_subcommand(1);
    app.footer("Parameters are overridden with --key.path value; thread count comes from SPHBT_THREADS.\n"
               "Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 non-convergence.");

    std::string config_file, out_dir = "out";
    bool serial = false, full_scale = false;
    std::vector<CLI::App*> subs;
    for (const auto& name : sphbt::cli::subcommands()) {
        auto* s = app.add_subcommand(name, describe(name));
        s->allow_extras();
        s->add_option("--config", config_file, "JSON configuration file");
        s->add_option("--out", out_dir, "output directory")->capture_default_str();
        s->add_flag("--serial", serial, "single worker, deterministic ordering");
        if (name == "streak") s->add_flag("--full-scale", full_scale, "r_max = 409.6 instead of the desk preset");
        subs.push_back(s);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    CLI::App* chosen = nullptr;
    for (auto* s : subs)
        if (s->parsed()) chosen = s;
    try {
        std::vector<std::string> overrides;
        if (full_scale) overrides = {"--grid.rmax", "409.6"};
        for (const auto& tok : chosen->remaining()) overrides.push_back(tok);
        std::optional<std::filesystem::path> file;
        if (!config_file.empty()) file = config_file;
        const auto cfg = sphbt::cli::parse_config(chosen->get_name(), file, overrides, out_dir, serial);
        sphbt::cli::RunContext ctx{&std::cerr};
        for (const auto& f : sphbt::cli::run(cfg, ctx)) std::cout << f.string() << "\n";
        return 0;
    } catch (const sphbt::Error& e) {
        std::cerr << "sphbt " << chosen->get_name() << ": error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "sphbt " << chosen->get_name() << ": error: " << e.what() << "\n";
        return 3;
    }
}
