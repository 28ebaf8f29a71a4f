// spinramp command-line entry point. Argument parsing only; the work lives in
// spinramp::run_command.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "spinramp/commands.hpp"

namespace {

struct Flags {
    std::string config;
    std::string preset;
    std::string out = "out";
    std::optional<int> nodes;
    std::optional<double> grid_step;
    int threads = 0;
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "scenario YAML file");
    sub->add_option("--preset", f.preset, "built-in scenario name (see `spinramp presets`)");
    sub->add_option("--out", f.out, "output directory")->capture_default_str();
    sub->add_option("--nodes", f.nodes, "override ensemble node count");
    sub->add_option("--grid-step", f.grid_step, "override eigenmode grid step");
    sub->add_option("--threads", f.threads, "worker threads, 0 = all cores")->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spinramp: CPMG echo trains under ramped offset fields"};
    app.require_subcommand(1);

    Flags f;
    spinramp::CommandRequest req;
    const std::pair<const char*, const char*> commands[] = {
        {"modes", "eigenmode scan to CSV"},
        {"adiab", "critical velocity, A profile and regions"},
        {"simulate", "ensemble echo train to CSV"},
        {"rto", "round-trip sweep with step detection"},
        {"gradecho", "CP visibility profile and out-of-phase revivals"},
        {"compare", "simulation versus first-order theory report"},
        {"run", "run a scenario by its kind and write every requested output"},
        {"presets", "list built-in scenarios, or print one with --preset"},
    };
    for (const auto& [name, help] : commands) {
        add_common(app.add_subcommand(name, help), f);
    }
    auto* plot = app.add_subcommand("plot", "render CSV files as SVG line charts");
    plot->add_option("inputs", req.inputs, "CSV files")->required();
    plot->add_option("--x", req.x_column, "x column (default: first)");
    plot->add_option("--y", req.y_columns, "y columns (default: all others)");
    plot->add_option("--out", f.out, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : spinramp::kExitValidation;
    }

    req.command = app.get_subcommands().front()->get_name();
    if (!f.config.empty()) {
        req.config = f.config;
    }
    if (!f.preset.empty()) {
        req.preset = f.preset;
    }
    req.out_dir = f.out;
    req.overrides = {f.nodes, f.grid_step, f.threads};
    return spinramp::run_command(req, std::cout, std::cerr);
}
