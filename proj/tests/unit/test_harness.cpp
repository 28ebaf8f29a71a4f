#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "spinramp/commands.hpp"
#include "spinramp/errors.hpp"
#include "spinramp/io.hpp"
#include "spinramp/plot.hpp"
#include "spinramp/report.hpp"
#include "spinramp/scenario.hpp"
#include "spinramp/steps.hpp"

using namespace spinramp;
namespace fs = std::filesystem;

namespace {

constexpr const char* kMinimal = R"(
name: tiny
kind: train
units: {t180: 40.0e-6}
cycle: {echo_spacing_t180: 6.4}
ramp: {type: linear, rate: 2.0e-3, max: 1.0}
ensemble: {nodes: 8}
analysis: {window: [0.0, 1.0]}
)";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("spinramp_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Tag balance check: every element opened is closed in order.
bool well_formed(const std::string& xml) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    while ((i = xml.find('<', i)) != std::string::npos) {
        const std::size_t j = xml.find('>', i);
        if (j == std::string::npos) return false;
        std::string tag = xml.substr(i + 1, j - i - 1);
        i = j + 1;
        if (tag.empty() || tag[0] == '?' || tag[0] == '!') continue;
        if (tag.back() == '/') continue;
        if (tag[0] == '/') {
            const std::string name = tag.substr(1);
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
            continue;
        }
        stack.push_back(tag.substr(0, tag.find(' ')));
    }
    return stack.empty();
}

std::size_t count(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t i = s.find(needle); i != std::string::npos; i = s.find(needle, i + 1)) ++n;
    return n;
}

} // namespace

TEST(Scenario, MinimalParses) {
    const Scenario s = parse_scenario(kMinimal);
    EXPECT_EQ(s.name, "tiny");
    EXPECT_EQ(s.n_echoes, 500);
    EXPECT_NEAR(s.units.omega1 * s.units.t180, std::numbers::pi, 1e-12);
    EXPECT_NEAR(s.echo_spacing_over_t180, 6.4, 1e-12);
    EXPECT_NEAR(s.ramp_rate, 2e-3, 1e-15);
    EXPECT_EQ(s.ensemble.n_nodes, 8);
}

TEST(Scenario, UnknownKeysAreListed) {
    try {
        parse_scenario(std::string(kMinimal) + "bogus: 1\nensemble2: {}\n");
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("bogus"), std::string::npos);
        EXPECT_NE(msg.find("ensemble2"), std::string::npos);
    }
    EXPECT_THROW(parse_scenario(R"(
cycle: {echo_spacing_t180: 6.4, flip: 90}
ramp: {type: linear, rate: 1.0e-3, max: 1.0}
)"),
                 ValidationError);
}

TEST(Scenario, ZeroEchoesRejected) {
    EXPECT_THROW(parse_scenario(std::string(kMinimal) + "n_echoes: 0\n"), ValidationError);
    EXPECT_THROW(parse_scenario(R"(
cycle: {echo_spacing_t180: 6.4}
ramp: {type: constant, value: 0.0}
)"),
                 ValidationError);
}

TEST(Scenario, UnitsMustAgree) {
    EXPECT_NO_THROW(parse_scenario(R"(
units: {t180: 40.0e-6, omega1_hz: 12500}
cycle: {echo_spacing_t180: 6.4}
ramp: {type: linear, rate: 1.0e-3, max: 1.0}
)"));
    EXPECT_THROW(parse_scenario(R"(
units: {t180: 40.0e-6, omega1: 1000.0}
cycle: {echo_spacing_t180: 6.4}
ramp: {type: linear, rate: 1.0e-3, max: 1.0}
)"),
                 ValidationError);
    const Scenario s = parse_scenario(R"(
units: {omega1_hz: 12500}
cycle: {echo_spacing: 256.0e-6}
ramp: {type: linear, rate: 1.0e-3, max: 1.0}
)");
    EXPECT_NEAR(s.echo_spacing_over_t180, 6.4, 1e-9);
}

TEST(Scenario, SegmentsAndRtoRange) {
    const Scenario s = parse_scenario(R"(
kind: rto
cycle:
  segments:
    - {duration_t180: 2.7}
    - {flip_deg: 180, phase_deg: 90}
    - {duration_t180: 2.7}
rto: {rate: 1.0e-3, deltas: {from: 0.5, to: 1.0, step: 0.1}}
)");
    EXPECT_NEAR(s.echo_spacing_over_t180, 6.4, 1e-12);
    ASSERT_EQ(s.rto.deltas.size(), 6u);
    EXPECT_NEAR(s.rto.deltas.back(), 1.0, 1e-12);
    EXPECT_TRUE(s.cycle.single_pulse_geometry().has_value());
}

TEST(Scenario, EveryPresetParses) {
    const auto names = preset_names();
    EXPECT_GE(names.size(), 23u);
    for (const auto& n : names) {
        EXPECT_NO_THROW(load_preset(n)) << n;
    }
    EXPECT_THROW(load_preset("nope"), ValidationError);
}

TEST(Steps, ConstantSweepIsOnePlateau) {
    const std::vector<double> x{0, 1, 2, 3, 4, 5};
    const std::vector<double> y(6, 0.7);
    const auto d = detect_steps(x, y);
    ASSERT_EQ(d.plateaus.size(), 1u);
    EXPECT_TRUE(d.steps.empty());
    EXPECT_NEAR(d.plateaus[0].mean, 0.7, 1e-15);
}

TEST(Steps, NoisyStaircase) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<double> x;
    std::vector<double> y;
    for (int i = 0; i < 60; ++i) {
        x.push_back(0.05 * i);
        y.push_back((i < 23 ? 1.0 : 0.6) + noise(rng));
    }
    const auto d = detect_steps(x, y);
    ASSERT_EQ(d.plateaus.size(), 2u);
    ASSERT_EQ(d.steps.size(), 1u);
    EXPECT_NEAR(d.steps[0].after, x[23], 0.05 + 1e-12);
    EXPECT_NEAR(d.plateaus[0].mean, 1.0, 0.01);
    EXPECT_NEAR(d.plateaus[1].mean, 0.6, 0.01);
}

TEST(Steps, LoneOutlierDoesNotOpenAStep) {
    const std::vector<double> x{0, 1, 2, 3, 4};
    const std::vector<double> y{1.0, 1.0, 0.5, 1.0, 1.0};
    const auto d = detect_steps(x, y);
    EXPECT_EQ(d.plateaus.size(), 1u);
    EXPECT_NEAR(d.plateaus[0].spread(), 0.5, 1e-15);
    EXPECT_THROW(detect_steps(std::vector<double>{1, 0}, std::vector<double>{0, 0}), InvalidArgument);
}

TEST(Compare, TrainAgainstItselfIsZero) {
    const Scenario s = parse_scenario(kMinimal);
    const auto t = run_ensemble(s.cycle, s.ramp, s.n_echoes, s.ensemble);
    AdiabaticPrediction self;
    for (const auto& e : t.samples) {
        self.grid.push_back(e.omega0_norm);
        self.n_perp.push_back(e.s_in);
        self.s_in0.push_back(e.s_in);
        self.s_in1.push_back(e.s_in);
        self.s_out1_abs.push_back(std::abs(e.s_out));
    }
    const auto r = compare(t, self, {0.0, 1.0});
    EXPECT_EQ(r.rms_in, 0.0);
    EXPECT_EQ(r.rms_out, 0.0);
    EXPECT_EQ(r.max_abs_dev, 0.0);
    EXPECT_THROW(compare(t, self, {5.0, 6.0}), InvalidArgument);
}

TEST(Compare, Fig1PresetAgreesAndMismatchedSpacingDoesNot) {
    Scenario s = load_preset("fig1_rate5e-4");
    const auto good = analyze_train(s, {});
    EXPECT_LT(good.report.rms_in, 0.03);
    EXPECT_LE(good.report.rms_in, good.report.max_abs_dev);
    EXPECT_LE(good.report.rms_out, good.report.max_abs_dev);
    ASSERT_FALSE(good.report.segments.empty());
    EXPECT_NEAR(good.report.segments.front().fit.a_cpmg, 1.0, 0.02);

    // Negative control: simulate at t_E = 24 t180, predict for 6.4.
    Scenario wrong = load_preset("fig2_te24");
    const auto sim = run_ensemble(wrong.cycle, wrong.ramp, wrong.n_echoes, wrong.ensemble);
    const auto r = compare(sim, good.theory, {0.0, 1.45});
    EXPECT_GT(r.rms_in, 0.1);
}

TEST(Plot, SingleFlatLine) {
    PlotSpec p;
    p.series.push_back({"flat", {0.0, 1.0, 2.0}, {0.5, 0.5, 0.5}});
    const std::string svg = render_svg(p);
    EXPECT_EQ(count(svg, "<polyline"), 1u);
    EXPECT_TRUE(well_formed(svg));
    EXPECT_EQ(svg, render_svg(p));
}

TEST(Plot, OverlayLegendAndEscaping) {
    PlotSpec p;
    p.title = "a < b & c";
    p.series.push_back({"simulation", {0.0, 1.0}, {1.0, 0.2}});
    p.series.push_back({"theory", {0.0, 1.0}, {0.9, 0.3}});
    p.markers = {0.5};
    const std::string svg = render_svg(p);
    EXPECT_EQ(count(svg, "<polyline"), 2u);
    EXPECT_NE(svg.find(">simulation</text>"), std::string::npos);
    EXPECT_NE(svg.find(">theory</text>"), std::string::npos);
    EXPECT_NE(svg.find("a &lt; b &amp; c"), std::string::npos);
    EXPECT_TRUE(well_formed(svg));
    EXPECT_THROW(render_svg(PlotSpec{}), InvalidArgument);
}

TEST(Io, FormatsAndReadsBack) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(-0.0), "0");
    EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
    EchoTrain t;
    t.samples.push_back({1, 2.56e-4, 0.001, 0.99, -0.01, 0.0});
    t.samples.push_back({2, 5.12e-4, 0.002, 0.98, -0.02, 0.1});
    const fs::path dir = scratch("io");
    {
        std::ofstream out(dir / "t.csv");
        write_train_csv(out, t, {{"scenario", "x"}});
    }
    const std::string text = slurp(dir / "t.csv");
    EXPECT_NE(text.find("# nodes=1\n"), std::string::npos);
    EXPECT_NE(text.find("\nk,t_s,omega0_norm,S_in,S_out,Mz\n"), std::string::npos);
    const auto table = read_csv((dir / "t.csv").string());
    EXPECT_EQ(table.column("S_in"), (std::vector<double>{0.99, 0.98}));
    EXPECT_THROW(table.column("nope"), InvalidArgument);
}

TEST(Commands, ExitCodes) {
    const fs::path dir = scratch("exit");
    std::ostringstream log;
    std::ostringstream err;
    {
        std::ofstream bad(dir / "bad.yaml");
        bad << kMinimal << "surprise: true\n";
    }
    EXPECT_EQ(run_scenario((dir / "bad.yaml").string(), (dir / "o").string(), {}, log, err),
              kExitValidation);
    EXPECT_NE(err.str().find("surprise"), std::string::npos);

    CommandRequest none;
    none.command = "simulate";
    EXPECT_EQ(run_command(none, log, err), kExitValidation);

    // A scan grid too coarse to follow the eigenvector is a convergence failure.
    {
        std::ofstream coarse(dir / "coarse.yaml");
        coarse << "kind: modes\ncycle: {echo_spacing_t180: 6.4}\nanalysis: {window: [0.0, 5.0]}\n";
    }
    CommandRequest modes;
    modes.command = "modes";
    modes.config = (dir / "coarse.yaml").string();
    modes.out_dir = (dir / "m").string();
    modes.overrides.grid_step = 1.0;
    EXPECT_EQ(run_command(modes, log, err), kExitConvergence);
    modes.overrides.grid_step.reset();
    EXPECT_EQ(run_command(modes, log, err), kExitOk);
    EXPECT_TRUE(fs::exists(dir / "m" / "modes.csv"));
}

TEST(Commands, RunIsByteReproducible) {
    const fs::path a = scratch("rep_a");
    const fs::path b = scratch("rep_b");
    std::ostringstream log;
    std::ostringstream err;
    CommandRequest req;
    req.command = "run";
    req.preset = "fig1_rate2e-3";
    req.out_dir = a.string();
    ASSERT_EQ(run_command(req, log, err), kExitOk) << err.str();
    req.out_dir = b.string();
    req.overrides.threads = 3;
    ASSERT_EQ(run_command(req, log, err), kExitOk) << err.str();
    for (const char* f : {"train.csv", "theory.csv", "profile.csv", "comparison.json",
                          "regions.json", "train.svg"}) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    const std::string json = slurp(a / "comparison.json");
    EXPECT_LT(json.find("\"rms_in\""), json.find("\"rms_out\""));
    EXPECT_LT(json.find("\"rms_out\""), json.find("\"max_abs_dev\""));

    CommandRequest plot;
    plot.command = "plot";
    plot.inputs = {(a / "train.csv").string()};
    plot.x_column = "omega0_norm";
    plot.y_columns = {"S_in", "S_out"};
    plot.out_dir = (a / "plots").string();
    EXPECT_EQ(run_command(plot, log, err), kExitOk) << err.str();
    const std::string svg = slurp(a / "plots" / "train.svg");
    EXPECT_EQ(count(svg, "<polyline"), 2u);
}
