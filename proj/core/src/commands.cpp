#include "spinramp/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "spinramp/errors.hpp"
#include "spinramp/io.hpp"
#include "spinramp/plot.hpp"

namespace spinramp {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

void apply_overrides(Scenario& s, const Overrides& o) {
    if (o.nodes) {
        if (*o.nodes < 1) {
            throw ValidationError("--nodes must be >= 1");
        }
        s.ensemble.n_nodes = *o.nodes;
    }
    if (o.grid_step) {
        if (!(*o.grid_step > 0.0)) {
            throw ValidationError("--grid-step must be positive");
        }
        s.analysis.grid_step = *o.grid_step;
    }
    if (o.threads < 0) {
        throw ValidationError("--threads must be >= 0");
    }
}

namespace {

// Largest nominal offset the scenario drives the spins to.
double scenario_reach(const Scenario& s) {
    double reach = s.ramp.max_offset();
    if (s.kind == ScenarioKind::Rto && !s.rto.deltas.empty()) {
        reach = std::max(reach, *std::max_element(s.rto.deltas.begin(), s.rto.deltas.end()));
    }
    if (s.kind == ScenarioKind::Modes || reach <= 0.0) {
        reach = std::max(reach, s.analysis.window.hi);
    }
    return reach;
}

SimOptions sim_options(const Scenario& s, const SimOptions& base) {
    SimOptions o = base;
    o.substeps = s.substeps;
    return o;
}

double first_order_rate(const Scenario& s) {
    return s.kind == ScenarioKind::Rto ? s.rto.rate : s.ramp_rate;
}

} // namespace

ModesAnalysis analyze_modes(const Scenario& s, std::optional<double> rate) {
    const auto& a = s.analysis;
    double lo = a.grid_lo;
    double hi = a.grid_hi;
    if (!(hi > lo)) {
        const double dev = s.ensemble.max_deviation();
        const double reach = scenario_reach(s);
        if (s.ensemble.model == InhomogeneityModel::Multiplicative) {
            hi = reach * (1.0 + dev) + 4.0 * a.grid_step;
        } else {
            hi = reach + dev + 4.0 * a.grid_step;
            lo = std::min(lo, -dev - 4.0 * a.grid_step);
        }
    }
    ModesAnalysis m;
    m.profile = critical_velocity(theta_profile(s.cycle, uniform_grid(lo, hi, a.grid_step)));
    if (rate && *rate != 0.0) {
        m.profile = adiabaticity_map(std::move(m.profile), *rate);
        m.regions = find_nonadiabatic_regions(m.profile, a.region_threshold);
        m.watch = find_watch_regions(m.profile, a.region_threshold, a.watch_threshold);
    }
    return m;
}

TrainAnalysis analyze_train(const Scenario& s, const SimOptions& options) {
    TrainAnalysis r;
    const double rate = s.ramp_rate;
    r.modes = analyze_modes(s, rate > 0.0 ? std::optional<double>(rate) : std::nullopt);
    r.train = run_ensemble(s.cycle, s.ramp, s.n_echoes, s.ensemble, s.excitation,
                           sim_options(s, options));

    const auto& a = s.analysis;
    AdiabaticPrediction raw =
        rate > 0.0 && a.first_order
            ? first_order_signal(r.modes.profile,
                                 delta_epsilon_normalized(s.echo_spacing_over_t180, rate), a.a_cpmg)
            : adiabatic_signal(r.modes.profile, a.a_cpmg);
    const double reach = std::max(s.ramp.max_offset(), a.window.hi);
    const Window eval{r.modes.profile.grid.front(), reach + 1e-9};
    EnsembleSpec kernel = s.ensemble;
    if (!a.convolve) {
        kernel.relative_sigma = 0.0;
    }
    r.theory = convolve_inhomogeneity(raw, kernel, eval);

    const Window window{std::max(a.window.lo, eval.lo), std::min(a.window.hi, reach)};
    r.report = compare(r.train, r.theory, window);
    // Watch regions split segments too: a dip to A ~ 2 already rescales a_CPMG.
    std::vector<NonAdiabaticRegion> events = r.modes.regions;
    events.insert(events.end(), r.modes.watch.begin(), r.modes.watch.end());
    std::sort(events.begin(), events.end(),
              [](const auto& x, const auto& y) { return x.center < y.center; });
    r.report.segments = fit_segments(r.train, TabulatedCurve(r.theory.grid, r.theory.n_perp),
                                     events, window.lo, window.hi, a.fit_margin);
    return r;
}

RtoAnalysis analyze_rto(const Scenario& s, const SimOptions& options) {
    RtoAnalysis r;
    r.modes = analyze_modes(s, s.rto.rate);
    r.points = rto_sweep(s.cycle, s.rto.rate, s.rto.deltas, s.ensemble, s.excitation,
                         sim_options(s, options));
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& p : r.points) {
        x.push_back(p.delta);
        y.push_back(p.s_rto);
    }
    r.steps = detect_steps(x, y, s.rto.plateau_tol);
    return r;
}

std::vector<std::size_t> revival_peaks(const EchoTrain& train, int half_window, double min_value,
                                       double from) {
    const auto& smp = train.samples;
    const auto n = static_cast<std::ptrdiff_t>(smp.size());
    std::vector<std::size_t> out;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double v = std::abs(smp[i].s_out);
        if (v < min_value || smp[i].omega0_norm < from) {
            continue;
        }
        bool top = true;
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - half_window);
             top && j <= std::min(n - 1, i + half_window); ++j) {
            const double u = std::abs(smp[j].s_out);
            // Ties go to the earlier echo.
            top = j == i || u < v || (u == v && j > i);
        }
        if (top) {
            out.push_back(static_cast<std::size_t>(i));
        }
    }
    return out;
}

GradEchoAnalysis analyze_gradecho(const Scenario& s, const SimOptions& options) {
    GradEchoAnalysis r;
    const double rate = s.ramp_rate;
    r.modes = analyze_modes(s, rate);
    double start = 0.0;
    if (s.gradecho.omega0_start) {
        start = *s.gradecho.omega0_start;
    } else if (!r.modes.regions.empty()) {
        start = r.modes.regions.front().upper;
    } else {
        throw ValidationError(
            "gradecho: no non-adiabatic region to start from; set gradecho.omega0_start");
    }
    const double reach = s.ramp.max_offset();
    if (!(reach > start)) {
        throw ValidationError("gradecho: ramp ends before omega0_start");
    }
    r.train = run_ensemble(s.cycle, s.ramp, s.n_echoes, s.ensemble, s.excitation,
                           sim_options(s, options));

    const auto grid = uniform_grid(start, reach, s.analysis.grid_step);
    const AdiabaticityProfile branch = theta_profile(s.cycle, grid);
    r.cp = cp_phase_spread(branch.grid, branch.alpha, rate, s.ensemble.relative_sigma, start,
                           s.ensemble.model);
    for (const std::size_t i : local_maxima(r.cp.visibility, s.gradecho.min_visibility)) {
        r.visibility_maxima.push_back(r.cp.grid[i]);
    }

    const int half = std::max(1, s.gradecho.envelope_window / 2);
    const auto& smp = r.train.samples;
    r.envelope.resize(smp.size());
    for (std::size_t i = 0; i < smp.size(); ++i) {
        const std::size_t a = i >= static_cast<std::size_t>(half) ? i - half : 0;
        const std::size_t b = std::min(smp.size() - 1, i + half);
        double m = 0.0;
        for (std::size_t j = a; j <= b; ++j) {
            m = std::max(m, std::abs(smp[j].s_out));
        }
        r.envelope[i] = m;
    }
    for (const std::size_t i :
         revival_peaks(r.train, half, s.gradecho.min_revival, start + s.gradecho.transient)) {
        Revival rv;
        rv.omega0 = smp[i].omega0_norm;
        rv.amplitude = std::abs(smp[i].s_out);
        rv.distance = std::numeric_limits<double>::infinity();
        for (const double m : r.visibility_maxima) {
            if (std::abs(m - rv.omega0) < rv.distance) {
                rv.distance = std::abs(m - rv.omega0);
                rv.nearest_max = m;
            }
        }
        r.revivals.push_back(rv);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Output

namespace {

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json regions_json(const std::vector<NonAdiabaticRegion>& regions) {
    Json arr = Json::array();
    for (const auto& r : regions) {
        arr.push_back({{"center", num(r.center)},
                       {"lower", num(r.lower)},
                       {"upper", num(r.upper)},
                       {"width", num(r.width())},
                       {"min_A", num(r.min_A)}});
    }
    return arr;
}

Json modes_json(const Scenario& s, const ModesAnalysis& m) {
    return {{"scenario", s.name},
            {"ramp_rate", m.profile.ramp_rate ? num(*m.profile.ramp_rate) : Json(nullptr)},
            {"region_threshold", s.analysis.region_threshold},
            {"watch_threshold", s.analysis.watch_threshold},
            {"regions", regions_json(m.regions)},
            {"watch", regions_json(m.watch)}};
}

Json report_json(const Scenario& s, const ComparisonReport& r) {
    Json segs = Json::array();
    for (const auto& seg : r.segments) {
        segs.push_back({{"lo", num(seg.window.lo)},
                        {"hi", num(seg.window.hi)},
                        {"a_cpmg", num(seg.fit.a_cpmg)},
                        {"residual_rms", num(seg.fit.residual_rms)},
                        {"n_samples", seg.fit.n_samples}});
    }
    return {{"scenario", s.name},
            {"window", {num(r.window.lo), num(r.window.hi)}},
            {"n_samples", r.n_samples},
            {"rms_in", num(r.rms_in)},
            {"rms_out", num(r.rms_out)},
            {"max_abs_dev", num(r.max_abs_dev)},
            {"segments", segs}};
}

Json steps_json(const Scenario& s, const RtoAnalysis& r) {
    Json plateaus = Json::array();
    for (const auto& p : r.steps.plateaus) {
        plateaus.push_back({{"lo", num(p.lo)},
                            {"hi", num(p.hi)},
                            {"mean", num(p.mean)},
                            {"min", num(p.min)},
                            {"max", num(p.max)},
                            {"spread", num(p.spread())}});
    }
    Json steps = Json::array();
    for (const auto& st : r.steps.steps) {
        Json region = nullptr;
        for (const auto& reg : r.modes.regions) {
            if (reg.upper >= st.before && reg.lower <= st.after) {
                region = num(reg.center);
                break;
            }
        }
        steps.push_back({{"before", num(st.before)},
                         {"after", num(st.after)},
                         {"location", num(st.location())},
                         {"from", num(st.from_value)},
                         {"to", num(st.to_value)},
                         {"region_center", region}});
    }
    return {{"scenario", s.name},
            {"rate", num(s.rto.rate)},
            {"plateau_tol", num(s.rto.plateau_tol)},
            {"plateaus", plateaus},
            {"steps", steps},
            {"regions", regions_json(r.modes.regions)}};
}

Json revivals_json(const Scenario& s, const GradEchoAnalysis& g) {
    Json maxima = Json::array();
    for (const double m : g.visibility_maxima) {
        maxima.push_back(num(m));
    }
    Json rev = Json::array();
    for (const auto& r : g.revivals) {
        rev.push_back({{"omega0", num(r.omega0)},
                       {"amplitude", num(r.amplitude)},
                       {"nearest_visibility_max", num(r.nearest_max)},
                       {"distance", num(r.distance)}});
    }
    return {{"scenario", s.name},
            {"rate", num(s.ramp_rate)},
            {"omega0_start", num(g.cp.omega0_start)},
            {"visibility_maxima", maxima},
            {"revivals", rev}};
}

class Writer {
public:
    Writer(std::string dir, std::ostream& log) : dir_(dir.empty() ? "." : std::move(dir)), log_(log) {
        fs::create_directories(dir_);
    }

    template <typename Fn>
    void csv(const std::string& name, Fn&& fn) {
        std::ostringstream os;
        fn(os);
        text(name, os.str());
    }

    void json(const std::string& name, const Json& j) { text(name, j.dump(2) + "\n"); }

    void svg(const std::string& name, const PlotSpec& spec) { text(name, render_svg(spec)); }

    void text(const std::string& name, const std::string& body) {
        const std::string path = (fs::path(dir_) / name).string();
        write_text_file(path, body);
        log_ << "wrote " << path << '\n';
    }

private:
    std::string dir_;
    std::ostream& log_;
};

Metadata train_meta(const Scenario& s) {
    return {{"scenario", s.name},
            {"echo_spacing_t180", format_number(s.echo_spacing_over_t180)},
            {"ramp_rate", format_number(s.ramp_rate)},
            {"model", to_string(s.ensemble.model)}};
}

std::vector<double> region_centres(const ModesAnalysis& m) {
    std::vector<double> c;
    for (const auto& r : m.regions) {
        c.push_back(r.center);
    }
    return c;
}

void write_modes_csv(std::ostream& os, const AdiabaticityProfile& p) {
    os << "omega0_norm,n_perp,n_z,theta,alpha\n";
    for (std::size_t i = 0; i < p.size(); ++i) {
        os << format_number(p.grid[i]) << ',' << format_number(p.n_perp[i]) << ','
           << format_number(std::cos(p.theta[i])) << ',' << format_number(p.theta[i]) << ','
           << format_number(p.alpha[i]) << '\n';
    }
}

void emit_train(const Scenario& s, const TrainAnalysis& r, Writer& w, bool all) {
    if (all || s.wants("train")) {
        w.csv("train.csv", [&](std::ostream& os) { write_train_csv(os, r.train, train_meta(s)); });
    }
    if (s.wants("profile")) {
        w.csv("profile.csv", [&](std::ostream& os) { write_profile_csv(os, r.modes.profile); });
    }
    if (s.wants("theory")) {
        w.csv("theory.csv", [&](std::ostream& os) { write_theory_csv(os, r.theory); });
    }
    if (s.wants("regions")) {
        w.json("regions.json", modes_json(s, r.modes));
    }
    if (s.wants("comparison")) {
        w.json("comparison.json", report_json(s, r.report));
    }
    if (s.wants("plot")) {
        PlotSpec p;
        p.title = s.name;
        p.x_label = "omega0 / omega1";
        p.y_label = "S_in";
        p.series.push_back({"simulation", r.train.omega0_norm(), r.train.s_in()});
        p.series.push_back({"theory", r.theory.grid,
                            r.theory.has_first_order() ? r.theory.s_in1 : r.theory.s_in0});
        p.markers = region_centres(r.modes);
        w.svg("train.svg", p);
    }
}

void emit_rto(const Scenario& s, const RtoAnalysis& r, Writer& w) {
    w.csv("rto.csv", [&](std::ostream& os) { write_rto_csv(os, r.points); });
    w.json("steps.json", steps_json(s, r));
    if (s.wants("profile")) {
        w.csv("profile.csv", [&](std::ostream& os) { write_profile_csv(os, r.modes.profile); });
    }
    if (s.wants("plot")) {
        PlotSpec p;
        p.title = s.name;
        p.x_label = "peak offset / omega1";
        p.y_label = "S_RTO";
        Series sr{"S_RTO", {}, {}};
        for (const auto& pt : r.points) {
            sr.x.push_back(pt.delta);
            sr.y.push_back(pt.s_rto);
        }
        p.series.push_back(std::move(sr));
        p.markers = region_centres(r.modes);
        w.svg("rto.svg", p);
    }
}

void emit_gradecho(const Scenario& s, const GradEchoAnalysis& g, Writer& w) {
    w.csv("visibility.csv", [&](std::ostream& os) { write_cp_csv(os, g.cp); });
    w.json("revivals.json", revivals_json(s, g));
    if (s.wants("train")) {
        w.csv("train.csv", [&](std::ostream& os) { write_train_csv(os, g.train, train_meta(s)); });
    }
    if (s.wants("profile")) {
        w.csv("profile.csv", [&](std::ostream& os) { write_profile_csv(os, g.modes.profile); });
    }
    if (s.wants("plot")) {
        PlotSpec p;
        p.title = s.name;
        p.x_label = "omega0 / omega1";
        p.y_label = "|S_out|, visibility";
        std::vector<double> abs_out;
        for (const auto& smp : g.train.samples) {
            abs_out.push_back(std::abs(smp.s_out));
        }
        p.series.push_back({"|S_out| simulation", g.train.omega0_norm(), abs_out});
        p.series.push_back({"visibility", g.cp.grid, g.cp.visibility});
        p.markers = region_centres(g.modes);
        w.svg("gradecho.svg", p);
    }
}

Scenario resolve_scenario(const CommandRequest& req) {
    if (req.config && req.preset) {
        throw ValidationError("give --config or --preset, not both");
    }
    Scenario s;
    if (req.config) {
        s = load_scenario(*req.config);
    } else if (req.preset) {
        s = load_preset(*req.preset);
    } else {
        throw ValidationError("this command needs --config PATH or --preset NAME");
    }
    apply_overrides(s, req.overrides);
    return s;
}

void require_rate(const Scenario& s, const char* cmd) {
    if (!(s.ramp_rate > 0.0) || s.n_echoes < 1) {
        throw ValidationError(std::string(cmd) + " needs a ramp with a positive rate and echoes");
    }
}

int plot_command(const CommandRequest& req, std::ostream& log) {
    if (req.inputs.empty()) {
        throw ValidationError("plot needs at least one CSV input");
    }
    // --out naming an .svg file takes a single input; otherwise it is a directory.
    const bool single = fs::path(req.out_dir).extension() == ".svg";
    if (single && req.inputs.size() != 1) {
        throw ValidationError("plot: an .svg --out takes exactly one input");
    }
    Writer w(single ? fs::path(req.out_dir).parent_path().string() : req.out_dir, log);
    for (const auto& in : req.inputs) {
        const CsvTable t = read_csv(in);
        const std::string xcol = req.x_column.empty() ? t.header.front() : req.x_column;
        std::vector<std::string> ycols = req.y_columns;
        if (ycols.empty()) {
            for (const auto& h : t.header) {
                if (h != xcol && h != "k" && h != "t_s" && h != "n_echoes") {
                    ycols.push_back(h);
                }
            }
        }
        PlotSpec p;
        p.title = fs::path(in).stem().string();
        p.x_label = xcol;
        for (const auto& y : ycols) {
            p.series.push_back({y, t.column(xcol), t.column(y)});
        }
        if (p.series.empty()) {
            throw ValidationError(in + ": nothing to plot");
        }
        w.svg(single ? fs::path(req.out_dir).filename().string() : fs::path(in).stem().string() + ".svg", p);
    }
    return kExitOk;
}

int dispatch(const CommandRequest& req, std::ostream& log) {
    const SimOptions base{kDefaultSubsteps, req.overrides.threads};
    const std::string& cmd = req.command;
    if (cmd == "plot") {
        return plot_command(req, log);
    }
    if (cmd == "presets") {
        if (req.preset) {
            log << preset_text(*req.preset);
        } else {
            for (const auto& n : preset_names()) {
                log << n << '\n';
            }
        }
        return kExitOk;
    }
    if (cmd == "run") {
        Scenario s = resolve_scenario(req);
        Writer w(req.out_dir, log);
        switch (s.kind) {
        case ScenarioKind::Train: {
            const auto r = analyze_train(s, base);
            emit_train(s, r, w, false);
            log << s.name << ": rms_in=" << format_number(r.report.rms_in)
                << " rms_out=" << format_number(r.report.rms_out)
                << " regions=" << r.modes.regions.size() << '\n';
            break;
        }
        case ScenarioKind::Rto: {
            const auto r = analyze_rto(s, base);
            emit_rto(s, r, w);
            log << s.name << ": plateaus=" << r.steps.plateaus.size()
                << " steps=" << r.steps.steps.size() << '\n';
            break;
        }
        case ScenarioKind::GradientEcho: {
            const auto g = analyze_gradecho(s, base);
            emit_gradecho(s, g, w);
            log << s.name << ": revivals=" << g.revivals.size()
                << " visibility_maxima=" << g.visibility_maxima.size() << '\n';
            break;
        }
        case ScenarioKind::Modes: {
            const double rate = first_order_rate(s);
            const auto m = analyze_modes(s, rate > 0.0 ? std::optional<double>(rate) : std::nullopt);
            w.csv("modes.csv", [&](std::ostream& os) { write_modes_csv(os, m.profile); });
            w.csv("profile.csv", [&](std::ostream& os) { write_profile_csv(os, m.profile); });
            w.json("regions.json", modes_json(s, m));
            break;
        }
        }
        return kExitOk;
    }

    Scenario s = resolve_scenario(req);
    Writer w(req.out_dir, log);
    if (cmd == "modes") {
        const auto m = analyze_modes(s, std::nullopt);
        w.csv("modes.csv", [&](std::ostream& os) { write_modes_csv(os, m.profile); });
    } else if (cmd == "adiab") {
        const double rate = first_order_rate(s);
        if (!(rate > 0.0)) {
            throw ValidationError("adiab needs a positive ramp rate");
        }
        const auto m = analyze_modes(s, rate);
        w.csv("profile.csv", [&](std::ostream& os) { write_profile_csv(os, m.profile); });
        w.json("regions.json", modes_json(s, m));
        for (const auto& r : m.regions) {
            log << "region centre=" << format_number(r.center) << " min_A=" << format_number(r.min_A)
                << '\n';
        }
    } else if (cmd == "simulate") {
        if (s.n_echoes < 1) {
            throw ValidationError("simulate needs n_echoes >= 1");
        }
        const EchoTrain train = run_ensemble(s.cycle, s.ramp, s.n_echoes, s.ensemble, s.excitation,
                                             sim_options(s, base));
        w.csv("train.csv", [&](std::ostream& os) { write_train_csv(os, train, train_meta(s)); });
    } else if (cmd == "rto") {
        if (s.rto.deltas.empty()) {
            throw ValidationError("rto needs rto.deltas in the scenario");
        }
        s.kind = ScenarioKind::Rto;
        emit_rto(s, analyze_rto(s, base), w);
    } else if (cmd == "gradecho") {
        require_rate(s, "gradecho");
        emit_gradecho(s, analyze_gradecho(s, base), w);
    } else if (cmd == "compare") {
        require_rate(s, "compare");
        const auto r = analyze_train(s, base);
        w.json("comparison.json", report_json(s, r.report));
        log << s.name << ": rms_in=" << format_number(r.report.rms_in) << '\n';
    } else {
        throw ValidationError("unknown command '" + cmd + "'");
    }
    return kExitOk;
}

} // namespace

int run_command(const CommandRequest& request, std::ostream& log, std::ostream& err) {
    try {
        return dispatch(request, log);
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const InvalidWindow& e) {
        err << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const UnsupportedCycle& e) {
        err << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const InvalidArgument& e) {
        err << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ExtrapolationError& e) {
        err << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ConvergenceError& e) {
        err << "convergence failure: " << e.what() << '\n';
        return kExitConvergence;
    } catch (const RefinementRequired& e) {
        err << "convergence failure: " << e.what() << '\n';
        return kExitConvergence;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

int run_scenario(const std::string& config_path, const std::string& out_dir,
                 const Overrides& overrides, std::ostream& log, std::ostream& err) {
    CommandRequest req;
    req.command = "run";
    req.config = config_path;
    req.out_dir = out_dir;
    req.overrides = overrides;
    return run_command(req, log, err);
}

} // namespace spinramp
