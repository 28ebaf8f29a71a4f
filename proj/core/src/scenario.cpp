#include "spinramp/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "presets_data.hpp"
#include "spinramp/adiabaticity.hpp"
#include "spinramp/errors.hpp"

namespace spinramp {

std::string to_string(ScenarioKind k) {
    switch (k) {
    case ScenarioKind::Train: return "train";
    case ScenarioKind::Rto: return "rto";
    case ScenarioKind::GradientEcho: return "gradecho";
    case ScenarioKind::Modes: return "modes";
    }
    return "unknown";
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const std::set<std::string> kOutputs = {"train", "profile", "theory", "comparison", "plot",
                                        "regions"};

// Collects every problem before reporting, so one run lists all bad keys.
class Parser {
public:
    void unknown_keys(const YAML::Node& node, const std::string& path,
                      std::initializer_list<std::string_view> allowed) {
        if (!node || !node.IsMap()) {
            return;
        }
        for (const auto& kv : node) {
            const auto key = kv.first.as<std::string>();
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                unknown_.push_back(path.empty() ? key : path + "." + key);
            }
        }
    }

    void error(std::string msg) { errors_.push_back(std::move(msg)); }

    template <typename T>
    std::optional<T> get(const YAML::Node& node, const std::string& key, const std::string& path) {
        if (!node || !node.IsMap() || !node[key]) {
            return std::nullopt;
        }
        try {
            return node[key].as<T>();
        } catch (const YAML::Exception&) {
            error("bad value for " + (path.empty() ? key : path + "." + key));
            return std::nullopt;
        }
    }

    template <typename T>
    T get_or(const YAML::Node& node, const std::string& key, const std::string& path, T fallback) {
        return get<T>(node, key, path).value_or(fallback);
    }

    void raise() const {
        if (unknown_.empty() && errors_.empty()) {
            return;
        }
        std::ostringstream os;
        os << "scenario validation failed";
        if (!unknown_.empty()) {
            os << "; unknown keys:";
            for (const auto& k : unknown_) {
                os << ' ' << k;
            }
        }
        for (const auto& e : errors_) {
            os << "; " << e;
        }
        throw ValidationError(os.str());
    }

    bool ok() const { return unknown_.empty() && errors_.empty(); }

private:
    std::vector<std::string> unknown_;
    std::vector<std::string> errors_;
};

Units parse_units(Parser& p, const YAML::Node& n) {
    p.unknown_keys(n, "units", {"t180", "omega1", "omega1_hz"});
    const auto t180 = p.get<double>(n, "t180", "units");
    auto omega1 = p.get<double>(n, "omega1", "units");
    if (const auto hz = p.get<double>(n, "omega1_hz", "units")) {
        if (omega1) {
            p.error("units: give omega1 or omega1_hz, not both");
        }
        omega1 = 2.0 * std::numbers::pi * *hz;
    }
    Units u;
    if (t180 && omega1) {
        u.t180 = *t180;
        u.omega1 = *omega1;
        if (std::abs(u.omega1 * u.t180 - std::numbers::pi) > 1e-9 * std::numbers::pi) {
            p.error("units: omega1 * t180 must equal pi within 1e-9");
        }
    } else if (t180) {
        u.t180 = *t180;
        u.omega1 = std::numbers::pi / u.t180;
    } else if (omega1) {
        u.omega1 = *omega1;
        u.t180 = std::numbers::pi / u.omega1;
    } else {
        // Normalized units: w1 = 1 rad per unit time.
        u.omega1 = 1.0;
        u.t180 = std::numbers::pi;
    }
    if (!(u.omega1 > 0.0) || !std::isfinite(u.omega1)) {
        p.error("units: omega1 / t180 must be positive");
        u.omega1 = 1.0;
        u.t180 = std::numbers::pi;
    }
    return u;
}

CycleSpec parse_cycle(Parser& p, const YAML::Node& n, const Units& u, double& te_over_t180) {
    p.unknown_keys(n, "cycle",
                   {"echo_spacing_t180", "echo_spacing", "refocusing_flip_deg", "pulse_phase_deg",
                    "segments"});
    const auto te_norm = p.get<double>(n, "echo_spacing_t180", "cycle");
    const auto te_abs = p.get<double>(n, "echo_spacing", "cycle");
    if (te_norm && te_abs) {
        p.error("cycle: give echo_spacing_t180 or echo_spacing, not both");
    }
    double te = te_norm ? *te_norm * u.t180 : te_abs.value_or(0.0);
    const double phase = p.get_or<double>(n, "pulse_phase_deg", "cycle", 90.0) * kDeg;

    CycleSpec c;
    c.nominal_omega1 = u.omega1;
    if (n && n["segments"]) {
        if (n["refocusing_flip_deg"]) {
            p.error("cycle: give refocusing_flip_deg or segments, not both");
        }
        const YAML::Node segs = n["segments"];
        if (!segs.IsSequence() || segs.size() == 0) {
            p.error("cycle.segments must be a non-empty list");
            return c;
        }
        double total = 0.0;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const std::string path = "cycle.segments[" + std::to_string(i) + "]";
            const YAML::Node s = segs[i];
            p.unknown_keys(s, path,
                           {"duration_t180", "duration", "amplitude_omega1", "amplitude",
                            "phase_deg", "flip_deg"});
            PulseSegment seg;
            const auto amp_n = p.get<double>(s, "amplitude_omega1", path);
            const auto amp_a = p.get<double>(s, "amplitude", path);
            seg.amplitude = amp_n ? *amp_n * u.omega1 : amp_a.value_or(0.0);
            const auto d_n = p.get<double>(s, "duration_t180", path);
            const auto d_a = p.get<double>(s, "duration", path);
            const auto flip = p.get<double>(s, "flip_deg", path);
            if (flip) {
                if (!(seg.amplitude > 0.0)) {
                    seg.amplitude = u.omega1;
                }
                seg.duration = *flip * kDeg / seg.amplitude;
            } else if (d_n) {
                seg.duration = *d_n * u.t180;
            } else if (d_a) {
                seg.duration = *d_a;
            } else {
                p.error(path + ": duration_t180, duration or flip_deg required");
            }
            seg.phase = p.get_or<double>(s, "phase_deg", path, 0.0) * kDeg;
            total += seg.duration;
            c.segments.push_back(seg);
        }
        if (te == 0.0) {
            te = total;
        }
        c.echo_spacing = te;
    } else {
        const double flip = p.get_or<double>(n, "refocusing_flip_deg", "cycle", 180.0) * kDeg;
        if (!(te > 0.0)) {
            p.error("cycle: echo spacing required and positive");
            return c;
        }
        const double tp = flip / u.omega1;
        if (!(tp > 0.0) || tp > te) {
            p.error("cycle: refocusing pulse must be positive and fit inside t_E");
            return c;
        }
        c.echo_spacing = te;
        c.segments = {{0.5 * (te - tp), 0.0, 0.0}, {tp, u.omega1, phase}, {0.5 * (te - tp), 0.0, 0.0}};
    }
    te_over_t180 = c.echo_spacing / u.t180;
    try {
        c.validate();
    } catch (const InvalidArgument& e) {
        p.error(e.what());
    }
    return c;
}

FieldRamp parse_ramp(Parser& p, const YAML::Node& n, double& nominal_rate) {
    p.unknown_keys(n, "ramp", {"type", "rate", "max", "peak", "value", "points"});
    const auto type = p.get_or<std::string>(n, "type", "ramp", "linear");
    nominal_rate = 0.0;
    try {
        if (type == "linear") {
            const auto rate = p.get<double>(n, "rate", "ramp");
            const auto max = p.get<double>(n, "max", "ramp");
            if (!rate || !max) {
                p.error("ramp: linear needs rate and max");
                return FieldRamp::constant(0.0);
            }
            nominal_rate = *rate;
            return FieldRamp::linear(*rate, *max);
        }
        if (type == "bilinear") {
            const auto rate = p.get<double>(n, "rate", "ramp");
            const auto peak = p.get<double>(n, "peak", "ramp");
            if (!rate || !peak) {
                p.error("ramp: bilinear needs rate and peak");
                return FieldRamp::constant(0.0);
            }
            nominal_rate = *rate;
            return FieldRamp::bilinear(*rate, *peak);
        }
        if (type == "constant") {
            return FieldRamp::constant(p.get_or<double>(n, "value", "ramp", 0.0));
        }
        if (type == "breakpoints") {
            const auto pts = p.get<std::vector<std::vector<double>>>(n, "points", "ramp");
            if (!pts || pts->empty()) {
                p.error("ramp: breakpoints needs a non-empty points list");
                return FieldRamp::constant(0.0);
            }
            std::vector<std::pair<double, double>> bp;
            for (const auto& pt : *pts) {
                if (pt.size() != 2) {
                    p.error("ramp.points entries must be [tau, offset]");
                    return FieldRamp::constant(0.0);
                }
                bp.emplace_back(pt[0], pt[1]);
            }
            FieldRamp ramp(std::move(bp));
            for (std::size_t i = 1; i < ramp.breakpoints().size(); ++i) {
                const auto& a = ramp.breakpoints()[i - 1];
                const auto& b = ramp.breakpoints()[i];
                nominal_rate =
                    std::max(nominal_rate, std::abs((b.second - a.second) / (b.first - a.first)));
            }
            nominal_rate = p.get_or<double>(n, "rate", "ramp", nominal_rate);
            return ramp;
        }
        p.error("ramp.type must be linear, bilinear, constant or breakpoints");
    } catch (const InvalidArgument& e) {
        p.error(std::string("ramp: ") + e.what());
    }
    return FieldRamp::constant(0.0);
}

EnsembleSpec parse_ensemble(Parser& p, const YAML::Node& n) {
    p.unknown_keys(n, "ensemble", {"relative_sigma", "nodes", "scheme", "model", "half_width"});
    EnsembleSpec e;
    e.relative_sigma = p.get_or<double>(n, "relative_sigma", "ensemble", e.relative_sigma);
    e.n_nodes = p.get_or<int>(n, "nodes", "ensemble", e.n_nodes);
    e.uniform_half_width = p.get_or<double>(n, "half_width", "ensemble", e.uniform_half_width);
    const auto scheme = p.get_or<std::string>(n, "scheme", "ensemble", "gauss_hermite");
    if (scheme == "gauss_hermite") {
        e.scheme = QuadratureScheme::GaussHermite;
    } else if (scheme == "uniform") {
        e.scheme = QuadratureScheme::UniformGrid;
    } else {
        p.error("ensemble.scheme must be gauss_hermite or uniform");
    }
    const auto model = p.get_or<std::string>(n, "model", "ensemble", "multiplicative");
    if (model == "multiplicative") {
        e.model = InhomogeneityModel::Multiplicative;
    } else if (model == "additive") {
        e.model = InhomogeneityModel::Additive;
    } else {
        p.error("ensemble.model must be multiplicative or additive");
    }
    try {
        e.validate();
    } catch (const InvalidArgument& ex) {
        p.error(ex.what());
    }
    return e;
}

Window parse_window(Parser& p, const YAML::Node& n, const std::string& key, const std::string& path,
                    Window fallback) {
    const auto w = p.get<std::vector<double>>(n, key, path);
    if (!w) {
        return fallback;
    }
    if (w->size() != 2 || !((*w)[1] > (*w)[0])) {
        p.error(path + "." + key + " must be [lo, hi] with hi > lo");
        return fallback;
    }
    return {(*w)[0], (*w)[1]};
}

} // namespace

Scenario parse_scenario(std::string_view yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml_text));
    } catch (const YAML::Exception& e) {
        throw ValidationError(std::string("scenario is not valid YAML: ") + e.what());
    }
    if (!root.IsMap()) {
        throw ValidationError("scenario must be a YAML mapping");
    }
    Parser p;
    p.unknown_keys(root, "",
                   {"name", "description", "kind", "units", "cycle", "ramp", "n_echoes", "ensemble",
                    "excitation", "substeps", "outputs", "analysis", "rto", "gradecho"});

    Scenario s;
    s.name = p.get_or<std::string>(root, "name", "", "scenario");
    s.description = p.get_or<std::string>(root, "description", "", "");
    const auto kind = p.get_or<std::string>(root, "kind", "", "train");
    if (kind == "train") {
        s.kind = ScenarioKind::Train;
    } else if (kind == "rto") {
        s.kind = ScenarioKind::Rto;
    } else if (kind == "gradecho") {
        s.kind = ScenarioKind::GradientEcho;
    } else if (kind == "modes") {
        s.kind = ScenarioKind::Modes;
    } else {
        p.error("kind must be train, rto, gradecho or modes");
    }

    s.units = parse_units(p, root["units"]);
    if (!root["cycle"]) {
        p.error("cycle section required");
    }
    s.cycle = parse_cycle(p, root["cycle"], s.units, s.echo_spacing_over_t180);
    if (root["ramp"]) {
        s.ramp = parse_ramp(p, root["ramp"], s.ramp_rate);
    } else if (s.kind != ScenarioKind::Modes && s.kind != ScenarioKind::Rto) {
        p.error("ramp section required");
    }
    s.ensemble = parse_ensemble(p, root["ensemble"]);

    const auto excitation = p.get_or<std::string>(root, "excitation", "", "ideal");
    if (excitation == "ideal") {
        s.excitation = Excitation::Ideal;
    } else if (excitation == "finite_pulse") {
        s.excitation = Excitation::FinitePulse;
    } else {
        p.error("excitation must be ideal or finite_pulse");
    }
    s.substeps = p.get_or<int>(root, "substeps", "", kDefaultSubsteps);
    if (s.substeps < 1) {
        p.error("substeps must be >= 1");
    }

    if (root["n_echoes"]) {
        const auto text = p.get_or<std::string>(root, "n_echoes", "", "auto");
        if (text == "auto") {
            s.n_echoes = s.ramp.natural_echo_count();
        } else {
            s.n_echoes = p.get_or<int>(root, "n_echoes", "", 0);
            if (s.n_echoes < 1) {
                p.error("n_echoes must be >= 1 (got " + text + ")");
            }
        }
    } else {
        s.n_echoes = s.ramp.natural_echo_count();
    }
    if (s.n_echoes < 1 && (s.kind == ScenarioKind::Train || s.kind == ScenarioKind::GradientEcho)) {
        p.error("scenario has no echoes: set n_echoes or a non-constant ramp");
    }

    if (const auto outs = p.get<std::vector<std::string>>(root, "outputs", "")) {
        for (const auto& o : *outs) {
            if (!kOutputs.contains(o)) {
                p.error("unknown output '" + o + "'");
            }
            s.outputs.insert(o);
        }
    } else {
        s.outputs = {"train", "profile", "theory", "comparison", "plot", "regions"};
    }

    const YAML::Node an = root["analysis"];
    p.unknown_keys(an, "analysis",
                   {"window", "grid", "grid_step", "region_threshold", "watch_threshold", "a_cpmg",
                    "first_order", "convolve", "fit_margin"});
    auto& a = s.analysis;
    a.window = parse_window(p, an, "window", "analysis",
                            {0.0, s.ramp.max_offset() > 0.0 ? s.ramp.max_offset() : 1.45});
    const Window grid = parse_window(p, an, "grid", "analysis", {0.0, 0.0});
    a.grid_lo = grid.lo;
    a.grid_hi = grid.hi;
    a.grid_step = p.get_or<double>(an, "grid_step", "analysis", a.grid_step);
    a.region_threshold = p.get_or<double>(an, "region_threshold", "analysis", a.region_threshold);
    a.watch_threshold = p.get_or<double>(an, "watch_threshold", "analysis", a.watch_threshold);
    a.a_cpmg = p.get_or<double>(an, "a_cpmg", "analysis", a.a_cpmg);
    a.first_order = p.get_or<bool>(an, "first_order", "analysis", a.first_order);
    a.convolve = p.get_or<bool>(an, "convolve", "analysis", a.convolve);
    a.fit_margin = p.get_or<double>(an, "fit_margin", "analysis", a.fit_margin);
    if (!(a.grid_step > 0.0)) {
        p.error("analysis.grid_step must be positive");
    }

    const YAML::Node rn = root["rto"];
    p.unknown_keys(rn, "rto", {"rate", "deltas", "plateau_tol"});
    s.rto.rate = p.get_or<double>(rn, "rate", "rto", s.ramp_rate > 0.0 ? s.ramp_rate : 1e-3);
    s.rto.plateau_tol = p.get_or<double>(rn, "plateau_tol", "rto", s.rto.plateau_tol);
    if (rn && rn["deltas"]) {
        const YAML::Node d = rn["deltas"];
        if (d.IsSequence()) {
            s.rto.deltas = p.get_or<std::vector<double>>(rn, "deltas", "rto", {});
        } else if (d.IsMap()) {
            p.unknown_keys(d, "rto.deltas", {"from", "to", "step"});
            const auto from = p.get<double>(d, "from", "rto.deltas");
            const auto to = p.get<double>(d, "to", "rto.deltas");
            const auto step = p.get<double>(d, "step", "rto.deltas");
            if (from && to && step && *step > 0.0 && *to >= *from) {
                s.rto.deltas = uniform_grid(*from, *to, *step);
                // Round to the step so the deltas print cleanly.
                for (auto& v : s.rto.deltas) {
                    v = std::round(v / *step) * *step;
                }
            } else {
                p.error("rto.deltas needs from <= to and step > 0");
            }
        } else {
            p.error("rto.deltas must be a list or {from, to, step}");
        }
    }
    if (s.kind == ScenarioKind::Rto) {
        if (s.rto.deltas.empty()) {
            p.error("rto scenario needs rto.deltas");
        }
        if (!(s.rto.rate > 0.0)) {
            p.error("rto.rate must be positive");
        }
        for (const double d : s.rto.deltas) {
            if (!(d > 0.0)) {
                p.error("rto.deltas must be positive");
                break;
            }
        }
    }

    const YAML::Node gn = root["gradecho"];
    p.unknown_keys(gn, "gradecho",
                   {"omega0_start", "min_visibility", "min_revival", "transient", "envelope_window"});
    if (gn && gn["omega0_start"]) {
        const auto text = p.get_or<std::string>(gn, "omega0_start", "gradecho", "auto");
        if (text != "auto") {
            s.gradecho.omega0_start = p.get<double>(gn, "omega0_start", "gradecho");
        }
    }
    s.gradecho.min_visibility =
        p.get_or<double>(gn, "min_visibility", "gradecho", s.gradecho.min_visibility);
    s.gradecho.min_revival = p.get_or<double>(gn, "min_revival", "gradecho", s.gradecho.min_revival);
    s.gradecho.transient = p.get_or<double>(gn, "transient", "gradecho", s.gradecho.transient);
    s.gradecho.envelope_window =
        p.get_or<int>(gn, "envelope_window", "gradecho", s.gradecho.envelope_window);

    if ((s.kind == ScenarioKind::Train || s.kind == ScenarioKind::GradientEcho) &&
        !(s.ramp_rate > 0.0)) {
        p.error("train and gradecho scenarios need a ramp with a positive rate");
    }
    p.raise();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open scenario file " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, text] : detail::embedded_presets()) {
        names.emplace_back(name);
    }
    return names;
}

std::string preset_text(std::string_view name) {
    for (const auto& [n, text] : detail::embedded_presets()) {
        if (n == name) {
            return std::string(text);
        }
    }
    throw ValidationError("unknown preset '" + std::string(name) + "'");
}

Scenario load_preset(std::string_view name) { return parse_scenario(preset_text(name)); }

} // namespace spinramp
