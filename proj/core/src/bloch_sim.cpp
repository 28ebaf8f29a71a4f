#include "spinramp/bloch_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "spinramp/errors.hpp"
#include "spinramp/parallel.hpp"

namespace spinramp {

// ---------------------------------------------------------------------------
// FieldRamp

FieldRamp::FieldRamp(std::vector<std::pair<double, double>> breakpoints)
    : breakpoints_(std::move(breakpoints)) {
    if (breakpoints_.empty()) {
        throw InvalidArgument("field ramp: at least one breakpoint required");
    }
    if (breakpoints_.front().first != 0.0) {
        throw InvalidArgument("field ramp: first breakpoint must be at tau = 0");
    }
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
        if (!std::isfinite(breakpoints_[i].first) || !std::isfinite(breakpoints_[i].second)) {
            throw InvalidArgument("field ramp: breakpoints must be finite");
        }
        if (i > 0 && !(breakpoints_[i].first > breakpoints_[i - 1].first)) {
            throw InvalidArgument("field ramp: tau must be strictly increasing");
        }
    }
}

FieldRamp FieldRamp::constant(double w) { return FieldRamp({{0.0, w}}); }

FieldRamp FieldRamp::linear(double rate, double max_offset) {
    if (!(rate > 0.0) || !(max_offset > 0.0)) {
        throw InvalidArgument("linear ramp: rate and max offset must be positive");
    }
    return FieldRamp({{0.0, 0.0}, {max_offset / rate, max_offset}});
}

FieldRamp FieldRamp::bilinear(double rate, double peak) {
    if (!(rate > 0.0) || !(peak > 0.0)) {
        throw InvalidArgument("bilinear ramp: rate and peak must be positive");
    }
    const double t = peak / rate;
    return FieldRamp({{0.0, 0.0}, {t, peak}, {2.0 * t, 0.0}});
}

double FieldRamp::value(double tau) const {
    if (tau <= 0.0) {
        return breakpoints_.front().second;
    }
    if (tau >= breakpoints_.back().first) {
        return breakpoints_.back().second;
    }
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), tau,
                                     [](double t, const auto& b) { return t < b.first; });
    const auto& [t1, w1] = *it;
    const auto& [t0, w0] = *(it - 1);
    return w0 + (tau - t0) / (t1 - t0) * (w1 - w0);
}

double FieldRamp::rate_at(double tau) const {
    if (breakpoints_.size() < 2 || tau >= breakpoints_.back().first || tau < 0.0) {
        return 0.0;
    }
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), tau,
                                     [](double t, const auto& b) { return t < b.first; });
    const auto& [t1, w1] = *it;
    const auto& [t0, w0] = *(it - 1);
    return (w1 - w0) / (t1 - t0);
}

double FieldRamp::max_offset() const {
    double m = 0.0;
    for (const auto& b : breakpoints_) {
        m = std::max(m, std::abs(b.second));
    }
    return m;
}

int FieldRamp::natural_echo_count() const {
    return static_cast<int>(std::ceil(duration() - 1e-9));
}

OffsetTrajectory FieldRamp::to_offset(double echo_spacing, double omega1) const {
    std::vector<double> t;
    std::vector<double> w;
    t.reserve(breakpoints_.size());
    w.reserve(breakpoints_.size());
    for (const auto& [tau, v] : breakpoints_) {
        t.push_back(tau * echo_spacing);
        w.push_back(v * omega1);
    }
    return OffsetTrajectory(std::move(t), std::move(w));
}

// ---------------------------------------------------------------------------
// Quadrature

std::vector<QuadratureNode> gauss_hermite_nodes(int n) {
    if (n < 1) {
        throw InvalidArgument("gauss_hermite_nodes: n must be >= 1");
    }
    // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
    // polynomials: abscissae are the eigenvalues, weights the squared first
    // eigenvector components. Newton's initial guesses collide for n >~ 200.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(std::max(n - 1, 0));
    for (int j = 1; j < n; ++j) {
        sub[j - 1] = std::sqrt(static_cast<double>(j));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) {
        throw ConvergenceError("gauss_hermite_nodes: eigensolver failed for n = " + std::to_string(n));
    }
    std::vector<double> z(static_cast<std::size_t>(n));
    std::vector<double> wz(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        z[static_cast<std::size_t>(i)] = es.eigenvalues()[i];
        wz[static_cast<std::size_t>(i)] = v0 * v0;
    }
    // Exact symmetry.
    for (int i = 0; i < n / 2; ++i) {
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        const double x = 0.5 * (z[hi] - z[lo]);
        const double w = 0.5 * (wz[lo] + wz[hi]);
        z[lo] = -x;
        z[hi] = x;
        wz[lo] = wz[hi] = w;
    }
    if (n % 2 == 1) {
        z[static_cast<std::size_t>(n / 2)] = 0.0;
    }
    const double total = std::accumulate(wz.begin(), wz.end(), 0.0);
    std::vector<QuadratureNode> nodes(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        nodes[static_cast<std::size_t>(i)] = {z[static_cast<std::size_t>(i)], wz[static_cast<std::size_t>(i)] / total};
    }
    return nodes;
}

std::vector<QuadratureNode> uniform_gaussian_nodes(int n, double half_width) {
    if (n < 1) {
        throw InvalidArgument("uniform_gaussian_nodes: n must be >= 1");
    }
    if (!(half_width > 0.0)) {
        throw InvalidArgument("uniform_gaussian_nodes: half width must be positive");
    }
    std::vector<QuadratureNode> nodes(static_cast<std::size_t>(n));
    const double h = 2.0 * half_width / n;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        // Pair i with n-1-i so the abscissae are exactly antisymmetric.
        const double x = i < n / 2 ? -half_width + (i + 0.5) * h
                                   : half_width - (n - 1 - i + 0.5) * h;
        const double w = std::exp(-0.5 * x * x);
        nodes[static_cast<std::size_t>(i)] = {n % 2 == 1 && i == n / 2 ? 0.0 : x, w};
        total += w;
    }
    for (auto& node : nodes) {
        node.weight /= total;
    }
    return nodes;
}

void EnsembleSpec::validate() const {
    if (!(relative_sigma >= 0.0) || !std::isfinite(relative_sigma)) {
        throw InvalidArgument("ensemble: relative_sigma must be >= 0");
    }
    if (n_nodes < 1) {
        throw InvalidArgument("ensemble: n_nodes must be >= 1");
    }
    if (scheme == QuadratureScheme::UniformGrid && !(uniform_half_width > 0.0)) {
        throw InvalidArgument("ensemble: uniform_half_width must be positive");
    }
}

std::vector<QuadratureNode> EnsembleSpec::nodes() const {
    validate();
    if (relative_sigma == 0.0) {
        return {{0.0, 1.0}};
    }
    return scheme == QuadratureScheme::GaussHermite
               ? gauss_hermite_nodes(n_nodes)
               : uniform_gaussian_nodes(n_nodes, uniform_half_width);
}

double EnsembleSpec::max_deviation() const {
    double m = 0.0;
    for (const auto& node : nodes()) {
        m = std::max(m, std::abs(node.x));
    }
    return m * relative_sigma;
}

std::string to_string(QuadratureScheme s) {
    return s == QuadratureScheme::GaussHermite ? "gauss_hermite" : "uniform";
}

std::string to_string(InhomogeneityModel m) {
    return m == InhomogeneityModel::Multiplicative ? "multiplicative" : "additive";
}

// ---------------------------------------------------------------------------
// Trains

std::vector<double> EchoTrain::omega0_norm() const {
    std::vector<double> v(samples.size());
    std::transform(samples.begin(), samples.end(), v.begin(),
                   [](const auto& s) { return s.omega0_norm; });
    return v;
}

std::vector<double> EchoTrain::s_in() const {
    std::vector<double> v(samples.size());
    std::transform(samples.begin(), samples.end(), v.begin(), [](const auto& s) { return s.s_in; });
    return v;
}

std::vector<double> EchoTrain::s_out() const {
    std::vector<double> v(samples.size());
    std::transform(samples.begin(), samples.end(), v.begin(),
                   [](const auto& s) { return s.s_out; });
    return v;
}

namespace {

struct SignalAxes {
    Vec3 in;
    Vec3 out;
};

SignalAxes signal_axes(const CycleSpec& cycle) {
    const Vec3 in = cycle.inphase_axis();
    return {in, in.cross(kZAxis)};
}

Vec3 excite(const CycleSpec& cycle, const OffsetTrajectory& offset, Excitation excitation) {
    const auto axes = signal_axes(cycle);
    if (excitation == Excitation::Ideal) {
        return Rotation::from_axis_angle(axes.out, -std::numbers::pi / 2).apply(kZAxis);
    }
    // Right-handed nutation about -out carries +z onto +in.
    const double w1 = cycle.nominal_omega1;
    const double w0 = offset.value(0.0);
    const double Omega = std::hypot(w0, w1);
    const Vec3 axis = (-axes.out) * (w1 / Omega) + kZAxis * (w0 / Omega);
    const double t90 = std::numbers::pi / (2.0 * w1);
    return Rotation::from_axis_angle(axis, Omega * t90).apply(kZAxis);
}

void check_run_args(const CycleSpec& cycle, int n_echoes) {
    cycle.validate();
    if (n_echoes < 1) {
        throw InvalidArgument("simulation: n_echoes must be >= 1");
    }
}

} // namespace

std::vector<Vec3> run_isochromat(const CycleSpec& cycle, const OffsetTrajectory& offset,
                                 int n_echoes, Excitation excitation, int substeps) {
    check_run_args(cycle, n_echoes);
    std::vector<Vec3> m(static_cast<std::size_t>(n_echoes));
    Vec3 M = excite(cycle, offset, excitation);
    for (int k = 0; k < n_echoes; ++k) {
        const double t0 = k * cycle.echo_spacing;
        M = cycle_propagator(cycle, offset, t0, substeps).apply(M);
        m[static_cast<std::size_t>(k)] = M;
    }
    return m;
}

EchoTrain run_train(const CycleSpec& cycle, const FieldRamp& ramp, int n_echoes, double scale,
                    Excitation excitation, const SimOptions& options, double shift) {
    if (!(scale > 0.0)) {
        throw InvalidArgument("run_train: scale must be positive");
    }
    const double w1 = cycle.nominal_omega1;
    OffsetTrajectory offset = ramp.to_offset(cycle.echo_spacing, w1).scaled(scale);
    if (shift != 0.0) {
        offset = offset.shifted(shift * w1);
    }
    const auto m = run_isochromat(cycle, offset, n_echoes, excitation, options.substeps);
    const auto axes = signal_axes(cycle);
    EchoTrain train;
    train.samples.resize(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const int k = static_cast<int>(i) + 1;
        train.samples[i] = {k,
                            k * cycle.echo_spacing,
                            ramp.value(static_cast<double>(k)),
                            m[i].dot(axes.in),
                            m[i].dot(axes.out),
                            m[i].z};
    }
    return train;
}

EchoTrain run_ensemble(const CycleSpec& cycle, const FieldRamp& ramp, int n_echoes,
                       const EnsembleSpec& ensemble, Excitation excitation,
                       const SimOptions& options) {
    check_run_args(cycle, n_echoes);
    const auto nodes = ensemble.nodes();
    const double w1 = cycle.nominal_omega1;
    const OffsetTrajectory base = ramp.to_offset(cycle.echo_spacing, w1);
    const auto n = static_cast<std::size_t>(n_echoes);

    std::vector<Vec3> acc(n);
    const int threads = options.threads <= 0 ? default_thread_count() : options.threads;
    // Nodes are simulated in blocks to bound memory; accumulation always runs
    // over nodes in index order.
    const std::size_t block = std::max<std::size_t>(32, 4 * static_cast<std::size_t>(threads));
    std::vector<std::vector<Vec3>> per_node;
    for (std::size_t first = 0; first < nodes.size(); first += block) {
        const std::size_t count = std::min(block, nodes.size() - first);
        per_node.assign(count, {});
        parallel_for(count, threads, [&](std::size_t j) {
            const auto& node = nodes[first + j];
            const double dev = ensemble.relative_sigma * node.x;
            const OffsetTrajectory offset =
                ensemble.model == InhomogeneityModel::Multiplicative ? base.scaled(1.0 + dev)
                                                                     : base.shifted(dev * w1);
            per_node[j] = run_isochromat(cycle, offset, n_echoes, excitation, options.substeps);
        });
        for (std::size_t j = 0; j < count; ++j) {
            const double w = nodes[first + j].weight;
            const auto& m = per_node[j];
            for (std::size_t k = 0; k < n; ++k) {
                acc[k] = acc[k] + m[k] * w;
            }
        }
    }

    const auto axes = signal_axes(cycle);
    EchoTrain train;
    train.n_nodes = static_cast<int>(nodes.size());
    train.relative_sigma = ensemble.relative_sigma;
    train.scheme = to_string(ensemble.scheme) + "/" + to_string(ensemble.model);
    train.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int k = static_cast<int>(i) + 1;
        train.samples[i] = {k,
                            k * cycle.echo_spacing,
                            ramp.value(static_cast<double>(k)),
                            acc[i].dot(axes.in),
                            acc[i].dot(axes.out),
                            acc[i].z};
    }
    return train;
}

std::vector<RtoPoint> rto_sweep(const CycleSpec& cycle, double rate,
                                std::span<const double> deltas, const EnsembleSpec& ensemble,
                                Excitation excitation, const SimOptions& options) {
    if (!(rate > 0.0)) {
        throw InvalidArgument("rto_sweep: rate must be positive");
    }
    std::vector<RtoPoint> out;
    out.reserve(deltas.size());
    for (const double delta : deltas) {
        const FieldRamp ramp = FieldRamp::bilinear(rate, delta);
        const int n = std::max(1, static_cast<int>(std::lround(2.0 * delta / rate)));
        const EchoTrain train = run_ensemble(cycle, ramp, n, ensemble, excitation, options);
        out.push_back({delta, train.samples.back().s_in, train.samples.back().s_out, n});
    }
    return out;
}

CpmgFit fit_cpmg_amplitude(const EchoTrain& train, const TabulatedCurve& n_perp, Window window,
                           std::span<const NonAdiabaticRegion> regions) {
    if (!(window.hi > window.lo)) {
        throw InvalidWindow("fit window must have hi > lo");
    }
    for (const auto& r : regions) {
        if (r.upper >= window.lo && r.lower <= window.hi) {
            throw InvalidWindow("fit window [" + std::to_string(window.lo) + ", " +
                                std::to_string(window.hi) +
                                "] touches the non-adiabatic region centred at " +
                                std::to_string(r.center));
        }
    }
    double sn = 0.0;
    double nn = 0.0;
    std::vector<std::pair<double, double>> pts;
    for (const auto& s : train.samples) {
        if (!window.contains(s.omega0_norm)) {
            continue;
        }
        const double np = n_perp.at(s.omega0_norm);
        sn += s.s_in * np;
        nn += np * np;
        pts.emplace_back(s.s_in, np);
    }
    if (pts.empty()) {
        throw InvalidWindow("fit window holds no echoes");
    }
    if (!(nn > 0.0)) {
        throw InvalidWindow("n_perp vanishes on the fit window");
    }
    CpmgFit fit;
    fit.a_cpmg = sn / nn;
    fit.n_samples = pts.size();
    double ss = 0.0;
    for (const auto& [s, np] : pts) {
        const double r = s - fit.a_cpmg * np;
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / static_cast<double>(pts.size()));
    return fit;
}

} // namespace spinramp
