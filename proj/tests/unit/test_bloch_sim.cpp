#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spinramp/adiabaticity.hpp"
#include "spinramp/bloch_sim.hpp"
#include "spinramp/curve.hpp"
#include "spinramp/errors.hpp"

using namespace spinramp;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kW1 = 2.0 * kPi * 12.5e3;

CycleSpec cycle(double te = 6.4, double flip_deg = 180.0) {
    return CycleSpec::from_flip(te, flip_deg * kPi / 180.0, kW1);
}

double rms(const std::vector<double>& a) {
    double s = 0.0;
    for (const double v : a) {
        s += v * v;
    }
    return std::sqrt(s / static_cast<double>(a.size()));
}

} // namespace

TEST(Quadrature, GaussHermiteMoments) {
    for (const int n : {1, 2, 5, 16, 64, 256}) {
        const auto nodes = gauss_hermite_nodes(n);
        ASSERT_EQ(nodes.size(), static_cast<std::size_t>(n));
        double m0 = 0, m1 = 0, m2 = 0, m4 = 0, m6 = 0;
        for (const auto& q : nodes) {
            m0 += q.weight;
            m1 += q.weight * q.x;
            m2 += q.weight * q.x * q.x;
            m4 += q.weight * std::pow(q.x, 4);
            m6 += q.weight * std::pow(q.x, 6);
        }
        EXPECT_NEAR(m0, 1.0, 1e-12) << n;
        EXPECT_NEAR(m1, 0.0, 1e-12) << n;
        if (n >= 2) EXPECT_NEAR(m2, 1.0, 1e-10) << n;
        if (n >= 3) EXPECT_NEAR(m4, 3.0, 1e-9) << n;
        if (n >= 4) EXPECT_NEAR(m6, 15.0, 1e-8) << n;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            EXPECT_NEAR(nodes[i].x, -nodes[n - 1 - i].x, 1e-12);
            EXPECT_NEAR(nodes[i].weight, nodes[n - 1 - i].weight, 1e-14);
        }
    }
    EXPECT_THROW(gauss_hermite_nodes(0), InvalidArgument);
}

TEST(Quadrature, UniformGridIsNormalizedAndSymmetric) {
    const auto nodes = uniform_gaussian_nodes(256, 6.0);
    double m0 = 0, m2 = 0;
    for (const auto& q : nodes) {
        m0 += q.weight;
        m2 += q.weight * q.x * q.x;
    }
    EXPECT_NEAR(m0, 1.0, 1e-12);
    EXPECT_NEAR(m2, 1.0, 1e-6);
    EXPECT_NEAR(nodes.front().x, -nodes.back().x, 1e-15);
}

TEST(Ensemble, DegenerateSigmaIsASingleNode) {
    EnsembleSpec e;
    e.relative_sigma = 0.0;
    const auto nodes = e.nodes();
    ASSERT_EQ(nodes.size(), 1u);
    EXPECT_EQ(nodes.front().x, 0.0);
    EXPECT_EQ(nodes.front().weight, 1.0);
    EnsembleSpec bad;
    bad.n_nodes = 0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = {};
    bad.relative_sigma = -1e-3;
    EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(FieldRampTest, ShapesAndValidation) {
    const auto lin = FieldRamp::linear(1e-3, 1.45);
    EXPECT_NEAR(lin.value(725.0), 0.725, 1e-12);
    EXPECT_NEAR(lin.value(5000.0), 1.45, 1e-12); // held after the end
    EXPECT_EQ(lin.natural_echo_count(), 1450);
    EXPECT_NEAR(lin.rate_at(10.0), 1e-3, 1e-15);
    EXPECT_EQ(lin.rate_at(2000.0), 0.0);
    const auto bi = FieldRamp::bilinear(1e-3, 2.0);
    EXPECT_NEAR(bi.max_offset(), 2.0, 1e-12);
    EXPECT_NEAR(bi.value(3000.0), 1.0, 1e-12);
    EXPECT_NEAR(bi.rate_at(3000.0), -1e-3, 1e-15);
    EXPECT_EQ(bi.natural_echo_count(), 4000);
    EXPECT_THROW(FieldRamp({{0.5, 0.0}, {1.0, 1.0}}), InvalidArgument);
    EXPECT_THROW(FieldRamp({{0.0, 0.0}, {0.0, 1.0}}), InvalidArgument);
    EXPECT_THROW(FieldRamp::linear(0.0, 1.0), InvalidArgument);
}

TEST(Train, StaticResonancePerfectRefocusing) {
    const auto t = run_train(cycle(), FieldRamp::constant(0.0), 200);
    for (const auto& s : t.samples) {
        EXPECT_NEAR(s.s_in, 1.0, 1e-12);
        EXPECT_NEAR(s.s_out, 0.0, 1e-12);
        EXPECT_NEAR(s.m_z, 0.0, 1e-12);
    }
    EXPECT_EQ(t.samples.front().k, 1);
    EXPECT_NEAR(t.samples[9].t, 10 * cycle().echo_spacing, 1e-15);
}

TEST(Train, NormConservedOver1e4Echoes) {
    const CycleSpec c = cycle(8.0, 150.0);
    const auto m = run_isochromat(c, FieldRamp::linear(4e-4, 4.0).to_offset(c.echo_spacing, kW1),
                                  10000, Excitation::FinitePulse, kDefaultSubsteps);
    double worst = 0.0;
    for (const auto& v : m) {
        worst = std::max(worst, std::abs(v.norm() - 1.0));
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Train, InvalidArguments) {
    EXPECT_THROW(run_train(cycle(), FieldRamp::constant(0.0), 0), InvalidArgument);
    EXPECT_THROW(run_train(cycle(), FieldRamp::constant(0.0), 10, 0.0), InvalidArgument);
}

TEST(Train, TracksNPerpInAdiabaticRegime) {
    const auto t = run_train(cycle(), FieldRamp::linear(5e-4, 1.45), 2900);
    const auto p = scan(cycle(), 0.0, 1.46, 5e-4);
    const TabulatedCurve np(p.grid, p.n_perp);
    std::vector<double> d;
    for (const auto& s : t.samples) {
        d.push_back(s.s_in - np.at(s.omega0_norm));
    }
    EXPECT_LT(rms(d), 0.02);
}

TEST(Train, EvenOddModulationAtAbsurdRate) {
    // A ramp far too fast for the CPMG mode to follow: neighbouring echoes
    // alternate instead of tracking a smooth curve.
    auto alternation = [](const EchoTrain& t) {
        double a = 0.0;
        for (std::size_t k = 1; k + 1 < t.size(); ++k) {
            a += std::abs(t.samples[k + 1].s_in - 2 * t.samples[k].s_in + t.samples[k - 1].s_in);
        }
        return a / static_cast<double>(t.size() - 2);
    };
    // In the slow regime the alternation is the first-order correction and
    // grows linearly with rate.
    const auto slow = run_train(cycle(), FieldRamp::linear(5e-4, 1.0), 2000);
    const auto medium = run_train(cycle(), FieldRamp::linear(2e-3, 1.0), 500);
    const auto fast = run_train(cycle(), FieldRamp::linear(0.05, 1.0), 20);
    EXPECT_LT(alternation(slow), 2e-3);
    EXPECT_NEAR(alternation(medium) / alternation(slow), 4.0, 0.8);
    EXPECT_GT(alternation(fast), 0.1);
}

TEST(Ensemble, ZeroSigmaMatchesSingleIsochromat) {
    EnsembleSpec e;
    e.relative_sigma = 0.0;
    const auto ramp = FieldRamp::linear(2e-3, 1.0);
    const auto a = run_ensemble(cycle(), ramp, 500, e);
    const auto b = run_train(cycle(), ramp, 500);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a.samples[k].s_in, b.samples[k].s_in);
        EXPECT_EQ(a.samples[k].s_out, b.samples[k].s_out);
    }
}

TEST(Ensemble, BitwiseDeterministicAcrossThreadCounts) {
    EnsembleSpec e;
    e.n_nodes = 96;
    e.scheme = QuadratureScheme::UniformGrid;
    const auto ramp = FieldRamp::linear(4e-3, 2.5);
    std::vector<EchoTrain> runs;
    for (const int threads : {1, 2, 3, 8}) {
        runs.push_back(run_ensemble(cycle(), ramp, 625, e, Excitation::Ideal, {kDefaultSubsteps, threads}));
    }
    for (std::size_t r = 1; r < runs.size(); ++r) {
        for (std::size_t k = 0; k < runs[0].size(); ++k) {
            ASSERT_EQ(runs[r].samples[k].s_in, runs[0].samples[k].s_in);
            ASSERT_EQ(runs[r].samples[k].s_out, runs[0].samples[k].s_out);
            ASSERT_EQ(runs[r].samples[k].m_z, runs[0].samples[k].m_z);
        }
    }
}

TEST(Ensemble, RoundTripBelowFirstRegionRefocuses) {
    const auto ramp = FieldRamp::bilinear(1e-3, 1.45);
    const auto t = run_ensemble(cycle(), ramp, ramp.natural_echo_count(), EnsembleSpec{});
    EXPECT_NEAR(t.samples.back().s_in, 1.0, 0.01);
}

TEST(Train, ForwardThenReverseReturnsState) {
    // Entirely inside A > 10 at this rate.
    const double rate = 2e-4;
    const auto p = scan(cycle(), 0.0, 1.0, 5e-4, rate);
    ASSERT_GT(*std::min_element(p.A.begin(), p.A.end()), 10.0);
    const CycleSpec c = cycle();
    for (const double scale : {0.99, 1.0, 1.013}) {
        const auto ramp = FieldRamp::bilinear(rate, 1.0);
        const auto m = run_isochromat(c, ramp.to_offset(c.echo_spacing, kW1 * scale),
                                      ramp.natural_echo_count(), Excitation::Ideal, kDefaultSubsteps);
        const Vec3 end = m.back();
        EXPECT_LT((end - kYAxis).norm(), 1e-3) << scale;
    }
}

TEST(Train, WeakRateDependenceInAdiabaticRegime) {
    const auto slow = run_train(cycle(), FieldRamp::linear(5e-4, 1.45), 2900);
    const auto fast = run_train(cycle(), FieldRamp::linear(1e-3, 1.45), 1450);
    const TabulatedCurve f(fast.omega0_norm(), fast.s_in());
    std::vector<double> d;
    for (const auto& s : slow.samples) {
        if (f.covers(s.omega0_norm)) {
            d.push_back(s.s_in - f.at(s.omega0_norm));
        }
    }
    EXPECT_LT(rms(d), 0.01);
}

TEST(Fit, RecoversSyntheticAmplitude) {
    const auto p = scan(cycle(), 0.0, 1.5, 1e-3);
    const TabulatedCurve np(p.grid, p.n_perp);
    EchoTrain t;
    for (int k = 1; k <= 1400; ++k) {
        const double w = 1e-3 * k;
        t.samples.push_back({k, 0.0, w, 0.37 * np.at(w), 0.0, 0.0});
    }
    const auto fit = fit_cpmg_amplitude(t, np, {0.0, 1.45});
    EXPECT_NEAR(fit.a_cpmg, 0.37, 1e-6);
    EXPECT_LT(fit.residual_rms, 1e-12);
    EXPECT_THROW(fit_cpmg_amplitude(t, np, {1.46, 1.49}), InvalidWindow);
    const std::vector<NonAdiabaticRegion> regions{{0.8, 0.79, 0.81, 0.5}};
    EXPECT_THROW(fit_cpmg_amplitude(t, np, {0.5, 1.0}, regions), InvalidWindow);
    EXPECT_NO_THROW(fit_cpmg_amplitude(t, np, {0.0, 0.7}, regions));
}

TEST(Fit, AmplitudeBeforeAndAfterFirstEvent) {
    EnsembleSpec e;
    e.n_nodes = 256;
    e.scheme = QuadratureScheme::UniformGrid;
    const auto t = run_ensemble(cycle(), FieldRamp::linear(1e-3, 2.3), 2300, e);
    const auto p = scan(cycle(), 0.0, 2.35, 5e-4, 1e-3);
    const auto regions = find_nonadiabatic_regions(p);
    ASSERT_FALSE(regions.empty());
    const TabulatedCurve np(p.grid, p.n_perp);
    const auto before = fit_cpmg_amplitude(t, np, {0.0, 1.45}, regions);
    EXPECT_NEAR(before.a_cpmg, 1.0, 0.02);
    const auto after = fit_cpmg_amplitude(t, np, {regions.front().upper + 0.05, 2.3}, regions);
    EXPECT_LT(std::abs(after.a_cpmg), 1.0);
}

TEST(Rto, SweepUsesBilinearRampAndFinalEcho) {
    EnsembleSpec e;
    e.relative_sigma = 0.0;
    const std::vector<double> deltas{0.5, 1.0};
    const auto pts = rto_sweep(cycle(), 1e-3, deltas, e);
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_EQ(pts[0].n_echoes, 1000);
    EXPECT_EQ(pts[1].n_echoes, 2000);
    const auto direct = run_train(cycle(), FieldRamp::bilinear(1e-3, 1.0), 2000);
    EXPECT_EQ(pts[1].s_rto, direct.samples.back().s_in);
    EXPECT_THROW(rto_sweep(cycle(), 0.0, deltas, e), InvalidArgument);
}
