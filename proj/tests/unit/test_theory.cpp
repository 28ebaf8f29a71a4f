#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "spinramp/adiabaticity.hpp"
#include "spinramp/bloch_sim.hpp"
#include "spinramp/errors.hpp"
#include "spinramp/theory.hpp"

using namespace spinramp;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kW1 = 2.0 * kPi * 12.5e3;

CycleSpec cycle(double te = 6.4, double flip_deg = 180.0) {
    return CycleSpec::from_flip(te, flip_deg * kPi / 180.0, kW1);
}

double rms_against(const EchoTrain& t, const TabulatedCurve& c, double lo, double hi) {
    double s = 0.0;
    int n = 0;
    for (const auto& e : t.samples) {
        if (e.omega0_norm >= lo && e.omega0_norm <= hi) {
            const double d = e.s_in - c.at(e.omega0_norm);
            s += d * d;
            ++n;
        }
    }
    return std::sqrt(s / n);
}

} // namespace

TEST(DeltaEpsilon, PhysicalAndNormalizedFormsAgree) {
    const double t180 = kPi / kW1; // 40 us
    EXPECT_NEAR(t180, 40e-6, 1e-12);
    const double te = 6.4 * t180;
    for (const double rate : {5e-4, 8e-3}) {
        const double dwdt = rate * kW1 / te;
        EXPECT_NEAR(delta_epsilon(te, dwdt), delta_epsilon_normalized(6.4, rate), 1e-15);
        EXPECT_NEAR(delta_epsilon(te, dwdt), te * te / 8 * dwdt, 1e-18);
    }
    EXPECT_EQ(delta_epsilon(te, 0.0), 0.0);
    // Upper endpoint quoted as 2.0e-2.
    EXPECT_NEAR(delta_epsilon_normalized(6.4, 8e-3), 2.0e-2, 0.03 * 2.0e-2);
}

TEST(Adiabatic, ZerothOrderBasics) {
    const auto p = scan(cycle(), 0.0, 1.45, 1e-3);
    const auto one = adiabatic_signal(p, 1.0);
    EXPECT_NEAR(one.s_in0.front(), 1.0, 1e-12);
    const auto zero = adiabatic_signal(p, 0.0);
    for (const double v : zero.s_in0) {
        EXPECT_EQ(v, 0.0);
    }
    EXPECT_FALSE(one.has_first_order());
    EXPECT_EQ(one.out_phase_abs().at(0.5), 0.0);
}

TEST(Adiabatic, LongerEchoSpacingModulatesDeeper) {
    auto min_np = [](double te) {
        const auto p = scan(cycle(te), 0.0, 1.45, 1e-3);
        return *std::min_element(p.n_perp.begin(), p.n_perp.end());
    };
    EXPECT_LT(min_np(24.0), min_np(6.4));
}

TEST(FirstOrder, ReducesToZerothOrderInTheLimit) {
    auto p = scan(cycle(), 0.0, 1.45, 1e-3);
    p.A.assign(p.size(), std::numeric_limits<double>::infinity());
    const auto f = first_order_signal(p, 0.0, 0.8);
    for (std::size_t i = 0; i < p.size(); ++i) {
        EXPECT_NEAR(f.s_in1[i], f.s_in0[i], 1e-12);
        EXPECT_NEAR(f.s_out1_abs[i], 0.0, 1e-12);
    }
    auto bad = p;
    bad.A.assign(p.size(), 0.0);
    EXPECT_THROW(first_order_signal(bad, 0.0, 1.0), InvalidArgument);
    auto none = p;
    none.A.clear();
    EXPECT_THROW(first_order_signal(none, 0.0, 1.0), InvalidArgument);
}

TEST(FirstOrder, MatchesExplicitFormula) {
    AdiabaticityProfile p;
    p.grid = {0.0, 1.0};
    p.n_perp = {0.6, -0.3};
    p.theta = {0.0, 0.0};
    p.alpha = {1.0, 1.0};
    p.A = {2.0, 4.0};
    const double de = 0.1;
    const auto f = first_order_signal(p, de, 0.9);
    for (int i = 0; i < 2; ++i) {
        const double inv = 1.0 / p.A[i];
        const double pre = 0.9 / std::sqrt(1 + inv * inv);
        EXPECT_NEAR(f.s_in1[i], pre * (std::cos(de) * p.n_perp[i] - inv * std::sin(de)), 1e-15);
        EXPECT_NEAR(f.s_out1_abs[i], std::abs(pre * (std::sin(de) * p.n_perp[i] + inv * std::cos(de))),
                    1e-15);
    }
}

TEST(FirstOrder, OutOfPhaseGrowsWithRateAndStaysSmall) {
    const auto base = scan(cycle(), 0.0, 1.45, 1e-3);
    double prev = 0.0;
    for (const double rate : {5e-4, 1e-3, 2e-3, 4e-3, 8e-3}) {
        const auto f = first_order_signal(adiabaticity_map(base, rate),
                                          delta_epsilon_normalized(6.4, rate), 1.0);
        const double m = *std::max_element(f.s_out1_abs.begin(), f.s_out1_abs.end());
        EXPECT_GT(m, prev);
        EXPECT_LT(m, 0.25);
        prev = m;
    }
}

TEST(FirstOrder, ConvergesToZerothOrderAsRateVanishes) {
    const auto base = scan(cycle(), 0.0, 1.45, 1e-3);
    auto dev = [&](double rate) {
        const auto f = first_order_signal(adiabaticity_map(base, rate),
                                          delta_epsilon_normalized(6.4, rate), 1.0);
        double din = 0.0;
        double dout = 0.0;
        for (std::size_t i = 0; i < f.grid.size(); ++i) {
            din = std::max(din, std::abs(f.s_in1[i] - f.s_in0[i]));
            dout = std::max(dout, f.s_out1_abs[i]);
        }
        return std::pair{din, dout};
    };
    const auto [in1, out1] = dev(1e-3);
    const auto [in2, out2] = dev(2e-3);
    // The out-of-phase term is first order in the rate.
    EXPECT_NEAR(out2 / out1, 2.0, 0.2 * 2.0);
    // In phase the leading terms cancel; it is bounded by C rate with room to spare.
    EXPECT_LE(in1, out1);
    EXPECT_LE(in2, out2);
}

TEST(FirstOrder, AgreesWithSimulationAtRate2e3) {
    const double rate = 2e-3;
    const auto p = scan(cycle(), 0.0, 1.5, 5e-4, rate);
    const auto f = first_order_signal(p, delta_epsilon_normalized(6.4, rate), 1.0);
    const auto t = run_train(cycle(), FieldRamp::linear(rate, 1.45), 725);
    EXPECT_LT(rms_against(t, f.in_phase(), 0.0, 1.45), 0.02);
}

TEST(Convolution, IdentityAtZeroSigma) {
    const auto p = scan(cycle(), 0.0, 1.45, 1e-3, 1e-3);
    const auto f = first_order_signal(p, 1e-3, 1.0);
    EnsembleSpec e;
    e.relative_sigma = 0.0;
    const auto c = convolve_inhomogeneity(f, e);
    EXPECT_EQ(c.s_in1, f.s_in1);
    EXPECT_EQ(c.n_perp, f.n_perp);
}

TEST(Convolution, SmoothsAndNeedsCoverage) {
    const auto p = scan(cycle(24.0), 0.0, 2.0, 2e-4);
    const auto f = adiabatic_signal(p, 1.0);
    EnsembleSpec e; // 64 Gauss-Hermite nodes, sigma 6.7e-3
    EXPECT_THROW(convolve_inhomogeneity(f, e), ExtrapolationError);
    const Window eval{0.0, 1.7};
    const auto c = convolve_inhomogeneity(f, e, eval);
    ASSERT_EQ(c.grid.size(), c.s_in0.size());
    EXPECT_LE(c.grid.back(), 1.7);
    std::vector<double> raw(f.s_in0.begin(), f.s_in0.begin() + static_cast<long>(c.grid.size()));
    EXPECT_LE(total_variation(c.s_in0), total_variation(raw));
    EXPECT_NEAR(c.s_in0.front(), 1.0, 1e-12); // w = 0 is a fixed point of scaling
}

TEST(Convolution, ImprovesAgreementAtLargeOffsets) {
    // Rate slow enough that the ramp to 4.4 stays adiabatic throughout.
    const double rate = 2e-4;
    const double hi = 4.4;
    EnsembleSpec e;
    const auto p = scan(cycle(), 0.0, hi * (1 + e.max_deviation()) + 0.01, 5e-4, rate);
    ASSERT_TRUE(find_nonadiabatic_regions(p).empty());
    const auto f = first_order_signal(p, delta_epsilon_normalized(6.4, rate), 1.0);
    const auto conv = convolve_inhomogeneity(f, e, {0.0, hi + 1e-9});
    const auto raw = convolve_inhomogeneity(f, EnsembleSpec{0.0}, {0.0, hi + 1e-9});
    const auto t = run_ensemble(cycle(), FieldRamp::linear(rate, hi), 22000, e);
    const double r_conv = rms_against(t, conv.in_phase(), 3.0, hi);
    const double r_raw = rms_against(t, raw.in_phase(), 3.0, hi);
    EXPECT_LT(r_conv, r_raw);
}

TEST(CpPhase, DynamicPhaseProperties) {
    const auto grid = uniform_grid(1.85, 3.0, 1e-3);
    const auto p = theta_profile(cycle(), grid);
    const auto a = cp_dynamic_phase(grid, p.alpha, 4e-3, 1.85);
    const auto b = cp_dynamic_phase(grid, p.alpha, 2e-3, 1.85);
    EXPECT_EQ(a.phi_cp.front(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_NEAR(b.phi_cp[i], 2.0 * a.phi_cp[i], 1e-12 * std::abs(b.phi_cp[i]) + 1e-15);
    }
    const auto fine_grid = uniform_grid(1.85, 3.0, 5e-4);
    const auto pf = theta_profile(cycle(), fine_grid);
    const auto f = cp_dynamic_phase(fine_grid, pf.alpha, 4e-3, 1.85);
    EXPECT_LT(std::abs(f.phi_cp.back() - a.phi_cp.back()) / std::abs(a.phi_cp.back()), 1e-4);
    EXPECT_THROW(cp_dynamic_phase(grid, p.alpha, 4e-3, 1.80), InvalidArgument);
    EXPECT_THROW(cp_dynamic_phase(grid, p.alpha, 0.0, 1.85), InvalidArgument);
}

TEST(CpPhase, TrapezoidOnKnownIntegrand) {
    // alpha = w: phi = (w^2 - w0^2) / (2 rate), exact for the trapezoid on a linear integrand.
    const auto grid = uniform_grid(1.0, 2.0, 0.01);
    const auto p = cp_dynamic_phase(grid, grid, 0.5, 1.0);
    EXPECT_NEAR(p.phi_cp.back(), (4.0 - 1.0) / (2 * 0.5), 1e-12);
    // alpha = w^2: spread integral of w * 2w = 2/3 (w^3 - 1).
    std::vector<double> sq;
    for (const double w : grid) sq.push_back(w * w);
    const auto s = cp_phase_spread(grid, sq, 1.0, 1e-2, 1.0);
    EXPECT_NEAR(s.spread_integral.back(), 2.0 / 3.0 * 7.0, 1e-3);
    const auto add = cp_phase_spread(grid, sq, 1.0, 1e-2, 1.0, InhomogeneityModel::Additive);
    EXPECT_NEAR(add.spread_integral.back(), 3.0, 1e-3);
}

TEST(CpPhase, VisibilityReturnsWhereIntegralCrossesZero) {
    const auto grid = uniform_grid(1.845, 4.4, 5e-4);
    const auto p = theta_profile(cycle(), grid);
    const auto v4 = cp_phase_spread(grid, p.alpha, 4e-3, 6.7e-3, 1.845);
    const auto v2 = cp_phase_spread(grid, p.alpha, 2e-3, 6.7e-3, 1.845);
    EXPECT_EQ(v4.sigma_phi_sq.front(), 0.0);
    EXPECT_EQ(v4.visibility.front(), 1.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_GE(v4.visibility[i], v2.visibility[i]);
        EXPECT_GT(v4.visibility[i], 0.0);
        EXPECT_LE(v4.visibility[i], 1.0);
    }
    // Zero crossings of the integral, located independently of the rate.
    std::vector<double> zeros;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (v4.spread_integral[i - 1] * v4.spread_integral[i] < 0.0) {
            zeros.push_back(grid[i]);
        }
    }
    ASSERT_GE(zeros.size(), 2u);
    const auto maxima = local_maxima(v4.visibility, 0.5);
    ASSERT_GE(maxima.size(), 2u);
    for (std::size_t k = 0; k < 2; ++k) {
        double best = 1e9;
        for (const double z : zeros) best = std::min(best, std::abs(z - grid[maxima[k]]));
        EXPECT_LE(best, 1e-3);
        EXPECT_GT(v4.visibility[maxima[k]], 0.9);
        const auto m2 = local_maxima(v2.visibility, 0.0);
        double best2 = 1e9;
        for (const auto j : m2) best2 = std::min(best2, std::abs(grid[j] - grid[maxima[k]]));
        EXPECT_LE(best2, 5e-4 + 1e-12);
    }
}

TEST(LocalMaxima, PlateausAndThreshold) {
    const std::vector<double> y{0, 1, 0, 2, 2, 0, 3, 3, 4, 0.5};
    const auto m = local_maxima(y, 1.5);
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m[0], 3u);
    EXPECT_EQ(m[1], 8u);
    EXPECT_TRUE(local_maxima(std::vector<double>{1, 2, 3}, 0.0).empty());
}
