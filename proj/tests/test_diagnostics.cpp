#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "sapsim/diagnostics.hpp"
#include "support/oracles.hpp"

namespace sapsim {
namespace {

using testing::rel_diff;

ConditionInputs inputs(double p, double M, double a, double Lf, double Lg, double Cp = 1.0) {
    return ConditionInputs{p, M, a, Lf, Lg, Cp};
}

TEST(Theta, NoCoefficients) { EXPECT_EQ(theta(inputs(4, 1, 10, 0, 0, 36)), 0.0); }

TEST(Theta, CertifiedExample) {
    EXPECT_LE(rel_diff(theta(inputs(4, 1, 10, 0.01, 0.01, 36)), 0.028808), 1e-12);
}

TEST(Theta, UncertifiedExample) {
    EXPECT_LE(rel_diff(theta(inputs(4, 1, 1, 0.01, 0.01, 36)), 2.96), 1e-12);
}

TEST(Theta, RequiresOrderAboveTwo) { EXPECT_THROW(theta(inputs(2, 1, 4, 1, 1)), InvalidInput); }

TEST(Xi, NoCoefficients) { EXPECT_EQ(xi(inputs(2, 1, 4, 0, 0)), 0.0); }

TEST(Xi, CertifiedExample) { EXPECT_LE(rel_diff(xi(inputs(2, 1, 4, 1, 1)), 0.625), 1e-12); }

TEST(Xi, UncertifiedExample) { EXPECT_LE(rel_diff(xi(inputs(2, 1, 2, 1, 1)), 1.5), 1e-12); }

TEST(Xi, RequiresOrderTwo) { EXPECT_THROW(xi(inputs(3, 1, 4, 1, 1)), InvalidInput); }

TEST(ContractionConstant, DispatchesOnOrder) {
    EXPECT_EQ(contraction_constant(inputs(2, 1, 4, 1, 1)), xi(inputs(2, 1, 4, 1, 1)));
    EXPECT_EQ(contraction_constant(inputs(4, 1, 10, 0.01, 0.01, 36)),
              theta(inputs(4, 1, 10, 0.01, 0.01, 36)));
}

TEST(StabilityMargin, HomogeneousIsDecayRate) {
    EXPECT_EQ(stability_margin(inputs(2, 1, 3.5, 0, 0)), 3.5);
    EXPECT_EQ(stability_margin(inputs(4, 2, 3.5, 0, 0, 36)), 3.5);
}

TEST(StabilityMargin, SquareExample) {
    EXPECT_LE(rel_diff(stability_margin(inputs(2, 1, 4, 1, 0.1)), 2.95), 1e-12);
}

TEST(StabilityMargin, FourthMomentExample) {
    EXPECT_LE(rel_diff(stability_margin(inputs(4, 1, 10, 0.01, 0.01, 36)), 9.02773), 1e-12);
}

TEST(ConditionInputs, Validation) {
    EXPECT_THROW(inputs(1.5, 1, 1, 0, 0).validate(), InvalidInput);
    EXPECT_THROW(inputs(2, 0.5, 1, 0, 0).validate(), InvalidInput);
    EXPECT_THROW(inputs(2, 1, 0, 0, 0).validate(), InvalidInput);
    EXPECT_THROW(inputs(2, 1, 1, -1, 0).validate(), InvalidInput);
    EXPECT_THROW(inputs(4, 1, 1, 0, 0, 0).validate(), InvalidInput);
    EXPECT_THROW(inputs(2, 1, std::nan(""), 0, 0).validate(), InvalidInput);
    EXPECT_NO_THROW(inputs(2, 1, 1, 0, 0, 0).validate());
}

TEST(ConditionInputs, ReadFromModel) {
    const Model m = testing::reference_model(4, std::sqrt(2.0), HilbertVec(4), 0.3);
    const ConditionInputs in = condition_inputs(m, 2.0);
    EXPECT_DOUBLE_EQ(in.M, std::exp(0.3 / std::numbers::pi));
    EXPECT_EQ(in.a, 4.0);
    EXPECT_EQ(in.Lf, 1.0);
    EXPECT_NEAR(in.Lg, 1.0, 1e-15);
    EXPECT_EQ(in.Cp, 1.0);
    EXPECT_DOUBLE_EQ(condition_inputs(m, 4.0).Cp, 36.0);
    EXPECT_EQ(condition_inputs(m, 4.0, 7.0).Cp, 7.0);
}

// Random inputs spread over the ranges the conditions are used in.
class RandomInputs {
public:
    explicit RandomInputs(std::uint64_t seed) : gen_(seed) {}

    ConditionInputs draw(double p) {
        std::uniform_real_distribution<double> M(1.0, 3.0), a(0.5, 20.0), L(0.0, 5.0), Cp(0.5, 50.0);
        return inputs(p, M(gen_), a(gen_), L(gen_), L(gen_), Cp(gen_));
    }
    double bump() { return std::uniform_real_distribution<double>(0.01, 2.0)(gen_); }

private:
    std::mt19937_64 gen_;
};

TEST(Monotonicity, ContractionConstantOnRandomGrid) {
    RandomInputs rnd(1);
    for (int i = 0; i < 10000; ++i) {
        const double p = 2.0 + (i % 3);
        const ConditionInputs base = rnd.draw(p);
        const double c = contraction_constant(base);
        ConditionInputs up = base;
        up.Lf += rnd.bump();
        EXPECT_GE(contraction_constant(up), c);
        up = base;
        up.Lg += rnd.bump();
        EXPECT_GE(contraction_constant(up), c);
        up = base;
        up.M += rnd.bump();
        EXPECT_GE(contraction_constant(up), c);
        up = base;
        up.a += rnd.bump();
        EXPECT_LE(contraction_constant(up), c);
    }
}

TEST(Consistency, PositiveMarginImpliesContraction) {
    RandomInputs rnd(2);
    std::size_t certified = 0;
    for (int i = 0; i < 10000; ++i) {
        const double p = 2.0 + (i % 3);
        ConditionInputs in = rnd.draw(p);
        // Shrink the Lipschitz constants so both verdicts occur.
        in.Lf *= 1e-3;
        in.Lg *= 1e-3;
        if (stability_margin(in) > 0.0) {
            ++certified;
            EXPECT_LT(contraction_constant(in), 1.0)
                << "p=" << in.p << " M=" << in.M << " a=" << in.a << " Lf=" << in.Lf
                << " Lg=" << in.Lg << " Cp=" << in.Cp;
        }
    }
    EXPECT_GT(certified, 1000u);
}

TEST(Gronwall, Examples) {
    EXPECT_EQ(gronwall_envelope({2.5, 1.0, 0.3}, 0.0), 2.5);
    EXPECT_LE(rel_diff(gronwall_envelope({1.0, 2.0, 1.0}, 1.0), std::exp(-1.0)), 1e-15);
    for (double t : {0.0, 1.0, 10.0, 100.0}) EXPECT_EQ(gronwall_envelope({0.7, 1.5, 1.5}, t), 0.7);
}

TEST(Gronwall, Validation) {
    EXPECT_THROW(gronwall_envelope({-1.0, 1.0, 0.0}, 1.0), InvalidInput);
    EXPECT_THROW(gronwall_envelope({1.0, 0.0, 0.0}, 1.0), InvalidInput);
    EXPECT_THROW(gronwall_envelope({1.0, 1.0, -0.1}, 1.0), InvalidInput);
    EXPECT_THROW(gronwall_envelope({1.0, 1.0, 0.0}, -1.0), InvalidInput);
}

TEST(Gronwall, DiscretizedIntegralEquationStaysBelowEnvelope) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> alpha(0.1, 5.0), beta(0.2, 3.0), frac(0.0, 1.5);
    const double dt = 1e-4;
    const std::size_t steps = 100000;
    for (int trial = 0; trial < 5; ++trial) {
        const GronwallParams gp{alpha(gen), beta(gen), 0.0};
        GronwallParams g = gp;
        g.gamma = frac(gen) * gp.beta;
        // u(t) = alpha e^{-beta t} + gamma I(t), I(t) = int_0^t e^{-beta (t-s)} u(s) ds,
        // with I advanced by the exact decay factor and a trapezoid rule.
        const double decay = std::exp(-g.beta * dt);
        double integral = 0.0, u = g.alpha;
        for (std::size_t k = 1; k <= steps; ++k) {
            const double t = k * dt;
            const double u_prev = u;
            // Implicit trapezoid in u(t_k): solve the linear equation.
            const double base = g.alpha * std::exp(-g.beta * t) + g.gamma * (decay * integral + 0.5 * dt * decay * u_prev);
            u = base / (1.0 - 0.5 * g.gamma * dt);
            integral = decay * integral + 0.5 * dt * (decay * u_prev + u);
            if (k % 1000 == 0) {
                EXPECT_LE(u, gronwall_envelope(g, t) * (1.0 + 1e-3))
                    << "alpha=" << g.alpha << " beta=" << g.beta << " gamma=" << g.gamma << " t=" << t;
            }
        }
    }
}

TEST(LagDefect, PeriodicEnsembleHasNoDefect) {
    // Values are taken from the phase index so the period holds exactly.
    PathEnsemble ens(TimeGrid{0.05, 121}, 3, 2, 0);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t k = 0; k < 121; ++k) {
            ens.state(i, k)[0] = std::sin(2.0 * std::numbers::pi * 0.05 * static_cast<double>(k % 20));
        }
    }
    const SapDiagnostic d = sap_diagnostic(ens, 1.0, 2.0);
    for (double v : d.defect.estimate) EXPECT_EQ(v, 0.0);
    EXPECT_TRUE(d.passed);
}

TEST(LagDefect, HomogeneousDecay) {
    const auto ens = testing::deterministic_ensemble({0.05, 141}, 2, 1, [](double t) {
        return HilbertVec{std::exp(-t)};
    });
    const SapDiagnostic d = sap_diagnostic(ens, 1.0, 2.0);
    const double c = std::pow(1.0 - std::exp(-1.0), 2.0);
    EXPECT_NEAR(d.initial, 0.39958, 1e-5);
    EXPECT_LE(rel_diff(d.initial, c), 1e-14);
    for (std::size_t k = 0; k < d.defect.size(); ++k) {
        EXPECT_LE(rel_diff(d.defect.estimate[k], std::exp(-2.0 * d.defect.t[k]) * c), 1e-12);
    }
    EXPECT_NEAR(d.fitted_rate, -2.0, 1e-9);
    EXPECT_TRUE(d.passed);
}

TEST(LagDefect, WhiteNoiseIsNotPeriodic) {
    const TimeGrid grid{0.1, 61};
    PathEnsemble ens(grid, 500, 2, 0);
    std::mt19937_64 gen(4);
    std::normal_distribution<double> normal;
    for (double& v : ens.raw()) v = normal(gen);
    const SapDiagnostic d = sap_diagnostic(ens, 1.0, 2.0);
    EXPECT_FALSE(d.passed);
    EXPECT_NEAR(d.tail, 4.0, 1.0);
}

TEST(LagDefect, RequiresFivePeriodsAndGridAlignedPeriod) {
    const PathEnsemble short_ens(TimeGrid{0.1, 41}, 2, 1, 0);
    EXPECT_THROW(sap_diagnostic(short_ens, 1.0, 2.0), InvalidInput);
    const PathEnsemble ens(TimeGrid{0.1, 61}, 2, 1, 0);
    EXPECT_THROW(sap_diagnostic(ens, 1.05, 2.0), InvalidInput);
    EXPECT_THROW(lag_defect(ens, 7.0, 2.0), InvalidInput);
}

TEST(FitLogRate, WindowAndNoiseFloor) {
    MomentSeries s;
    for (int k = 0; k < 10; ++k) s.push_back(k, {std::exp(-0.5 * k), 0.0, 1});
    EXPECT_NEAR(fit_log_rate(s), -0.5, 1e-12);
    EXPECT_NEAR(fit_log_rate(s, 0.6), -0.5, 1e-12);
    MomentSeries noisy;
    for (int k = 0; k < 10; ++k) noisy.push_back(k, {1.0, 1.0, 1});
    EXPECT_TRUE(std::isnan(fit_log_rate(noisy)));
    EXPECT_THROW(fit_log_rate(s, 1.0), InvalidInput);
}

SimConfig stability_config(std::size_t P, double T = 2.0) {
    SimConfig cfg;
    cfg.T = T;
    cfg.dt = 0.005;
    cfg.N = 1;
    cfg.P = P;
    cfg.seed = 8;
    cfg.omega = 1.0;
    return cfg;
}

TEST(Stability, IdenticalStartsNeverSeparate) {
    const Model m = testing::reference_model(3, 0.4, HilbertVec(3));
    SimConfig cfg = stability_config(50);
    cfg.N = 3;
    const StabilityResult r = stability_experiment(cfg, m, HilbertVec::filled(3, 1.0), HilbertVec::filled(3, 1.0));
    for (double d : r.diff.estimate) EXPECT_EQ(d, 0.0);
    EXPECT_EQ(r.verdict, Verdict::pass);
}

TEST(Stability, HomogeneousClosedForm) {
    const Model m{std::make_shared<DiagonalPeriodicFamily>(std::vector<double>{1.0}, 0.0, 1.0),
                  zero_drift(1), zero_diffusion(1), QSpectrum(std::vector<double>{1.0}), HilbertVec{0.0}};
    const StabilityResult r = stability_experiment(stability_config(4), m, HilbertVec{2.0}, HilbertVec{-1.0});
    for (std::size_t k = 0; k < r.diff.size(); ++k) {
        const double want = 9.0 * std::exp(-2.0 * r.diff.t[k]);
        EXPECT_LE(rel_diff(r.diff.estimate[k], want), 1e-12);
        EXPECT_LE(rel_diff(r.envelope[k], 3.0 * 9.0 * std::exp(-r.diff.t[k])), 1e-12);
    }
    EXPECT_EQ(r.margin, 1.0);
    EXPECT_EQ(r.verdict, Verdict::pass);
    EXPECT_NEAR(r.fitted_rate, -2.0, 1e-9);
}

TEST(Stability, CertifiedMarginBoundsMeasuredRate) {
    // Rate 4 mode, slope -1 drift (Lf = 1), sigma^2 lambda = 0.1 noise.
    const auto spec = QSpectrum(std::vector<double>{1.0});
    const Model m{std::make_shared<DiagonalPeriodicFamily>(std::vector<double>{4.0}, 0.0, 1.0),
                  std::make_shared<AffineDrift>(-1.0, PeriodicForcing{1.0, 1.0, 1.0, HilbertVec{1.0}}),
                  std::make_shared<AffineDiffusion>(DiffusionOperator::identity(1), std::sqrt(0.1), spec),
                  spec, HilbertVec{0.0}};
    const StabilityResult r = stability_experiment(stability_config(1000), m, HilbertVec{1.0}, HilbertVec{-1.0});
    EXPECT_LE(rel_diff(r.margin, 2.95), 1e-12);
    EXPECT_EQ(r.verdict, Verdict::pass);
    EXPECT_LE(r.fitted_rate, -2.95 + 0.3);
}

TEST(Stability, OverriddenInputsCanFail) {
    const Model m = testing::reference_model(2, 0.4, HilbertVec(2));
    SimConfig cfg = stability_config(20);
    cfg.N = 2;
    ConditionInputs in = condition_inputs(m, 2.0);
    in.a = 100.0;
    const StabilityResult r = stability_experiment(cfg, m, HilbertVec::filled(2, 1.0), HilbertVec(2), in);
    EXPECT_EQ(r.verdict, Verdict::fail);
    ASSERT_TRUE(r.first_violation.has_value());
}

TEST(Stability, NonPositiveMarginIsNotApplicable) {
    const Model m = testing::reference_model(2, 2.0, HilbertVec(2), 0.0, -6.0);
    SimConfig cfg = stability_config(20);
    cfg.N = 2;
    const StabilityResult r = stability_experiment(cfg, m, HilbertVec::filled(2, 1.0), HilbertVec(2));
    EXPECT_LE(r.margin, 0.0);
    EXPECT_EQ(r.verdict, Verdict::not_applicable);
    EXPECT_EQ(to_string(r.verdict), "not_applicable");
}

TEST(Stability, RejectsMismatchedInputs) {
    const Model m = testing::reference_model(2, 0.4, HilbertVec(2));
    SimConfig cfg = stability_config(2);
    cfg.N = 2;
    EXPECT_THROW(stability_experiment(cfg, m, HilbertVec(3), HilbertVec(2)), InvalidInput);
    EXPECT_THROW(stability_experiment(cfg, m, HilbertVec(2), HilbertVec(2), condition_inputs(m, 4.0)),
                 InvalidInput);
}

}  // namespace
}  // namespace sapsim
