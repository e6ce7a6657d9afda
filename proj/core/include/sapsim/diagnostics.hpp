#pragma once

// Closed-form condition checkers (contraction constants, stability margin,
// Gronwall envelope) and the two coupled-ensemble experiments: the lag-omega
// periodicity defect and the two-solution stability test.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sapsim/hilbert.hpp"
#include "sapsim/mild_solver.hpp"

namespace sapsim {

struct ConditionInputs {
    double p = 2.0;
    double M = 1.0;
    double a = 1.0;
    double Lf = 0.0;
    double Lg = 0.0;
    /// Moment-inequality constant; unused when p = 2.
    double Cp = 1.0;

    void validate() const;
};

/// 2^(p-1) M^p (Lf a^-p + Cp Lg a^(-p/2)). Requires p > 2.
double theta(const ConditionInputs& in);

/// 2 M^2 (Lf / a^2 + Lg / a). Requires p = 2.
double xi(const ConditionInputs& in);

/// xi at p = 2, theta otherwise. Contraction is certified when < 1.
double contraction_constant(const ConditionInputs& in);

/// a - 3^(p-1) M^p (Lf a^(1-p) + Lg Cp a^((2-p)/2)) for p > 2 and
/// a - 3 M^2 (Lf / a + Lg) for p = 2. Positive certifies exponential
/// stability, and is then the guaranteed decay rate of E||X - X*||^p.
double stability_margin(const ConditionInputs& in);

/// Reads M, a from the family and L(f), L(g) from the coefficients.
ConditionInputs condition_inputs(const Model& model, double p,
                                 std::optional<double> configured_cp = std::nullopt);

struct GronwallParams {
    double alpha = 0.0;
    double beta = 1.0;
    double gamma = 0.0;
};

/// alpha exp((gamma - beta) t): the bound on any u with
/// u(t) <= alpha e^(-beta t) + gamma int_0^t e^(-beta (t-s)) u(s) ds.
double gronwall_envelope(const GronwallParams& gp, double t);

enum class Verdict { pass, fail, not_applicable };

std::string_view to_string(Verdict v);

/// d(t_k) = Ehat||X(t_k + omega) - X(t_k)||^p, paired within each path, for
/// every k with t_k + omega on the grid.
MomentSeries lag_defect(const PathEnsemble& ens, double omega, double p);

/// Least-squares slope of log(estimate) against t over the points with index
/// >= from_fraction * size, estimate > 0 and estimate > 10 * stderr. NaN when
/// fewer than two points qualify.
double fit_log_rate(const MomentSeries& series, double from_fraction = 0.0);

struct SapDiagnostic {
    MomentSeries defect;
    double fitted_rate = 0.0;  ///< slope over the last 40% of the window
    double initial = 0.0;      ///< d(0)
    double tail = 0.0;         ///< d at the last overlapping grid point
    double tail_std_error = 0.0;
    bool passed = false;
};

/// Lag-omega defect with pass rule d(tail) <= max(0.1 d(0), 5 stderr(tail)).
/// The grid must span at least 5 omega.
SapDiagnostic sap_diagnostic(const PathEnsemble& ens, double omega, double p);

struct StabilityResult {
    ConditionInputs inputs;
    double margin = 0.0;
    MomentSeries diff;
    std::vector<double> envelope;
    double fitted_rate = 0.0;
    /// First grid index where diff exceeded the envelope, if any.
    std::optional<std::size_t> first_violation;
    Verdict verdict = Verdict::not_applicable;
};

/// Solves from c0_a and c0_b with the same noise and compares
/// Ehat||X_a - X_b||^p with 3^(p-1) M^p ||c0_a - c0_b||^p exp(-margin t).
/// The verdict is not_applicable when the margin is not positive.
StabilityResult stability_experiment(const SimConfig& cfg, const Model& model,
                                     const HilbertVec& c0_a, const HilbertVec& c0_b,
                                     std::optional<double> configured_cp = std::nullopt,
                                     ExecOptions exec = {});

/// As above with the envelope built from explicit condition inputs.
StabilityResult stability_experiment(const SimConfig& cfg, const Model& model,
                                     const HilbertVec& c0_a, const HilbertVec& c0_b,
                                     const ConditionInputs& inputs, ExecOptions exec = {});

}  // namespace sapsim
