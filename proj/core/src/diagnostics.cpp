#include "sapsim/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sapsim {
namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw InvalidInput(std::string(what) + " must be finite");
}

}  // namespace

void ConditionInputs::validate() const {
    require_finite(p, "p");
    require_finite(M, "M");
    require_finite(a, "a");
    require_finite(Lf, "L(f)");
    require_finite(Lg, "L(g)");
    require_finite(Cp, "C_p");
    require_moment_order(p);
    if (M < 1.0) throw InvalidInput("M must be >= 1");
    if (a <= 0.0) throw InvalidInput("a must be positive");
    if (Lf < 0.0 || Lg < 0.0) throw InvalidInput("Lipschitz constants must be non-negative");
    if (p > 2.0 && Cp <= 0.0) throw InvalidInput("C_p must be positive");
}

double theta(const ConditionInputs& in) {
    in.validate();
    if (!(in.p > 2.0)) throw InvalidInput("theta is defined for p > 2; use xi at p = 2");
    const double p = in.p;
    return std::pow(2.0, p - 1.0) * std::pow(in.M, p) *
           (in.Lf * std::pow(in.a, -p) + in.Cp * in.Lg * std::pow(in.a, -p / 2.0));
}

double xi(const ConditionInputs& in) {
    in.validate();
    if (in.p != 2.0) throw InvalidInput("xi is defined for p = 2 only");
    return 2.0 * in.M * in.M * (in.Lf / (in.a * in.a) + in.Lg / in.a);
}

double contraction_constant(const ConditionInputs& in) {
    return in.p == 2.0 ? xi(in) : theta(in);
}

double stability_margin(const ConditionInputs& in) {
    in.validate();
    const double p = in.p;
    if (p == 2.0) return in.a - 3.0 * in.M * in.M * (in.Lf / in.a + in.Lg);
    return in.a - std::pow(3.0, p - 1.0) * std::pow(in.M, p) *
                      (in.Lf * std::pow(in.a, 1.0 - p) +
                       in.Lg * in.Cp * std::pow(in.a, (2.0 - p) / 2.0));
}

ConditionInputs condition_inputs(const Model& model, double p, std::optional<double> configured_cp) {
    if (!model.family || !model.drift || !model.diffusion) {
        throw InvalidInput("model is missing a component");
    }
    ConditionInputs in;
    in.p = p;
    in.M = model.family->M();
    in.a = model.family->a();
    in.Lf = model.drift->lipschitz(p);
    in.Lg = model.diffusion->lipschitz(p);
    in.Cp = bdg_constant(p, configured_cp);
    in.validate();
    return in;
}

double gronwall_envelope(const GronwallParams& gp, double t) {
    require_finite(gp.alpha, "alpha");
    require_finite(gp.beta, "beta");
    require_finite(gp.gamma, "gamma");
    if (gp.alpha < 0.0 || gp.beta <= 0.0 || gp.gamma < 0.0) {
        throw InvalidInput("Gronwall parameters need alpha >= 0, beta > 0, gamma >= 0");
    }
    if (!(t >= 0.0)) throw InvalidInput("Gronwall envelope needs t >= 0");
    return gp.alpha * std::exp((gp.gamma - gp.beta) * t);
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::not_applicable: return "not_applicable";
    }
    return "unknown";
}

MomentSeries lag_defect(const PathEnsemble& ens, double omega, double p) {
    require_moment_order(p);
    const std::size_t lag = ens.grid().steps_for(omega);
    if (lag == 0 || lag >= ens.grid().points) {
        throw InvalidInput("grid must extend beyond one period omega");
    }
    MomentSeries out;
    out.p = p;
    std::vector<double> diff(ens.dim());
    std::vector<double> values;
    values.reserve(ens.paths());
    for (std::size_t k = 0; k + lag < ens.grid().points; ++k) {
        values.clear();
        for (std::size_t i = 0; i < ens.paths(); ++i) {
            if (!ens.valid(i)) continue;
            auto later = ens.state(i, k + lag);
            auto now = ens.state(i, k);
            for (std::size_t n = 0; n < diff.size(); ++n) diff[n] = later[n] - now[n];
            values.push_back(norm_pow(diff, p));
        }
        if (values.empty()) throw InvalidInput("ensemble has no valid paths");
        out.push_back(ens.grid().at(k), mean_estimate(values));
    }
    out.excluded_paths = ens.invalid_count();
    return out;
}

double fit_log_rate(const MomentSeries& series, double from_fraction) {
    if (!(from_fraction >= 0.0 && from_fraction < 1.0)) {
        throw InvalidInput("fit window fraction must lie in [0, 1)");
    }
    const auto start = static_cast<std::size_t>(std::floor(from_fraction * static_cast<double>(series.size())));
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    std::size_t n = 0;
    for (std::size_t k = start; k < series.size(); ++k) {
        const double d = series.estimate[k];
        if (!(d > 0.0) || !(d > 10.0 * series.std_error[k])) continue;
        const double t = series.t[k];
        const double y = std::log(d);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double m = static_cast<double>(n);
    const double denom = m * stt - st * st;
    if (denom <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (m * sty - st * sy) / denom;
}

SapDiagnostic sap_diagnostic(const PathEnsemble& ens, double omega, double p) {
    if (ens.grid().horizon() < 5.0 * omega * (1.0 - 1e-9)) {
        throw InvalidInput("periodicity diagnostic needs a horizon of at least 5 omega");
    }
    SapDiagnostic out;
    out.defect = lag_defect(ens, omega, p);
    out.fitted_rate = fit_log_rate(out.defect, 0.6);
    out.initial = out.defect.estimate.front();
    out.tail = out.defect.estimate.back();
    out.tail_std_error = out.defect.std_error.back();
    out.passed = out.tail <= std::max(0.1 * out.initial, 5.0 * out.tail_std_error);
    return out;
}

StabilityResult stability_experiment(const SimConfig& cfg, const Model& model,
                                     const HilbertVec& c0_a, const HilbertVec& c0_b,
                                     std::optional<double> configured_cp, ExecOptions exec) {
    return stability_experiment(cfg, model, c0_a, c0_b,
                                condition_inputs(model, cfg.p, configured_cp), exec);
}

StabilityResult stability_experiment(const SimConfig& cfg, const Model& model,
                                     const HilbertVec& c0_a, const HilbertVec& c0_b,
                                     const ConditionInputs& inputs, ExecOptions exec) {
    if (c0_a.dim() != cfg.N || c0_b.dim() != cfg.N) {
        throw InvalidInput("initial conditions must have dimension N");
    }
    if (inputs.p != cfg.p) throw InvalidInput("condition inputs use a different moment order");
    StabilityResult out;
    out.inputs = inputs;
    out.margin = stability_margin(out.inputs);

    Model model_a = model;
    model_a.c0 = c0_a;
    Model model_b = model;
    model_b.c0 = c0_b;
    const MildSolution a = simulate(cfg, model_a, exec);
    const MildSolution b = simulate(cfg, model_b, exec);
    out.diff = difference_moment_series(a.paths, b.paths, cfg.p);
    out.fitted_rate = fit_log_rate(out.diff);

    const double p = cfg.p;
    const double start = norm_pow((c0_a - c0_b).coeffs(), p);
    const double prefactor = std::pow(3.0, p - 1.0) * std::pow(out.inputs.M, p) * start;
    out.envelope.reserve(out.diff.size());
    for (std::size_t k = 0; k < out.diff.size(); ++k) {
        const double env = prefactor * std::exp(-out.margin * out.diff.t[k]);
        out.envelope.push_back(env);
        const double d = out.diff.estimate[k];
        const double rel = d > 0.0 ? out.diff.std_error[k] / d : 0.0;
        if (d > env * (1.0 + 5.0 * rel) && !out.first_violation) out.first_violation = k;
    }

    if (out.margin <= 0.0) {
        out.verdict = Verdict::not_applicable;
    } else {
        out.verdict = out.first_violation ? Verdict::fail : Verdict::pass;
    }
    return out;
}

}  // namespace sapsim
