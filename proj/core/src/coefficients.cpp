#include "sapsim/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "sapsim/random.hpp"

namespace sapsim {

HilbertVec DriftFn::eval(double t, const HilbertVec& x) const {
    HilbertVec out(x.dim());
    eval_into(t, x.coeffs(), out.coeffs());
    return out;
}

double PeriodicForcing::amplitude(double t) const {
    double amp = b1 * std::exp(-t);
    if (b0 != 0.0) {
        const double phase = std::fmod(t, omega) / omega;
        amp += b0 * std::sin(2.0 * std::numbers::pi * phase);
    }
    return amp;
}

namespace {

void validate_forcing(const PeriodicForcing& f) {
    if (!(f.omega > 0.0)) throw InvalidInput("forcing period omega must be positive");
    if (!std::isfinite(f.b0) || !std::isfinite(f.b1)) throw InvalidInput("forcing amplitudes must be finite");
    if (!f.direction.all_finite()) throw InvalidInput("forcing direction must be finite");
}

void add_forcing(const PeriodicForcing& f, double t, std::span<double> out) {
    if (f.b0 == 0.0 && f.b1 == 0.0) return;
    const double amp = f.amplitude(t);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += amp * f.direction[n];
}

std::string forcing_text(const PeriodicForcing& f) {
    std::ostringstream os;
    os << "b0=" << f.b0 << " b1=" << f.b1 << " omega=" << f.omega;
    return os.str();
}

}  // namespace

AffineDrift::AffineDrift(double c, PeriodicForcing forcing) : c_(c), forcing_(std::move(forcing)) {
    if (!std::isfinite(c)) throw InvalidInput("drift slope must be finite");
    validate_forcing(forcing_);
}

void AffineDrift::eval_into(double t, std::span<const double> x, std::span<double> out) const {
    if (x.size() != forcing_.direction.dim() || out.size() != x.size()) {
        throw InvalidInput("drift dimension mismatch");
    }
    for (std::size_t n = 0; n < x.size(); ++n) out[n] = c_ * x[n];
    add_forcing(forcing_, t, out);
}

double AffineDrift::lipschitz(double p) const { return std::pow(std::abs(c_), p); }

std::string AffineDrift::describe() const {
    std::ostringstream os;
    os << "affine drift c=" << c_ << " " << forcing_text(forcing_);
    return os.str();
}

SaturatingDrift::SaturatingDrift(double kappa, PeriodicForcing forcing)
    : kappa_(kappa), forcing_(std::move(forcing)) {
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidInput("saturation kappa must be >= 0");
    validate_forcing(forcing_);
}

void SaturatingDrift::eval_into(double t, std::span<const double> x, std::span<double> out) const {
    if (x.size() != forcing_.direction.dim() || out.size() != x.size()) {
        throw InvalidInput("drift dimension mismatch");
    }
    for (std::size_t n = 0; n < x.size(); ++n) out[n] = kappa_ * std::tanh(x[n]);
    add_forcing(forcing_, t, out);
}

double SaturatingDrift::lipschitz(double p) const { return std::pow(kappa_, p); }

std::string SaturatingDrift::describe() const {
    std::ostringstream os;
    os << "saturating drift kappa=" << kappa_ << " " << forcing_text(forcing_);
    return os.str();
}

ConstantDiffusion::ConstantDiffusion(DiffusionOperator phi) : phi_(std::move(phi)) {}

DiffusionOperator ConstantDiffusion::eval(double, const HilbertVec& x) const {
    if (x.dim() != phi_.dim()) throw InvalidInput("diffusion dimension mismatch");
    return phi_;
}

void ConstantDiffusion::apply_noise(double, std::span<const double>, std::span<const double> dw,
                                    std::span<double> out) const {
    phi_.apply_add(dw, out);
}

std::string ConstantDiffusion::describe() const {
    std::ostringstream os;
    os << "constant diffusion (" << (phi_.is_diagonal() ? "diagonal" : "dense") << ")";
    return os.str();
}

AffineDiffusion::AffineDiffusion(DiffusionOperator phi, double sigma, const QSpectrum& spec)
    : phi_(std::move(phi)), sigma_(sigma), largest_lambda_(spec.largest()) {
    if (!std::isfinite(sigma)) throw InvalidInput("diffusion sigma must be finite");
    if (spec.dim() != phi_.dim()) throw InvalidInput("diffusion and spectrum dimension mismatch");
}

DiffusionOperator AffineDiffusion::eval(double, const HilbertVec& x) const {
    if (x.dim() != phi_.dim()) throw InvalidInput("diffusion dimension mismatch");
    if (phi_.is_diagonal()) {
        DiffusionOperator out = phi_;
        auto d = out.diagonal_entries();
        for (std::size_t n = 0; n < d.size(); ++n) d[n] += sigma_ * x[n];
        return out;
    }
    std::vector<double> dense(phi_.dim() * phi_.dim());
    for (std::size_t m = 0; m < phi_.dim(); ++m)
        for (std::size_t n = 0; n < phi_.dim(); ++n)
            dense[m * phi_.dim() + n] = phi_.entry(m, n) + (m == n ? sigma_ * x[n] : 0.0);
    return DiffusionOperator::dense(phi_.dim(), std::move(dense));
}

void AffineDiffusion::apply_noise(double, std::span<const double> x, std::span<const double> dw,
                                  std::span<double> out) const {
    phi_.apply_add(dw, out);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += sigma_ * x[n] * dw[n];
}

double AffineDiffusion::lipschitz(double p) const {
    return std::pow(std::abs(sigma_) * std::sqrt(largest_lambda_), p);
}

std::string AffineDiffusion::describe() const {
    std::ostringstream os;
    os << "affine diffusion sigma=" << sigma_;
    return os.str();
}

std::shared_ptr<const DriftFn> zero_drift(std::size_t dim) {
    return std::make_shared<AffineDrift>(0.0, PeriodicForcing{0.0, 0.0, 1.0, HilbertVec(dim)});
}

std::shared_ptr<const DiffusionFn> zero_diffusion(std::size_t dim) {
    return std::make_shared<ConstantDiffusion>(DiffusionOperator::zero(dim));
}

namespace {

constexpr std::size_t kProbeEnsembleSize = 32;
constexpr int kProbeResamples = 8;

// One random ensemble pair (X, Y) at a random time. Scales are log-uniform so
// probes cover both the near-linear and the saturated regime.
struct ProbePair {
    double t = 0.0;
    std::vector<double> x;
    std::vector<double> y;
};

ProbePair draw_probe_pair(std::size_t dim, std::uint64_t seed, std::size_t pair, int attempt) {
    NormalStream stream({seed, pair, static_cast<std::uint64_t>(attempt), StreamPurpose::probe});
    ProbePair out;
    out.t = 20.0 * stream.next_uniform();
    const double base_scale = std::pow(10.0, -2.0 + 3.0 * stream.next_uniform());
    const double diff_scale = std::pow(10.0, -3.0 + 3.0 * stream.next_uniform());
    out.x.resize(kProbeEnsembleSize * dim);
    out.y.resize(kProbeEnsembleSize * dim);
    for (std::size_t i = 0; i < out.x.size(); ++i) {
        out.x[i] = base_scale * stream.next();
        out.y[i] = out.x[i] + diff_scale * stream.next();
    }
    return out;
}

template <class DiffPow>
double probe_ratio_max(std::size_t dim, double p, std::size_t probe_pairs, std::uint64_t seed,
                       DiffPow&& image_diff_pow) {
    require_moment_order(p);
    if (probe_pairs < 100) throw InvalidInput("lipschitz probe needs at least 100 probe pairs");
    double worst = 0.0;
    std::vector<double> num(kProbeEnsembleSize), den(kProbeEnsembleSize), diff(dim);
    for (std::size_t pair = 0; pair < probe_pairs; ++pair) {
        bool done = false;
        for (int attempt = 0; attempt < kProbeResamples && !done; ++attempt) {
            const ProbePair probe = draw_probe_pair(dim, seed, pair, attempt);
            for (std::size_t i = 0; i < kProbeEnsembleSize; ++i) {
                std::span<const double> x(probe.x.data() + i * dim, dim);
                std::span<const double> y(probe.y.data() + i * dim, dim);
                for (std::size_t n = 0; n < dim; ++n) diff[n] = x[n] - y[n];
                den[i] = norm_pow(diff, p);
                num[i] = image_diff_pow(probe.t, x, y);
            }
            const double mean_den = mean_estimate(den).mean;
            if (!(mean_den > 0.0)) continue;
            worst = std::max(worst, mean_estimate(num).mean / mean_den);
            done = true;
        }
        if (!done) throw InvalidInput("lipschitz probe: persistently coincident probe pair");
    }
    return worst;
}

std::size_t lag_steps(const PathEnsemble& x, double omega) {
    if (!(omega > 0.0)) throw InvalidInput("period omega must be positive");
    const std::size_t lag = x.grid().steps_for(omega);
    if (lag == 0) throw InvalidInput("period omega must span at least one grid step");
    if (lag >= x.grid().points) throw InvalidInput("grid is shorter than the period omega");
    return lag;
}

// Shared driver: value(t_k, path, lagged) is ||.||^p of the per-path defect.
template <class Defect>
MomentSeries lagged_series(const PathEnsemble& x, double omega, double p, Defect&& defect) {
    require_moment_order(p);
    const std::size_t lag = lag_steps(x, omega);
    MomentSeries out;
    out.p = p;
    out.excluded_paths = x.invalid_count();
    std::vector<double> values;
    values.reserve(x.paths());
    for (std::size_t k = 0; k + lag < x.grid().points; ++k) {
        values.clear();
        for (std::size_t i = 0; i < x.paths(); ++i) {
            if (x.valid(i)) values.push_back(defect(k, lag, i));
        }
        if (values.empty()) throw InvalidInput("ensemble has no valid paths");
        out.push_back(x.grid().at(k), mean_estimate(values));
    }
    return out;
}

}  // namespace

double lipschitz_probe(const DriftFn& fn, double p, std::size_t probe_pairs, std::uint64_t seed) {
    const std::size_t dim = fn.dim();
    std::vector<double> fx(dim), fy(dim);
    return probe_ratio_max(dim, p, probe_pairs, seed,
                           [&](double t, std::span<const double> x, std::span<const double> y) {
                               fn.eval_into(t, x, fx);
                               fn.eval_into(t, y, fy);
                               for (std::size_t n = 0; n < dim; ++n) fx[n] -= fy[n];
                               return norm_pow(fx, p);
                           });
}

double lipschitz_probe(const DiffusionFn& fn, const QSpectrum& spec, double p,
                       std::size_t probe_pairs, std::uint64_t seed) {
    const std::size_t dim = fn.dim();
    if (spec.dim() != dim) throw InvalidInput("diffusion and spectrum dimension mismatch");
    return probe_ratio_max(dim, p, probe_pairs, seed,
                           [&](double t, std::span<const double> x, std::span<const double> y) {
                               DiffusionOperator gx = fn.eval(t, HilbertVec({x.begin(), x.end()}));
                               gx -= fn.eval(t, HilbertVec({y.begin(), y.end()}));
                               return std::pow(hs_norm(gx, spec), p);
                           });
}

MomentSeries sap_defect(const DriftFn& fn, const PathEnsemble& x, double omega, double p) {
    if (fn.dim() != x.dim()) throw InvalidInput("drift and ensemble dimension mismatch");
    std::vector<double> now(x.dim()), later(x.dim());
    return lagged_series(x, omega, p, [&](std::size_t k, std::size_t lag, std::size_t i) {
        fn.eval_into(x.grid().at(k + lag), x.state(i, k + lag), later);
        fn.eval_into(x.grid().at(k), x.state(i, k), now);
        for (std::size_t n = 0; n < now.size(); ++n) later[n] -= now[n];
        return norm_pow(later, p);
    });
}

MomentSeries sap_defect(const DiffusionFn& fn, const QSpectrum& spec, const PathEnsemble& x,
                        double omega, double p) {
    if (fn.dim() != x.dim() || spec.dim() != x.dim()) {
        throw InvalidInput("diffusion, spectrum and ensemble dimension mismatch");
    }
    return lagged_series(x, omega, p, [&](std::size_t k, std::size_t lag, std::size_t i) {
        DiffusionOperator later = fn.eval(x.grid().at(k + lag), x.value(i, k + lag));
        later -= fn.eval(x.grid().at(k), x.value(i, k));
        return std::pow(hs_norm(later, spec), p);
    });
}

MomentSeries shift_defect(const DriftFn& fn, const PathEnsemble& x, double omega, double p) {
    if (fn.dim() != x.dim()) throw InvalidInput("drift and ensemble dimension mismatch");
    std::vector<double> now(x.dim()), shifted(x.dim());
    return lagged_series(x, omega, p, [&](std::size_t k, std::size_t lag, std::size_t i) {
        fn.eval_into(x.grid().at(k + lag), x.state(i, k), shifted);
        fn.eval_into(x.grid().at(k), x.state(i, k), now);
        for (std::size_t n = 0; n < now.size(); ++n) shifted[n] -= now[n];
        return norm_pow(shifted, p);
    });
}

}  // namespace sapsim
