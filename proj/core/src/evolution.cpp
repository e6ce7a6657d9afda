#include "sapsim/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sapsim {

EvolutionFamily::EvolutionFamily(std::size_t dim, double M, double a, double omega)
    : dim_(dim), M_(M), a_(a), omega_(omega) {
    if (dim == 0) throw InvalidInput("evolution family dimension must be at least 1");
    if (!(M >= 1.0) || !std::isfinite(M)) throw InvalidInput("stability constant M must be >= 1");
    if (!(a > 0.0) || !std::isfinite(a)) throw InvalidInput("decay rate a must be positive");
    if (!(omega > 0.0) || !std::isfinite(omega)) throw InvalidInput("period omega must be positive");
}

HilbertVec EvolutionFamily::apply(double t, double s, const HilbertVec& v) const {
    HilbertVec out = v;
    apply_in_place(t, s, out.coeffs());
    return out;
}

void EvolutionFamily::apply_in_place(double t, double s, std::span<double> v) const {
    if (!(t >= s)) throw InvalidInput("evolution requires t >= s");
    if (v.size() != dim_) throw InvalidInput("evolution dimension mismatch");
    do_apply(t, s, v);
}

DiagonalPeriodicFamily::DiagonalPeriodicFamily(std::vector<double> mus, double rho, double omega)
    : EvolutionFamily(mus.size(),
                      std::exp(rho * omega / std::numbers::pi),
                      mus.empty() ? 1.0 : *std::min_element(mus.begin(), mus.end()), omega),
      mus_(std::move(mus)),
      rho_(rho) {
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidInput("modulation rho must be >= 0");
    for (std::size_t n = 0; n < mus_.size(); ++n) {
        if (!(mus_[n] > 0.0) || !std::isfinite(mus_[n])) {
            throw InvalidInput("decay rates mu_n must be positive");
        }
        if (n > 0 && mus_[n] < mus_[n - 1]) throw InvalidInput("decay rates must be non-decreasing");
    }
}

std::vector<double> DiagonalPeriodicFamily::linear_rates(double start, double step, std::size_t dim) {
    std::vector<double> mus(dim);
    for (std::size_t n = 0; n < dim; ++n) mus[n] = start + step * static_cast<double>(n);
    return mus;
}

// rho omega / (2 pi) * cos(2 pi t / omega); the phase is reduced modulo omega.
double DiagonalPeriodicFamily::modulation(double t) const {
    if (rho_ == 0.0) return 0.0;
    const double phase = std::fmod(t, omega()) / omega();
    return rho_ * omega() / (2.0 * std::numbers::pi) * std::cos(2.0 * std::numbers::pi * phase);
}

std::string DiagonalPeriodicFamily::describe() const {
    std::ostringstream os;
    os << "diagonal_periodic(N=" << dim() << ", mu_1=" << mus_.front() << ", mu_N=" << mus_.back()
       << ", rho=" << rho_ << ", omega=" << omega() << ")";
    return os.str();
}

double DiagonalPeriodicFamily::generator(std::size_t mode, double t) const {
    const double phase = std::fmod(t, omega()) / omega();
    return -mus_.at(mode) + rho_ * std::sin(2.0 * std::numbers::pi * phase);
}

HilbertVec DiagonalPeriodicFamily::generator_apply(double t, const HilbertVec& v) const {
    HilbertVec out = v;
    for (std::size_t n = 0; n < dim(); ++n) out[n] *= generator(n, t);
    return out;
}

void DiagonalPeriodicFamily::do_apply(double t, double s, std::span<double> v) const {
    const double shift = modulation(s) - modulation(t);
    const double elapsed = t - s;
    for (std::size_t n = 0; n < v.size(); ++n) {
        v[n] *= std::exp(-mus_[n] * elapsed + shift);
    }
}

double decay_bound_check(const EvolutionFamily& fam, std::span<const DecayProbe> probes) {
    double worst = 0.0;
    bool any = false;
    for (const DecayProbe& probe : probes) {
        const double nv = norm(probe.v);
        if (nv == 0.0) continue;
        any = true;
        const double bound = fam.M() * std::exp(-fam.a() * (probe.t - probe.s)) * nv;
        worst = std::max(worst, norm(fam.apply(probe.t, probe.s, probe.v)) / bound);
    }
    if (!any) throw InvalidInput("decay check needs at least one non-zero probe vector");
    return worst;
}

double cocycle_check(const EvolutionFamily& fam, double r, double s, double t, const HilbertVec& v) {
    if (!(r <= s && s <= t)) throw InvalidInput("cocycle check requires r <= s <= t");
    const HilbertVec two_step = fam.apply(t, s, fam.apply(s, r, v));
    return norm(two_step - fam.apply(t, r, v));
}

double periodicity_residual(const EvolutionFamily& fam, double t, double s, const HilbertVec& v) {
    const double w = fam.omega();
    return norm(fam.apply(t + w, s + w, v) - fam.apply(t, s, v));
}

double generator_residual(const DiagonalPeriodicFamily& fam, double t, double s,
                          const HilbertVec& v, double h) {
    if (!(h > 0.0) || !(t - h >= s)) throw InvalidInput("generator check requires t - h >= s");
    HilbertVec fd = fam.apply(t + h, s, v) - fam.apply(t - h, s, v);
    fd *= 1.0 / (2.0 * h);
    const HilbertVec exact = fam.generator_apply(t, fam.apply(t, s, v));
    const double scale = norm(exact);
    const double diff = norm(fd - exact);
    return scale > 0.0 ? diff / scale : diff;
}

}  // namespace sapsim
