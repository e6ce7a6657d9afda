#pragma once

// Drift f(t, x) and diffusion g(t, x) coefficients with declared Lipschitz
// constants, empirical Lipschitz probing, and the lag-omega defect of a
// coefficient composed with a process.
//
// Lipschitz constants follow the p-th power convention
//   E||f(t,X) - f(t,Y)||^p <= L(f) E||X - Y||^p,
// so a linear map c x has L = |c|^p.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "sapsim/hilbert.hpp"
#include "sapsim/qwiener.hpp"

namespace sapsim {

class DriftFn {
public:
    virtual ~DriftFn() = default;

    HilbertVec eval(double t, const HilbertVec& x) const;
    /// out <- f(t, x). `out` must not alias `x`.
    virtual void eval_into(double t, std::span<const double> x, std::span<double> out) const = 0;

    virtual std::size_t dim() const = 0;
    /// Declared L(f) for moment order p.
    virtual double lipschitz(double p) const = 0;
    /// Period in t when f is S-asymptotically periodic uniformly in x.
    virtual std::optional<double> sap_period() const = 0;
    virtual std::string describe() const = 0;
};

class DiffusionFn {
public:
    virtual ~DiffusionFn() = default;

    virtual DiffusionOperator eval(double t, const HilbertVec& x) const = 0;
    /// out += g(t, x) dw.
    virtual void apply_noise(double t, std::span<const double> x, std::span<const double> dw,
                             std::span<double> out) const = 0;

    virtual std::size_t dim() const = 0;
    /// Declared L(g) for moment order p, measured in ||.||_{L_2^0}.
    virtual double lipschitz(double p) const = 0;
    virtual std::optional<double> sap_period() const = 0;
    virtual std::string describe() const = 0;
};

/// b(t) = (b0 sin(2 pi t / omega) + b1 exp(-t)) u for a fixed direction u.
/// S-asymptotically omega-periodic: the exp(-t) transient dies out.
struct PeriodicForcing {
    double b0 = 0.0;
    double b1 = 0.0;
    double omega = 1.0;
    HilbertVec direction;

    double amplitude(double t) const;
};

/// f(t, x) = c x + b(t). L(f) = |c|^p.
class AffineDrift final : public DriftFn {
public:
    AffineDrift(double c, PeriodicForcing forcing);

    void eval_into(double t, std::span<const double> x, std::span<double> out) const override;
    std::size_t dim() const override { return forcing_.direction.dim(); }
    double lipschitz(double p) const override;
    std::optional<double> sap_period() const override { return forcing_.omega; }
    std::string describe() const override;

    double slope() const noexcept { return c_; }
    const PeriodicForcing& forcing() const noexcept { return forcing_; }

private:
    double c_;
    PeriodicForcing forcing_;
};

/// f(t, x)_n = kappa tanh(x_n) + b_n(t). |tanh'| <= 1 gives L(f) = kappa^p.
class SaturatingDrift final : public DriftFn {
public:
    SaturatingDrift(double kappa, PeriodicForcing forcing);

    void eval_into(double t, std::span<const double> x, std::span<double> out) const override;
    std::size_t dim() const override { return forcing_.direction.dim(); }
    double lipschitz(double p) const override;
    std::optional<double> sap_period() const override { return forcing_.omega; }
    std::string describe() const override;

private:
    double kappa_;
    PeriodicForcing forcing_;
};

/// Additive noise: g(t, x) = Phi_0. L(g) = 0.
class ConstantDiffusion final : public DiffusionFn {
public:
    explicit ConstantDiffusion(DiffusionOperator phi);

    DiffusionOperator eval(double t, const HilbertVec& x) const override;
    void apply_noise(double t, std::span<const double> x, std::span<const double> dw,
                     std::span<double> out) const override;
    std::size_t dim() const override { return phi_.dim(); }
    double lipschitz(double) const override { return 0.0; }
    std::optional<double> sap_period() const override { return std::nullopt; }
    std::string describe() const override;

private:
    DiffusionOperator phi_;
};

/// g(t, x) = Phi_0 + sigma diag(x). Since
/// ||sigma diag(x - y)||_{L_2^0}^2 = sigma^2 sum_n lambda_n (x_n - y_n)^2,
/// L(g) = (|sigma| sqrt(lambda_1))^p with lambda_1 the largest eigenvalue.
class AffineDiffusion final : public DiffusionFn {
public:
    AffineDiffusion(DiffusionOperator phi, double sigma, const QSpectrum& spec);

    DiffusionOperator eval(double t, const HilbertVec& x) const override;
    void apply_noise(double t, std::span<const double> x, std::span<const double> dw,
                     std::span<double> out) const override;
    std::size_t dim() const override { return phi_.dim(); }
    double lipschitz(double p) const override;
    std::optional<double> sap_period() const override { return std::nullopt; }
    std::string describe() const override;

private:
    DiffusionOperator phi_;
    double sigma_;
    double largest_lambda_;
};

std::shared_ptr<const DriftFn> zero_drift(std::size_t dim);
std::shared_ptr<const DiffusionFn> zero_diffusion(std::size_t dim);

/// max over `probe_pairs` random ensemble pairs (X, Y) and random t of
/// Ehat||f(t,X) - f(t,Y)||^p / Ehat||X - Y||^p.
double lipschitz_probe(const DriftFn& fn, double p, std::size_t probe_pairs, std::uint64_t seed);
double lipschitz_probe(const DiffusionFn& fn, const QSpectrum& spec, double p,
                       std::size_t probe_pairs, std::uint64_t seed);

/// d(t_k) = Ehat||fn(t_k + omega, X(t_k + omega)) - fn(t_k, X(t_k))||^p on the
/// part of the grid where t_k + omega is still on it.
MomentSeries sap_defect(const DriftFn& fn, const PathEnsemble& x, double omega, double p);
MomentSeries sap_defect(const DiffusionFn& fn, const QSpectrum& spec, const PathEnsemble& x,
                        double omega, double p);

/// Ehat||fn(t_k + omega, X(t_k)) - fn(t_k, X(t_k))||^p: the coefficient's own
/// defect with the process held fixed.
MomentSeries shift_defect(const DriftFn& fn, const PathEnsemble& x, double omega, double p);

}  // namespace sapsim
