#pragma once

// Two-parameter evolution families U(t, s) and checks of the identities an
// exponentially stable omega-periodic family must satisfy.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sapsim/hilbert.hpp"

namespace sapsim {

/// U(t, s), t >= s >= 0, with declared stability certificate
/// ||U(t, s)|| <= M exp(-a (t - s)) and period omega.
///
/// Implementations override `do_apply`; the public entry points validate the
/// time ordering. Instances are immutable and safe to share between threads.
class EvolutionFamily {
public:
    virtual ~EvolutionFamily() = default;

    HilbertVec apply(double t, double s, const HilbertVec& v) const;
    /// v <- U(t, s) v.
    void apply_in_place(double t, double s, std::span<double> v) const;

    std::size_t dim() const noexcept { return dim_; }
    double M() const noexcept { return M_; }
    double a() const noexcept { return a_; }
    double omega() const noexcept { return omega_; }

    virtual std::string describe() const = 0;

protected:
    EvolutionFamily(std::size_t dim, double M, double a, double omega);

    virtual void do_apply(double t, double s, std::span<double> v) const = 0;

private:
    std::size_t dim_;
    double M_;
    double a_;
    double omega_;
};

/// A(t) e_n = (-mu_n + rho sin(2 pi t / omega)) e_n, integrated in closed form:
///   U(t, s) e_n = exp(-mu_n (t - s) + rho omega / (2 pi) (cos(2 pi s / omega) - cos(2 pi t / omega))) e_n.
/// Certified constants a = min mu_n, M = exp(rho omega / pi).
class DiagonalPeriodicFamily final : public EvolutionFamily {
public:
    DiagonalPeriodicFamily(std::vector<double> mus, double rho, double omega);

    /// mu_n = start + step * (n - 1), n = 1..N.
    static std::vector<double> linear_rates(double start, double step, std::size_t dim);

    std::span<const double> mus() const noexcept { return mus_; }
    double rho() const noexcept { return rho_; }

    /// Diagonal entry of A(t) for `mode`.
    double generator(std::size_t mode, double t) const;
    HilbertVec generator_apply(double t, const HilbertVec& v) const;

    std::string describe() const override;

protected:
    void do_apply(double t, double s, std::span<double> v) const override;

private:
    double modulation(double t) const;

    std::vector<double> mus_;
    double rho_;
};

struct DecayProbe {
    double t;
    double s;
    HilbertVec v;
};

/// max over probes of ||U(t,s) v|| / (M exp(-a (t - s)) ||v||). Zero vectors
/// are skipped; throws if every probe is skipped.
double decay_bound_check(const EvolutionFamily& fam, std::span<const DecayProbe> probes);

/// ||U(t,s) U(s,r) v - U(t,r) v|| for r <= s <= t.
double cocycle_check(const EvolutionFamily& fam, double r, double s, double t, const HilbertVec& v);

/// ||U(t + omega, s + omega) v - U(t, s) v||.
double periodicity_residual(const EvolutionFamily& fam, double t, double s, const HilbertVec& v);

/// Relative residual of the central finite difference of t -> U(t,s) v
/// against A(t) U(t,s) v. Requires t - h >= s.
double generator_residual(const DiagonalPeriodicFamily& fam, double t, double s,
                          const HilbertVec& v, double h = 1e-5);

}  // namespace sapsim
