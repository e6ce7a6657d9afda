#pragma once

// Exponential-Euler integration of the mild solution
//   X(t) = U(t,0) c0 + int_0^t U(t,s) f(s,X(s)) ds + int_0^t U(t,s) g(s,X(s)) dW(s)
// and Picard iteration of the fixed-point map Gamma under frozen noise.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sapsim/coefficients.hpp"
#include "sapsim/evolution.hpp"
#include "sapsim/hilbert.hpp"
#include "sapsim/qwiener.hpp"

namespace sapsim {

struct SimConfig {
    double T = 1.0;
    double dt = 1e-2;
    std::size_t N = 8;
    std::size_t P = 1;
    double p = 2.0;
    std::uint64_t seed = 0;
    double omega = 1.0;
    /// Store every k-th grid point; must divide the number of steps.
    std::size_t record_every = 1;

    /// Throws InvalidInput unless dt > 0, T >= omega, T/dt is an integer
    /// (within 1e-9), P >= 1, N >= 1 and p >= 2.
    void validate() const;
    std::size_t steps() const;
    TimeGrid recorded_grid() const;
};

/// The system being integrated. Shared pointers keep models cheap to copy
/// between experiments (e.g. two initial conditions).
struct Model {
    std::shared_ptr<const EvolutionFamily> family;
    std::shared_ptr<const DriftFn> drift;
    std::shared_ptr<const DiffusionFn> diffusion;
    QSpectrum spectrum;
    HilbertVec c0;

    void validate(std::size_t dim) const;
};

struct ExecOptions {
    unsigned threads = 1;
};

/// Frozen Wiener increments on a uniform grid: increment(path, k) is a pure
/// function of (seed, path, k), so every consumer sees the same noise.
class NoiseField {
public:
    NoiseField(QSpectrum spectrum, double dt, std::uint64_t seed);

    void increment_into(std::size_t path, std::size_t step, std::span<double> out) const;
    WienerIncrement increment(std::size_t path, std::size_t step) const;

    const QSpectrum& spectrum() const noexcept { return spectrum_; }
    double dt() const noexcept { return dt_; }
    std::uint64_t seed() const noexcept { return seed_; }

private:
    QSpectrum spectrum_;
    double dt_;
    std::uint64_t seed_;
};

/// One exponential-Euler step:
///   X_{k+1} = U(t_k + dt, t_k) [X_k + f(t_k, X_k) dt + g(t_k, X_k) dW_k].
HilbertVec step(const EvolutionFamily& fam, const DriftFn& f, const DiffusionFn& g, double t_k,
                double dt, const HilbertVec& x_k, const WienerIncrement& dw_k);

struct BlowUp {
    std::size_t path;
    std::size_t step;
    double time;
};

struct MildSolution {
    PathEnsemble paths;
    SimConfig config;
    std::string family;
    std::string drift;
    std::string diffusion;
    /// Paths whose state became non-finite; they are flagged invalid in `paths`.
    std::vector<BlowUp> blowups;
};

/// P paths on the uniform grid; path i is driven by NoiseField(spectrum, dt,
/// seed) row i. Results do not depend on `exec.threads`.
MildSolution simulate(const SimConfig& cfg, const Model& model, ExecOptions exec = {});

/// Discretized Gamma at phi:
///   (Gamma phi)(t_k) = U(t_k,0) c0 + sum_{j<k} U(t_k,t_j) [f(t_j,phi_j) dt + g(t_j,phi_j) dW_j],
/// evaluated by the equivalent one-step recursion. phi must be recorded at
/// every step of cfg's grid.
PathEnsemble gamma_apply(const SimConfig& cfg, const Model& model, const PathEnsemble& phi,
                         const NoiseField& noise, ExecOptions exec = {});

struct PicardResult {
    /// ||Phi_{k+1} - Phi_k||_inf = max_t (Ehat||.||^p)^(1/p).
    std::vector<double> distance;
    std::vector<double> ratio;
    /// The same distances raised to the p-th power, and their ratios.
    std::vector<double> power_distance;
    std::vector<double> power_ratio;
    bool converged = false;
};

/// Picard iteration from Phi_0 = c0 with frozen noise; stops early once the
/// distance drops below 1e-14.
PicardResult picard_iterate(const SimConfig& cfg, const Model& model, std::size_t iters,
                            ExecOptions exec = {});

}  // namespace sapsim
