#pragma once

// Trace-class covariance spectra, Q-Wiener increments and Hilbert-Schmidt
// diffusion operators, plus Monte Carlo checks of the Ito isometry and the
// Burkholder-Davis-Gundy moment bound.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sapsim/hilbert.hpp"
#include "sapsim/random.hpp"

namespace sapsim {

/// Eigenvalues lambda_1 >= lambda_2 >= ... >= 0 of the covariance operator Q
/// in the basis e_n.
class QSpectrum {
public:
    explicit QSpectrum(std::vector<double> lambdas);

    /// lambda_n = ratio^n, n = 1..N. ratio = 0.5 gives 2^-n.
    static QSpectrum geometric(double ratio, std::size_t dim);
    /// lambda_n = n^-exponent, n = 1..N.
    static QSpectrum polynomial(double exponent, std::size_t dim);

    std::size_t dim() const noexcept { return lambdas_.size(); }
    std::span<const double> lambdas() const noexcept { return lambdas_; }
    double operator[](std::size_t n) const { return lambdas_[n]; }
    double largest() const noexcept { return lambdas_.front(); }

    friend bool operator==(const QSpectrum&, const QSpectrum&) = default;

private:
    std::vector<double> lambdas_;
};

/// Tr(Q) = sum of the eigenvalues.
double trace(const QSpectrum& spec);

struct WienerIncrement {
    HilbertVec dvalue;
    double dt;
};

/// W(t+dt) - W(t): component n is sqrt(lambda_n dt) xi_n with xi_n drawn
/// from `stream`.
WienerIncrement sample_increment(const QSpectrum& spec, double dt, NormalStream& stream);
void sample_increment_into(const QSpectrum& spec, double dt, NormalStream& stream,
                           std::span<double> out);

/// Linear map from H_0 coordinates to H coordinates, stored as an N x N
/// row-major matrix or, when flagged, as its diagonal only.
class DiffusionOperator {
public:
    static DiffusionOperator zero(std::size_t dim);
    static DiffusionOperator identity(std::size_t dim);
    static DiffusionOperator diagonal(std::vector<double> diag);
    static DiffusionOperator dense(std::size_t dim, std::vector<double> row_major);

    std::size_t dim() const noexcept { return dim_; }
    bool is_diagonal() const noexcept { return diagonal_; }
    double entry(std::size_t row, std::size_t col) const;

    /// out += Phi * in.
    void apply_add(std::span<const double> in, std::span<double> out) const;
    HilbertVec operator()(const HilbertVec& in) const;

    /// Diagonal storage is exposed for in-place updates by coefficient code.
    std::span<double> diagonal_entries();
    std::span<double> dense_entries();

    DiffusionOperator& operator-=(const DiffusionOperator& rhs);

private:
    DiffusionOperator(std::size_t dim, bool diagonal, std::vector<double> values);

    std::size_t dim_;
    bool diagonal_;
    std::vector<double> values_;
};

/// ||Phi Q^{1/2}||_HS = sqrt(sum_{m,n} Phi_{mn}^2 lambda_n), the L_2^0 norm.
double hs_norm(const DiffusionOperator& op, const QSpectrum& spec);

struct IsometryCheck {
    double mc = 0.0;
    double std_error = 0.0;
    double analytic = 0.0;
    double zscore = 0.0;
};

/// Monte Carlo E||int_0^T Phi dW||^2 for a constant integrand, accumulated
/// as an Ito sum over `steps` sub-intervals, against T ||Phi||_{L_2^0}^2.
IsometryCheck ito_isometry_check(const DiffusionOperator& op, const QSpectrum& spec, double T,
                                 std::size_t paths, std::uint64_t seed, std::size_t steps = 16);

/// C_p for the moment inequality. Default (p(p-1)/2)^(p/2) for p > 2 and 1
/// at p = 2; `configured` overrides it.
double bdg_constant(double p, std::optional<double> configured = std::nullopt);

struct BdgCheck {
    double p = 4.0;
    double terminal_moment = 0.0;      ///< MC E||int_0^T G dW||^p
    double terminal_std_error = 0.0;
    double running_sup_moment = 0.0;   ///< MC E sup_{t_k} ||int_0^t_k G dW||^p
    double running_sup_std_error = 0.0;
    double quadratic_variation = 0.0;  ///< (T ||G||_{L_2^0}^2)^(p/2)
    double constant = 0.0;
    double bound = 0.0;                ///< constant * quadratic_variation
    double ratio = 0.0;                ///< terminal_moment / quadratic_variation
    double margin = 0.0;               ///< bound / terminal_moment
};

BdgCheck bdg_check(const DiffusionOperator& op, const QSpectrum& spec, double T, double p,
                   std::size_t paths, std::uint64_t seed, std::size_t steps = 16,
                   std::optional<double> configured_constant = std::nullopt);

/// Entrywise comparison of the empirical increment covariance with
/// dt diag(lambda).
struct CovarianceCheck {
    std::size_t dim = 0;
    std::vector<double> empirical;  ///< row-major N x N
    std::vector<double> expected;
    std::vector<double> std_error;
    double worst_sigma = 0.0;  ///< max |empirical - expected| / std_error
};

CovarianceCheck increment_covariance_check(const QSpectrum& spec, double dt, std::size_t samples,
                                           std::uint64_t seed);

/// Parses `geometric(r)`, `polynomial(s)` with dimension N.
QSpectrum parse_spectrum_family(const std::string& text, std::size_t dim);

}  // namespace sapsim
