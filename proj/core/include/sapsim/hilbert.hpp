#pragma once

// Truncated Hilbert-space values, sample-path ensembles and Monte Carlo
// estimation of p-th moments.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sapsim {

/// Raised when an argument violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Coefficients of a vector on the first N orthonormal basis modes e_1..e_N.
///
/// Arithmetic never checks finiteness (the solver needs to observe blow-up);
/// `norm` and the validating factory `finite` do.
class HilbertVec {
public:
    explicit HilbertVec(std::size_t dim);
    explicit HilbertVec(std::vector<double> coeffs);
    HilbertVec(std::initializer_list<double> coeffs);

    /// Throws InvalidInput unless every entry is finite.
    static HilbertVec finite(std::vector<double> coeffs);
    static HilbertVec basis(std::size_t dim, std::size_t index);
    static HilbertVec filled(std::size_t dim, double value);

    std::size_t dim() const noexcept { return coeffs_.size(); }
    double operator[](std::size_t n) const { return coeffs_[n]; }
    double& operator[](std::size_t n) { return coeffs_[n]; }

    std::span<const double> coeffs() const noexcept { return coeffs_; }
    std::span<double> coeffs() noexcept { return coeffs_; }

    bool all_finite() const noexcept;

    HilbertVec& operator+=(const HilbertVec& rhs);
    HilbertVec& operator-=(const HilbertVec& rhs);
    HilbertVec& operator*=(double s) noexcept;

    friend HilbertVec operator+(HilbertVec lhs, const HilbertVec& rhs) { return lhs += rhs; }
    friend HilbertVec operator-(HilbertVec lhs, const HilbertVec& rhs) { return lhs -= rhs; }
    friend HilbertVec operator*(double s, HilbertVec v) { return v *= s; }
    friend HilbertVec operator*(HilbertVec v, double s) { return v *= s; }
    friend bool operator==(const HilbertVec&, const HilbertVec&) = default;

private:
    std::vector<double> coeffs_;
};

/// Euclidean norm on the truncated space. Throws InvalidInput on a
/// non-finite entry.
double norm(const HilbertVec& v);
double norm(std::span<const double> coeffs);

/// ||v||^p, computed without the intermediate square root for p = 2.
double norm_pow(std::span<const double> coeffs, double p);

/// Uniform grid t_k = k * dt, k = 0 .. points-1.
struct TimeGrid {
    double dt = 0.0;
    std::size_t points = 0;

    double at(std::size_t k) const noexcept { return static_cast<double>(k) * dt; }
    double horizon() const noexcept { return points == 0 ? 0.0 : at(points - 1); }

    /// Number of grid steps spanning `duration`; throws if it is not an
    /// integer multiple of dt (relative tolerance 1e-9).
    std::size_t steps_for(double duration) const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// P sample paths of an H-valued process on a shared uniform grid.
///
/// Storage is row-major: path, then grid index, then mode. Paths that blew up
/// during simulation are flagged invalid and excluded from every estimator.
class PathEnsemble {
public:
    PathEnsemble(TimeGrid grid, std::size_t paths, std::size_t dim, std::uint64_t seed);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t paths() const noexcept { return paths_; }
    std::size_t dim() const noexcept { return dim_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::span<double> state(std::size_t path, std::size_t k);
    std::span<const double> state(std::size_t path, std::size_t k) const;
    HilbertVec value(std::size_t path, std::size_t k) const;

    bool valid(std::size_t path) const { return valid_[path] != 0; }
    void mark_invalid(std::size_t path);
    std::size_t invalid_count() const noexcept;
    std::size_t valid_count() const noexcept { return paths_ - invalid_count(); }

    std::span<const double> raw() const noexcept { return data_; }
    std::span<double> raw() noexcept { return data_; }

    friend bool operator==(const PathEnsemble&, const PathEnsemble&) = default;

private:
    std::size_t offset(std::size_t path, std::size_t k) const;

    TimeGrid grid_;
    std::size_t paths_;
    std::size_t dim_;
    std::uint64_t seed_;
    std::vector<double> data_;
    std::vector<std::uint8_t> valid_;
};

/// Monte Carlo mean with the standard error of that mean.
struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

/// Compensated mean and unbiased-variance standard error of `samples`,
/// reduced in index order. Throws on an empty input.
Estimate mean_estimate(std::span<const double> samples);

/// Time-indexed estimates of E||.||^p.
struct MomentSeries {
    std::vector<double> t;
    std::vector<double> estimate;
    std::vector<double> std_error;
    double p = 2.0;
    std::size_t excluded_paths = 0;

    std::size_t size() const noexcept { return t.size(); }
    void push_back(double time, const Estimate& e);
};

/// Estimator of E||X(t_k)||^p over the valid paths.
Estimate pth_moment(const PathEnsemble& ens, std::size_t t_index, double p);

/// pth_moment at every grid point.
MomentSeries moment_series(const PathEnsemble& ens, double p);

/// Pathwise-paired estimator of E||X_a(t) - X_b(t)||^p. Both ensembles must
/// share grid, path count and dimension; a path counts only when valid in both.
MomentSeries difference_moment_series(const PathEnsemble& a, const PathEnsemble& b, double p);

/// Discrete sup norm: max over the grid of estimate^(1/p).
double sup_pnorm(const MomentSeries& series);

/// CSV with header `t,estimate,stderr`, 17 significant digits.
void write_csv(std::ostream& os, const MomentSeries& series);

void require_moment_order(double p);

}  // namespace sapsim
