#include "sapsim/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace sapsim {

namespace {

void require_same_dim(std::size_t a, std::size_t b) {
    if (a != b) {
        throw InvalidInput("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

// Neumaier-compensated running sum.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    double value() const { return sum + carry; }
};

}  // namespace

HilbertVec::HilbertVec(std::size_t dim) : coeffs_(dim, 0.0) {
    if (dim == 0) {
        throw InvalidInput("HilbertVec dimension must be at least 1");
    }
}

HilbertVec::HilbertVec(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) {
        throw InvalidInput("HilbertVec dimension must be at least 1");
    }
}

HilbertVec::HilbertVec(std::initializer_list<double> coeffs)
    : HilbertVec(std::vector<double>(coeffs)) {}

HilbertVec HilbertVec::finite(std::vector<double> coeffs) {
    HilbertVec v(std::move(coeffs));
    if (!v.all_finite()) {
        throw InvalidInput("HilbertVec has a non-finite coefficient");
    }
    return v;
}

HilbertVec HilbertVec::basis(std::size_t dim, std::size_t index) {
    HilbertVec v(dim);
    if (index >= dim) {
        throw InvalidInput("basis index out of range");
    }
    v.coeffs_[index] = 1.0;
    return v;
}

HilbertVec HilbertVec::filled(std::size_t dim, double value) {
    HilbertVec v(dim);
    std::fill(v.coeffs_.begin(), v.coeffs_.end(), value);
    return v;
}

bool HilbertVec::all_finite() const noexcept {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](double x) { return std::isfinite(x); });
}

HilbertVec& HilbertVec::operator+=(const HilbertVec& rhs) {
    require_same_dim(dim(), rhs.dim());
    for (std::size_t n = 0; n < coeffs_.size(); ++n) coeffs_[n] += rhs.coeffs_[n];
    return *this;
}

HilbertVec& HilbertVec::operator-=(const HilbertVec& rhs) {
    require_same_dim(dim(), rhs.dim());
    for (std::size_t n = 0; n < coeffs_.size(); ++n) coeffs_[n] -= rhs.coeffs_[n];
    return *this;
}

HilbertVec& HilbertVec::operator*=(double s) noexcept {
    for (double& c : coeffs_) c *= s;
    return *this;
}

double norm(const HilbertVec& v) { return norm(v.coeffs()); }

double norm(std::span<const double> coeffs) {
    double sq = 0.0;
    for (double c : coeffs) {
        if (!std::isfinite(c)) {
            throw InvalidInput("norm of a vector with a non-finite coefficient");
        }
        sq += c * c;
    }
    return std::sqrt(sq);
}

double norm_pow(std::span<const double> coeffs, double p) {
    double sq = 0.0;
    for (double c : coeffs) sq += c * c;
    if (p == 2.0) return sq;
    return std::pow(sq, 0.5 * p);
}

std::size_t TimeGrid::steps_for(double duration) const {
    if (!(dt > 0.0)) {
        throw InvalidInput("time grid step must be positive");
    }
    const double ratio = duration / dt;
    const double rounded = std::round(ratio);
    if (rounded < 0.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
        throw InvalidInput("duration " + std::to_string(duration) +
                           " is not an integer multiple of dt " + std::to_string(dt));
    }
    return static_cast<std::size_t>(rounded);
}

PathEnsemble::PathEnsemble(TimeGrid grid, std::size_t paths, std::size_t dim, std::uint64_t seed)
    : grid_(grid), paths_(paths), dim_(dim), seed_(seed) {
    if (paths == 0) throw InvalidInput("ensemble needs at least one path");
    if (dim == 0) throw InvalidInput("ensemble dimension must be at least 1");
    if (grid.points == 0 || !(grid.dt > 0.0)) throw InvalidInput("ensemble needs a non-empty grid");
    data_.assign(paths * grid.points * dim, 0.0);
    valid_.assign(paths, 1);
}

std::size_t PathEnsemble::offset(std::size_t path, std::size_t k) const {
    return (path * grid_.points + k) * dim_;
}

std::span<double> PathEnsemble::state(std::size_t path, std::size_t k) {
    return {data_.data() + offset(path, k), dim_};
}

std::span<const double> PathEnsemble::state(std::size_t path, std::size_t k) const {
    return {data_.data() + offset(path, k), dim_};
}

HilbertVec PathEnsemble::value(std::size_t path, std::size_t k) const {
    auto s = state(path, k);
    return HilbertVec(std::vector<double>(s.begin(), s.end()));
}

void PathEnsemble::mark_invalid(std::size_t path) { valid_.at(path) = 0; }

std::size_t PathEnsemble::invalid_count() const noexcept {
    return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{0}));
}

Estimate mean_estimate(std::span<const double> samples) {
    if (samples.empty()) {
        throw InvalidInput("mean of an empty sample");
    }
    CompensatedSum sum;
    for (double x : samples) sum.add(x);
    const double n = static_cast<double>(samples.size());
    const double mean = sum.value() / n;

    Estimate e{mean, 0.0, samples.size()};
    if (samples.size() > 1) {
        CompensatedSum sq;
        for (double x : samples) sq.add((x - mean) * (x - mean));
        const double var = std::max(0.0, sq.value() / (n - 1.0));
        e.std_error = std::sqrt(var / n);
    }
    return e;
}

void MomentSeries::push_back(double time, const Estimate& e) {
    t.push_back(time);
    estimate.push_back(e.mean);
    std_error.push_back(e.std_error);
}

void require_moment_order(double p) {
    if (!(p >= 2.0) || !std::isfinite(p)) {
        throw InvalidInput("moment order p must be a finite real >= 2");
    }
}

Estimate pth_moment(const PathEnsemble& ens, std::size_t t_index, double p) {
    require_moment_order(p);
    if (t_index >= ens.grid().points) {
        throw InvalidInput("time index outside the grid");
    }
    std::vector<double> values;
    values.reserve(ens.paths());
    for (std::size_t i = 0; i < ens.paths(); ++i) {
        if (ens.valid(i)) values.push_back(norm_pow(ens.state(i, t_index), p));
    }
    if (values.empty()) {
        throw InvalidInput("ensemble has no valid paths");
    }
    return mean_estimate(values);
}

MomentSeries moment_series(const PathEnsemble& ens, double p) {
    require_moment_order(p);
    MomentSeries out;
    out.p = p;
    out.excluded_paths = ens.invalid_count();
    for (std::size_t k = 0; k < ens.grid().points; ++k) {
        out.push_back(ens.grid().at(k), pth_moment(ens, k, p));
    }
    return out;
}

MomentSeries difference_moment_series(const PathEnsemble& a, const PathEnsemble& b, double p) {
    require_moment_order(p);
    if (!(a.grid() == b.grid()) || a.paths() != b.paths() || a.dim() != b.dim()) {
        throw InvalidInput("paired ensembles must share grid, path count and dimension");
    }
    MomentSeries out;
    out.p = p;
    std::vector<double> diff(a.dim());
    std::vector<double> values;
    values.reserve(a.paths());
    for (std::size_t k = 0; k < a.grid().points; ++k) {
        values.clear();
        for (std::size_t i = 0; i < a.paths(); ++i) {
            if (!a.valid(i) || !b.valid(i)) continue;
            auto xa = a.state(i, k);
            auto xb = b.state(i, k);
            for (std::size_t n = 0; n < diff.size(); ++n) diff[n] = xa[n] - xb[n];
            values.push_back(norm_pow(diff, p));
        }
        if (values.empty()) throw InvalidInput("no path is valid in both ensembles");
        out.push_back(a.grid().at(k), mean_estimate(values));
    }
    out.excluded_paths = a.paths() - values.size();
    return out;
}

double sup_pnorm(const MomentSeries& series) {
    if (series.size() == 0) {
        throw InvalidInput("sup norm of an empty series");
    }
    double best = 0.0;
    for (double e : series.estimate) best = std::max(best, std::pow(e, 1.0 / series.p));
    return best;
}

void write_csv(std::ostream& os, const MomentSeries& series) {
    os << "t,estimate,stderr\n";
    char line[128];
    for (std::size_t k = 0; k < series.size(); ++k) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", series.t[k], series.estimate[k],
                      series.std_error[k]);
        os << line;
    }
}

}  // namespace sapsim
