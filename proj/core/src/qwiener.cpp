#include "sapsim/qwiener.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>

namespace sapsim {

namespace {

double ratio_or_zero(double num, double den) {
    if (num == 0.0) return 0.0;
    return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}

}  // namespace

QSpectrum::QSpectrum(std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
    if (lambdas_.empty()) throw InvalidInput("spectrum must have at least one mode");
    for (std::size_t n = 0; n < lambdas_.size(); ++n) {
        if (!std::isfinite(lambdas_[n]) || lambdas_[n] < 0.0) {
            throw InvalidInput("spectrum entries must be finite and non-negative");
        }
        if (n > 0 && lambdas_[n] > lambdas_[n - 1]) {
            throw InvalidInput("spectrum must be non-increasing");
        }
    }
    double total = 0.0;
    for (double l : lambdas_) total += l;
    if (!std::isfinite(total)) throw InvalidInput("spectrum trace is not finite");
}

QSpectrum QSpectrum::geometric(double ratio, std::size_t dim) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw InvalidInput("geometric ratio must lie in (0, 1]");
    std::vector<double> l(dim);
    for (std::size_t n = 0; n < dim; ++n) l[n] = std::pow(ratio, static_cast<double>(n + 1));
    return QSpectrum(std::move(l));
}

QSpectrum QSpectrum::polynomial(double exponent, std::size_t dim) {
    if (!(exponent >= 0.0)) throw InvalidInput("polynomial exponent must be non-negative");
    std::vector<double> l(dim);
    for (std::size_t n = 0; n < dim; ++n) l[n] = std::pow(static_cast<double>(n + 1), -exponent);
    return QSpectrum(std::move(l));
}

double trace(const QSpectrum& spec) {
    double total = 0.0;
    for (double l : spec.lambdas()) total += l;
    return total;
}

void sample_increment_into(const QSpectrum& spec, double dt, NormalStream& stream,
                           std::span<double> out) {
    if (!(dt >= 0.0)) throw InvalidInput("increment length dt must be non-negative");
    if (out.size() != spec.dim()) throw InvalidInput("increment dimension mismatch");
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n] = std::sqrt(spec[n] * dt) * stream.next();
    }
}

WienerIncrement sample_increment(const QSpectrum& spec, double dt, NormalStream& stream) {
    WienerIncrement inc{HilbertVec(spec.dim()), dt};
    sample_increment_into(spec, dt, stream, inc.dvalue.coeffs());
    return inc;
}

DiffusionOperator::DiffusionOperator(std::size_t dim, bool diagonal, std::vector<double> values)
    : dim_(dim), diagonal_(diagonal), values_(std::move(values)) {
    if (dim_ == 0) throw InvalidInput("diffusion operator dimension must be at least 1");
}

DiffusionOperator DiffusionOperator::zero(std::size_t dim) {
    return DiffusionOperator(dim, true, std::vector<double>(dim, 0.0));
}

DiffusionOperator DiffusionOperator::identity(std::size_t dim) {
    return DiffusionOperator(dim, true, std::vector<double>(dim, 1.0));
}

DiffusionOperator DiffusionOperator::diagonal(std::vector<double> diag) {
    const std::size_t n = diag.size();
    return DiffusionOperator(n, true, std::move(diag));
}

DiffusionOperator DiffusionOperator::dense(std::size_t dim, std::vector<double> row_major) {
    if (row_major.size() != dim * dim) throw InvalidInput("dense operator needs N*N entries");
    return DiffusionOperator(dim, false, std::move(row_major));
}

double DiffusionOperator::entry(std::size_t row, std::size_t col) const {
    if (diagonal_) return row == col ? values_[row] : 0.0;
    return values_[row * dim_ + col];
}

void DiffusionOperator::apply_add(std::span<const double> in, std::span<double> out) const {
    if (in.size() != dim_ || out.size() != dim_) throw InvalidInput("operator dimension mismatch");
    if (diagonal_) {
        for (std::size_t n = 0; n < dim_; ++n) out[n] += values_[n] * in[n];
        return;
    }
    for (std::size_t m = 0; m < dim_; ++m) {
        double acc = 0.0;
        const double* row = values_.data() + m * dim_;
        for (std::size_t n = 0; n < dim_; ++n) acc += row[n] * in[n];
        out[m] += acc;
    }
}

HilbertVec DiffusionOperator::operator()(const HilbertVec& in) const {
    HilbertVec out(dim_);
    apply_add(in.coeffs(), out.coeffs());
    return out;
}

std::span<double> DiffusionOperator::diagonal_entries() {
    if (!diagonal_) throw InvalidInput("operator is stored densely");
    return values_;
}

std::span<double> DiffusionOperator::dense_entries() {
    if (diagonal_) throw InvalidInput("operator is stored as a diagonal");
    return values_;
}

DiffusionOperator& DiffusionOperator::operator-=(const DiffusionOperator& rhs) {
    if (rhs.dim_ != dim_) throw InvalidInput("operator dimension mismatch");
    if (diagonal_ && rhs.diagonal_) {
        for (std::size_t n = 0; n < dim_; ++n) values_[n] -= rhs.values_[n];
        return *this;
    }
    std::vector<double> dense(dim_ * dim_);
    for (std::size_t m = 0; m < dim_; ++m)
        for (std::size_t n = 0; n < dim_; ++n) dense[m * dim_ + n] = entry(m, n) - rhs.entry(m, n);
    diagonal_ = false;
    values_ = std::move(dense);
    return *this;
}

double hs_norm(const DiffusionOperator& op, const QSpectrum& spec) {
    if (op.dim() != spec.dim()) throw InvalidInput("operator and spectrum dimension mismatch");
    double sq = 0.0;
    for (std::size_t m = 0; m < op.dim(); ++m) {
        for (std::size_t n = 0; n < op.dim(); ++n) {
            const double e = op.entry(m, n);
            sq += e * e * spec[n];
        }
    }
    return std::sqrt(sq);
}

namespace {

// Terminal value and running sup of ||sum_k Phi dW_k||^p along one path.
struct ItoSumPath {
    double terminal = 0.0;
    double running_sup = 0.0;
};

ItoSumPath ito_sum_path(const DiffusionOperator& op, const QSpectrum& spec, double dt,
                        std::size_t steps, std::uint64_t seed, std::size_t path, double p,
                        std::vector<double>& dw, std::vector<double>& acc) {
    std::fill(acc.begin(), acc.end(), 0.0);
    ItoSumPath out;
    for (std::size_t k = 0; k < steps; ++k) {
        NormalStream stream({seed, path, k, StreamPurpose::wiener});
        sample_increment_into(spec, dt, stream, dw);
        op.apply_add(dw, acc);
        out.running_sup = std::max(out.running_sup, norm_pow(acc, p));
    }
    out.terminal = norm_pow(acc, p);
    return out;
}

}  // namespace

IsometryCheck ito_isometry_check(const DiffusionOperator& op, const QSpectrum& spec, double T,
                                 std::size_t paths, std::uint64_t seed, std::size_t steps) {
    if (!(T > 0.0)) throw InvalidInput("horizon T must be positive");
    if (paths == 0 || steps == 0) throw InvalidInput("need at least one path and one step");
    if (op.dim() != spec.dim()) throw InvalidInput("operator and spectrum dimension mismatch");

    const double dt = T / static_cast<double>(steps);
    std::vector<double> dw(spec.dim()), acc(spec.dim()), values(paths);
    for (std::size_t i = 0; i < paths; ++i) {
        values[i] = ito_sum_path(op, spec, dt, steps, seed, i, 2.0, dw, acc).terminal;
    }
    const Estimate e = mean_estimate(values);
    const double hs = hs_norm(op, spec);
    IsometryCheck out;
    out.mc = e.mean;
    out.std_error = e.std_error;
    out.analytic = T * hs * hs;
    out.zscore = ratio_or_zero(std::abs(out.mc - out.analytic), out.std_error);
    return out;
}

double bdg_constant(double p, std::optional<double> configured) {
    require_moment_order(p);
    if (configured) {
        if (!(*configured > 0.0) || !std::isfinite(*configured)) {
            throw InvalidInput("configured C_p must be a positive finite number");
        }
        return *configured;
    }
    if (p == 2.0) return 1.0;
    return std::pow(p * (p - 1.0) / 2.0, p / 2.0);
}

BdgCheck bdg_check(const DiffusionOperator& op, const QSpectrum& spec, double T, double p,
                   std::size_t paths, std::uint64_t seed, std::size_t steps,
                   std::optional<double> configured_constant) {
    if (!(T > 0.0)) throw InvalidInput("horizon T must be positive");
    if (paths == 0 || steps == 0) throw InvalidInput("need at least one path and one step");
    if (op.dim() != spec.dim()) throw InvalidInput("operator and spectrum dimension mismatch");

    BdgCheck out;
    out.p = p;
    out.constant = bdg_constant(p, configured_constant);

    const double dt = T / static_cast<double>(steps);
    std::vector<double> dw(spec.dim()), acc(spec.dim()), terminal(paths), sup(paths);
    for (std::size_t i = 0; i < paths; ++i) {
        const ItoSumPath r = ito_sum_path(op, spec, dt, steps, seed, i, p, dw, acc);
        terminal[i] = r.terminal;
        sup[i] = r.running_sup;
    }
    const Estimate et = mean_estimate(terminal);
    const Estimate es = mean_estimate(sup);
    const double hs = hs_norm(op, spec);
    out.terminal_moment = et.mean;
    out.terminal_std_error = et.std_error;
    out.running_sup_moment = es.mean;
    out.running_sup_std_error = es.std_error;
    out.quadratic_variation = std::pow(T * hs * hs, p / 2.0);
    out.bound = out.constant * out.quadratic_variation;
    out.ratio = ratio_or_zero(out.terminal_moment, out.quadratic_variation);
    out.margin = out.terminal_moment > 0.0 ? out.bound / out.terminal_moment
                                           : std::numeric_limits<double>::infinity();
    return out;
}

CovarianceCheck increment_covariance_check(const QSpectrum& spec, double dt, std::size_t samples,
                                           std::uint64_t seed) {
    if (samples < 2) throw InvalidInput("covariance check needs at least two samples");
    const std::size_t n = spec.dim();
    std::vector<double> draws(samples * n);
    for (std::size_t s = 0; s < samples; ++s) {
        NormalStream stream({seed, s, 0, StreamPurpose::wiener});
        sample_increment_into(spec, dt, stream, std::span<double>(draws.data() + s * n, n));
    }

    CovarianceCheck out;
    out.dim = n;
    out.empirical.assign(n * n, 0.0);
    out.expected.assign(n * n, 0.0);
    out.std_error.assign(n * n, 0.0);
    std::vector<double> products(samples);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t s = 0; s < samples; ++s) {
                products[s] = draws[s * n + i] * draws[s * n + j];
            }
            const Estimate e = mean_estimate(products);
            out.empirical[i * n + j] = e.mean;
            out.std_error[i * n + j] = e.std_error;
            out.expected[i * n + j] = i == j ? dt * spec[i] : 0.0;
            out.worst_sigma = std::max(
                out.worst_sigma,
                ratio_or_zero(std::abs(e.mean - out.expected[i * n + j]), e.std_error));
        }
    }
    return out;
}

QSpectrum parse_spectrum_family(const std::string& text, std::size_t dim) {
    static const std::regex pattern(R"(\s*(geometric|polynomial)\s*\(\s*([-+0-9.eE]+)\s*\)\s*)");
    std::smatch m;
    if (!std::regex_match(text, m, pattern)) {
        throw InvalidInput("unknown spectrum family '" + text +
                           "' (expected geometric(r) or polynomial(s))");
    }
    const double arg = std::stod(m[2].str());
    return m[1] == "geometric" ? QSpectrum::geometric(arg, dim) : QSpectrum::polynomial(arg, dim);
}

}  // namespace sapsim
