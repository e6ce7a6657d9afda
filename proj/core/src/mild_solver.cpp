#include "sapsim/mild_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "sapsim/parallel.hpp"

namespace sapsim {
namespace {

constexpr double kConvergedDistance = 1e-14;

// Scratch buffers for one path; reused across steps.
struct StepWorkspace {
    explicit StepWorkspace(std::size_t dim) : drift(dim), next(dim), dw(dim) {}
    std::vector<double> drift;
    std::vector<double> next;
    std::vector<double> dw;
};

// next <- U(t1, t0)[base + f(t0, at) dt + g(t0, at) dw]. `base` and `at`
// coincide for the Euler step and differ when applying Gamma.
void advance(const Model& model, double t0, double t1, std::span<const double> base,
             std::span<const double> at, StepWorkspace& ws) {
    const double dt = t1 - t0;
    model.drift->eval_into(t0, at, ws.drift);
    for (std::size_t n = 0; n < base.size(); ++n) ws.next[n] = base[n] + ws.drift[n] * dt;
    model.diffusion->apply_noise(t0, at, ws.dw, ws.next);
    model.family->apply_in_place(t1, t0, ws.next);
}

bool finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void poison(PathEnsemble& ens, std::size_t path, std::size_t from) {
    for (std::size_t k = from; k < ens.grid().points; ++k) {
        auto s = ens.state(path, k);
        std::fill(s.begin(), s.end(), std::numeric_limits<double>::quiet_NaN());
    }
    ens.mark_invalid(path);
}

TimeGrid full_grid(const SimConfig& cfg) { return TimeGrid{cfg.dt, cfg.steps() + 1}; }

}  // namespace

void SimConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("time step dt must be positive");
    if (!(omega > 0.0) || !std::isfinite(omega)) throw InvalidInput("period omega must be positive");
    if (!std::isfinite(T) || !(T >= omega)) throw InvalidInput("horizon T must be at least omega");
    const double ratio = T / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
        throw InvalidInput("horizon T must be an integer multiple of dt");
    }
    if (N == 0) throw InvalidInput("truncation dimension N must be at least 1");
    if (P == 0) throw InvalidInput("path count P must be at least 1");
    require_moment_order(p);
    if (record_every == 0 || steps() % record_every != 0) {
        throw InvalidInput("record_every must divide the number of steps");
    }
    if (steps() > std::numeric_limits<std::uint32_t>::max() ||
        P > std::numeric_limits<std::uint32_t>::max()) {
        throw InvalidInput("step and path counts must fit in 32 bits");
    }
}

std::size_t SimConfig::steps() const { return static_cast<std::size_t>(std::llround(T / dt)); }

TimeGrid SimConfig::recorded_grid() const {
    return TimeGrid{dt * static_cast<double>(record_every), steps() / record_every + 1};
}

void Model::validate(std::size_t dim) const {
    if (!family || !drift || !diffusion) throw InvalidInput("model is missing a component");
    if (family->dim() != dim || drift->dim() != dim || diffusion->dim() != dim ||
        spectrum.dim() != dim || c0.dim() != dim) {
        throw InvalidInput("model components disagree with truncation dimension N");
    }
    if (!c0.all_finite()) throw InvalidInput("initial condition c0 must be finite");
}

NoiseField::NoiseField(QSpectrum spectrum, double dt, std::uint64_t seed)
    : spectrum_(std::move(spectrum)), dt_(dt), seed_(seed) {
    if (!(dt > 0.0)) throw InvalidInput("noise field dt must be positive");
}

void NoiseField::increment_into(std::size_t path, std::size_t step, std::span<double> out) const {
    NormalStream stream({seed_, path, step, StreamPurpose::wiener});
    sample_increment_into(spectrum_, dt_, stream, out);
}

WienerIncrement NoiseField::increment(std::size_t path, std::size_t step) const {
    WienerIncrement inc{HilbertVec(spectrum_.dim()), dt_};
    increment_into(path, step, inc.dvalue.coeffs());
    return inc;
}

HilbertVec step(const EvolutionFamily& fam, const DriftFn& f, const DiffusionFn& g, double t_k,
                double dt, const HilbertVec& x_k, const WienerIncrement& dw_k) {
    if (!(dt > 0.0)) throw InvalidInput("step dt must be positive");
    if (std::abs(dw_k.dt - dt) > 1e-12 * dt) throw InvalidInput("increment length differs from dt");
    const std::size_t dim = x_k.dim();
    if (fam.dim() != dim || f.dim() != dim || g.dim() != dim || dw_k.dvalue.dim() != dim) {
        throw InvalidInput("step dimension mismatch");
    }
    HilbertVec drift(dim);
    f.eval_into(t_k, x_k.coeffs(), drift.coeffs());
    HilbertVec next = x_k + drift * dt;
    g.apply_noise(t_k, x_k.coeffs(), dw_k.dvalue.coeffs(), next.coeffs());
    fam.apply_in_place(t_k + dt, t_k, next.coeffs());
    return next;
}

MildSolution simulate(const SimConfig& cfg, const Model& model, ExecOptions exec) {
    cfg.validate();
    model.validate(cfg.N);
    const NoiseField noise(model.spectrum, cfg.dt, cfg.seed);
    const TimeGrid grid = full_grid(cfg);
    const std::size_t steps = cfg.steps();

    MildSolution sol{PathEnsemble(cfg.recorded_grid(), cfg.P, cfg.N, cfg.seed),
                     cfg,
                     model.family->describe(),
                     model.drift->describe(),
                     model.diffusion->describe(),
                     {}};
    std::vector<std::optional<BlowUp>> failures(cfg.P);

    parallel_for(cfg.P, exec.threads, [&](std::size_t i) {
        StepWorkspace ws(cfg.N);
        std::vector<double> x(model.c0.coeffs().begin(), model.c0.coeffs().end());
        std::ranges::copy(x, sol.paths.state(i, 0).begin());
        for (std::size_t k = 0; k < steps; ++k) {
            noise.increment_into(i, k, ws.dw);
            advance(model, grid.at(k), grid.at(k + 1), x, x, ws);
            x.swap(ws.next);
            if (!finite(x)) {
                failures[i] = BlowUp{i, k + 1, grid.at(k + 1)};
                poison(sol.paths, i, k / cfg.record_every + 1);
                return;
            }
            if ((k + 1) % cfg.record_every == 0) {
                std::ranges::copy(x, sol.paths.state(i, (k + 1) / cfg.record_every).begin());
            }
        }
    });

    for (const auto& f : failures) {
        if (f) sol.blowups.push_back(*f);
    }
    return sol;
}

PathEnsemble gamma_apply(const SimConfig& cfg, const Model& model, const PathEnsemble& phi,
                         const NoiseField& noise, ExecOptions exec) {
    cfg.validate();
    model.validate(cfg.N);
    const TimeGrid grid = full_grid(cfg);
    if (!(phi.grid() == grid) || phi.paths() != cfg.P || phi.dim() != cfg.N) {
        throw InvalidInput("Gamma needs phi on the full simulation grid");
    }
    if (std::abs(noise.dt() - cfg.dt) > 1e-12 * cfg.dt || noise.spectrum().dim() != cfg.N) {
        throw InvalidInput("noise field does not match the simulation grid");
    }

    PathEnsemble out(grid, cfg.P, cfg.N, noise.seed());
    parallel_for(cfg.P, exec.threads, [&](std::size_t i) {
        if (!phi.valid(i)) {
            poison(out, i, 0);
            return;
        }
        StepWorkspace ws(cfg.N);
        std::ranges::copy(model.c0.coeffs(), out.state(i, 0).begin());
        for (std::size_t k = 0; k + 1 < grid.points; ++k) {
            noise.increment_into(i, k, ws.dw);
            advance(model, grid.at(k), grid.at(k + 1), out.state(i, k), phi.state(i, k), ws);
            if (!finite(ws.next)) {
                poison(out, i, k + 1);
                return;
            }
            std::ranges::copy(ws.next, out.state(i, k + 1).begin());
        }
    });
    return out;
}

PicardResult picard_iterate(const SimConfig& cfg, const Model& model, std::size_t iters,
                            ExecOptions exec) {
    cfg.validate();
    model.validate(cfg.N);
    if (iters < 3) throw InvalidInput("Picard iteration needs at least three applications");
    const NoiseField noise(model.spectrum, cfg.dt, cfg.seed);
    const TimeGrid grid = full_grid(cfg);

    PathEnsemble phi(grid, cfg.P, cfg.N, cfg.seed);
    for (std::size_t i = 0; i < cfg.P; ++i) {
        for (std::size_t k = 0; k < grid.points; ++k) {
            std::ranges::copy(model.c0.coeffs(), phi.state(i, k).begin());
        }
    }

    PicardResult result;
    for (std::size_t it = 0; it < iters; ++it) {
        PathEnsemble next = gamma_apply(cfg, model, phi, noise, exec);
        const MomentSeries diff = difference_moment_series(next, phi, cfg.p);
        const double power = *std::max_element(diff.estimate.begin(), diff.estimate.end());
        const double root = std::pow(power, 1.0 / cfg.p);
        if (!result.distance.empty()) {
            const double prev = result.distance.back();
            const double prev_power = result.power_distance.back();
            result.ratio.push_back(prev > 0.0 ? root / prev : 0.0);
            result.power_ratio.push_back(prev_power > 0.0 ? power / prev_power : 0.0);
        }
        result.distance.push_back(root);
        result.power_distance.push_back(power);
        if (root < kConvergedDistance) {
            result.converged = true;
            break;
        }
        phi = std::move(next);
    }
    return result;
}

}  // namespace sapsim
