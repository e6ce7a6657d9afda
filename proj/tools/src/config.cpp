#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <regex>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "sapsim/coefficients.hpp"
#include "sapsim/evolution.hpp"
#include "sapsim/qwiener.hpp"
#include "sapsim_cli/experiment.hpp"

namespace sapsim::cli {

ConfigError::ConfigError(const std::string& file, int line, const std::string& message)
    : std::runtime_error(file + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " +
                         message),
      line_(line) {}

std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::simulate: return "simulate";
        case ExperimentKind::check_conditions: return "check-conditions";
        case ExperimentKind::sap: return "sap";
        case ExperimentKind::stability: return "stability";
        case ExperimentKind::picard: return "picard";
        case ExperimentKind::verify_noise: return "verify-noise";
    }
    return "unknown";
}

namespace {

using nlohmann::ordered_json;

// Plain scalars become numbers, booleans or null when they parse as such;
// quoted scalars stay strings.
ordered_json to_json(const YAML::Node& node) {
    switch (node.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined:
            return nullptr;
        case YAML::NodeType::Sequence: {
            ordered_json arr = ordered_json::array();
            for (const auto& item : node) arr.push_back(to_json(item));
            return arr;
        }
        case YAML::NodeType::Map: {
            ordered_json obj = ordered_json::object();
            for (const auto& kv : node) obj[kv.first.Scalar()] = to_json(kv.second);
            return obj;
        }
        case YAML::NodeType::Scalar:
            break;
    }
    const std::string& s = node.Scalar();
    if (node.Tag() == "!") return s;
    if (s == "true" || s == "True") return true;
    if (s == "false" || s == "False") return false;
    if (s == "null" || s == "~") return nullptr;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    std::int64_t i = 0;
    if (auto [p, ec] = std::from_chars(first, last, i); ec == std::errc() && p == last) return i;
    std::uint64_t u = 0;
    if (auto [p, ec] = std::from_chars(first, last, u); ec == std::errc() && p == last) return u;
    double d = 0.0;
    if (auto [p, ec] = std::from_chars(first, last, d); ec == std::errc() && p == last &&
                                                        std::isfinite(d)) {
        return d;
    }
    return s;
}

class Reader {
public:
    explicit Reader(std::string file) : file_(std::move(file)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& message) const {
        const int line = at.IsDefined() ? at.Mark().line + 1 : 0;
        throw ConfigError(file_, line, message);
    }

    YAML::Node require(const YAML::Node& map, const std::string& key, const std::string& where) const {
        const YAML::Node v = map[key];
        if (!v) fail(map, where + key + ": required key missing");
        return v;
    }

    double number(const YAML::Node& v, const std::string& what) const {
        if (!v.IsScalar()) fail(v, what + ": expected a number");
        const std::string& s = v.Scalar();
        double d = 0.0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
        if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(d)) {
            fail(v, what + ": '" + s + "' is not a finite number");
        }
        return d;
    }

    double number(const YAML::Node& map, const std::string& key, const std::string& where,
                  std::optional<double> fallback = std::nullopt) const {
        const YAML::Node v = map[key];
        if (!v) {
            if (fallback) return *fallback;
            fail(map, where + key + ": required key missing");
        }
        return number(v, where + key);
    }

    std::uint64_t integer(const YAML::Node& map, const std::string& key, const std::string& where,
                          std::optional<std::uint64_t> fallback = std::nullopt) const {
        const YAML::Node v = map[key];
        if (!v) {
            if (fallback) return *fallback;
            fail(map, where + key + ": required key missing");
        }
        if (!v.IsScalar()) fail(v, where + key + ": expected a non-negative integer");
        const std::string& s = v.Scalar();
        std::uint64_t u = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), u);
        if (ec != std::errc() || p != s.data() + s.size()) {
            fail(v, where + key + ": '" + s + "' is not a non-negative integer");
        }
        return u;
    }

    std::string text(const YAML::Node& map, const std::string& key, const std::string& where,
                     std::optional<std::string> fallback = std::nullopt) const {
        const YAML::Node v = map[key];
        if (!v) {
            if (fallback) return *fallback;
            fail(map, where + key + ": required key missing");
        }
        if (!v.IsScalar()) fail(v, where + key + ": expected a string");
        return v.Scalar();
    }

    bool flag(const YAML::Node& map, const std::string& key, bool fallback) const {
        const YAML::Node v = map[key];
        if (!v) return fallback;
        if (v.IsScalar()) {
            if (v.Scalar() == "true") return true;
            if (v.Scalar() == "false") return false;
        }
        fail(v, key + ": expected true or false");
    }

    std::vector<double> numbers(const YAML::Node& v, const std::string& what) const {
        if (!v.IsSequence()) fail(v, what + ": expected a list of numbers");
        std::vector<double> out;
        for (const auto& item : v) out.push_back(number(item, what));
        return out;
    }

    /// A scalar fills all N modes; a list must have exactly N entries.
    HilbertVec vector(const YAML::Node& v, std::size_t dim, const std::string& what) const {
        if (v.IsScalar()) return HilbertVec::filled(dim, number(v, what));
        std::vector<double> xs = numbers(v, what);
        if (xs.size() != dim) {
            fail(v, what + ": expected " + std::to_string(dim) + " entries, got " +
                        std::to_string(xs.size()));
        }
        return HilbertVec(std::move(xs));
    }

    template <class Fn>
    auto build(const YAML::Node& at, const std::string& what, Fn&& fn) const {
        try {
            return fn();
        } catch (const InvalidInput& e) {
            fail(at, what + ": " + e.what());
        }
    }

private:
    std::string file_;
};

ExperimentKind parse_kind(const Reader& r, const YAML::Node& root) {
    const YAML::Node v = r.require(root, "experiment", "");
    const std::string s = v.IsScalar() ? v.Scalar() : std::string();
    if (s == "simulate") return ExperimentKind::simulate;
    if (s == "check-conditions") return ExperimentKind::check_conditions;
    if (s == "sap") return ExperimentKind::sap;
    if (s == "stability") return ExperimentKind::stability;
    if (s == "picard") return ExperimentKind::picard;
    if (s == "verify-noise") return ExperimentKind::verify_noise;
    r.fail(v, "experiment: unknown kind '" + s +
                  "' (expected simulate, check-conditions, sap, stability, picard or verify-noise)");
}

SimConfig parse_simulation(const Reader& r, const YAML::Node& node) {
    if (!node.IsMap()) r.fail(node, "simulation: expected a mapping");
    const std::string w = "simulation.";
    SimConfig cfg;
    cfg.T = r.number(node, "T", w);
    cfg.dt = r.number(node, "dt", w);
    cfg.N = r.integer(node, "N", w);
    cfg.P = r.integer(node, "P", w);
    cfg.p = r.number(node, "p", w, 2.0);
    cfg.seed = r.integer(node, "seed", w);
    cfg.omega = r.number(node, "omega", w);
    cfg.record_every = r.integer(node, "record_every", w, 1);
    r.build(node, "simulation", [&] {
        cfg.validate();
        return 0;
    });
    return cfg;
}

QSpectrum parse_spectrum(const Reader& r, const YAML::Node& v, std::size_t dim) {
    return r.build(v, "spectrum", [&] {
        if (v.IsScalar()) return parse_spectrum_family(v.Scalar(), dim);
        std::vector<double> lambdas = r.numbers(v, "spectrum");
        if (lambdas.size() != dim) r.fail(v, "spectrum: expected N eigenvalues");
        return QSpectrum(std::move(lambdas));
    });
}

std::shared_ptr<const EvolutionFamily> parse_family(const Reader& r, const YAML::Node& node,
                                                    std::size_t dim, double omega) {
    const std::string w = "system.family.";
    const std::string kind = r.text(node, "kind", w, "diagonal_periodic");
    if (kind != "diagonal_periodic") r.fail(node, w + "kind: unknown family '" + kind + "'");
    const YAML::Node mus_node = r.require(node, "mus", w);
    std::vector<double> mus;
    if (mus_node.IsScalar()) {
        static const std::regex linear(R"(\s*linear\s*\(\s*([^,\s]+)\s*,\s*([^)\s]+)\s*\)\s*)");
        std::smatch m;
        const std::string text = mus_node.Scalar();
        if (!std::regex_match(text, m, linear)) {
            r.fail(mus_node, w + "mus: expected a list or linear(start, step)");
        }
        YAML::Node start(m[1].str()), step(m[2].str());
        mus = DiagonalPeriodicFamily::linear_rates(r.number(start, w + "mus start"),
                                                   r.number(step, w + "mus step"), dim);
    } else {
        mus = r.numbers(mus_node, w + "mus");
        if (mus.size() != dim) r.fail(mus_node, w + "mus: expected N rates");
    }
    const double rho = r.number(node, "rho", w, 0.0);
    const double period = r.number(node, "omega", w, omega);
    return r.build(node, "system.family", [&]() -> std::shared_ptr<const EvolutionFamily> {
        return std::make_shared<DiagonalPeriodicFamily>(std::move(mus), rho, period);
    });
}

PeriodicForcing parse_forcing(const Reader& r, const YAML::Node& node, std::size_t dim,
                              double omega, const std::string& w) {
    PeriodicForcing forcing{r.number(node, "b0", w, 0.0), r.number(node, "b1", w, 0.0),
                            r.number(node, "omega", w, omega), HilbertVec::basis(dim, 0)};
    if (node["direction"]) forcing.direction = r.vector(node["direction"], dim, w + "direction");
    return forcing;
}

std::shared_ptr<const DriftFn> parse_drift(const Reader& r, const YAML::Node& node, std::size_t dim,
                                           double omega) {
    const std::string w = "system.drift.";
    const std::string kind = r.text(node, "kind", w);
    if (kind == "zero") return zero_drift(dim);
    if (kind == "affine") {
        const double c = r.number(node, "c", w);
        PeriodicForcing forcing = parse_forcing(r, node, dim, omega, w);
        return r.build(node, "system.drift", [&]() -> std::shared_ptr<const DriftFn> {
            return std::make_shared<AffineDrift>(c, std::move(forcing));
        });
    }
    if (kind == "saturating") {
        const double kappa = r.number(node, "kappa", w);
        PeriodicForcing forcing = parse_forcing(r, node, dim, omega, w);
        return r.build(node, "system.drift", [&]() -> std::shared_ptr<const DriftFn> {
            return std::make_shared<SaturatingDrift>(kappa, std::move(forcing));
        });
    }
    r.fail(node["kind"], w + "kind: unknown drift '" + kind + "' (expected affine, saturating or zero)");
}

DiffusionOperator parse_operator(const Reader& r, const YAML::Node& node, std::size_t dim,
                                 const std::string& w) {
    const YAML::Node v = node["phi"];
    if (!v) return DiffusionOperator::identity(dim);
    if (v.IsScalar()) {
        if (v.Scalar() == "identity") return DiffusionOperator::identity(dim);
        if (v.Scalar() == "zero") return DiffusionOperator::zero(dim);
        return DiffusionOperator::diagonal(std::vector<double>(dim, r.number(v, w + "phi")));
    }
    std::vector<double> diag = r.numbers(v, w + "phi");
    if (diag.size() != dim) r.fail(v, w + "phi: expected N diagonal entries");
    return DiffusionOperator::diagonal(std::move(diag));
}

std::shared_ptr<const DiffusionFn> parse_diffusion(const Reader& r, const YAML::Node& node,
                                                   std::size_t dim, const QSpectrum& spec) {
    const std::string w = "system.diffusion.";
    const std::string kind = r.text(node, "kind", w);
    if (kind == "zero") return zero_diffusion(dim);
    if (kind == "constant") {
        DiffusionOperator phi = parse_operator(r, node, dim, w);
        return r.build(node, "system.diffusion", [&]() -> std::shared_ptr<const DiffusionFn> {
            return std::make_shared<ConstantDiffusion>(std::move(phi));
        });
    }
    if (kind == "affine") {
        DiffusionOperator phi = parse_operator(r, node, dim, w);
        const double sigma = r.number(node, "sigma", w);
        return r.build(node, "system.diffusion", [&]() -> std::shared_ptr<const DiffusionFn> {
            return std::make_shared<AffineDiffusion>(std::move(phi), sigma, spec);
        });
    }
    r.fail(node["kind"], w + "kind: unknown diffusion '" + kind + "' (expected constant, affine or zero)");
}

Model parse_system(const Reader& r, const YAML::Node& node, const SimConfig& sim) {
    if (!node.IsMap()) r.fail(node, "system: expected a mapping");
    const std::size_t dim = sim.N;
    QSpectrum spectrum = parse_spectrum(r, r.require(node, "spectrum", "system."), dim);
    auto family = parse_family(r, r.require(node, "family", "system."), dim, sim.omega);
    auto drift = parse_drift(r, r.require(node, "drift", "system."), dim, sim.omega);
    auto diffusion = parse_diffusion(r, r.require(node, "diffusion", "system."), dim, spectrum);
    HilbertVec c0 = node["c0"] ? r.vector(node["c0"], dim, "system.c0") : HilbertVec(dim);
    Model model{std::move(family), std::move(drift), std::move(diffusion), std::move(spectrum),
                std::move(c0)};
    r.build(node, "system", [&] {
        model.validate(dim);
        return 0;
    });
    return model;
}

ConditionOverrides parse_conditions(const Reader& r, const YAML::Node& node) {
    if (!node.IsMap()) r.fail(node, "conditions: expected a mapping");
    ConditionOverrides c;
    auto opt = [&](const char* key) -> std::optional<double> {
        if (!node[key]) return std::nullopt;
        return r.number(node[key], std::string("conditions.") + key);
    };
    c.p = opt("p");
    c.M = opt("M");
    c.a = opt("a");
    c.Lf = opt("Lf");
    c.Lg = opt("Lg");
    c.Cp = opt("Cp");
    return c;
}

NoiseCheckOptions parse_noise(const Reader& r, const YAML::Node& node) {
    if (!node.IsMap()) r.fail(node, "noise: expected a mapping");
    const std::string w = "noise.";
    NoiseCheckOptions o;
    const std::size_t dim = r.integer(node, "N", w);
    if (dim == 0) r.fail(node, w + "N: must be at least 1");
    o.spectrum = parse_spectrum(r, r.require(node, "spectrum", w), dim);
    o.dt = r.number(node, "dt", w);
    o.samples = r.integer(node, "samples", w, 50000);
    o.paths = r.integer(node, "paths", w, 100000);
    o.T = r.number(node, "T", w, 1.0);
    o.steps = r.integer(node, "steps", w, 16);
    o.bdg_p = r.number(node, "bdg_p", w, 4.0);
    o.seed = r.integer(node, "seed", w);
    if (!(o.dt > 0.0) || !(o.T > 0.0)) r.fail(node, w + "dt and T must be positive");
    if (o.samples < 2 || o.paths < 2 || o.steps == 0) {
        r.fail(node, w + "samples and paths must be at least 2 and steps at least 1");
    }
    if (!(o.bdg_p >= 2.0)) r.fail(node, w + "bdg_p must be >= 2");
    return o;
}

bool conditions_complete(const ConditionOverrides& c) { return c.p && c.M && c.a && c.Lf && c.Lg; }

}  // namespace

namespace {

ExperimentConfig parse_root(const Reader& r, YAML::Node root);

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& file) {
    const std::string name = file.string();
    YAML::Node root;
    try {
        root = YAML::LoadFile(name);
    } catch (const YAML::BadFile&) {
        throw ConfigError(name, 0, "cannot read config file");
    } catch (const YAML::Exception& e) {
        throw ConfigError(name, e.mark.line + 1, e.msg);
    }
    const Reader r(name);
    try {
        return parse_root(r, root);
    } catch (const YAML::Exception& e) {
        throw ConfigError(name, e.mark.line + 1, e.msg);
    }
}

namespace {

ExperimentConfig parse_root(const Reader& r, YAML::Node root) {
    if (!root.IsMap()) r.fail(root, "expected a mapping at the top level");
    if (root["summary_version"]) root.reset(r.require(root, "config", ""));
    if (!root.IsMap()) r.fail(root, "config: expected a mapping");

    ExperimentConfig cfg;
    cfg.kind = parse_kind(r, root);
    cfg.name = r.text(root, "name", "", std::string(to_string(cfg.kind)));
    cfg.output_dir = r.text(root, "output", "", std::string("."));
    cfg.echo = to_json(root);

    if (root["conditions"]) cfg.conditions = parse_conditions(r, root["conditions"]);

    if (cfg.kind == ExperimentKind::verify_noise) {
        cfg.noise = parse_noise(r, r.require(root, "noise", ""));
        return cfg;
    }

    const bool needs_system = cfg.kind != ExperimentKind::check_conditions ||
                              !conditions_complete(cfg.conditions);
    if (needs_system || root["simulation"]) {
        cfg.sim = parse_simulation(r, r.require(root, "simulation", ""));
        cfg.write_ensemble = r.flag(root["simulation"], "write_ensemble", false);
    }
    if (needs_system || root["system"]) {
        cfg.model = parse_system(r, r.require(root, "system", ""), *cfg.sim);
    }

    if (cfg.kind == ExperimentKind::picard && root["picard"]) {
        cfg.picard_iters = r.integer(root["picard"], "iters", "picard.", 12);
        if (cfg.picard_iters < 3) r.fail(root["picard"], "picard.iters: must be at least 3");
    }
    if (cfg.kind == ExperimentKind::stability) {
        const YAML::Node st = r.require(root, "stability", "");
        cfg.stability_c0_b = r.vector(r.require(st, "c0_b", "stability."), cfg.sim->N, "stability.c0_b");
    }
    return cfg;
}

}  // namespace
}  // namespace sapsim::cli
