#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sapsim/ensemble_io.hpp"
#include "sapsim/qwiener.hpp"
#include "sapsim_cli/experiment.hpp"

#ifndef SAPSIM_VERSION
#define SAPSIM_VERSION "unknown"
#endif

namespace sapsim::cli {
namespace {

using nlohmann::ordered_json;

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// NaN and infinities have no JSON spelling; they are written as null.
ordered_json number_or_null(double v) {
    return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

std::string series_csv(const MomentSeries& series) {
    std::ostringstream os;
    write_csv(os, series);
    return os.str();
}

ConditionInputs resolve_conditions(const ExperimentConfig& cfg) {
    const ConditionOverrides& o = cfg.conditions;
    ConditionInputs in;
    if (cfg.model) {
        in = condition_inputs(*cfg.model, o.p.value_or(cfg.sim->p), o.Cp);
    } else {
        if (!o.p || !o.M || !o.a || !o.Lf || !o.Lg) {
            throw InvalidInput("conditions need p, M, a, Lf and Lg when no system is given");
        }
        in.p = *o.p;
    }
    if (o.M) in.M = *o.M;
    if (o.a) in.a = *o.a;
    if (o.Lf) in.Lf = *o.Lf;
    if (o.Lg) in.Lg = *o.Lg;
    in.Cp = bdg_constant(in.p, o.Cp);
    in.validate();
    return in;
}

struct Certificate {
    ConditionInputs inputs;
    double contraction = 0.0;
    double margin = 0.0;
    bool contraction_certified() const { return contraction < 1.0; }
    bool stability_certified() const { return margin > 0.0; }
};

Certificate certify(const ExperimentConfig& cfg, Report& rep) {
    Certificate c{resolve_conditions(cfg)};
    c.contraction = contraction_constant(c.inputs);
    c.margin = stability_margin(c.inputs);
    const char* label = c.inputs.p == 2.0 ? "xi" : "theta";
    rep.constants = ordered_json{
        {"p", c.inputs.p},
        {"M", c.inputs.M},
        {"a", c.inputs.a},
        {"Lf", c.inputs.Lf},
        {"Lg", c.inputs.Lg},
        {"Cp", c.inputs.Cp},
        {"contraction", {{"name", label}, {"value", c.contraction},
                         {"certified", c.contraction_certified()}}},
        {"stability_margin", {{"value", c.margin}, {"certified", c.stability_certified()}}},
    };
    rep.messages.push_back(std::string(label) + " = " + short_double(c.contraction) +
                           (c.contraction_certified() ? " (certified)" : " (not certified)"));
    rep.messages.push_back("stability margin = " + short_double(c.margin) +
                           (c.stability_certified() ? " (certified)" : " (not certified)"));
    return c;
}

void run_check_conditions(const ExperimentConfig& cfg, Report& rep) {
    const Certificate c = certify(cfg, rep);
    rep.exit_code = c.contraction_certified() ? kComplete : kNotCertified;
    rep.status = c.contraction_certified() ? "certified" : "not_certified";
}

void run_simulate(const ExperimentConfig& cfg, ExecOptions exec, Report& rep) {
    const SimConfig& sim = *cfg.sim;
    const MildSolution sol = simulate(sim, *cfg.model, exec);
    MomentSeries moments;
    if (sol.paths.valid_count() > 0) {
        moments = moment_series(sol.paths, sim.p);
        rep.files.emplace_back("moments.csv", series_csv(moments));
    }
    if (cfg.write_ensemble) {
        std::ostringstream bin(std::ios::binary);
        write_ensemble(bin, sol.paths);
        rep.files.emplace_back("ensemble.bin", bin.str());
    }
    ordered_json blowups = ordered_json::array();
    for (const BlowUp& b : sol.blowups) {
        blowups.push_back({{"path", b.path}, {"step", b.step}, {"time", b.time}});
    }
    rep.results = {
        {"family", sol.family},
        {"drift", sol.drift},
        {"diffusion", sol.diffusion},
        {"steps", sim.steps()},
        {"recorded_points", sol.paths.grid().points},
        {"valid_paths", sol.paths.valid_count()},
        {"invalid_paths", sol.paths.invalid_count()},
        {"blowups", blowups},
    };
    if (moments.size() > 0) {
        rep.results["terminal_moment"] = {{"t", moments.t.back()},
                                          {"estimate", number_or_null(moments.estimate.back())},
                                          {"stderr", number_or_null(moments.std_error.back())}};
        rep.messages.push_back("E||X(T)||^p = " + short_double(moments.estimate.back()) + " +- " +
                               short_double(moments.std_error.back()));
    } else {
        rep.results["terminal_moment"] = nullptr;
    }
    if (!sol.blowups.empty()) {
        rep.messages.push_back(std::to_string(sol.blowups.size()) + " path(s) blew up");
        rep.exit_code = kCheckFailed;
        rep.status = "blow_up";
    } else {
        rep.status = "complete";
    }
}

void run_sap(const ExperimentConfig& cfg, ExecOptions exec, Report& rep) {
    const Certificate c = certify(cfg, rep);
    const SimConfig& sim = *cfg.sim;
    const MildSolution sol = simulate(sim, *cfg.model, exec);
    const SapDiagnostic diag = sap_diagnostic(sol.paths, sim.omega, sim.p);
    rep.files.emplace_back("sap_defect.csv", series_csv(diag.defect));
    rep.results = {
        {"initial_defect", diag.initial},
        {"tail_defect", diag.tail},
        {"tail_stderr", diag.tail_std_error},
        {"tail_time", diag.defect.t.back()},
        {"fitted_rate", number_or_null(diag.fitted_rate)},
        {"passed", diag.passed},
        {"invalid_paths", sol.paths.invalid_count()},
    };
    rep.messages.push_back("defect d(0) = " + short_double(diag.initial) + ", tail = " +
                           short_double(diag.tail) + (diag.passed ? " (pass)" : " (fail)"));
    if (!c.contraction_certified()) {
        rep.exit_code = kNotCertified;
        rep.status = "not_applicable";
    } else {
        rep.exit_code = diag.passed ? kComplete : kCheckFailed;
        rep.status = diag.passed ? "pass" : "fail";
    }
}

void run_stability(const ExperimentConfig& cfg, ExecOptions exec, Report& rep) {
    const Certificate c = certify(cfg, rep);
    const SimConfig& sim = *cfg.sim;
    const StabilityResult res =
        stability_experiment(sim, *cfg.model, cfg.model->c0, *cfg.stability_c0_b, c.inputs, exec);
    rep.files.emplace_back("diff.csv", series_csv(res.diff));
    std::string env = "t,envelope\n";
    for (std::size_t k = 0; k < res.envelope.size(); ++k) {
        env += fmt_double(res.diff.t[k]) + "," + fmt_double(res.envelope[k]) + "\n";
    }
    rep.files.emplace_back("envelope.csv", std::move(env));
    rep.results = {
        {"margin", res.margin},
        {"fitted_rate", number_or_null(res.fitted_rate)},
        {"verdict", to_string(res.verdict)},
        {"first_violation_time",
         res.first_violation ? ordered_json(res.diff.t[*res.first_violation]) : ordered_json(nullptr)},
        {"excluded_paths", res.diff.excluded_paths},
    };
    rep.messages.push_back("fitted rate = " + short_double(res.fitted_rate) + ", margin = " +
                           short_double(res.margin) + ", verdict " + std::string(to_string(res.verdict)));
    rep.status = std::string(to_string(res.verdict));
    switch (res.verdict) {
        case Verdict::pass: rep.exit_code = kComplete; break;
        case Verdict::fail: rep.exit_code = kCheckFailed; break;
        case Verdict::not_applicable: rep.exit_code = kNotCertified; break;
    }
}

std::string picard_csv(const std::vector<double>& distance, const std::vector<double>& ratio) {
    std::string out = "iter,distance,ratio\n";
    for (std::size_t k = 0; k < distance.size(); ++k) {
        out += std::to_string(k) + "," + fmt_double(distance[k]) + ",";
        if (k > 0) out += fmt_double(ratio[k - 1]);
        out += "\n";
    }
    return out;
}

void run_picard(const ExperimentConfig& cfg, ExecOptions exec, Report& rep) {
    const Certificate c = certify(cfg, rep);
    const PicardResult res = picard_iterate(*cfg.sim, *cfg.model, cfg.picard_iters, exec);
    rep.files.emplace_back("picard_ratios.csv", picard_csv(res.distance, res.ratio));
    rep.files.emplace_back("picard_ratios_power.csv", picard_csv(res.power_distance, res.power_ratio));

    // Ratios are judged at the last iterate; a run that converged before
    // producing a ratio passes trivially.
    const double p = c.inputs.p;
    const double root_bound = std::pow(c.contraction, 1.0 / p) + 0.1;
    const double power_bound = c.contraction + 0.1;
    const double last_root = res.ratio.empty() ? 0.0 : res.ratio.back();
    const double last_power = res.power_ratio.empty() ? 0.0 : res.power_ratio.back();
    const bool passed = last_root <= root_bound && last_power <= power_bound;
    rep.results = {
        {"iterations", res.distance.size()},
        {"converged", res.converged},
        {"distance", res.distance},
        {"ratio", res.ratio},
        {"power_distance", res.power_distance},
        {"power_ratio", res.power_ratio},
        {"final_ratio", last_root},
        {"final_power_ratio", last_power},
        {"ratio_bound", root_bound},
        {"power_ratio_bound", power_bound},
        {"passed", passed},
    };
    rep.messages.push_back("final ratio = " + short_double(last_root) + " (bound " +
                           short_double(root_bound) + "), p-th power " + short_double(last_power) +
                           " (bound " + short_double(power_bound) + ")");
    if (!c.contraction_certified()) {
        rep.exit_code = kNotCertified;
        rep.status = "not_applicable";
    } else {
        rep.exit_code = passed ? kComplete : kCheckFailed;
        rep.status = passed ? "pass" : "fail";
    }
}

void run_verify_noise(const ExperimentConfig& cfg, Report& rep) {
    const NoiseCheckOptions& o = cfg.noise;
    const std::size_t dim = o.spectrum.dim();
    const CovarianceCheck cov = increment_covariance_check(o.spectrum, o.dt, o.samples, o.seed);
    const DiffusionOperator id = DiffusionOperator::identity(dim);
    const IsometryCheck ito = ito_isometry_check(id, o.spectrum, o.T, o.paths, o.seed, o.steps);
    const BdgCheck bdg = bdg_check(id, o.spectrum, o.T, o.bdg_p, o.paths, o.seed, o.steps,
                                   cfg.conditions.Cp);

    std::string csv = "row,col,empirical,expected,stderr\n";
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            const std::size_t idx = i * dim + j;
            csv += std::to_string(i) + "," + std::to_string(j) + "," + fmt_double(cov.empirical[idx]) +
                   "," + fmt_double(cov.expected[idx]) + "," + fmt_double(cov.std_error[idx]) + "\n";
        }
    }
    rep.files.emplace_back("noise_covariance.csv", std::move(csv));

    const double rel_err = std::abs(ito.mc - ito.analytic) / ito.analytic;
    const bool cov_ok = cov.worst_sigma <= 5.0;
    const bool ito_ok = std::abs(ito.zscore) < 3.0 && rel_err <= 0.02;
    const bool bdg_ok = bdg.terminal_moment <= bdg.bound;
    rep.results = {
        {"covariance", {{"worst_sigma", cov.worst_sigma}, {"passed", cov_ok}}},
        {"isometry", {{"mc", ito.mc}, {"stderr", ito.std_error}, {"analytic", ito.analytic},
                      {"zscore", ito.zscore}, {"relative_error", rel_err}, {"passed", ito_ok}}},
        {"bdg", {{"p", bdg.p}, {"terminal_moment", bdg.terminal_moment},
                 {"running_sup_moment", bdg.running_sup_moment},
                 {"quadratic_variation", bdg.quadratic_variation}, {"constant", bdg.constant},
                 {"bound", bdg.bound}, {"ratio", bdg.ratio}, {"margin", number_or_null(bdg.margin)},
                 {"passed", bdg_ok}}},
    };
    rep.messages.push_back("covariance worst deviation = " + short_double(cov.worst_sigma) + " sigma");
    rep.messages.push_back("isometry z = " + short_double(ito.zscore) + ", relative error " +
                           short_double(rel_err));
    rep.messages.push_back("moment bound margin = " + short_double(bdg.margin));
    const bool passed = cov_ok && ito_ok && bdg_ok;
    rep.exit_code = passed ? kComplete : kCheckFailed;
    rep.status = passed ? "pass" : "fail";
}

void write_file(const std::filesystem::path& file, const std::string& contents) {
    std::ofstream os(file, std::ios::binary);
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!os) throw std::runtime_error("cannot write " + file.string());
}

}  // namespace

Report execute(const ExperimentConfig& cfg, unsigned threads) {
    Report rep;
    rep.name = cfg.name;
    rep.kind = cfg.kind;
    rep.config = cfg.echo;
    const ExecOptions exec{threads};
    switch (cfg.kind) {
        case ExperimentKind::check_conditions: run_check_conditions(cfg, rep); break;
        case ExperimentKind::simulate: run_simulate(cfg, exec, rep); break;
        case ExperimentKind::sap: run_sap(cfg, exec, rep); break;
        case ExperimentKind::stability: run_stability(cfg, exec, rep); break;
        case ExperimentKind::picard: run_picard(cfg, exec, rep); break;
        case ExperimentKind::verify_noise: run_verify_noise(cfg, rep); break;
    }
    return rep;
}

void emit_report(const Report& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());

    ordered_json files = ordered_json::array();
    for (const auto& [name, contents] : report.files) {
        write_file(dir / name, contents);
        files.push_back(name);
    }
    const ordered_json summary = {
        {"summary_version", 1},
        {"tool", {{"name", "sapsim"}, {"version", SAPSIM_VERSION}}},
        {"experiment", to_string(report.kind)},
        {"name", report.name},
        {"status", report.status},
        {"exit_code", report.exit_code},
        {"constants", report.constants},
        {"results", report.results},
        {"files", files},
        {"config", report.config},
    };
    write_file(dir / (report.name + ".summary.json"), summary.dump(2) + "\n");
}

int run(const std::filesystem::path& config_path, const RunOptions& opts, std::ostream& out,
        std::ostream& err) {
    ExperimentConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    }

    Report rep;
    try {
        rep = execute(cfg, opts.threads);
    } catch (const InvalidInput& e) {
        err << "error: " << config_path.string() << ": " << e.what() << "\n";
        return kUsageError;
    }

    const std::filesystem::path dir = opts.out_dir.value_or(cfg.output_dir);
    try {
        emit_report(rep, dir);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    }

    if (!opts.quiet) {
        out << rep.name << " [" << to_string(rep.kind) << "]: " << rep.status << "\n";
        for (const std::string& m : rep.messages) out << "  " << m << "\n";
        out << "  wrote " << (dir / (rep.name + ".summary.json")).string() << "\n";
    }
    return rep.exit_code;
}

}  // namespace sapsim::cli
