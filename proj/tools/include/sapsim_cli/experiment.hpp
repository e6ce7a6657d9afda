#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sapsim/diagnostics.hpp"
#include "sapsim/mild_solver.hpp"

namespace sapsim::cli {

enum ExitCode : int {
    kComplete = 0,
    kUsageError = 1,
    kCheckFailed = 2,
    kNotCertified = 3,
};

enum class ExperimentKind { simulate, check_conditions, sap, stability, picard, verify_noise };

std::string_view to_string(ExperimentKind kind);

/// Configuration problem, carrying the 1-based line it was found on (0 if
/// the file could not be read at all).
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& file, int line, const std::string& message);
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Explicit condition inputs; any field left unset is derived from the system.
struct ConditionOverrides {
    std::optional<double> p, M, a, Lf, Lg, Cp;
};

struct NoiseCheckOptions {
    QSpectrum spectrum{std::vector<double>{1.0}};
    double dt = 0.5;
    std::size_t samples = 50000;
    std::size_t paths = 100000;
    double T = 1.0;
    std::size_t steps = 16;
    double bdg_p = 4.0;
    std::uint64_t seed = 0;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::simulate;
    std::string name;
    std::filesystem::path output_dir;

    std::optional<SimConfig> sim;
    std::optional<Model> model;
    bool write_ensemble = false;

    ConditionOverrides conditions;
    std::size_t picard_iters = 12;
    std::optional<HilbertVec> stability_c0_b;
    NoiseCheckOptions noise;

    /// The configuration as read, echoed into the summary so a run can be
    /// repeated from its own output.
    nlohmann::ordered_json echo;
};

/// Reads a YAML (or JSON) experiment file. A run summary is accepted too: its
/// `config` member is used. Throws ConfigError.
ExperimentConfig load_config(const std::filesystem::path& file);

struct Report {
    std::string name;
    ExperimentKind kind = ExperimentKind::simulate;
    int exit_code = kComplete;
    std::string status;
    nlohmann::ordered_json config;
    nlohmann::ordered_json constants = nlohmann::ordered_json::object();
    nlohmann::ordered_json results = nlohmann::ordered_json::object();
    /// File name and contents, in write order.
    std::vector<std::pair<std::string, std::string>> files;
    std::vector<std::string> messages;
};

struct RunOptions {
    std::optional<std::filesystem::path> out_dir;
    unsigned threads = 1;
    bool quiet = false;
};

/// Runs the experiment without touching the filesystem.
Report execute(const ExperimentConfig& cfg, unsigned threads);

/// Writes every report file plus `<name>.summary.json` into `dir`.
void emit_report(const Report& report, const std::filesystem::path& dir);

/// Loads, executes and emits; returns the process exit code.
int run(const std::filesystem::path& config_path, const RunOptions& opts, std::ostream& out,
        std::ostream& err);

}  // namespace sapsim::cli
