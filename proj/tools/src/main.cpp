#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sapsim_cli/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"sapsim: mild-solution simulator and periodicity/stability checks"};

    std::string config;
    std::string out_dir;
    unsigned threads = 1;
    bool quiet = false;
    app.add_option("--config", config, "Experiment file (YAML, or a previous run's summary JSON)")
        ->required();
    app.add_option("--out", out_dir, "Output directory (overrides the config's `output`)");
    app.add_option("--threads", threads, "Worker threads; changes speed, never results")
        ->check(CLI::Range(1u, 1024u));
    app.add_flag("--quiet", quiet, "Suppress progress output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return sapsim::cli::kUsageError;
    }

    sapsim::cli::RunOptions opts;
    if (!out_dir.empty()) opts.out_dir = out_dir;
    opts.threads = threads;
    opts.quiet = quiet;
    return sapsim::cli::run(config, opts, std::cout, std::cerr);
}
