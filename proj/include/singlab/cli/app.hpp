#pragma once

// The singlab command line: run, plot, validate and list-experiments.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "singlab/cli/manifest.hpp"

namespace singlab::cli {

enum ExitCode : int { exit_ok = 0, exit_failed = 1, exit_usage = 2, exit_numeric = 3 };

struct RunOptions {
    std::string config_path;
    std::string out_dir;  // empty: SINGLAB_OUT, then singlab-out/<config stem>
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;
};

struct RunOutcome {
    RunManifest manifest;
    std::string out_dir;
    int exit_code = exit_ok;
};

std::string resolve_out_dir(const std::string& flag, const std::string& config_path);

// Runs every experiment of the configuration and writes CSV tables, SVG plots
// and manifest.json. A ConfigError while loading propagates; errors inside an
// experiment are recorded in the manifest and reflected in exit_code.
RunOutcome run_config(const RunOptions& opts, std::ostream& log);

int run_main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace singlab::cli
