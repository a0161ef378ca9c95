#pragma once

// Registry of experiment kinds runnable from a configuration file.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "singlab/cli/config.hpp"
#include "singlab/cli/plot.hpp"
#include "singlab/cli/table.hpp"

namespace singlab::cli {

struct ParamSpec {
    enum class Type { number, count, text };
    std::string name;
    Type type = Type::number;
    std::string fallback;
    std::string help;
    std::vector<std::string> choices;  // text only; empty accepts anything
    // A number whose fallback is "auto" picks a system-specific value.
};

// Parameters of one experiment with defaults filled in.
class Params {
public:
    Params(const std::vector<ParamSpec>& specs, const ExperimentConfig& cfg);
    double number(const std::string& name) const;
    // `fallback` when the value is "auto".
    double number_or(const std::string& name, double fallback) const;
    std::size_t count(const std::string& name) const;
    const std::string& text(const std::string& name) const;

private:
    std::string section_;
    std::map<std::string, std::string> values_;
};

struct PlotRequest {
    std::string table;  // name of one of the result tables
    PlotSpec spec;
};

struct ExperimentResult {
    std::vector<Table> tables;
    std::vector<PlotRequest> plots;
    bool pass = true;
    std::string summary;
};

struct RunContext {
    std::uint64_t seed = 1;
    std::size_t threads = 1;
};

struct ExperimentKind {
    std::string kind;
    std::string help;
    std::vector<std::string> systems;
    std::vector<ParamSpec> params;
    std::function<ExperimentResult(const std::string& system, const Params&, const RunContext&)> run;
};

const std::vector<ExperimentKind>& experiment_kinds();
// Throws ConfigError naming `key` for an unknown kind.
const ExperimentKind& find_kind(const std::string& kind, const std::string& key = "kind");

// Checks system and every parameter against the kind's schema.
void validate_experiment(const ExperimentConfig& cfg);

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunContext& ctx);

}  // namespace singlab::cli
