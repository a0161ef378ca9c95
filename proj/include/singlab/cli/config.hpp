#pragma once

// Run configuration: flat key = value text with bracketed section headers.
// [run] holds global settings, every other section is one experiment.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "singlab/types.hpp"

namespace singlab::cli {

// Rejected configuration; `key` names the offending key (section.key) when
// there is one.
class ConfigError : public DomainError {
public:
    ConfigError(const std::string& key, const std::string& what) : DomainError(what), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct ExperimentConfig {
    std::string name;  // section header
    std::string kind;
    std::string system;
    std::map<std::string, std::string> params;  // everything but kind and system
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::vector<ExperimentConfig> experiments;  // in file order
    std::string text;                           // raw bytes, digested in the manifest
};

// Parses and schema-validates. Throws ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Strict number parsing independent of the locale; throws ConfigError naming key.
double parse_number(const std::string& key, const std::string& value);
std::uint64_t parse_count(const std::string& key, const std::string& value);

}  // namespace singlab::cli
