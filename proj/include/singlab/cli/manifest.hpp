#pragma once

#include <string>
#include <vector>

namespace singlab::cli {

std::string sha256_hex(const std::string& bytes);

struct ExperimentRecord {
    std::string name;
    std::string kind;
    std::string system;
    std::string verdict;  // pass | fail | error
    std::string summary;
    std::vector<std::string> outputs;  // relative to the output directory
};

struct RunManifest {
    std::string run_id;
    std::string timestamp;  // UTC, ISO 8601
    std::string config_path;
    std::string config_digest;
    unsigned long long seed = 0;
    std::string tool_version;
    std::vector<ExperimentRecord> experiments;

    std::string to_json() const;
};

std::string utc_timestamp();

}  // namespace singlab::cli
