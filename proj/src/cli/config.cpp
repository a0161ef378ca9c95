#include "singlab/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "singlab/cli/experiments.hpp"

namespace singlab::cli {

double parse_number(const std::string& key, const std::string& value) {
    double v = 0.0;
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ConfigError(key, key + ": expected a number, got '" + value + "'");
    return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec == std::errc() && ptr == end) return v;
    // Allow 1e6 style counts.
    const double d = parse_number(key, value);
    if (d < 0.0 || d != std::floor(d) || d > 9.0e15)
        throw ConfigError(key, key + ": expected a non-negative integer, got '" + value + "'");
    return static_cast<std::uint64_t>(d);
}

RunConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("", "config: line " + std::to_string(e.line()) + ": " + e.message());
    }
    RunConfig cfg;
    cfg.text = text;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError(section, section + ": key outside a section");
        if (section == "run") {
            for (const auto& [key, value] : body) {
                const std::string full = "run." + key;
                if (key == "seed") cfg.seed = parse_count(full, value.data());
                else throw ConfigError(full, full + ": unknown key");
            }
            continue;
        }
        ExperimentConfig e;
        e.name = section;
        for (const auto& [key, value] : body) {
            if (key == "kind") e.kind = value.data();
            else if (key == "system") e.system = value.data();
            else e.params[key] = value.data();
        }
        if (e.kind.empty()) throw ConfigError(section + ".kind", section + ".kind: missing");
        if (e.system.empty()) throw ConfigError(section + ".system", section + ".system: missing");
        validate_experiment(e);
        cfg.experiments.push_back(std::move(e));
    }
    if (cfg.experiments.empty()) throw ConfigError("", "config: no experiment sections");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "config: cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace singlab::cli
