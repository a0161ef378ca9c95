#include "singlab/cli/app.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "singlab/cli/config.hpp"
#include "singlab/cli/experiments.hpp"
#include "singlab/cli/plot.hpp"
#include "singlab/cli/table.hpp"

#ifndef SINGLAB_VERSION
#define SINGLAB_VERSION "0.0.0"
#endif

namespace singlab::cli {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << bytes;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string kind_name(PlotKind k) {
    switch (k) {
        case PlotKind::loglog: return "loglog";
        case PlotKind::histogram: return "histogram";
        default: return "series";
    }
}

int severity(int code) {
    // Usage errors outrank numeric failures, which outrank falsified checks.
    switch (code) {
        case exit_usage: return 3;
        case exit_numeric: return 2;
        case exit_failed: return 1;
        default: return 0;
    }
}

}  // namespace

std::string resolve_out_dir(const std::string& flag, const std::string& config_path) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("SINGLAB_OUT"); env && *env) return env;
    return (fs::path("singlab-out") / fs::path(config_path).stem()).string();
}

RunOutcome run_config(const RunOptions& opts, std::ostream& log) {
    RunConfig cfg = load_config(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;

    RunOutcome outcome;
    outcome.out_dir = resolve_out_dir(opts.out_dir, opts.config_path);
    const fs::path dir(outcome.out_dir);
    fs::create_directories(dir);

    RunManifest& m = outcome.manifest;
    m.config_path = opts.config_path;
    m.config_digest = sha256_hex(cfg.text);
    m.seed = cfg.seed;
    m.run_id = sha256_hex(m.config_digest + ":" + std::to_string(cfg.seed)).substr(0, 16);
    m.timestamp = utc_timestamp();
    m.tool_version = SINGLAB_VERSION;

    for (std::size_t i = 0; i < cfg.experiments.size(); ++i) {
        const ExperimentConfig& e = cfg.experiments[i];
        ExperimentRecord rec{e.name, e.kind, e.system, "", "", {}};
        int code = exit_ok;
        try {
            const RunContext ctx{substream(cfg.seed, i)(), std::max<std::size_t>(1, opts.threads)};
            const ExperimentResult res = run_experiment(e, ctx);
            for (const Table& t : res.tables) {
                const std::string file = t.name + ".csv";
                write_file(dir / file, to_csv(t));
                rec.outputs.push_back(file);
            }
            for (const PlotRequest& pr : res.plots) {
                const auto it = std::find_if(res.tables.begin(), res.tables.end(),
                                             [&](const Table& t) { return t.name == pr.table; });
                if (it == res.tables.end()) continue;
                const std::string file = pr.table + "-" + kind_name(pr.spec.kind) + ".svg";
                write_file(dir / file, render_svg(*it, pr.spec));
                rec.outputs.push_back(file);
            }
            rec.verdict = res.pass ? "pass" : "fail";
            rec.summary = res.summary;
            code = res.pass ? exit_ok : exit_failed;
        } catch (const NumericError& ex) {
            rec.verdict = "error";
            rec.summary = std::string("numeric failure: ") + ex.what();
            code = exit_numeric;
        } catch (const DomainError& ex) {
            rec.verdict = "error";
            rec.summary = std::string("invalid parameters: ") + ex.what();
            code = exit_usage;
        }
        log << e.name << " [" << e.kind << " / " << e.system << "]: " << rec.verdict << " - " << rec.summary << "\n";
        if (severity(code) > severity(outcome.exit_code)) outcome.exit_code = code;
        m.experiments.push_back(std::move(rec));
    }
    write_file(dir / "manifest.json", m.to_json());
    return outcome;
}

int run_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"singlab: numerical experiments on singular-hyperbolic flows"};
    app.require_subcommand(1);

    RunOptions ropts;
    std::uint64_t seed = 0;
    auto* run = app.add_subcommand("run", "run every experiment of a configuration");
    run->add_option("config", ropts.config_path, "configuration file")->required();
    run->add_option("--threads", ropts.threads, "worker threads per experiment")->check(CLI::PositiveNumber);
    run->add_option("--out", ropts.out_dir, "output directory (overrides SINGLAB_OUT)");
    auto* seed_opt = run->add_option("--seed", seed, "global seed (overrides [run] seed)");

    std::string csv_path, kind = "series", xcol, ycol, svg_path, title;
    auto* plot = app.add_subcommand("plot", "render a CSV table as SVG");
    plot->add_option("csv", csv_path, "table")->required();
    plot->add_option("--kind", kind, "loglog, series or histogram")->check(CLI::IsMember({"loglog", "series", "histogram"}));
    plot->add_option("--x", xcol, "x column")->required();
    plot->add_option("--y", ycol, "y column")->required();
    plot->add_option("-o,--output", svg_path, "output file (default: the CSV path with .svg)");
    plot->add_option("--title", title, "plot title");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "parse and schema-check a configuration");
    validate->add_option("config", validate_path, "configuration file")->required();

    auto* list = app.add_subcommand("list-experiments", "list experiment kinds, systems and parameters");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, er;
        const int rc = app.exit(e, o, er);
        out << o.str();
        err << er.str();
        return rc == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*run) {
            if (*seed_opt) ropts.seed = seed;
            const RunOutcome res = run_config(ropts, out);
            out << "outputs in " << res.out_dir << " (run " << res.manifest.run_id << ")\n";
            return res.exit_code;
        }
        if (*plot) {
            const Table t = from_csv(read_file(csv_path), fs::path(csv_path).stem().string());
            const PlotSpec spec{parse_plot_kind(kind), xcol, ycol, title};
            const std::string svg = render_svg(t, spec);
            if (svg_path.empty()) svg_path = fs::path(csv_path).replace_extension(".svg").string();
            write_file(svg_path, svg);
            out << svg_path << "\n";
            return exit_ok;
        }
        if (*validate) {
            const RunConfig cfg = load_config(validate_path);
            out << validate_path << ": ok, " << cfg.experiments.size() << " experiment(s), seed " << cfg.seed << "\n";
            return exit_ok;
        }
        if (*list) {
            for (const ExperimentKind& k : experiment_kinds()) {
                out << k.kind << ": " << k.help << "\n  systems:";
                for (const auto& s : k.systems) out << " " << s;
                out << "\n";
                for (const ParamSpec& p : k.params) out << "  " << p.name << " = " << p.fallback << "  # " << p.help << "\n";
            }
            return exit_ok;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return exit_numeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }
    return exit_usage;
}

}  // namespace singlab::cli
