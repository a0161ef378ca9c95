#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "singlab/cli/app.hpp"
#include "singlab/cli/config.hpp"
#include "singlab/cli/experiments.hpp"
#include "singlab/cli/manifest.hpp"
#include "singlab/cli/plot.hpp"
#include "singlab/cli/table.hpp"

using namespace singlab;
using namespace singlab::cli;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"([run]
seed = 11

[measure]
kind = invariant-measure
system = doubling
n = 100000
bins = 20
tol = 0.05

[saddle]
kind = lorenz-like
system = linear
)";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() / ("singlab-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

int call(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    args.insert(args.begin(), "singlab");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int rc = run_main(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return rc;
}

}  // namespace

TEST(Config, ParsesSectionsInOrder) {
    const RunConfig c = parse_config(kSmallConfig);
    EXPECT_EQ(c.seed, 11u);
    ASSERT_EQ(c.experiments.size(), 2u);
    EXPECT_EQ(c.experiments[0].name, "measure");
    EXPECT_EQ(c.experiments[0].kind, "invariant-measure");
    EXPECT_EQ(c.experiments[0].params.at("n"), "100000");
    EXPECT_EQ(c.experiments[1].system, "linear");
    EXPECT_EQ(c.text, kSmallConfig);
}

TEST(Config, ErrorsNameTheKey) {
    auto key_of = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return e.key();
        }
        return std::string("<none>");
    };
    EXPECT_EQ(key_of("[x]\nkind = lyapunov\nsystem = lorenz\nT = abc\n"), "x.T");
    EXPECT_EQ(key_of("[x]\nkind = lyapunov\nsystem = lorenz\nbogus = 1\n"), "x.bogus");
    EXPECT_EQ(key_of("[x]\nkind = nonsense\nsystem = lorenz\n"), "x.kind");
    EXPECT_EQ(key_of("[x]\nkind = entropy\nsystem = lorenz\n"), "x.system");
    EXPECT_EQ(key_of("[run]\nseed = -3\n"), "run.seed");
    EXPECT_THROW(parse_config("[x]\nkind lyapunov\n"), ConfigError);
    EXPECT_THROW(parse_config("[run]\nseed = 1\n"), ConfigError);
}

TEST(Config, StrictNumbers) {
    EXPECT_EQ(parse_number("k", "1e-3"), 1e-3);
    EXPECT_EQ(parse_number("k", "-2.5"), -2.5);
    EXPECT_THROW(parse_number("k", "1,5"), ConfigError);
    EXPECT_THROW(parse_number("k", "1.5x"), ConfigError);
    EXPECT_THROW(parse_number("k", "nan"), ConfigError);
    EXPECT_EQ(parse_count("k", "1e6"), 1000000u);
    EXPECT_THROW(parse_count("k", "2.5"), ConfigError);
}

TEST(Table, FmtRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) EXPECT_EQ(std::stod(fmt(v)), v);
    EXPECT_EQ(fmt(0.1), "0.10000000000000001");
    EXPECT_EQ(fmt(std::uint64_t{42}), "42");
}

TEST(Table, CsvRoundTripAndQuoting) {
    Table t;
    t.name = "t";
    t.columns = {"a", "b,c", "d\"e"};
    t.add_row({"1", "x,y", "say \"hi\""});
    t.add_row({"2", "line\nbreak", ""});
    const std::string csv = to_csv(t);
    EXPECT_NE(csv.find("\"b,c\""), std::string::npos);
    EXPECT_NE(csv.find("\"say \"\"hi\"\"\""), std::string::npos);
    const Table back = from_csv(csv, "t");
    EXPECT_EQ(back.columns, t.columns);
    EXPECT_EQ(back.rows, t.rows);
    EXPECT_EQ(to_csv(back), csv);
    EXPECT_THROW(from_csv("a,b\n1\n"), DomainError);
    EXPECT_THROW(from_csv("a,b\n\"1,2\n"), DomainError);
    EXPECT_THROW(t.add_row({"1"}), DomainError);
}

TEST(Table, NumericColumn) {
    Table t;
    t.columns = {"x"};
    t.add_row({"1.5"});
    t.add_row({"oops"});
    const auto v = t.numeric("x");
    EXPECT_EQ(v[0], 1.5);
    EXPECT_TRUE(std::isnan(v[1]));
    EXPECT_THROW(t.column("y"), DomainError);
}

TEST(Plot, DeterministicLogLog) {
    Table t;
    t.columns = {"r", "tau"};
    for (double r = 1e-1; r > 1e-5; r /= 2) t.add_row({fmt(r), fmt(1.0 / r)});
    const PlotSpec spec{PlotKind::loglog, "r", "tau", "hitting"};
    const std::string a = render_svg(t, spec), b = render_svg(t, spec);
    EXPECT_EQ(a, b);
    EXPECT_NE(a.find("viewBox=\"0 0 800 600\""), std::string::npos);
    EXPECT_NE(a.find("version=\"1.1\""), std::string::npos);
    EXPECT_NE(a.find("slope -1"), std::string::npos);
}

TEST(Plot, EmptyAndMissingColumn) {
    Table t;
    t.columns = {"x", "y"};
    for (PlotKind k : {PlotKind::loglog, PlotKind::series, PlotKind::histogram})
        EXPECT_NE(render_svg(t, {k, "x", "y", ""}).find("no data"), std::string::npos);
    EXPECT_THROW(render_svg(t, {PlotKind::series, "x", "z", ""}), DomainError);
    EXPECT_THROW(parse_plot_kind("pie"), DomainError);
}

TEST(Manifest, Sha256KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Manifest, JsonFields) {
    RunManifest m;
    m.run_id = "abc";
    m.seed = 3;
    m.experiments.push_back({"e", "entropy", "doubling", "pass", "ok", {"e.csv"}});
    const auto j = nlohmann::json::parse(m.to_json());
    EXPECT_EQ(j["run_id"], "abc");
    EXPECT_EQ(j["seed"], 3);
    EXPECT_EQ(j["experiments"][0]["outputs"][0], "e.csv");
}

TEST(Registry, AllKindsListed) {
    std::set<std::string> names;
    for (const auto& k : experiment_kinds()) names.insert(k.kind);
    for (const char* n : {"lyapunov", "lorenz-like", "singular-hyperbolicity", "section-hyperbolicity", "return-map",
                          "backward-separation", "invariant-measure", "correlation", "entropy", "nue",
                          "slow-recurrence", "local-dimension", "hitting-time", "large-deviations", "escape-rate",
                          "time-decomposition", "chaoticity", "expansiveness"})
        EXPECT_TRUE(names.count(n)) << n;
    std::string out;
    EXPECT_EQ(call({"list-experiments"}, &out), 0);
    EXPECT_NE(out.find("hitting-time"), std::string::npos);
}

TEST(OutDir, Precedence) {
    ::unsetenv("SINGLAB_OUT");
    EXPECT_EQ(resolve_out_dir("", "configs/abc.cfg"), (fs::path("singlab-out") / "abc").string());
    ::setenv("SINGLAB_OUT", "/tmp/envdir", 1);
    EXPECT_EQ(resolve_out_dir("", "configs/abc.cfg"), "/tmp/envdir");
    EXPECT_EQ(resolve_out_dir("/tmp/flag", "configs/abc.cfg"), "/tmp/flag");
    ::unsetenv("SINGLAB_OUT");
}

TEST(Run, WritesManifestAndOutputs) {
    TempDir d;
    const fs::path cfg = write_file(d.path() / "small.cfg", kSmallConfig);
    const fs::path out = d.path() / "out";
    std::string log;
    EXPECT_EQ(call({"run", cfg.string(), "--out", out.string()}, &log), 0) << log;
    const auto j = nlohmann::json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(j["config"]["sha256"], sha256_hex(kSmallConfig));
    EXPECT_EQ(j["seed"], 11);
    ASSERT_EQ(j["experiments"].size(), 2u);
    std::size_t listed = 0;
    for (const auto& e : j["experiments"]) {
        EXPECT_EQ(e["verdict"], "pass");
        for (const auto& o : e["outputs"]) {
            EXPECT_TRUE(fs::exists(out / o.get<std::string>())) << o;
            ++listed;
        }
    }
    std::size_t on_disk = 0;
    for (const auto& f : fs::directory_iterator(out))
        if (f.path().filename() != "manifest.json") ++on_disk;
    EXPECT_EQ(listed, on_disk);
}

TEST(Run, RerunIsByteIdentical) {
    TempDir d;
    const fs::path cfg = write_file(d.path() / "small.cfg", kSmallConfig);
    const fs::path a = d.path() / "a", b = d.path() / "b";
    ASSERT_EQ(call({"run", cfg.string(), "--out", a.string()}), 0);
    ASSERT_EQ(call({"run", cfg.string(), "--out", b.string(), "--threads", "2"}), 0);
    std::size_t compared = 0;
    for (const auto& f : fs::directory_iterator(a)) {
        const auto name = f.path().filename();
        if (name == "manifest.json") continue;
        EXPECT_EQ(slurp(f.path()), slurp(b / name)) << name;
        ++compared;
    }
    EXPECT_GE(compared, 2u);
    const auto ja = nlohmann::json::parse(slurp(a / "manifest.json")), jb = nlohmann::json::parse(slurp(b / "manifest.json"));
    EXPECT_EQ(ja["run_id"], jb["run_id"]);
}

TEST(Run, SeedOverrideChangesRunId) {
    TempDir d;
    const fs::path cfg = write_file(d.path() / "small.cfg", kSmallConfig);
    RunOptions o;
    o.config_path = cfg.string();
    o.out_dir = (d.path() / "x").string();
    std::ostringstream log;
    const RunOutcome a = run_config(o, log);
    o.seed = 12;
    o.out_dir = (d.path() / "y").string();
    const RunOutcome b = run_config(o, log);
    EXPECT_NE(a.manifest.run_id, b.manifest.run_id);
    EXPECT_EQ(b.manifest.seed, 12u);
}

TEST(Run, ExitCodes) {
    TempDir d;
    std::string err;
    EXPECT_EQ(call({"run", (d.path() / "missing.cfg").string()}, nullptr, &err), 2);
    const fs::path bad = write_file(d.path() / "bad.cfg", "[x]\nkind = lyapunov\nsystem = lorenz\nT = abc\n");
    EXPECT_EQ(call({"run", bad.string(), "--out", (d.path() / "o").string()}, nullptr, &err), 2);
    EXPECT_NE(err.find("x.T"), std::string::npos) << err;
    EXPECT_EQ(call({"validate", bad.string()}, nullptr, &err), 2);
    EXPECT_EQ(call({"bogus-subcommand"}), 2);
    // A sink is not chaotic: the check fails.
    const fs::path sink = write_file(d.path() / "sink.cfg",
                                     "[s]\nkind = chaoticity\nsystem = sink\nseeds = 3\nhorizon = 10\ndirection = future\n");
    EXPECT_EQ(call({"run", sink.string(), "--out", (d.path() / "s").string()}), 1);
    const fs::path good = write_file(d.path() / "good.cfg", kSmallConfig);
    EXPECT_EQ(call({"validate", good.string()}), 0);
}

TEST(Run, NumericFailureExitsThree) {
    TempDir d;
    // Escaping orbit: the ensemble leaves the domain.
    const fs::path cfg = write_file(d.path() / "n.cfg", "[e]\nkind = lyapunov\nsystem = linear\nT = 100\nx0 = 1, 0, 0\n");
    std::string err;
    const int rc = call({"run", cfg.string(), "--out", (d.path() / "o").string()}, nullptr, &err);
    EXPECT_EQ(rc, 3) << err;
}

TEST(PlotCommand, WritesSvg) {
    TempDir d;
    const fs::path csv = write_file(d.path() / "t.csv", "r,tau\n0.1,10\n0.01,100\n0.001,1000\n");
    EXPECT_EQ(call({"plot", csv.string(), "--kind", "loglog", "--x", "r", "--y", "tau"}), 0);
    const std::string svg = slurp(d.path() / "t.svg");
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_EQ(call({"plot", csv.string(), "--kind", "loglog", "--x", "r", "--y", "nope"}), 2);
    const fs::path empty = write_file(d.path() / "e.csv", "r,tau\n");
    EXPECT_EQ(call({"plot", empty.string(), "--kind", "series", "--x", "r", "--y", "tau"}), 0);
    EXPECT_NE(slurp(d.path() / "e.svg").find("no data"), std::string::npos);
}
