#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "rlab/config.hpp"
#include "rlab/report.hpp"

using namespace rlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f);
    return std::string(std::istreambuf_iterator<char>(f), {});
}

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("config: empty input keeps every documented default") {
    const fs::path dir = temp_dir("rlab_cfg_empty");
    const std::string path = (dir / "empty.cfg").string();
    std::ofstream(path) << "# nothing but a comment\n\n";
    const StudyConfig cfg = parse_config_file(path);
    CHECK(cfg == StudyConfig{});
    CHECK(cfg.seeds == 20);
    CHECK(cfg.capacity_small == 5000);
    CHECK(cfg.capacity_large == 50000);
    CHECK(cfg.gradient_steps == 40000);
    CHECK(cfg.ratio == doctest::Approx(0.25));
    CHECK(cfg.envs == default_env_set());
    fs::remove_all(dir);
}

TEST_CASE("config: validation errors name the key") {
    StudyConfig cfg;
    apply_override(cfg, "replay.ratio=-1");
    try {
        validate_config(cfg);
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("replay.ratio") != std::string::npos);
    }

    CHECK_THROWS_AS(apply_override(cfg, "no.such.key=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(cfg, "learn.batch=abc"), ConfigError);
    CHECK_THROWS_AS(apply_override(cfg, "malformed"), ConfigError);
}

TEST_CASE("config: parse -> serialize -> parse round-trip equality") {
    const fs::path dir = temp_dir("rlab_cfg_rt");
    StudyConfig cfg;
    apply_override(cfg, "study.kind=additive");
    apply_override(cfg, "study.envs=gridworld,sparse_maze_sticky");
    apply_override(cfg, "replay.ratio=0.5");
    apply_override(cfg, "learn.c51_vmin=auto");
    apply_override(cfg, "learn.lr_adam=0.00731");
    apply_override(cfg, "sticky.n_values=3,7");
    const std::string serialized = serialize_config(cfg);
    const std::string path = (dir / "rt.cfg").string();
    std::ofstream(path) << serialized;
    const StudyConfig back = parse_config_file(path);
    CHECK(back == cfg);
    CHECK(serialize_config(back) == serialized);
    fs::remove_all(dir);
}

TEST_CASE("config variant resolution") {
    StudyConfig cfg;
    cfg.variant = "rainbow";
    const VariantSpec r = config_variant(cfg);
    CHECK(r.use_per);
    CHECK(r.use_adam);
    CHECK(r.use_c51);
    CHECK(r.n == 3);
    CHECK(r.label() == "rainbow");

    cfg.variant = "custom";
    cfg.use_per = true;
    cfg.n = 5;
    const VariantSpec c = config_variant(cfg);
    CHECK(c.use_per);
    CHECK(!c.use_adam);
    CHECK(c.n == 5);
    CHECK(c.label() == "dqn+per+n5");
}

TEST_CASE("report: deterministic byte-identical output and CSV-sourced charts") {
    const fs::path dir_a = temp_dir("rlab_report_a");
    const fs::path dir_b = temp_dir("rlab_report_b");

    StudyOutput out;
    out.study = "additive";
    RunResult r;
    r.study = "additive";
    r.variant = "dqn+n3";
    r.env = "gridworld";
    r.seed_index = 0;
    r.capacity = 5000;
    r.oldest_age = 1250;
    r.ratio = 0.25;
    r.eval_returns = {0.0, 0.5, 1.0};
    r.final_score = 0.875;
    out.runs.push_back(r);
    r.seed_index = 1;
    r.final_score = 0.75;
    out.runs.push_back(r);
    ComparisonRow row;
    row.label = "dqn+n3";
    row.capacity = 50000;
    row.ratio = 0.25;
    row.stats.median = 12.3456789;
    row.stats.p25 = -1.5;
    row.stats.p75 = 20.25;
    row.stats.boot = {12.0, 3.0, 5.5, 19.5, 100};
    row.stats.per_env = {{"gridworld", 12.3456789}};
    out.summary.push_back(row);

    write_study_output(dir_a.string(), out);
    write_study_output(dir_b.string(), out);
    for (const char* name : {"runs.csv", "runs.jsonl", "summary.csv", "bars.svg"}) {
        CHECK(slurp((dir_a / name).string()) == slurp((dir_b / name).string()));
    }

    // Bar annotations carry the CSV token verbatim.
    const auto csv = read_csv((dir_a / "summary.csv").string());
    REQUIRE(csv.size() == 2);
    const std::string median_token = csv[1][6];
    const std::string svg = slurp((dir_a / "bars.svg").string());
    CHECK(svg.find(">" + median_token + "<") != std::string::npos);

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("report: grid summaries render a heatmap whose annotations equal the CSV") {
    const fs::path dir = temp_dir("rlab_report_grid");
    StudyOutput out;
    out.study = "grid";
    for (int64_t cap : {2500, 5000}) {
        for (int64_t age : {625, 1250}) {
            ComparisonRow row;
            row.label = "cap" + std::to_string(cap) + "_age" + std::to_string(age);
            row.capacity = cap;
            row.oldest_age = age;
            row.ratio = static_cast<double>(age) / static_cast<double>(cap);
            row.stats.median = cap == 5000 && age == 1250 ? 0.0 : 7.25 * cap / age;
            out.summary.push_back(row);
        }
    }
    out.summary.back().skipped = true;
    write_study_output(dir.string(), out);
    REQUIRE(fs::exists(dir / "heatmap.svg"));
    const std::string svg = slurp((dir / "heatmap.svg").string());
    const auto csv = read_csv((dir / "summary.csv").string());
    for (size_t i = 1; i < csv.size(); ++i) {
        if (csv[i][5] == "1") {
            CHECK(svg.find(">skipped<") != std::string::npos);
        } else {
            CHECK(svg.find(">" + csv[i][6] + "<") != std::string::npos);
        }
    }
    fs::remove_all(dir);
}

#ifdef RLAB_CLI_PATH
TEST_CASE("cli: exit codes for success and config errors") {
    const fs::path dir = temp_dir("rlab_cli_exit");
    const std::string base = std::string(RLAB_CLI_PATH) + " train --set study.envs=chain "
                             "--set study.seeds=1 --set learn.kind=tabular "
                             "--set budget.gradient_steps=200 --set budget.eval_every=100 "
                             "--set replay.capacity=300 --set replay.warmup=32 "
                             "--set learn.batch=4 ";
    const int ok = std::system((base + "--out " + (dir / "ok").string() + " > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(ok) == 0);
    const int bad = std::system((base + "--set replay.ratio=-2 --out " + (dir / "bad").string() +
                                 " > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(bad) == 2);
    fs::remove_all(dir);
}
#endif
