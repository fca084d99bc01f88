#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "corpus.hpp"
#include "fimcraft/cli.hpp"
#include "fimcraft/telemetry.hpp"
#include "json.hpp"

using namespace fimcraft;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string config_path() { return (fs::path(FIMCRAFT_CONFIG_DIR) / "default.json").string(); }

std::vector<json> read_lines(const fs::path& p)
{
    std::vector<json> out;
    std::istringstream in(fimtest::slurp(p));
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) out.push_back(json::parse(line));
    }
    return out;
}

void write_lines(const fs::path& p, const std::vector<json>& rows)
{
    std::string s;
    for (const auto& r : rows) s += r.dump() + "\n";
    fimtest::spit(p, s);
}

int run_binary(const std::string& args)
{
    std::string cmd = std::string("'") + FIMCRAFT_BINARY + "' " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Workspace {
    fimtest::TempDir dir{"fimcli"};
    fs::path repo = dir.path() / "repo";

    Workspace() { fimtest::write_corpus(repo, fimtest::generate_corpus(42, 6)); }

    int pipeline(const std::string& out, const std::string& workers)
    {
        return run_cli({"--config", config_path(), "--workers", workers, "pipeline", "--root", repo.string(),
                        "--out-dir", (dir.path() / out).string(), "--seed", "5"});
    }
};

}  // namespace

TEST(Cli, PipelineIsIndependentOfWorkerCount)
{
    Workspace ws;
    ASSERT_EQ(ws.pipeline("a", "1"), 0);
    ASSERT_EQ(ws.pipeline("b", "3"), 0);
    for (auto name : {"files.jsonl", "stats.json", "examples.jsonl", "contexts.jsonl", "training.jsonl",
                      "manifest.json"}) {
        auto a = fimtest::slurp(ws.dir.path() / "a" / name);
        EXPECT_FALSE(a.empty()) << name;
        EXPECT_EQ(a, fimtest::slurp(ws.dir.path() / "b" / name)) << name;
    }

    auto m = json::parse(fimtest::slurp(ws.dir.path() / "a" / "manifest.json"));
    EXPECT_EQ(m["status"], "ok");
    EXPECT_EQ(m["seed"], 5);
    EXPECT_EQ(m["stages"]["ingest"]["accepted"], 18);
    EXPECT_EQ(m["config_hash"].get<std::string>().size(), 64u);
    auto training = read_lines(ws.dir.path() / "a" / "training.jsonl");
    EXPECT_EQ(m["stages"]["assemble"]["records"], training.size());
    EXPECT_EQ(m["outputs"].size(), 5u);
}

TEST(Cli, SeedChangesOutput)
{
    Workspace ws;
    ASSERT_EQ(ws.pipeline("a", "1"), 0);
    ASSERT_EQ(run_cli({"--config", config_path(), "pipeline", "--root", ws.repo.string(), "--out-dir",
                       (ws.dir.path() / "c").string(), "--seed", "6"}),
              0);
    EXPECT_NE(fimtest::slurp(ws.dir.path() / "a" / "examples.jsonl"),
              fimtest::slurp(ws.dir.path() / "c" / "examples.jsonl"));
}

TEST(Cli, StagesMatchPipeline)
{
    Workspace ws;
    ASSERT_EQ(ws.pipeline("p", "1"), 0);
    auto d = ws.dir.path() / "s";
    fs::create_directories(d);
    auto cfg = config_path();
    ASSERT_EQ(run_cli({"--config", cfg, "ingest", "--root", ws.repo.string(), "--out", (d / "files.jsonl").string()}),
              0);
    ASSERT_EQ(run_cli({"--config", cfg, "extract", "--files", (d / "files.jsonl").string(), "--stats",
                       (d / "stats.json").string(), "--out", (d / "examples.jsonl").string(), "--seed", "5"}),
              0);
    ASSERT_EQ(run_cli({"--config", cfg, "context", "--examples", (d / "examples.jsonl").string(), "--repo",
                       ws.repo.string(), "--out", (d / "contexts.jsonl").string()}),
              0);
    ASSERT_EQ(run_cli({"--config", cfg, "assemble", "--examples", (d / "examples.jsonl").string(), "--contexts",
                       (d / "contexts.jsonl").string(), "--out", (d / "training.jsonl").string(), "--seed", "5"}),
              0);
    for (auto name : {"files.jsonl", "examples.jsonl", "contexts.jsonl", "training.jsonl"}) {
        EXPECT_EQ(fimtest::slurp(d / name), fimtest::slurp(ws.dir.path() / "p" / name)) << name;
    }
    EXPECT_TRUE(fs::exists(d / "training.jsonl.manifest.json"));
}

TEST(Cli, DanglingSymlinkIsPartialFailure)
{
    Workspace ws;
    fs::create_symlink(ws.repo / "nowhere.py", ws.repo / "broken.py");
    EXPECT_EQ(ws.pipeline("a", "1"), 1);
    auto m = json::parse(fimtest::slurp(ws.dir.path() / "a" / "manifest.json"));
    EXPECT_EQ(m["status"], "partial");
    ASSERT_EQ(m["stages"]["ingest"]["warnings"].size(), 1u);
    EXPECT_EQ(m["stages"]["ingest"]["warnings"][0]["path"], "broken.py");
    EXPECT_FALSE(fimtest::slurp(ws.dir.path() / "a" / "training.jsonl").empty());
}

TEST(Cli, UsageAndConfigErrors)
{
    fimtest::TempDir dir;
    EXPECT_EQ(run_cli(std::vector<std::string>{}), 2);
    EXPECT_EQ(run_cli({"frobnicate"}), 2);
    EXPECT_EQ(run_cli({"ingest", "--root", dir.path().string()}), 2);
    EXPECT_EQ(run_cli({"--workers", "0", "ingest", "--root", ".", "--out", "x"}), 2);

    fimtest::spit(dir.path() / "bad.json", R"({"colour": 1})");
    EXPECT_EQ(run_cli({"--config", (dir.path() / "bad.json").string(), "ingest", "--root", dir.path().string(),
                       "--out", (dir.path() / "f.jsonl").string()}),
              2);
    EXPECT_EQ(run_cli({"--config", config_path(), "ingest", "--root", (dir.path() / "missing").string(), "--out",
                       (dir.path() / "f.jsonl").string()}),
              1);
}

TEST(Cli, BinaryExitCodes)
{
    EXPECT_EQ(run_binary("--version"), 0);
    EXPECT_EQ(run_binary("--help"), 0);
    EXPECT_EQ(run_binary("frobnicate"), 2);
    EXPECT_EQ(run_binary("--config /nonexistent.json pipeline --root ."), 2);
    EXPECT_FALSE(version_string().empty());
}

TEST(Cli, EvalReportsMissingPredictions)
{
    Workspace ws;
    ASSERT_EQ(ws.pipeline("a", "1"), 0);
    auto examples = read_lines(ws.dir.path() / "a" / "examples.jsonl");
    ASSERT_GE(examples.size(), 2u);

    std::vector<json> preds;
    for (const auto& e : examples) preds.push_back({{"example_id", e["id"]}, {"generated", e["middle"]}});
    write_lines(ws.dir.path() / "all.jsonl", preds);
    preds.pop_back();
    write_lines(ws.dir.path() / "some.jsonl", preds);

    auto dataset = (ws.dir.path() / "a" / "examples.jsonl").string();
    auto report = ws.dir.path() / "r.json";
    ASSERT_EQ(run_cli({"eval", "--dataset", dataset, "--preds", (ws.dir.path() / "all.jsonl").string(), "--report",
                       report.string()}),
              0);
    auto r = json::parse(fimtest::slurp(report));
    EXPECT_DOUBLE_EQ(r["overall"]["exact_match"].get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(r["overall"]["edit_similarity"].get<double>(), 1.0);
    EXPECT_EQ(r["overall"]["missing"], 0);

    EXPECT_EQ(run_cli({"eval", "--dataset", dataset, "--preds", (ws.dir.path() / "some.jsonl").string(), "--report",
                       report.string(), "--metrics", "es"}),
              1);
    r = json::parse(fimtest::slurp(report));
    EXPECT_EQ(r["overall"]["missing"], 1);
    EXPECT_FALSE(r["overall"].contains("exact_match"));
    double n = static_cast<double>(examples.size());
    EXPECT_NEAR(r["overall"]["edit_similarity"].get<double>(), (n - 1) / n, 1e-12);

    EXPECT_EQ(run_cli({"eval", "--dataset", dataset, "--preds", (ws.dir.path() / "all.jsonl").string(), "--report",
                       report.string(), "--metrics", "em,bleu"}),
              2);
}

TEST(Cli, AnalyzeWritesReportAndPlotData)
{
    fimtest::TempDir dir;
    std::vector<json> rows;
    // 3 shown long enough, 2 of them accepted; the 4th is under the display gate.
    auto add = [&](const char* id, double ms, bool accepted) {
        CompletionEvent e;
        e.event_id = id;
        e.language = "python";
        e.node_type = "call";
        e.displayed_ms = ms;
        e.accepted = accepted;
        if (accepted) e.accepted_text = "foo(bar)";
        rows.push_back(e);
    };
    add("e1", 900, true);
    add("e2", 751, true);
    add("e3", 2000, false);
    add("e4", 750, true);
    write_lines(dir.path() / "events.jsonl", rows);
    fimtest::spit(dir.path() / "corr.json", R"({"offline": [1, 2, 3], "online": [2, 4, 6]})");

    auto report = dir.path() / "t.json";
    ASSERT_EQ(run_cli({"--config", config_path(), "analyze", "--events", (dir.path() / "events.jsonl").string(),
                       "--report", report.string(), "--plot-data", "--correlate",
                       (dir.path() / "corr.json").string()}),
              0);
    auto r = json::parse(fimtest::slurp(report));
    EXPECT_EQ(r["events"], 4);
    EXPECT_NEAR(r["car"].get<double>(), 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(r["pearson"].get<double>(), 1.0, 1e-12);
    auto csv = fimtest::slurp(dir.path() / "t.csv");
    EXPECT_TRUE(csv.starts_with("language,node_type,events,car,relative_car_percent\n")) << csv;

    auto named = dir.path() / "plot.csv";
    ASSERT_EQ(run_cli({"analyze", "--events", (dir.path() / "events.jsonl").string(), "--report", report.string(),
                       "--plot-data", named.string()}),
              0);
    EXPECT_EQ(fimtest::slurp(named), csv);
}

TEST(Cli, BenchBuildAndEvalWithShellRunner)
{
    fimtest::TempDir dir;
    auto fixture = fs::path(FIMCRAFT_FIXTURES) / "bench";
    auto snapshot = (fixture / "snapshot").string();
    auto patches = (fixture / "pr.diff").string();
    auto problems = dir.path() / "problems.jsonl";
    ASSERT_EQ(run_cli({"--config", config_path(), "bench", "build", "--snapshot", snapshot, "--patches", patches,
                       "--runner", "sh check.sh", "--pr-id", "pr", "--out", problems.string()}),
              0);
    auto rows = read_lines(problems);
    ASSERT_EQ(rows.size(), 3u);
    auto manifest = json::parse(fimtest::slurp(problems.string() + ".manifest.json"));
    ASSERT_EQ(manifest["discarded"].size(), 2u);
    EXPECT_EQ(manifest["discarded"][0]["hunk_id"], "pr#1");
    EXPECT_EQ(manifest["discarded"][1]["hunk_id"], "pr#3");

    // Ground truth for the first problem, an empty middle for the second, nothing for the third.
    std::vector<json> gens{{{"problem_id", rows[0]["problem_id"]}, {"generated", rows[0]["ground_truth_middle"]}},
                           {{"problem_id", rows[1]["problem_id"]}, {"generated", ""}}};
    write_lines(dir.path() / "gens.jsonl", gens);
    auto report = dir.path() / "pass1.json";
    EXPECT_EQ(run_cli({"--config", config_path(), "bench", "eval", "--problems", problems.string(), "--gens",
                       (dir.path() / "gens.jsonl").string(), "--snapshot", snapshot, "--patches", patches,
                       "--pr-id", "pr", "--report", report.string()}),
              1);
    auto r = json::parse(fimtest::slurp(report));
    EXPECT_EQ(r["problems"], 3);
    EXPECT_EQ(r["passed"], 1);
    EXPECT_EQ(r["missing"], 1);
    EXPECT_NEAR(r["pass_at_1"].get<double>(), 1.0 / 3.0, 1e-12);

    // The bench report doubles as a verdict file for eval.
    EXPECT_EQ(r["verdicts"][rows[0]["problem_id"].get<std::string>()]["verdict"], "pass");
}

TEST(Cli, BenchBuildFatalOnSnapshotMismatch)
{
    fimtest::TempDir dir;
    auto fixture = fs::path(FIMCRAFT_FIXTURES) / "bench";
    fs::copy(fixture / "snapshot", dir.path() / "snap", fs::copy_options::recursive);
    fimtest::spit(dir.path() / "snap" / "calc.py", "def other():\n    pass\n");
    EXPECT_EQ(run_cli({"bench", "build", "--snapshot", (dir.path() / "snap").string(), "--patches",
                       (fixture / "pr.diff").string(), "--runner", "sh check.sh", "--out",
                       (dir.path() / "p.jsonl").string()}),
              1);
}
