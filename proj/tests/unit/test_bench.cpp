#include <gtest/gtest.h>

#include <filesystem>

#include "corpus.hpp"
#include "fimcraft/bench.hpp"
#include "fimcraft/util.hpp"

using namespace fimcraft;
namespace fs = std::filesystem;

namespace {

const fs::path kBench = fs::path(FIMCRAFT_FIXTURES) / "bench";

PatchSet fixture_patch() { return parse_unified_diff(fimtest::slurp(kBench / "pr.diff"), "pr"); }
Snapshot fixture_snapshot() { return Snapshot::load(kBench / "snapshot"); }

// Mirrors snapshot/check.sh without spawning a shell.
StubRunner grep_runner()
{
    return StubRunner([](const Snapshot& s, const std::string&) {
        const auto& calc = s.files.at("calc.py");
        for (const char* needle : {"out.append(v * factor)", "\nimport math", "return max(lo, min(x, hi))",
                                   "return math.pi * r * r"}) {
            std::string n = needle;
            bool found = n.front() == '\n' ? (calc.starts_with(n.substr(1)) || calc.find(n) != std::string::npos)
                                           : calc.find(n) != std::string::npos;
            if (!found) return RunResult{Verdict::fail, "missing " + n};
        }
        return RunResult{Verdict::pass, ""};
    });
}

std::vector<std::string> ids(const std::vector<Hunk>& hunks)
{
    std::vector<std::string> out;
    for (const auto& h : hunks) out.push_back(h.id);
    return out;
}

}  // namespace

TEST(Diff, SplitsSectionIntoChangeBlocks)
{
    auto p = fixture_patch();
    EXPECT_EQ(p.source_pr_id, "pr");
    ASSERT_EQ(p.hunks.size(), 5U);
    const auto& h = p.hunks;
    EXPECT_EQ(h[0].id, "pr#0");
    EXPECT_EQ(h[0].file, "calc.py");
    EXPECT_EQ(h[0].kind, HunkKind::add);
    EXPECT_EQ(h[0].old_start, 0U);
    EXPECT_EQ(h[0].old_count, 0U);
    EXPECT_EQ(h[0].new_lines, "import math\nimport sys\n\n");
    EXPECT_EQ(h[0].new_line_count(), 3U);
    EXPECT_EQ(h[1].kind, HunkKind::modify);
    EXPECT_EQ(h[1].old_start, 5U);
    EXPECT_EQ(h[1].old_lines, (std::vector<std::string>{"    return x\n"}));
    EXPECT_EQ(h[2].kind, HunkKind::add);
    EXPECT_EQ(h[2].old_start, 10U);
    EXPECT_EQ(h[2].new_line_count(), 3U);
    EXPECT_EQ(h[3].new_line_count(), 2U);
    EXPECT_EQ(h[4].old_start, 16U);
    EXPECT_EQ(h[4].new_lines, "\n\ndef area(r):\n    return math.pi * r * r\n");
    EXPECT_EQ(ids(find_candidate_hunks(p)), (std::vector<std::string>{"pr#0", "pr#2", "pr#3", "pr#4"}));
}

TEST(Diff, ApplyingEverythingGivesTheNewFile)
{
    auto snap = apply_hunks(fixture_snapshot(), fixture_patch().hunks);
    const auto& calc = snap.files.at("calc.py");
    EXPECT_TRUE(calc.starts_with("import math\nimport sys\n\ndef add"));
    EXPECT_TRUE(calc.ends_with("def area(r):\n    return math.pi * r * r\n"));
    EXPECT_NE(calc.find("    # as plain text\n    # for display\n"), std::string::npos);
}

TEST(Diff, NoNewlineMarkersAndNewFiles)
{
    std::string diff =
        "--- a/x.txt\n+++ b/x.txt\n@@ -1,2 +1,3 @@\n one\n-two\n\\ No newline at end of file\n+two\n+three\n"
        "\\ No newline at end of file\n"
        "--- /dev/null\n+++ b/new.txt\n@@ -0,0 +1,2 @@\n+hello\n+world\n";
    auto p = parse_unified_diff(diff, "n");
    ASSERT_EQ(p.hunks.size(), 2U);
    EXPECT_EQ(p.hunks[0].old_lines, (std::vector<std::string>{"two"}));
    EXPECT_EQ(p.hunks[0].new_lines, "two\nthree");
    EXPECT_EQ(p.hunks[1].file, "new.txt");
    Snapshot s;
    s.files["x.txt"] = "one\ntwo";
    auto out = apply_hunks(s, p.hunks);
    EXPECT_EQ(out.files.at("x.txt"), "one\ntwo\nthree");
    EXPECT_EQ(out.files.at("new.txt"), "hello\nworld\n");
}

TEST(Diff, RejectsMalformedInput)
{
    EXPECT_THROW(parse_unified_diff("@@ -1 +1 @@\n-a\n+b\n", "x"), Error);
    EXPECT_THROW(parse_unified_diff("--- a/f\n+++ /dev/null\n@@ -1 +0,0 @@\n-a\n", "x"), Error);
    EXPECT_THROW(parse_unified_diff("--- a/f\n+++ b/f\n@@ -1 +1 @@\n-a\n+b\n+c\n", "x"), Error);
    EXPECT_THROW(parse_unified_diff("--- a/f\n+++ b/f\n@@ bogus @@\n", "x"), Error);
    Snapshot s;
    s.files["f"] = "zzz\n";
    auto p = parse_unified_diff("--- a/f\n+++ b/f\n@@ -1 +1 @@\n-a\n+b\n", "x");
    EXPECT_THROW(apply_hunks(s, p.hunks), Error);
}

TEST(Snapshot, LoadMaterializeDigest)
{
    auto s = fixture_snapshot();
    EXPECT_EQ(s.files.size(), 2U);
    fimtest::TempDir dir;
    s.materialize(dir.path());
    fimtest::spit(dir.path() / ".git" / "HEAD", "ref\n");
    auto back = Snapshot::load(dir.path());
    EXPECT_EQ(back.files, s.files);
    EXPECT_EQ(back.digest(), s.digest());
    back.files["calc.py"] += "#";
    EXPECT_NE(back.digest(), s.digest());
}

TEST(BenchBuild, ExpectedProblemsWithStubRunner)
{
    auto snap = fixture_snapshot();
    auto patch = fixture_patch();
    auto runner = grep_runner();
    auto r = build_benchmark(snap, patch, runner, "sh check.sh", 2);
    ASSERT_FALSE(r.fatal);
    ASSERT_EQ(r.problems.size(), 3U);
    ASSERT_EQ(r.discarded.size(), 2U);
    EXPECT_EQ(r.discarded[0].hunk_id, "pr#1");
    EXPECT_EQ(r.discarded[0].reason, "not_multiline");
    EXPECT_EQ(r.discarded[1].hunk_id, "pr#3");
    EXPECT_EQ(r.discarded[1].reason, "test_passes_without_candidate");

    auto full = apply_hunks(snap, patch.hunks).files.at("calc.py");
    EXPECT_EQ(r.problems[0].prefix, "");
    EXPECT_EQ(r.problems[0].ground_truth_middle, "import math\nimport sys\n\n");
    EXPECT_EQ(r.problems[2].suffix, "");
    for (const auto& p : r.problems) {
        EXPECT_EQ(p.prefix + p.ground_truth_middle + p.suffix, full);
        EXPECT_EQ(p.file, "calc.py");
        EXPECT_EQ(p.repo_ref, snap.digest());
        EXPECT_EQ(p.test_command, "sh check.sh");
        EXPECT_EQ(p.problem_id.size(), 16U);
        EXPECT_EQ(p.applied_patches.size(), 4U);
        EXPECT_EQ(evaluate_problem(p, p.ground_truth_middle, snap, patch, runner).verdict, Verdict::pass);
        EXPECT_EQ(evaluate_problem(p, "", snap, patch, runner).verdict, Verdict::fail);
        EXPECT_EQ(nlohmann::json(p).get<InfillingProblem>().suffix, p.suffix);
    }
}

TEST(BenchBuild, FatalWhenFullPatchFails)
{
    StubRunner never([](const Snapshot&, const std::string&) { return RunResult{Verdict::fail, "nope"}; });
    auto r = build_benchmark(fixture_snapshot(), fixture_patch(), never, "t");
    ASSERT_TRUE(r.fatal);
    EXPECT_TRUE(r.problems.empty());
}

TEST(BenchBuild, EmptyMiddleThatPassesIsDiscarded)
{
    // The test only wants line "a" gone, so deleting it is enough.
    Snapshot s;
    s.files["f.txt"] = "a\nb\n";
    auto p = parse_unified_diff("--- a/f.txt\n+++ b/f.txt\n@@ -1,2 +1,3 @@\n-a\n+x\n+y\n b\n", "e");
    StubRunner runner([](const Snapshot& snap, const std::string&) {
        bool ok = snap.files.at("f.txt").find("a\n") == std::string::npos;
        return RunResult{ok ? Verdict::pass : Verdict::fail, ""};
    });
    auto r = build_benchmark(s, p, runner, "t");
    EXPECT_TRUE(r.problems.empty());
    ASSERT_EQ(r.discarded.size(), 1U);
    EXPECT_EQ(r.discarded[0].reason, "test_passes_with_empty_middle");
}

TEST(BenchBuild, RunnerErrorsAreReasons)
{
    auto snap = fixture_snapshot();
    auto patch = fixture_patch();
    auto full = apply_hunks(snap, patch.hunks).digest();
    StubRunner flaky([&](const Snapshot& s, const std::string&) {
        return s.digest() == full ? RunResult{Verdict::pass, ""} : RunResult{Verdict::error, "timeout"};
    });
    auto check = verify_dependency(snap, patch, patch.hunks[2], flaky, "t");
    EXPECT_FALSE(check.depends);
    EXPECT_EQ(check.reason, "timeout");
}

TEST(BenchEval, PassAtOne)
{
    auto snap = fixture_snapshot();
    auto patch = fixture_patch();
    auto runner = grep_runner();
    auto built = build_benchmark(snap, patch, runner, "sh check.sh");
    ASSERT_EQ(built.problems.size(), 3U);
    const auto& a = built.problems[1];
    const auto& d = built.problems[0];
    std::map<std::string, std::string> gens{{a.problem_id, a.ground_truth_middle}, {d.problem_id, "import os\n"}};
    auto r = evaluate_benchmark(built.problems, gens, snap, patch, runner, 2);
    EXPECT_EQ(r.problems, 3U);
    EXPECT_EQ(r.passed, 1U);
    EXPECT_EQ(r.missing, 1U);
    EXPECT_DOUBLE_EQ(r.pass_at_1, 1.0 / 3.0);
    EXPECT_EQ(r.verdicts.at(built.problems[2].problem_id).reason, "missing_generation");
    EXPECT_EQ(to_json(r)["verdicts"][a.problem_id]["verdict"], "pass");
}

TEST(BenchEval, SnapshotMismatchIsRejected)
{
    auto snap = fixture_snapshot();
    auto patch = fixture_patch();
    auto runner = grep_runner();
    auto built = build_benchmark(snap, patch, runner, "sh check.sh");
    auto other = snap;
    other.files["calc.py"] += "\n";
    EXPECT_THROW(problem_snapshot(other, patch, built.problems[0], ""), Error);
}

TEST(CommandRunner, RealShellMatchesStub)
{
    auto snap = fixture_snapshot();
    auto patch = fixture_patch();
    CommandRunner shell(std::chrono::seconds(30));
    auto r = build_benchmark(snap, patch, shell, "sh check.sh");
    ASSERT_FALSE(r.fatal) << *r.fatal;
    auto stub = grep_runner();
    auto s = build_benchmark(snap, patch, stub, "sh check.sh");
    ASSERT_EQ(r.problems.size(), s.problems.size());
    for (std::size_t i = 0; i < r.problems.size(); ++i) EXPECT_EQ(r.problems[i].problem_id, s.problems[i].problem_id);
    CommandRunner quick(std::chrono::milliseconds(200));
    auto t = quick.run(snap, "sleep 5");
    EXPECT_EQ(t.verdict, Verdict::error);
    EXPECT_EQ(t.reason, "timeout");
    EXPECT_EQ(quick.run(snap, "exit 3").verdict, Verdict::fail);
}
