#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace fimcraft {

enum class HunkKind { add, remove, modify };

std::string_view to_string(HunkKind kind);

/// One contiguous run of removed/added lines. Line numbers are 0-based
/// indices into the base file; an insertion has old_count == 0 and goes
/// before line old_start.
struct Hunk {
    std::string id;
    std::string file;
    std::size_t old_start = 0;
    std::size_t old_count = 0;
    std::vector<std::string> old_lines;  // with their line endings
    std::string new_lines;
    HunkKind kind = HunkKind::modify;

    std::size_t new_line_count() const;
};

struct PatchSet {
    std::string source_pr_id;
    std::vector<Hunk> hunks;
};

/// Parses a unified diff. Each @@ section is split into its change blocks.
/// Deleting whole files is not supported.
PatchSet parse_unified_diff(std::string_view diff, const std::string& source_pr_id);

/// path -> content for every regular file below a directory.
struct Snapshot {
    std::map<std::string, std::string> files;

    static Snapshot load(const std::filesystem::path& root);
    void materialize(const std::filesystem::path& dir) const;
    /// sha256 over sorted (path, content) pairs.
    std::string digest() const;
};

/// Applies `hunks` (all against the base) to `snapshot`. Throws
/// Error(invalid_input) if removed lines do not match or hunks overlap.
Snapshot apply_hunks(const Snapshot& snapshot, const std::vector<Hunk>& hunks);

std::vector<Hunk> find_candidate_hunks(const PatchSet& patchset);

enum class Verdict { pass, fail, error };

std::string_view to_string(Verdict verdict);

struct RunResult {
    Verdict verdict = Verdict::error;
    std::string reason;
};

class TestRunner {
  public:
    virtual ~TestRunner() = default;
    /// Must be safe to call concurrently.
    virtual RunResult run(const Snapshot& snapshot, const std::string& command) = 0;
};

/// Runs `command` through /bin/sh in a fresh temporary copy of the
/// snapshot. Exit 0 is a pass; timeout or spawn failure is an error.
class CommandRunner final : public TestRunner {
  public:
    explicit CommandRunner(std::chrono::milliseconds timeout = std::chrono::seconds(300));
    RunResult run(const Snapshot& snapshot, const std::string& command) override;

  private:
    std::chrono::milliseconds timeout_;
};

/// In-process runner deciding from file contents.
class StubRunner final : public TestRunner {
  public:
    using Rule = std::function<RunResult(const Snapshot&, const std::string&)>;
    explicit StubRunner(Rule rule) : rule_(std::move(rule)) {}
    RunResult run(const Snapshot& snapshot, const std::string& command) override { return rule_(snapshot, command); }

  private:
    Rule rule_;
};

struct DependencyCheck {
    bool depends = false;
    std::string reason;  // set when !depends
};

/// Applies every hunk except `candidate` and expects the test to fail.
DependencyCheck verify_dependency(const Snapshot& snapshot, const PatchSet& patchset, const Hunk& candidate,
                                  TestRunner& runner, const std::string& test_command);

struct InfillingProblem {
    std::string problem_id;
    std::string repo_ref;
    std::string file;
    std::string prefix;
    std::string suffix;
    std::string ground_truth_middle;
    std::string test_command;
    std::vector<std::string> applied_patches;
};

void to_json(nlohmann::json& j, const InfillingProblem& p);
void from_json(const nlohmann::json& j, InfillingProblem& p);

InfillingProblem build_problem(const Snapshot& snapshot, const PatchSet& patchset, const Hunk& candidate,
                               const std::string& test_command);

/// Base snapshot with the problem's applied patches, and its file replaced
/// by prefix + generation + suffix.
Snapshot problem_snapshot(const Snapshot& snapshot, const PatchSet& patchset, const InfillingProblem& problem,
                          std::string_view generation);

RunResult evaluate_problem(const InfillingProblem& problem, std::string_view generation, const Snapshot& snapshot,
                           const PatchSet& patchset, TestRunner& runner);

struct Discarded {
    std::string hunk_id;
    std::string reason;
};

struct BenchBuildResult {
    std::vector<InfillingProblem> problems;
    std::vector<Discarded> discarded;
    std::optional<std::string> fatal;  // full patch did not pass
};

BenchBuildResult build_benchmark(const Snapshot& snapshot, const PatchSet& patchset, TestRunner& runner,
                                 const std::string& test_command, unsigned workers = 1);

struct BenchEvalResult {
    std::size_t problems = 0;
    std::size_t passed = 0;
    std::size_t missing = 0;
    double pass_at_1 = 0.0;
    std::map<std::string, RunResult> verdicts;
};

nlohmann::json to_json(const BenchEvalResult& result);

/// `generations` maps problem id to generated middle; a missing entry fails.
BenchEvalResult evaluate_benchmark(const std::vector<InfillingProblem>& problems,
                                   const std::map<std::string, std::string>& generations, const Snapshot& snapshot,
                                   const PatchSet& patchset, TestRunner& runner, unsigned workers = 1);

}  // namespace fimcraft
