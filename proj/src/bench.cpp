#include "fimcraft/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <unistd.h>

#include "fimcraft/process.hpp"
#include "fimcraft/util.hpp"

namespace fimcraft {

std::string_view to_string(HunkKind kind)
{
    switch (kind) {
    case HunkKind::add:
        return "add";
    case HunkKind::remove:
        return "delete";
    case HunkKind::modify:
        return "modify";
    }
    return "modify";
}

std::string_view to_string(Verdict verdict)
{
    switch (verdict) {
    case Verdict::pass:
        return "pass";
    case Verdict::fail:
        return "fail";
    case Verdict::error:
        return "error";
    }
    return "error";
}

std::size_t Hunk::new_line_count() const
{
    if (new_lines.empty()) return 0;
    auto n = static_cast<std::size_t>(std::count(new_lines.begin(), new_lines.end(), '\n'));
    return new_lines.back() == '\n' ? n : n + 1;
}

namespace {

std::vector<std::string_view> split_keep_newlines(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        auto end = nl == std::string_view::npos ? text.size() : nl + 1;
        lines.push_back(text.substr(start, end - start));
        start = end;
    }
    return lines;
}

std::string strip_diff_path(std::string_view raw)
{
    auto tab = raw.find('\t');
    if (tab != std::string_view::npos) raw = raw.substr(0, tab);
    raw = trim(raw);
    if (raw.starts_with("a/") || raw.starts_with("b/")) raw.remove_prefix(2);
    return std::string(raw);
}

std::size_t parse_number(std::string_view text, std::string_view what)
{
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw Error(ErrorCode::invalid_input, "malformed " + std::string(what) + " in diff: " + std::string(text));
    }
    return value;
}

// "-a,b" or "-a" -> (a, b)
std::pair<std::size_t, std::size_t> parse_range(std::string_view text)
{
    text.remove_prefix(1);
    auto comma = text.find(',');
    if (comma == std::string_view::npos) return {parse_number(text, "range"), 1};
    return {parse_number(text.substr(0, comma), "range"), parse_number(text.substr(comma + 1), "range")};
}

}  // namespace

PatchSet parse_unified_diff(std::string_view diff, const std::string& source_pr_id)
{
    PatchSet patch;
    patch.source_pr_id = source_pr_id;

    std::string file;
    std::size_t old_remaining = 0;
    std::size_t new_remaining = 0;
    std::size_t cursor = 0;
    std::optional<Hunk> block;
    enum class Last { other, removed, added } last = Last::other;

    auto flush = [&] {
        if (!block) return;
        block->old_count = block->old_lines.size();
        if (block->old_count == 0) {
            block->kind = HunkKind::add;
        } else if (block->new_lines.empty()) {
            block->kind = HunkKind::remove;
        } else {
            block->kind = HunkKind::modify;
        }
        block->id = source_pr_id + "#" + std::to_string(patch.hunks.size());
        patch.hunks.push_back(std::move(*block));
        block.reset();
        last = Last::other;
    };
    auto open_block = [&] {
        if (!block) {
            block.emplace();
            block->file = file;
            block->old_start = cursor;
        }
    };

    for (auto raw : split_keep_newlines(diff)) {
        std::string_view line = raw;
        if (line.ends_with('\n')) line.remove_suffix(1);
        if (line.ends_with('\r')) line.remove_suffix(1);

        if (line.starts_with("\\")) {
            // "\ No newline at end of file" applies to the previous line.
            std::string* target = nullptr;
            if (block && last == Last::removed) target = &block->old_lines.back();
            if (block && last == Last::added) target = &block->new_lines;
            if (target != nullptr && target->ends_with('\n')) target->pop_back();
            continue;
        }
        if (old_remaining > 0 || new_remaining > 0) {
            char tag = line.empty() ? ' ' : line.front();
            std::string body = line.empty() ? std::string() : std::string(line.substr(1)) + "\n";
            if (tag == ' ') {
                flush();
                if (old_remaining == 0 || new_remaining == 0) {
                    throw Error(ErrorCode::invalid_input, "diff hunk longer than its header");
                }
                --old_remaining;
                --new_remaining;
                ++cursor;
            } else if (tag == '-') {
                if (old_remaining == 0) throw Error(ErrorCode::invalid_input, "diff hunk longer than its header");
                open_block();
                block->old_lines.push_back(std::move(body));
                last = Last::removed;
                --old_remaining;
                ++cursor;
            } else if (tag == '+') {
                if (new_remaining == 0) throw Error(ErrorCode::invalid_input, "diff hunk longer than its header");
                open_block();
                block->new_lines += body;
                last = Last::added;
                --new_remaining;
            } else {
                throw Error(ErrorCode::invalid_input, "unexpected line inside diff hunk: " + std::string(line));
            }
            continue;
        }
        flush();
        if (line.starts_with("--- ")) {
            file.clear();
        } else if (line.starts_with("+++ ")) {
            auto target = strip_diff_path(line.substr(4));
            if (target == "/dev/null") {
                throw Error(ErrorCode::invalid_input, "file deletions are not supported in patch sets");
            }
            file = target;
        } else if (line.starts_with("@@")) {
            if (file.empty()) throw Error(ErrorCode::invalid_input, "hunk header before file header");
            auto end = line.find("@@", 2);
            if (end == std::string_view::npos) throw Error(ErrorCode::invalid_input, "malformed hunk header");
            auto header = trim(line.substr(2, end - 2));
            auto space = header.find(' ');
            if (space == std::string_view::npos || !header.starts_with('-')) {
                throw Error(ErrorCode::invalid_input, "malformed hunk header: " + std::string(line));
            }
            auto [old_start, old_count] = parse_range(header.substr(0, space));
            auto [new_start, new_count] = parse_range(trim(header.substr(space + 1)));
            (void)new_start;
            old_remaining = old_count;
            new_remaining = new_count;
            cursor = old_count == 0 ? old_start : old_start - 1;
        } else if (line.starts_with('+') || line.starts_with('-')) {
            throw Error(ErrorCode::invalid_input, "diff hunk longer than its header");
        }
    }
    flush();
    return patch;
}

Snapshot Snapshot::load(const std::filesystem::path& root)
{
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) {
        throw Error(ErrorCode::io, "snapshot is not a directory: " + root.string());
    }
    Snapshot snap;
    for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator(); ++it) {
        if (it->is_directory() && it->path().filename() == ".git") {
            it.disable_recursion_pending();
            continue;
        }
        if (!it->is_regular_file()) continue;
        snap.files[fs::relative(it->path(), root).generic_string()] = read_file(it->path());
    }
    return snap;
}

void Snapshot::materialize(const std::filesystem::path& dir) const
{
    for (const auto& [path, content] : files) write_file(dir / path, content);
}

std::string Snapshot::digest() const
{
    std::string data;
    for (const auto& [path, content] : files) {
        data += path;
        data.push_back('\0');
        data += std::to_string(content.size());
        data.push_back('\0');
        data += content;
    }
    return sha256_hex(data);
}

namespace {

// Applies the hunks of one file. If `track` is given, stores the byte
// offset at which that hunk's new text starts in the result.
std::string patch_file(std::string_view base, std::vector<const Hunk*> hunks, const Hunk* track = nullptr,
                       std::size_t* track_offset = nullptr)
{
    std::stable_sort(hunks.begin(), hunks.end(),
                     [](const Hunk* a, const Hunk* b) { return a->old_start < b->old_start; });
    auto lines = split_keep_newlines(base);
    std::string out;
    std::size_t next = 0;
    for (const auto* h : hunks) {
        if (h->old_start < next) {
            throw Error(ErrorCode::invalid_input, "overlapping hunks in " + h->file);
        }
        if (h->old_start + h->old_count > lines.size()) {
            throw Error(ErrorCode::invalid_input, "hunk " + h->id + " runs past the end of " + h->file);
        }
        for (; next < h->old_start; ++next) out += lines[next];
        for (std::size_t i = 0; i < h->old_count; ++i) {
            if (lines[h->old_start + i] != h->old_lines[i]) {
                throw Error(ErrorCode::invalid_input, "hunk " + h->id + " does not apply to " + h->file);
            }
        }
        if (h == track && track_offset != nullptr) *track_offset = out.size();
        out += h->new_lines;
        next = h->old_start + h->old_count;
    }
    for (; next < lines.size(); ++next) out += lines[next];
    return out;
}

std::map<std::string, std::vector<const Hunk*>> by_file(const std::vector<Hunk>& hunks)
{
    std::map<std::string, std::vector<const Hunk*>> out;
    for (const auto& h : hunks) out[h.file].push_back(&h);
    return out;
}

std::vector<Hunk> without(const PatchSet& patchset, const std::string& hunk_id)
{
    std::vector<Hunk> out;
    for (const auto& h : patchset.hunks) {
        if (h.id != hunk_id) out.push_back(h);
    }
    return out;
}

std::string base_content(const Snapshot& snapshot, const std::string& file)
{
    auto it = snapshot.files.find(file);
    return it == snapshot.files.end() ? std::string() : it->second;
}

}  // namespace

Snapshot apply_hunks(const Snapshot& snapshot, const std::vector<Hunk>& hunks)
{
    Snapshot out = snapshot;
    for (const auto& [file, file_hunks] : by_file(hunks)) {
        out.files[file] = patch_file(base_content(snapshot, file), file_hunks);
    }
    return out;
}

std::vector<Hunk> find_candidate_hunks(const PatchSet& patchset)
{
    std::vector<Hunk> out;
    for (const auto& h : patchset.hunks) {
        if (h.kind != HunkKind::remove && h.new_line_count() >= 2) out.push_back(h);
    }
    return out;
}

CommandRunner::CommandRunner(std::chrono::milliseconds timeout) : timeout_(timeout) {}

RunResult CommandRunner::run(const Snapshot& snapshot, const std::string& command)
{
    auto pattern = (std::filesystem::temp_directory_path() / "fimcraft-run-XXXXXX").string();
    if (mkdtemp(pattern.data()) == nullptr) {
        return {Verdict::error, "cannot create working directory"};
    }
    std::filesystem::path dir = pattern;
    RunResult result;
    try {
        snapshot.materialize(dir);
        auto r = run_command(command, dir, timeout_);
        if (r.spawn_failed) {
            result = {Verdict::error, "spawn_failed: " + r.output};
        } else if (r.timed_out) {
            result = {Verdict::error, "timeout"};
        } else if (r.exit_code == 0) {
            result = {Verdict::pass, ""};
        } else {
            result = {Verdict::fail, "exit " + std::to_string(r.exit_code)};
        }
    } catch (const std::exception& e) {
        result = {Verdict::error, e.what()};
    }
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
    return result;
}

DependencyCheck verify_dependency(const Snapshot& snapshot, const PatchSet& patchset, const Hunk& candidate,
                                  TestRunner& runner, const std::string& test_command)
{
    auto r = runner.run(apply_hunks(snapshot, without(patchset, candidate.id)), test_command);
    switch (r.verdict) {
    case Verdict::fail:
        return {true, ""};
    case Verdict::pass:
        return {false, "test_passes_without_candidate"};
    case Verdict::error:
        break;
    }
    return {false, r.reason == "timeout" ? std::string("timeout") : "runner_error: " + r.reason};
}

void to_json(nlohmann::json& j, const InfillingProblem& p)
{
    j = nlohmann::json{
        {"problem_id", p.problem_id},
        {"repo_ref", p.repo_ref},
        {"file", p.file},
        {"prefix", p.prefix},
        {"suffix", p.suffix},
        {"ground_truth_middle", p.ground_truth_middle},
        {"test_command", p.test_command},
        {"applied_patches", p.applied_patches},
    };
}

void from_json(const nlohmann::json& j, InfillingProblem& p)
{
    j.at("problem_id").get_to(p.problem_id);
    j.at("repo_ref").get_to(p.repo_ref);
    j.at("file").get_to(p.file);
    j.at("prefix").get_to(p.prefix);
    j.at("suffix").get_to(p.suffix);
    j.at("ground_truth_middle").get_to(p.ground_truth_middle);
    j.at("test_command").get_to(p.test_command);
    j.at("applied_patches").get_to(p.applied_patches);
}

InfillingProblem build_problem(const Snapshot& snapshot, const PatchSet& patchset, const Hunk& candidate,
                               const std::string& test_command)
{
    const Hunk* tracked = nullptr;
    std::vector<const Hunk*> same_file;
    InfillingProblem p;
    for (const auto& h : patchset.hunks) {
        if (h.file == candidate.file) same_file.push_back(&h);
        if (h.id == candidate.id) {
            tracked = &h;
        } else {
            p.applied_patches.push_back(h.id);
        }
    }
    if (tracked == nullptr) {
        throw Error(ErrorCode::invalid_input, "candidate " + candidate.id + " is not part of the patch set");
    }
    std::size_t offset = 0;
    auto full = patch_file(base_content(snapshot, candidate.file), same_file, tracked, &offset);
    auto middle_len = tracked->new_lines.size();

    p.problem_id = sha256_hex(patchset.source_pr_id + '\0' + candidate.file + '\0' + candidate.id).substr(0, 16);
    p.repo_ref = snapshot.digest();
    p.file = candidate.file;
    p.prefix = full.substr(0, offset);
    p.ground_truth_middle = tracked->new_lines;
    p.suffix = full.substr(offset + middle_len);
    p.test_command = test_command;
    return p;
}

Snapshot problem_snapshot(const Snapshot& snapshot, const PatchSet& patchset, const InfillingProblem& problem,
                          std::string_view generation)
{
    if (snapshot.digest() != problem.repo_ref) {
        throw Error(ErrorCode::invalid_input, "snapshot does not match problem " + problem.problem_id);
    }
    std::vector<Hunk> applied;
    for (const auto& id : problem.applied_patches) {
        auto it = std::find_if(patchset.hunks.begin(), patchset.hunks.end(), [&](const Hunk& h) { return h.id == id; });
        if (it == patchset.hunks.end()) {
            throw Error(ErrorCode::invalid_input, "unknown hunk " + id + " in problem " + problem.problem_id);
        }
        if (it->file != problem.file) applied.push_back(*it);
    }
    auto snap = apply_hunks(snapshot, applied);
    snap.files[problem.file] = problem.prefix + std::string(generation) + problem.suffix;
    return snap;
}

RunResult evaluate_problem(const InfillingProblem& problem, std::string_view generation, const Snapshot& snapshot,
                           const PatchSet& patchset, TestRunner& runner)
{
    return runner.run(problem_snapshot(snapshot, patchset, problem, generation), problem.test_command);
}

BenchBuildResult build_benchmark(const Snapshot& snapshot, const PatchSet& patchset, TestRunner& runner,
                                 const std::string& test_command, unsigned workers)
{
    BenchBuildResult result;
    auto full = runner.run(apply_hunks(snapshot, patchset.hunks), test_command);
    if (full.verdict != Verdict::pass) {
        result.fatal = "full patch set does not pass: " + std::string(to_string(full.verdict)) +
                       (full.reason.empty() ? "" : " (" + full.reason + ")");
        return result;
    }

    auto candidates = find_candidate_hunks(patchset);
    for (const auto& h : patchset.hunks) {
        bool is_candidate = std::any_of(candidates.begin(), candidates.end(), [&](const Hunk& c) { return c.id == h.id; });
        if (!is_candidate) result.discarded.push_back({h.id, "not_multiline"});
    }

    std::vector<std::optional<InfillingProblem>> built(candidates.size());
    std::vector<std::string> reasons(candidates.size());
    parallel_for(candidates.size(), workers, [&](std::size_t i) {
        const auto& c = candidates[i];
        auto check = verify_dependency(snapshot, patchset, c, runner, test_command);
        if (!check.depends) {
            reasons[i] = check.reason;
            return;
        }
        auto problem = build_problem(snapshot, patchset, c, test_command);
        auto empty = evaluate_problem(problem, "", snapshot, patchset, runner);
        if (empty.verdict == Verdict::pass) {
            reasons[i] = "test_passes_with_empty_middle";
            return;
        }
        built[i] = std::move(problem);
    });
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (built[i]) {
            result.problems.push_back(std::move(*built[i]));
        } else {
            result.discarded.push_back({candidates[i].id, reasons[i]});
        }
    }
    // Patch order, not string order: "pr#10" must follow "pr#9".
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < patchset.hunks.size(); ++i) position[patchset.hunks[i].id] = i;
    std::sort(result.discarded.begin(), result.discarded.end(), [&](const Discarded& a, const Discarded& b) {
        return position[a.hunk_id] < position[b.hunk_id];
    });
    return result;
}

nlohmann::json to_json(const BenchEvalResult& result)
{
    nlohmann::json verdicts = nlohmann::json::object();
    for (const auto& [id, r] : result.verdicts) {
        verdicts[id] = {{"verdict", std::string(to_string(r.verdict))}, {"reason", r.reason}};
    }
    return nlohmann::json{
        {"problems", result.problems},
        {"passed", result.passed},
        {"missing", result.missing},
        {"pass_at_1", result.pass_at_1},
        {"verdicts", verdicts},
    };
}

BenchEvalResult evaluate_benchmark(const std::vector<InfillingProblem>& problems,
                                   const std::map<std::string, std::string>& generations, const Snapshot& snapshot,
                                   const PatchSet& patchset, TestRunner& runner, unsigned workers)
{
    std::vector<RunResult> results(problems.size());
    parallel_for(problems.size(), workers, [&](std::size_t i) {
        auto it = generations.find(problems[i].problem_id);
        if (it == generations.end()) {
            results[i] = {Verdict::fail, "missing_generation"};
            return;
        }
        results[i] = evaluate_problem(problems[i], it->second, snapshot, patchset, runner);
    });
    BenchEvalResult out;
    out.problems = problems.size();
    for (std::size_t i = 0; i < problems.size(); ++i) {
        if (results[i].reason == "missing_generation") ++out.missing;
        if (results[i].verdict == Verdict::pass) ++out.passed;
        out.verdicts[problems[i].problem_id] = results[i];
    }
    out.pass_at_1 = problems.empty() ? 0.0 : static_cast<double>(out.passed) / static_cast<double>(problems.size());
    return out;
}

}  // namespace fimcraft
