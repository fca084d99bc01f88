#include "fimcraft/cli.hpp"

#include <filesystem>
#include <iostream>
#include <memory>
#include <thread>

#include "CLI11.hpp"
#include "fimcraft/assembler.hpp"
#include "fimcraft/bench.hpp"
#include "fimcraft/config.hpp"
#include "fimcraft/context.hpp"
#include "fimcraft/curriculum.hpp"
#include "fimcraft/ingest.hpp"
#include "fimcraft/metrics.hpp"
#include "fimcraft/resolver.hpp"
#include "fimcraft/telemetry.hpp"

#ifndef FIMCRAFT_VERSION
#define FIMCRAFT_VERSION "0.0.0"
#endif

namespace fimcraft {

std::string version_string()
{
    return std::string("fimcraft ") + FIMCRAFT_VERSION + " (resolver protocol " +
           std::to_string(kResolverProtoVersion) + ")";
}

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- jsonl ----------------------------------------------------------------

template <class T>
std::vector<T> read_jsonl(const fs::path& path)
{
    auto text = read_file(path);
    std::vector<T> out;
    std::size_t start = 0;
    std::size_t lineno = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        auto end = nl == std::string::npos ? text.size() : nl;
        ++lineno;
        auto line = trim(std::string_view(text).substr(start, end - start));
        start = end + 1;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line).get<T>());
        } catch (const json::exception& e) {
            throw Error(ErrorCode::invalid_input, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(ErrorCode::invalid_input, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

template <class T>
std::string to_jsonl(const std::vector<T>& rows)
{
    std::string out;
    for (const auto& r : rows) {
        out += json(r).dump();
        out.push_back('\n');
    }
    return out;
}

std::string file_sha(const fs::path& path)
{
    return sha256_hex(read_file(path));
}

std::string files_digest(const std::vector<SourceFile>& files)
{
    std::string data;
    for (const auto& f : files) {
        data += f.path;
        data.push_back('\0');
        data += std::to_string(f.content.size());
        data.push_back('\0');
        data += f.content;
    }
    return sha256_hex(data);
}

// ---- manifest ---------------------------------------------------------------

class Manifest {
  public:
    Manifest(const std::string& subcommand, const PipelineConfig& cfg)
        : j_{
              {"tool", "fimcraft"},
              {"version", FIMCRAFT_VERSION},
              {"resolver_proto_version", kResolverProtoVersion},
              {"subcommand", subcommand},
              {"config_hash", cfg.hash},
              {"seed", cfg.seed},
              {"inputs", json::object()},
              {"outputs", json::object()},
              {"counts", json::object()},
          }
    {
    }

    void input(const std::string& name, const std::string& digest) { j_["inputs"][name] = digest; }

    void output(const std::string& name, const fs::path& path, const std::string& content)
    {
        write_file(path, content);
        j_["outputs"][name] = sha256_hex(content);
    }

    json& counts() { return j_["counts"]; }
    json& operator[](const std::string& key) { return j_[key]; }

    void write(const fs::path& path) const { write_file(path, j_.dump(2) + "\n"); }

  private:
    json j_;
};

fs::path default_manifest(const fs::path& out)
{
    return fs::path(out.string() + ".manifest.json");
}

// ---- stages -----------------------------------------------------------------

struct FileRecord {
    std::string repo_id;
    std::string path;
    std::string language;
    std::size_t size_bytes = 0;
    bool accepted = false;
    std::vector<std::string> reasons;
    std::string root;
    std::string sha256;
};

void to_json(json& j, const FileRecord& r)
{
    j = json{
        {"repo_id", r.repo_id}, {"path", r.path},         {"language", r.language}, {"size_bytes", r.size_bytes},
        {"accepted", r.accepted}, {"reasons", r.reasons}, {"root", r.root},         {"sha256", r.sha256},
    };
}

void from_json(const json& j, FileRecord& r)
{
    j.at("repo_id").get_to(r.repo_id);
    j.at("path").get_to(r.path);
    j.at("language").get_to(r.language);
    j.at("size_bytes").get_to(r.size_bytes);
    j.at("accepted").get_to(r.accepted);
    r.reasons = j.value("reasons", std::vector<std::string>{});
    j.at("root").get_to(r.root);
    r.sha256 = j.value("sha256", std::string{});
}

struct IngestOutput {
    std::vector<FileRecord> records;
    std::vector<SourceFile> accepted;
    std::vector<ScanWarning> warnings;
    std::map<std::string, std::size_t> reasons;
};

std::string default_repo_id(const fs::path& root)
{
    auto name = fs::weakly_canonical(root).filename().string();
    return name.empty() ? std::string("repo") : name;
}

IngestOutput stage_ingest(const PipelineConfig& cfg, const fs::path& root, const std::string& repo_id,
                          unsigned workers)
{
    auto scan = scan_repository(root, cfg.languages, repo_id);
    std::vector<FilterVerdict> verdicts(scan.files.size());
    parallel_for(scan.files.size(), workers,
                 [&](std::size_t i) { verdicts[i] = apply_quality_filters(scan.files[i], cfg.filters); });

    IngestOutput out;
    out.warnings = std::move(scan.warnings);
    for (std::size_t i = 0; i < scan.files.size(); ++i) {
        auto& f = scan.files[i];
        FileRecord r{f.repo_id, f.path, f.language, f.size_bytes, verdicts[i].accepted, verdicts[i].reasons,
                     root.string(), sha256_hex(f.content)};
        for (const auto& reason : r.reasons) ++out.reasons[reason];
        out.records.push_back(std::move(r));
        if (verdicts[i].accepted) out.accepted.push_back(std::move(f));
    }
    return out;
}

std::vector<SourceFile> load_accepted(const std::vector<FileRecord>& records)
{
    std::vector<SourceFile> files;
    for (const auto& r : records) {
        if (!r.accepted) continue;
        SourceFile f{r.repo_id, r.path, r.language, read_file(fs::path(r.root) / r.path), r.size_bytes};
        if (!r.sha256.empty() && sha256_hex(f.content) != r.sha256) {
            throw Error(ErrorCode::invalid_input, "file changed since ingest: " + r.path);
        }
        f.size_bytes = f.content.size();
        files.push_back(std::move(f));
    }
    return files;
}

struct ContextOutput {
    std::vector<GatherResult> results;  // aligned with the examples
    std::size_t chunks = 0;
    std::size_t fallbacks = 0;
};

ContextOutput stage_context(const PipelineConfig& cfg, const std::vector<FimExample>& examples,
                            const std::vector<SourceFile>& repo_files, const fs::path& root, unsigned workers)
{
    ContextOutput out;
    auto index = index_repository(repo_files, cfg.taxonomy, cfg.chunk_tokens, cfg.bm25, workers);
    out.chunks = index.chunks.size();
    auto filter = cfg.symbol_filter();
    std::unique_ptr<ResolverPool> pool;
    if (!cfg.resolver.command.empty()) {
        pool = std::make_unique<ResolverPool>(cfg.resolver.command, cfg.resolver.pool_size,
                                              std::chrono::milliseconds(cfg.resolver.timeout_ms));
    }
    auto options = cfg.context;
    options.project_root = fs::absolute(root).lexically_normal().string();

    out.results.resize(examples.size());
    parallel_for(examples.size(), workers, [&](std::size_t i) {
        out.results[i] = gather_context(examples[i], index, cfg.taxonomy, filter, pool.get(), options);
    });
    for (const auto& r : out.results) {
        for (const auto& w : r.warnings) {
            if (w.starts_with("resolver_unavailable")) {
                ++out.fallbacks;
                break;
            }
        }
    }
    return out;
}

struct ContextRecord {
    std::string example_id;
    std::vector<ContextSnippet> snippets;
    std::vector<std::string> warnings;
};

void to_json(json& j, const ContextRecord& r)
{
    j = json{{"example_id", r.example_id}, {"snippets", r.snippets}, {"warnings", r.warnings}};
}

void from_json(const json& j, ContextRecord& r)
{
    j.at("example_id").get_to(r.example_id);
    j.at("snippets").get_to(r.snippets);
    r.warnings = j.value("warnings", std::vector<std::string>{});
}

std::vector<ContextRecord> context_records(const std::vector<FimExample>& examples, const ContextOutput& ctx)
{
    std::vector<ContextRecord> out;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        out.push_back({examples[i].id, ctx.results[i].snippets, ctx.results[i].warnings});
    }
    return out;
}

std::map<std::string, std::vector<ContextSnippet>> context_map(const std::vector<ContextRecord>& records)
{
    std::map<std::string, std::vector<ContextSnippet>> out;
    for (const auto& r : records) out[r.example_id] = r.snippets;
    return out;
}

json skipped_json(const std::map<std::string, std::size_t>& m)
{
    json j = json::object();
    for (const auto& [k, v] : m) j[k] = v;
    return j;
}

// ---- options shared by subcommands --------------------------------------------

struct Globals {
    std::string config_path;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
};

PipelineConfig load_config(const Globals& g)
{
    if (!g.config_path.empty()) return load_pipeline_config(g.config_path);
#ifdef FIMCRAFT_DEFAULT_CONFIG
    if (fs::is_regular_file(FIMCRAFT_DEFAULT_CONFIG)) return load_pipeline_config(FIMCRAFT_DEFAULT_CONFIG);
#endif
    PipelineConfig cfg;
    cfg.rehash();
    return cfg;
}

struct Overrides {
    std::vector<CLI::Option*> seed_opts;
    std::uint64_t seed = 0;
    CLI::Option* budget_opt = nullptr;
    std::size_t budget = 0;
    CLI::Option* fim_rate_opt = nullptr;
    double fim_rate = 0.5;
    CLI::Option* max_tokens_opt = nullptr;
    std::size_t max_tokens = 0;
    CLI::Option* sentinels_opt = nullptr;
    std::string sentinels;

    void apply(PipelineConfig& cfg) const
    {
        for (auto* opt : seed_opts) {
            if (opt->count() > 0) cfg.seed = seed;
        }
        if (budget_opt != nullptr && budget_opt->count() > 0) cfg.context.budget = budget;
        if (fim_rate_opt != nullptr && fim_rate_opt->count() > 0) cfg.assembly.fim_rate = fim_rate;
        if (max_tokens_opt != nullptr && max_tokens_opt->count() > 0) cfg.assembly.max_tokens = max_tokens;
        if (sentinels_opt != nullptr && sentinels_opt->count() > 0) cfg.sentinels = sentinels;
        cfg.assembly.validate();
        cfg.active_sentinels();
        cfg.rehash();
    }
};

// ---- subcommands ------------------------------------------------------------

int cmd_ingest(const Globals& g, const Overrides& ov, const std::string& root, std::string repo_id,
               const std::string& out_path, std::string manifest_path)
{
    auto cfg = load_config(g);
    ov.apply(cfg);
    if (repo_id.empty()) repo_id = default_repo_id(root);
    auto ingest = stage_ingest(cfg, root, repo_id, g.workers);

    Manifest m("ingest", cfg);
    m.input("root", files_digest(ingest.accepted));
    m.output("files", out_path, to_jsonl(ingest.records));
    m.counts() = {{"scanned", ingest.records.size()},
                  {"accepted", ingest.accepted.size()},
                  {"rejected", ingest.records.size() - ingest.accepted.size()},
                  {"reasons", skipped_json(ingest.reasons)},
                  {"warnings", ingest.warnings.size()}};
    json warnings = json::array();
    for (const auto& w : ingest.warnings) warnings.push_back({{"path", w.path}, {"message", w.message}});
    m["warnings"] = warnings;
    m.write(manifest_path.empty() ? default_manifest(out_path) : fs::path(manifest_path));

    std::cout << "ingest: " << ingest.accepted.size() << "/" << ingest.records.size() << " files accepted\n";
    for (const auto& w : ingest.warnings) std::cerr << "warning: " << w.path << ": " << w.message << "\n";
    return ingest.warnings.empty() ? 0 : 1;
}

CorpusStats stats_for(const PipelineConfig& cfg, const std::vector<SourceFile>& files, const std::string& stats_path,
                      bool reuse, unsigned workers, Manifest& m)
{
    if (reuse) {
        m.input("stats", file_sha(stats_path));
        return CorpusStats::from_json(json::parse(read_file(stats_path)));
    }
    auto stats = build_corpus_stats(files, cfg.taxonomy, cfg.quantile_sample_cap, cfg.seed, workers);
    m.output("stats", stats_path, stats.to_json().dump(2) + "\n");
    return stats;
}

int cmd_extract(const Globals& g, const Overrides& ov, const std::string& files_path, const std::string& stats_path,
                bool reuse_stats, const std::string& dist_path, const std::string& out_path,
                std::string manifest_path)
{
    auto cfg = load_config(g);
    if (!dist_path.empty()) {
        try {
            cfg.curriculum = CurriculumDistribution::from_json(json::parse(read_file(dist_path)));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::invalid_config, "bad distribution file: " + std::string(e.what()));
        }
    }
    ov.apply(cfg);
    auto files = load_accepted(read_jsonl<FileRecord>(files_path));

    Manifest m("extract", cfg);
    m.input("files", file_sha(files_path));
    if (!dist_path.empty()) m.input("dist", file_sha(dist_path));
    auto stats = stats_for(cfg, files, stats_path, reuse_stats, g.workers, m);
    auto result = extract_dataset(files, cfg.taxonomy, stats, cfg.curriculum,
                                  {cfg.seed, cfg.examples_per_file, g.workers});
    m.output("examples", out_path, to_jsonl(result.examples));
    m.counts() = {{"files", files.size()},
                  {"examples", result.examples.size()},
                  {"resampled", result.resampled},
                  {"skipped", skipped_json(result.skipped)}};
    m.write(manifest_path.empty() ? default_manifest(out_path) : fs::path(manifest_path));
    std::cout << "extract: " << result.examples.size() << " examples from " << files.size() << " files\n";
    return 0;
}

int cmd_context(const Globals& g, const Overrides& ov, const std::string& examples_path, const std::string& repo,
                const std::string& out_path, std::string manifest_path)
{
    auto cfg = load_config(g);
    ov.apply(cfg);
    auto examples = read_jsonl<FimExample>(examples_path);
    auto ingest = stage_ingest(cfg, repo, default_repo_id(repo), g.workers);
    auto ctx = stage_context(cfg, examples, ingest.accepted, repo, g.workers);

    Manifest m("context", cfg);
    m.input("examples", file_sha(examples_path));
    m.input("repo", files_digest(ingest.accepted));
    m.output("contexts", out_path, to_jsonl(context_records(examples, ctx)));
    m.counts() = {{"examples", examples.size()}, {"chunks", ctx.chunks}, {"resolver_fallbacks", ctx.fallbacks}};
    m.write(manifest_path.empty() ? default_manifest(out_path) : fs::path(manifest_path));
    std::cout << "context: " << examples.size() << " examples, " << ctx.chunks << " chunks indexed\n";
    return 0;
}

int cmd_assemble(const Globals& g, const Overrides& ov, const std::string& examples_path,
                 const std::string& contexts_path, const std::string& out_path, std::string manifest_path)
{
    auto cfg = load_config(g);
    ov.apply(cfg);
    auto examples = read_jsonl<FimExample>(examples_path);
    std::map<std::string, std::vector<ContextSnippet>> contexts;
    Manifest m("assemble", cfg);
    m.input("examples", file_sha(examples_path));
    if (!contexts_path.empty()) {
        contexts = context_map(read_jsonl<ContextRecord>(contexts_path));
        m.input("contexts", file_sha(contexts_path));
    }
    auto result = assemble_dataset(examples, contexts, cfg.assembly, cfg.active_sentinels(), cfg.seed, g.workers);
    m.output("training", out_path, to_jsonl(result.records));
    std::size_t fim = 0;
    for (const auto& r : result.records) fim += r.format == RecordFormat::fim ? 1 : 0;
    m.counts() = {{"examples", examples.size()},
                  {"records", result.records.size()},
                  {"fim_records", fim},
                  {"skipped", skipped_json(result.skipped)}};
    m.write(manifest_path.empty() ? default_manifest(out_path) : fs::path(manifest_path));
    std::cout << "assemble: " << result.records.size() << " records\n";
    return 0;
}

int cmd_pipeline(const Globals& g, const Overrides& ov, const std::string& root, std::string repo_id,
                 const std::string& out_dir)
{
    auto cfg = load_config(g);
    ov.apply(cfg);
    if (repo_id.empty()) repo_id = default_repo_id(root);
    fs::path dir = out_dir;
    Manifest m("pipeline", cfg);
    json stages = json::object();

    auto ingest = stage_ingest(cfg, root, repo_id, g.workers);
    m.input("root", files_digest(ingest.accepted));
    m.output("files", dir / "files.jsonl", to_jsonl(ingest.records));
    json warnings = json::array();
    for (const auto& w : ingest.warnings) warnings.push_back({{"path", w.path}, {"message", w.message}});
    stages["ingest"] = {{"scanned", ingest.records.size()},
                        {"accepted", ingest.accepted.size()},
                        {"reasons", skipped_json(ingest.reasons)},
                        {"warnings", warnings}};

    auto stats = stats_for(cfg, ingest.accepted, dir / "stats.json", false, g.workers, m);
    auto extraction = extract_dataset(ingest.accepted, cfg.taxonomy, stats, cfg.curriculum,
                                      {cfg.seed, cfg.examples_per_file, g.workers});
    m.output("examples", dir / "examples.jsonl", to_jsonl(extraction.examples));
    stages["extract"] = {{"examples", extraction.examples.size()},
                         {"resampled", extraction.resampled},
                         {"skipped", skipped_json(extraction.skipped)}};

    auto ctx = stage_context(cfg, extraction.examples, ingest.accepted, root, g.workers);
    auto records = context_records(extraction.examples, ctx);
    m.output("contexts", dir / "contexts.jsonl", to_jsonl(records));
    stages["context"] = {{"chunks", ctx.chunks}, {"resolver_fallbacks", ctx.fallbacks}};

    auto assembly = assemble_dataset(extraction.examples, context_map(records), cfg.assembly,
                                     cfg.active_sentinels(), cfg.seed, g.workers);
    m.output("training", dir / "training.jsonl", to_jsonl(assembly.records));
    std::size_t fim = 0;
    for (const auto& r : assembly.records) fim += r.format == RecordFormat::fim ? 1 : 0;
    stages["assemble"] = {{"records", assembly.records.size()},
                          {"fim_records", fim},
                          {"skipped", skipped_json(assembly.skipped)}};

    m["stages"] = stages;
    bool partial = !ingest.warnings.empty();
    m["status"] = partial ? "partial" : "ok";
    m.write(dir / "manifest.json");
    std::cout << "pipeline: " << ingest.accepted.size() << " files, " << extraction.examples.size() << " examples, "
              << assembly.records.size() << " records -> " << dir.string() << "\n";
    for (const auto& w : ingest.warnings) std::cerr << "warning: " << w.path << ": " << w.message << "\n";
    return partial ? 1 : 0;
}

std::map<std::string, bool> load_verdicts(const fs::path& path)
{
    auto j = json::parse(read_file(path));
    std::map<std::string, bool> out;
    const auto& verdicts = j.contains("verdicts") ? j["verdicts"] : j;
    for (const auto& [id, v] : verdicts.items()) {
        if (v.is_boolean()) {
            out[id] = v.get<bool>();
        } else {
            out[id] = v.at("verdict").get<std::string>() == "pass";
        }
    }
    return out;
}

int cmd_eval(const Globals& g, const std::string& dataset_path, const std::string& preds_path,
             const std::string& metrics, bool single_line, const std::string& verdicts_path,
             const std::string& report_path)
{
    auto cfg = load_config(g);
    auto dataset = read_jsonl<FimExample>(dataset_path);
    auto preds = read_jsonl<PredictionRecord>(preds_path);
    EvalOptions options;
    options.metrics = MetricSelection::parse(metrics);
    options.single_line = single_line;
    options.workers = g.workers;
    if (!verdicts_path.empty()) options.pass_verdicts = load_verdicts(verdicts_path);
    auto report = evaluate_run(dataset, preds, options);
    auto j = to_json(report);
    j["single_line"] = single_line;
    write_file(report_path, j.dump(2) + "\n");

    bool partial = report.overall.missing > 0 || !report.unknown_predictions.empty();
    std::cout << "eval: " << report.overall.examples << " examples, " << report.overall.missing << " missing, "
              << report.unknown_predictions.size() << " unknown predictions\n";
    return partial ? 1 : 0;
}

int cmd_analyze(const Globals& g, const std::string& events_path, const std::string& report_path, bool plot,
                std::string plot_path, const std::string& correlate_path)
{
    auto cfg = load_config(g);
    auto events = read_jsonl<CompletionEvent>(events_path);
    auto report = analyze_events(events, cfg.analyzer, cfg.taxonomy);
    if (!correlate_path.empty()) {
        auto j = json::parse(read_file(correlate_path));
        report.correlation = pearson(j.at("offline").get<std::vector<double>>(),
                                     j.at("online").get<std::vector<double>>());
    }
    write_file(report_path, to_json(report).dump(2) + "\n");
    if (plot) {
        if (plot_path.empty()) plot_path = fs::path(report_path).replace_extension(".csv").string();
        write_file(plot_path, plot_data_csv(report));
    }
    std::cout << "analyze: " << events.size() << " events\n";
    return 0;
}


int cmd_bench_build(const Globals& g, const std::string& snapshot_dir, const std::string& patches_path,
                    const std::string& runner_cmd, std::string pr_id, const std::string& out_path,
                    std::string manifest_path)
{
    auto cfg = load_config(g);
    if (pr_id.empty()) pr_id = fs::path(patches_path).stem().string();
    auto snapshot = Snapshot::load(snapshot_dir);
    auto patchset = parse_unified_diff(read_file(patches_path), pr_id);
    CommandRunner runner(std::chrono::seconds(cfg.bench_timeout_seconds));
    auto result = build_benchmark(snapshot, patchset, runner, runner_cmd, g.workers);

    Manifest m("bench build", cfg);
    m.input("snapshot", snapshot.digest());
    m.input("patches", file_sha(patches_path));
    m.output("problems", out_path, to_jsonl(result.problems));
    json discarded = json::array();
    for (const auto& d : result.discarded) discarded.push_back({{"hunk_id", d.hunk_id}, {"reason", d.reason}});
    m["discarded"] = discarded;
    if (result.fatal) m["error"] = *result.fatal;
    m.counts() = {{"hunks", patchset.hunks.size()}, {"problems", result.problems.size()}};
    m.write(manifest_path.empty() ? default_manifest(out_path) : fs::path(manifest_path));
    if (result.fatal) {
        std::cerr << "bench build: " << *result.fatal << "\n";
        return 1;
    }
    std::cout << "bench build: " << result.problems.size() << " problems from " << patchset.hunks.size()
              << " hunks\n";
    return 0;
}

struct Generation {
    std::string problem_id;
    std::string generated;
};

void from_json(const json& j, Generation& g)
{
    j.at("problem_id").get_to(g.problem_id);
    j.at("generated").get_to(g.generated);
}

int cmd_bench_eval(const Globals& g, const std::string& problems_path, const std::string& gens_path,
                   const std::string& runner_cmd, const std::string& snapshot_dir, const std::string& patches_path,
                   std::string pr_id, const std::string& report_path)
{
    auto cfg = load_config(g);
    if (pr_id.empty()) pr_id = fs::path(patches_path).stem().string();
    auto problems = read_jsonl<InfillingProblem>(problems_path);
    std::map<std::string, std::string> gens;
    for (auto& gen : read_jsonl<Generation>(gens_path)) {
        if (!gens.emplace(gen.problem_id, std::move(gen.generated)).second) {
            throw Error(ErrorCode::invalid_input, "duplicate generation for problem " + gen.problem_id);
        }
    }
    auto snapshot = Snapshot::load(snapshot_dir);
    auto patchset = parse_unified_diff(read_file(patches_path), pr_id);
    if (!runner_cmd.empty()) {
        for (auto& p : problems) p.test_command = runner_cmd;
    }
    CommandRunner runner(std::chrono::seconds(cfg.bench_timeout_seconds));
    auto result = evaluate_benchmark(problems, gens, snapshot, patchset, runner, g.workers);
    write_file(report_path, to_json(result).dump(2) + "\n");
    std::cout << "bench eval: pass@1 " << result.pass_at_1 << " over " << result.problems << " problems\n";
    return result.missing > 0 ? 1 : 0;
}

}  // namespace

int run_cli(int argc, char** argv)
{
    CLI::App app{"fimcraft: fill-in-the-middle training data pipeline"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    Globals g;
    app.add_option("--config", g.config_path, "pipeline configuration file");
    app.add_option("--workers", g.workers, "worker threads")->check(CLI::PositiveNumber);

    Overrides ov;
    auto add_seed = [&](CLI::App* sub) { ov.seed_opts.push_back(sub->add_option("--seed", ov.seed, "global seed")); };

    std::string root, repo_id, out, manifest;
    auto* ingest = app.add_subcommand("ingest", "scan and filter a repository");
    ingest->add_option("--root", root, "repository root")->required();
    ingest->add_option("--repo-id", repo_id, "repository id (default: root directory name)");
    ingest->add_option("--out", out, "files.jsonl")->required();
    ingest->add_option("--manifest", manifest, "run manifest path");

    std::string files, stats, dist;
    bool reuse_stats = false;
    auto* extract = app.add_subcommand("extract", "extract FIM examples");
    extract->add_option("--files", files, "files.jsonl from ingest")->required();
    extract->add_option("--stats", stats, "corpus length statistics (written, or read with --reuse-stats)")
        ->required();
    extract->add_flag("--reuse-stats", reuse_stats, "load --stats instead of recomputing it");
    extract->add_option("--dist", dist, "curriculum distribution JSON");
    extract->add_option("--out", out, "examples.jsonl")->required();
    extract->add_option("--manifest", manifest, "run manifest path");
    add_seed(extract);

    std::string examples, repo;
    auto* context = app.add_subcommand("context", "gather cross-file context");
    context->add_option("--examples", examples, "examples.jsonl")->required();
    context->add_option("--repo", repo, "repository root")->required();
    ov.budget_opt = context->add_option("--budget", ov.budget, "context token budget");
    context->add_option("--out", out, "contexts.jsonl")->required();
    context->add_option("--manifest", manifest, "run manifest path");

    std::string contexts;
    auto* assemble = app.add_subcommand("assemble", "render training records");
    assemble->add_option("--examples", examples, "examples.jsonl")->required();
    assemble->add_option("--contexts", contexts, "contexts.jsonl");
    assemble->add_option("--out", out, "training.jsonl")->required();
    assemble->add_option("--manifest", manifest, "run manifest path");
    ov.fim_rate_opt = assemble->add_option("--fim-rate", ov.fim_rate, "probability of FIM layout");
    ov.max_tokens_opt = assemble->add_option("--max-tokens", ov.max_tokens, "token limit per record");
    ov.sentinels_opt = assemble->add_option("--sentinels", ov.sentinels, "sentinel preset name");
    add_seed(assemble);

    std::string out_dir = "out";
    auto* pipeline = app.add_subcommand("pipeline", "ingest, extract, context and assemble in one run");
    pipeline->add_option("--root", root, "repository root")->required();
    pipeline->add_option("--repo-id", repo_id, "repository id (default: root directory name)");
    pipeline->add_option("--out-dir", out_dir, "output directory")->capture_default_str();
    add_seed(pipeline);
    auto* pipeline_budget = pipeline->add_option("--budget", ov.budget, "context token budget");

    std::string dataset, preds, metrics = "em,pm,es", verdicts, report;
    bool single_line = false;
    auto* eval = app.add_subcommand("eval", "score predictions");
    eval->add_option("--dataset", dataset, "examples.jsonl")->required();
    eval->add_option("--preds", preds, "predictions jsonl")->required();
    eval->add_option("--metrics", metrics, "comma-separated subset of em,pm,es")->capture_default_str();
    eval->add_flag("--single-line", single_line, "compare only the first generated line for exact match");
    eval->add_option("--verdicts", verdicts, "pass verdicts (bench eval report) for pass@1");
    eval->add_option("--report", report, "report.json")->required();

    std::string events, plot_path, correlate;
    auto* analyze = app.add_subcommand("analyze", "telemetry metrics from completion events");
    analyze->add_option("--events", events, "events.jsonl")->required();
    analyze->add_option("--report", report, "telemetry.json")->required();
    auto* plot_opt = analyze->add_option("--plot-data", plot_path, "write the relative CAR table as CSV")
                         ->expected(0, 1);
    analyze->add_option("--correlate", correlate, "JSON with paired 'offline' and 'online' series");

    auto* bench = app.add_subcommand("bench", "multi-line infilling benchmark");
    bench->require_subcommand(1);
    std::string snapshot, patches, runner, pr_id, problems, gens;
    auto* bench_build = bench->add_subcommand("build", "build problems from a snapshot and patch set");
    bench_build->add_option("--snapshot", snapshot, "base repository snapshot")->required();
    bench_build->add_option("--patches", patches, "unified diff")->required();
    bench_build->add_option("--runner", runner, "test command, run in the materialized snapshot")->required();
    bench_build->add_option("--pr-id", pr_id, "source pull request id (default: patch file stem)");
    bench_build->add_option("--out", out, "problems.jsonl")->required();
    bench_build->add_option("--manifest", manifest, "run manifest path");
    auto* bench_eval = bench->add_subcommand("eval", "pass@1 over generations");
    bench_eval->add_option("--problems", problems, "problems.jsonl")->required();
    bench_eval->add_option("--gens", gens, "generations jsonl")->required();
    bench_eval->add_option("--runner", runner, "test command (default: the problem's own)");
    bench_eval->add_option("--snapshot", snapshot, "base repository snapshot")->required();
    bench_eval->add_option("--patches", patches, "unified diff the problems were built from")->required();
    bench_eval->add_option("--pr-id", pr_id, "pull request id given to bench build (default: patch file stem)");
    bench_eval->add_option("--report", report, "pass1.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*ingest) return cmd_ingest(g, ov, root, repo_id, out, manifest);
        if (*extract) return cmd_extract(g, ov, files, stats, reuse_stats, dist, out, manifest);
        if (*context) return cmd_context(g, ov, examples, repo, out, manifest);
        if (*assemble) return cmd_assemble(g, ov, examples, contexts, out, manifest);
        if (*pipeline) {
            ov.budget_opt = pipeline_budget;
            return cmd_pipeline(g, ov, root, repo_id, out_dir);
        }
        if (*eval) return cmd_eval(g, dataset, preds, metrics, single_line, verdicts, report);
        if (*analyze) return cmd_analyze(g, events, report, plot_opt->count() > 0, plot_path, correlate);
        if (*bench_build) return cmd_bench_build(g, snapshot, patches, runner, pr_id, out, manifest);
        if (*bench_eval) return cmd_bench_eval(g, problems, gens, runner, snapshot, patches, pr_id, report);
    } catch (const Error& e) {
        std::cerr << "fimcraft: " << e.what() << "\n";
        return e.code() == ErrorCode::invalid_config ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "fimcraft: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

int run_cli(const std::vector<std::string>& args)
{
    std::vector<std::string> storage = args;
    storage.insert(storage.begin(), "fimcraft");
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace fimcraft
