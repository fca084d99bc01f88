#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fimcraft/assembler.hpp"
#include "fimcraft/bm25.hpp"
#include "fimcraft/context.hpp"
#include "fimcraft/curriculum.hpp"
#include "fimcraft/ingest.hpp"
#include "fimcraft/syntax.hpp"
#include "fimcraft/telemetry.hpp"
#include "json.hpp"

namespace fimcraft {

struct ResolverSettings {
    std::vector<std::string> command;  // empty: no resolver, ECMAScript falls back to bm25
    std::size_t pool_size = 4;
    std::size_t timeout_ms = 60000;
};

/// Everything the pipeline reads from its configuration file. Relative
/// paths in the file resolve against the file's directory.
struct PipelineConfig {
    LanguageMap languages = LanguageMap::defaults();
    std::filesystem::path taxonomy_path;
    Taxonomy taxonomy = Taxonomy::defaults();
    std::filesystem::path stop_words_path;
    std::map<std::string, std::filesystem::path> keyword_paths;
    FilterPolicy filters;
    CurriculumDistribution curriculum = CurriculumDistribution::defaults();
    std::size_t examples_per_file = 1;
    std::size_t quantile_sample_cap = 100000;
    Bm25Params bm25;
    std::size_t chunk_tokens = 256;
    ContextOptions context;
    AssemblyConfig assembly;
    std::map<std::string, SentinelSet> sentinel_presets = builtin_sentinel_presets();
    std::string sentinels = "starcoder";
    AnalyzerConfig analyzer;
    ResolverSettings resolver;
    std::size_t bench_timeout_seconds = 300;
    std::uint64_t seed = 0;

    /// sha256 over the canonical settings plus the content of every
    /// referenced file.
    std::string hash;

    const SentinelSet& active_sentinels() const;
    SymbolFilter symbol_filter() const;
    nlohmann::json canonical_json() const;
    void rehash();
};

/// Throws Error(invalid_config) on a missing file, unknown keys, bad values
/// or missing referenced files, and Error(io) when an existing file cannot
/// be read.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

}  // namespace fimcraft
