#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fimcraft/context.hpp"
#include "fimcraft/curriculum.hpp"
#include "fimcraft/tokens.hpp"
#include "fimcraft/util.hpp"
#include "json.hpp"

namespace fimcraft {

struct SentinelSet {
    std::string prefix_tag;
    std::string suffix_tag;
    std::string middle_tag;
    std::string file_separator;
    std::string eod;

    /// Tags must be non-empty and pairwise distinct.
    void validate() const;
    std::vector<std::string_view> tags() const;

    static SentinelSet starcoder();
};

void to_json(nlohmann::json& j, const SentinelSet& s);
void from_json(const nlohmann::json& j, SentinelSet& s);

/// Named presets: starcoder, qwen2.5-coder.
std::map<std::string, SentinelSet> builtin_sentinel_presets();

enum class RecordFormat { fim, causal };

std::string_view to_string(RecordFormat format);

struct AssemblyConfig {
    double fim_rate = 0.5;
    std::size_t max_tokens = 16000;
    std::string mode = "psm";
    // Placeholders: {comment} (line-comment token), {path}, {text}.
    std::string context_template = "{comment} {path}\n{text}\n";

    void validate() const;
};

void to_json(nlohmann::json& j, const AssemblyConfig& c);
void from_json(const nlohmann::json& j, AssemblyConfig& c);

struct TrainingRecord {
    std::string id;
    std::string text;
    RecordFormat format = RecordFormat::fim;
    std::size_t token_estimate = 0;
    CurriculumCategory category = CurriculumCategory::random_span;
    std::string language;
    std::size_t complexity = 0;
};

void to_json(nlohmann::json& j, const TrainingRecord& r);
void from_json(const nlohmann::json& j, TrainingRecord& r);

std::string_view line_comment_token(std::string_view language);

/// Snippets in priority order, each through `tmpl`.
std::string render_context(const std::vector<ContextSnippet>& snippets, std::string_view tmpl,
                           std::string_view language);

struct RecordParts {
    std::vector<ContextSnippet> context;  // priority order
    std::string prefix;
    std::string middle;
    std::string suffix;
};

/// Renders `parts` in the given layout; the context block is followed by the
/// file separator when non-empty, and the sequence ends with eod.
std::string render_record(const RecordParts& parts, RecordFormat format, const AssemblyConfig& config,
                          const SentinelSet& sentinels, std::string_view language);

/// Drops context (lowest priority first), then cuts the prefix from its
/// start, then the suffix from its end, until the rendered record fits.
/// Returns nullopt if the middle cannot fit even with everything else gone.
std::optional<RecordParts> trim_to_budget(RecordParts parts, RecordFormat format, const AssemblyConfig& config,
                                          const SentinelSet& sentinels, std::string_view language,
                                          const TokenEstimator& estimator = default_estimator());

namespace skip {
inline constexpr const char* middle_exceeds_budget = "middle_exceeds_budget";
inline constexpr const char* sentinel_in_content = "sentinel_in_content";
}  // namespace skip

struct AssembleOutcome {
    std::optional<TrainingRecord> record;
    std::string skip_reason;
};

AssembleOutcome assemble_record(const FimExample& example, const std::vector<ContextSnippet>& snippets,
                                const AssemblyConfig& config, const SentinelSet& sentinels, Rng& rng,
                                const TokenEstimator& estimator = default_estimator());

struct AssemblyResult {
    std::vector<TrainingRecord> records;
    std::map<std::string, std::size_t> skipped;
};

/// One generator per record derived from (seed, example id). `contexts`
/// maps example id to its snippets; missing entries mean no context.
AssemblyResult assemble_dataset(const std::vector<FimExample>& examples,
                                const std::map<std::string, std::vector<ContextSnippet>>& contexts,
                                const AssemblyConfig& config, const SentinelSet& sentinels, std::uint64_t seed,
                                unsigned workers = 1, const TokenEstimator& estimator = default_estimator());

}  // namespace fimcraft
