#include "fimcraft/assembler.hpp"

#include <cmath>
#include <set>

namespace fimcraft {

void SentinelSet::validate() const
{
    std::set<std::string_view> seen;
    for (auto tag : tags()) {
        if (tag.empty()) {
            throw Error(ErrorCode::invalid_config, "sentinel tags must be non-empty");
        }
        if (!seen.insert(tag).second) {
            throw Error(ErrorCode::invalid_config, "sentinel tags must be distinct: " + std::string(tag));
        }
    }
}

std::vector<std::string_view> SentinelSet::tags() const
{
    return {prefix_tag, suffix_tag, middle_tag, file_separator, eod};
}

SentinelSet SentinelSet::starcoder()
{
    return {"<fim_prefix>", "<fim_suffix>", "<fim_middle>", "<file_sep>", "<|endoftext|>"};
}

void to_json(nlohmann::json& j, const SentinelSet& s)
{
    j = nlohmann::json{
        {"prefix_tag", s.prefix_tag}, {"suffix_tag", s.suffix_tag}, {"middle_tag", s.middle_tag},
        {"file_separator", s.file_separator}, {"eod", s.eod},
    };
}

void from_json(const nlohmann::json& j, SentinelSet& s)
{
    for (const auto& [key, value] : j.items()) {
        if (key == "prefix_tag") {
            value.get_to(s.prefix_tag);
        } else if (key == "suffix_tag") {
            value.get_to(s.suffix_tag);
        } else if (key == "middle_tag") {
            value.get_to(s.middle_tag);
        } else if (key == "file_separator") {
            value.get_to(s.file_separator);
        } else if (key == "eod") {
            value.get_to(s.eod);
        } else {
            throw Error(ErrorCode::invalid_config, "unknown sentinel key: " + key);
        }
    }
    s.validate();
}

std::map<std::string, SentinelSet> builtin_sentinel_presets()
{
    return {
        {"starcoder", SentinelSet::starcoder()},
        {"qwen2.5-coder", {"<|fim_prefix|>", "<|fim_suffix|>", "<|fim_middle|>", "<|file_sep|>", "<|endoftext|>"}},
    };
}

std::string_view to_string(RecordFormat format)
{
    return format == RecordFormat::fim ? "fim" : "causal";
}

void AssemblyConfig::validate() const
{
    if (!std::isfinite(fim_rate) || fim_rate < 0.0 || fim_rate > 1.0) {
        throw Error(ErrorCode::invalid_config, "fim_rate must lie in [0, 1]");
    }
    if (max_tokens == 0) {
        throw Error(ErrorCode::invalid_config, "max_tokens must be positive");
    }
    if (mode != "psm") {
        throw Error(ErrorCode::invalid_config, "unsupported fim mode: " + mode);
    }
}

void to_json(nlohmann::json& j, const AssemblyConfig& c)
{
    j = nlohmann::json{
        {"fim_rate", c.fim_rate},
        {"max_tokens", c.max_tokens},
        {"mode", c.mode},
        {"context_template", c.context_template},
    };
}

void from_json(const nlohmann::json& j, AssemblyConfig& c)
{
    for (const auto& [key, value] : j.items()) {
        if (key == "fim_rate") {
            value.get_to(c.fim_rate);
        } else if (key == "max_tokens") {
            value.get_to(c.max_tokens);
        } else if (key == "mode") {
            value.get_to(c.mode);
        } else if (key == "context_template") {
            value.get_to(c.context_template);
        } else {
            throw Error(ErrorCode::invalid_config, "unknown assembly key: " + key);
        }
    }
    c.validate();
}

void to_json(nlohmann::json& j, const TrainingRecord& r)
{
    j = nlohmann::json{
        {"id", r.id},
        {"text", r.text},
        {"format", std::string(to_string(r.format))},
        {"token_estimate", r.token_estimate},
        {"category", std::string(to_string(r.category))},
        {"language", r.language},
        {"complexity", r.complexity},
    };
}

void from_json(const nlohmann::json& j, TrainingRecord& r)
{
    j.at("id").get_to(r.id);
    j.at("text").get_to(r.text);
    auto format = j.at("format").get<std::string>();
    if (format != "fim" && format != "causal") {
        throw Error(ErrorCode::invalid_input, "unknown record format: " + format);
    }
    r.format = format == "fim" ? RecordFormat::fim : RecordFormat::causal;
    j.at("token_estimate").get_to(r.token_estimate);
    auto category = category_from_string(j.at("category").get<std::string>());
    if (!category) {
        throw Error(ErrorCode::invalid_input, "unknown category in record " + r.id);
    }
    r.category = *category;
    j.at("language").get_to(r.language);
    j.at("complexity").get_to(r.complexity);
}

std::string_view line_comment_token(std::string_view language)
{
    return language == "python" ? "#" : "//";
}

namespace {

std::string instantiate(std::string_view tmpl, std::string_view comment, std::string_view path,
                        std::string_view text)
{
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        auto open = tmpl.find('{', i);
        if (open == std::string_view::npos) break;
        out.append(tmpl.substr(i, open - i));
        auto rest = tmpl.substr(open);
        if (rest.starts_with("{comment}")) {
            out.append(comment);
            i = open + 9;
        } else if (rest.starts_with("{path}")) {
            out.append(path);
            i = open + 6;
        } else if (rest.starts_with("{text}")) {
            out.append(text);
            i = open + 6;
        } else {
            out.push_back('{');
            i = open + 1;
        }
    }
    if (i < tmpl.size()) out.append(tmpl.substr(i));
    return out;
}

std::string render_context_ordered(const std::vector<ContextSnippet>& snippets, std::string_view tmpl,
                                   std::string_view language)
{
    std::string out;
    auto comment = line_comment_token(language);
    for (const auto& s : snippets) out += instantiate(tmpl, comment, s.path, s.text);
    return out;
}

}  // namespace

std::string render_context(const std::vector<ContextSnippet>& snippets, std::string_view tmpl,
                           std::string_view language)
{
    auto ordered = snippets;
    sort_by_priority(ordered);
    return render_context_ordered(ordered, tmpl, language);
}

std::string render_record(const RecordParts& parts, RecordFormat format, const AssemblyConfig& config,
                          const SentinelSet& sentinels, std::string_view language)
{
    std::string context = render_context_ordered(parts.context, config.context_template, language);
    if (!context.empty()) context += sentinels.file_separator;

    std::string out;
    if (format == RecordFormat::fim) {
        out.reserve(context.size() + parts.prefix.size() + parts.suffix.size() + parts.middle.size() + 64);
        out += sentinels.prefix_tag;
        out += context;
        out += parts.prefix;
        out += sentinels.suffix_tag;
        out += parts.suffix;
        out += sentinels.middle_tag;
        out += parts.middle;
    } else {
        out = context + parts.prefix + parts.middle + parts.suffix;
    }
    out += sentinels.eod;
    return out;
}

std::optional<RecordParts> trim_to_budget(RecordParts parts, RecordFormat format, const AssemblyConfig& config,
                                          const SentinelSet& sentinels, std::string_view language,
                                          const TokenEstimator& estimator)
{
    auto fits = [&](const RecordParts& p) {
        return estimator.estimate(render_record(p, format, config, sentinels, language)) <= config.max_tokens;
    };
    if (fits(parts)) return parts;

    RecordParts bare{{}, {}, parts.middle, {}};
    if (!fits(bare)) return std::nullopt;

    while (!parts.context.empty()) {
        parts.context.pop_back();
        if (fits(parts)) return parts;
    }

    // Smallest code-point-aligned cut of the prefix front that fits.
    const std::string prefix = std::move(parts.prefix);
    auto with_prefix_from = [&](std::size_t cut) {
        RecordParts p{{}, prefix.substr(cut), parts.middle, parts.suffix};
        return p;
    };
    if (fits(with_prefix_from(prefix.size()))) {
        std::size_t lo = 0;
        std::size_t hi = prefix.size();
        while (lo < hi) {
            auto mid = lo + (hi - lo) / 2;
            if (fits(with_prefix_from(ceil_codepoint(prefix, mid)))) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        return with_prefix_from(ceil_codepoint(prefix, lo));
    }

    // Prefix is gone; keep the longest suffix head that fits.
    const std::string suffix = std::move(parts.suffix);
    auto with_suffix_to = [&](std::size_t keep) {
        RecordParts p{{}, {}, parts.middle, suffix.substr(0, keep)};
        return p;
    };
    std::size_t lo = 0;
    std::size_t hi = suffix.size();
    while (lo < hi) {
        auto mid = lo + (hi - lo + 1) / 2;
        if (fits(with_suffix_to(floor_codepoint(suffix, mid)))) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    return with_suffix_to(floor_codepoint(suffix, lo));
}

namespace {

bool contains_sentinel(std::string_view text, const SentinelSet& sentinels)
{
    for (auto tag : sentinels.tags()) {
        if (text.find(tag) != std::string_view::npos) return true;
    }
    return false;
}

}  // namespace

AssembleOutcome assemble_record(const FimExample& example, const std::vector<ContextSnippet>& snippets,
                                const AssemblyConfig& config, const SentinelSet& sentinels, Rng& rng,
                                const TokenEstimator& estimator)
{
    AssembleOutcome outcome;
    auto format = rng.uniform() < config.fim_rate ? RecordFormat::fim : RecordFormat::causal;

    RecordParts parts{snippets, example.prefix, example.middle, example.suffix};
    bool tainted = contains_sentinel(parts.prefix, sentinels) || contains_sentinel(parts.middle, sentinels) ||
                   contains_sentinel(parts.suffix, sentinels);
    for (const auto& s : parts.context) {
        tainted = tainted || contains_sentinel(s.text, sentinels) || contains_sentinel(s.path, sentinels);
    }
    if (tainted) {
        outcome.skip_reason = skip::sentinel_in_content;
        return outcome;
    }
    sort_by_priority(parts.context);

    auto trimmed = trim_to_budget(std::move(parts), format, config, sentinels, example.language, estimator);
    if (!trimmed) {
        outcome.skip_reason = skip::middle_exceeds_budget;
        return outcome;
    }
    TrainingRecord record;
    record.id = example.id;
    record.text = render_record(*trimmed, format, config, sentinels, example.language);
    record.format = format;
    record.token_estimate = estimator.estimate(record.text);
    record.category = example.category;
    record.language = example.language;
    record.complexity = example.complexity;
    outcome.record = std::move(record);
    return outcome;
}

AssemblyResult assemble_dataset(const std::vector<FimExample>& examples,
                                const std::map<std::string, std::vector<ContextSnippet>>& contexts,
                                const AssemblyConfig& config, const SentinelSet& sentinels, std::uint64_t seed,
                                unsigned workers, const TokenEstimator& estimator)
{
    config.validate();
    sentinels.validate();
    static const std::vector<ContextSnippet> kNone;
    std::vector<AssembleOutcome> outcomes(examples.size());
    parallel_for(examples.size(), workers, [&](std::size_t i) {
        const auto& example = examples[i];
        auto it = contexts.find(example.id);
        Rng rng(derive_seed(seed, example.id));
        outcomes[i] = assemble_record(example, it == contexts.end() ? kNone : it->second, config, sentinels, rng,
                                      estimator);
    });
    AssemblyResult result;
    for (auto& o : outcomes) {
        if (o.record) {
            result.records.push_back(std::move(*o.record));
        } else {
            ++result.skipped[o.skip_reason];
        }
    }
    return result;
}

}  // namespace fimcraft
