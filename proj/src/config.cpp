#include "fimcraft/config.hpp"

#include <fstream>

namespace fimcraft {

namespace fs = std::filesystem;

const SentinelSet& PipelineConfig::active_sentinels() const
{
    auto it = sentinel_presets.find(sentinels);
    if (it == sentinel_presets.end()) {
        throw Error(ErrorCode::invalid_config, "unknown sentinel preset: " + sentinels);
    }
    return it->second;
}

SymbolFilter PipelineConfig::symbol_filter() const
{
    if (stop_words_path.empty()) return SymbolFilter({}, {});
    return SymbolFilter::load(stop_words_path, keyword_paths);
}

namespace {

std::string file_digest(const fs::path& path)
{
    return path.empty() ? std::string() : sha256_hex(read_file(path));
}

void require_object(const nlohmann::json& j, const std::string& what)
{
    if (!j.is_object()) throw Error(ErrorCode::invalid_config, what + " must be an object");
}

fs::path resolve_file(const fs::path& base, const std::string& value, const std::string& what)
{
    fs::path p = value;
    if (p.is_relative()) p = base / p;
    p = p.lexically_normal();
    if (!fs::is_regular_file(p)) {
        throw Error(ErrorCode::invalid_config, what + " not found: " + p.string());
    }
    return p;
}

void parse_bm25(const nlohmann::json& j, Bm25Params& p)
{
    require_object(j, "bm25");
    for (const auto& [key, value] : j.items()) {
        if (key == "k1") {
            value.get_to(p.k1);
        } else if (key == "b") {
            value.get_to(p.b);
        } else {
            throw Error(ErrorCode::invalid_config, "unknown bm25 key: " + key);
        }
    }
    if (!(p.k1 >= 0.0) || !(p.b >= 0.0 && p.b <= 1.0)) {
        throw Error(ErrorCode::invalid_config, "bm25 requires k1 >= 0 and b in [0, 1]");
    }
}

void parse_context(const nlohmann::json& j, PipelineConfig& c)
{
    require_object(j, "context");
    for (const auto& [key, value] : j.items()) {
        if (key == "chunk_tokens") {
            value.get_to(c.chunk_tokens);
        } else if (key == "budget") {
            value.get_to(c.context.budget);
        } else if (key == "top_k") {
            value.get_to(c.context.top_k);
        } else if (key == "max_depth") {
            value.get_to(c.context.max_depth);
        } else if (key == "bm25") {
            parse_bm25(value, c.bm25);
        } else {
            throw Error(ErrorCode::invalid_config, "unknown context key: " + key);
        }
    }
    if (c.chunk_tokens == 0) throw Error(ErrorCode::invalid_config, "chunk_tokens must be positive");
    if (c.context.max_depth < 0 || c.context.max_depth > 2) {
        throw Error(ErrorCode::invalid_config, "max_depth must lie in [0, 2]");
    }
}

void parse_extraction(const nlohmann::json& j, PipelineConfig& c)
{
    require_object(j, "extraction");
    for (const auto& [key, value] : j.items()) {
        if (key == "examples_per_file") {
            value.get_to(c.examples_per_file);
        } else if (key == "quantile_sample_cap") {
            value.get_to(c.quantile_sample_cap);
        } else {
            throw Error(ErrorCode::invalid_config, "unknown extraction key: " + key);
        }
    }
    if (c.quantile_sample_cap == 0) throw Error(ErrorCode::invalid_config, "quantile_sample_cap must be positive");
}

void parse_resolver(const nlohmann::json& j, ResolverSettings& r)
{
    require_object(j, "resolver");
    for (const auto& [key, value] : j.items()) {
        if (key == "command") {
            value.get_to(r.command);
        } else if (key == "pool_size") {
            value.get_to(r.pool_size);
        } else if (key == "timeout_ms") {
            value.get_to(r.timeout_ms);
        } else {
            throw Error(ErrorCode::invalid_config, "unknown resolver key: " + key);
        }
    }
    if (r.pool_size == 0) throw Error(ErrorCode::invalid_config, "resolver pool_size must be positive");
}

void parse_bench(const nlohmann::json& j, PipelineConfig& c)
{
    require_object(j, "bench");
    for (const auto& [key, value] : j.items()) {
        if (key == "timeout_seconds") {
            value.get_to(c.bench_timeout_seconds);
        } else {
            throw Error(ErrorCode::invalid_config, "unknown bench key: " + key);
        }
    }
}

}  // namespace

nlohmann::json PipelineConfig::canonical_json() const
{
    nlohmann::json langs = nlohmann::json::array();
    for (const auto& [ext, lang] : languages.entries()) langs.push_back({ext, lang});
    nlohmann::json keywords = nlohmann::json::object();
    for (const auto& [lang, path] : keyword_paths) keywords[lang] = file_digest(path);
    nlohmann::json presets = nlohmann::json::object();
    for (const auto& [name, s] : sentinel_presets) presets[name] = s;
    return nlohmann::json{
        {"languages", langs},
        {"taxonomy", taxonomy.to_json()},
        {"stop_words", file_digest(stop_words_path)},
        {"keywords", keywords},
        {"filters", filters},
        {"curriculum", curriculum.to_json()},
        {"extraction", {{"examples_per_file", examples_per_file}, {"quantile_sample_cap", quantile_sample_cap}}},
        {"context",
         {{"chunk_tokens", chunk_tokens},
          {"budget", context.budget},
          {"top_k", context.top_k},
          {"max_depth", context.max_depth},
          {"bm25", {{"k1", bm25.k1}, {"b", bm25.b}}}}},
        {"assembly", assembly},
        {"sentinels", sentinels},
        {"sentinel_presets", presets},
        {"analyzer", analyzer},
        {"resolver",
         {{"command", resolver.command}, {"pool_size", resolver.pool_size}, {"timeout_ms", resolver.timeout_ms}}},
        {"bench", {{"timeout_seconds", bench_timeout_seconds}}},
        {"seed", seed},
    };
}

void PipelineConfig::rehash()
{
    hash = sha256_hex(canonical_json().dump());
}

PipelineConfig load_pipeline_config(const fs::path& path)
{
    if (!fs::is_regular_file(path)) {
        throw Error(ErrorCode::invalid_config, "config file not found: " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::invalid_config, "config is not valid JSON: " + std::string(e.what()));
    }
    require_object(j, "config");
    auto base = path.parent_path();

    PipelineConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "languages") {
                c.languages = LanguageMap(value.get<std::vector<std::pair<std::string, std::string>>>());
            } else if (key == "taxonomy") {
                c.taxonomy_path = resolve_file(base, value.get<std::string>(), "taxonomy file");
                c.taxonomy = Taxonomy::from_json(nlohmann::json::parse(read_file(c.taxonomy_path)));
            } else if (key == "stop_words") {
                c.stop_words_path = resolve_file(base, value.get<std::string>(), "stop word list");
            } else if (key == "keywords") {
                require_object(value, "keywords");
                for (const auto& [lang, p] : value.items()) {
                    c.keyword_paths[lang] = resolve_file(base, p.get<std::string>(), "keyword list");
                }
            } else if (key == "filters") {
                value.get_to(c.filters);
            } else if (key == "curriculum") {
                c.curriculum = CurriculumDistribution::from_json(value);
            } else if (key == "extraction") {
                parse_extraction(value, c);
            } else if (key == "context") {
                parse_context(value, c);
            } else if (key == "assembly") {
                value.get_to(c.assembly);
            } else if (key == "sentinels") {
                value.get_to(c.sentinels);
            } else if (key == "sentinel_presets") {
                require_object(value, "sentinel_presets");
                c.sentinel_presets.clear();
                for (const auto& [name, s] : value.items()) c.sentinel_presets[name] = s.get<SentinelSet>();
            } else if (key == "analyzer") {
                value.get_to(c.analyzer);
            } else if (key == "resolver") {
                parse_resolver(value, c.resolver);
            } else if (key == "bench") {
                parse_bench(value, c);
            } else if (key == "seed") {
                value.get_to(c.seed);
            } else {
                throw Error(ErrorCode::invalid_config, "unknown config key: " + key);
            }
        }
        c.active_sentinels();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::invalid_config, "bad value in config: " + std::string(e.what()));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::invalid_config) throw;
        throw Error(ErrorCode::invalid_config, e.what());
    }
    c.rehash();
    return c;
}

}  // namespace fimcraft
