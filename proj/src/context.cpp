#include "fimcraft/context.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace fimcraft {

std::string_view to_string(SnippetSource source)
{
    return source == SnippetSource::bm25 ? "bm25" : "symbol_graph";
}

void to_json(nlohmann::json& j, const ContextSnippet& s)
{
    j = nlohmann::json{
        {"path", s.path},
        {"byte_range", {s.byte_range.start, s.byte_range.end}},
        {"text", s.text},
        {"source", std::string(to_string(s.source))},
    };
    if (s.score) j["score"] = *s.score;
    if (s.depth) j["depth"] = *s.depth;
}

void from_json(const nlohmann::json& j, ContextSnippet& s)
{
    j.at("path").get_to(s.path);
    const auto& range = j.at("byte_range");
    s.byte_range = {range.at(0).get<std::size_t>(), range.at(1).get<std::size_t>()};
    j.at("text").get_to(s.text);
    auto source = j.at("source").get<std::string>();
    if (source == "bm25") {
        s.source = SnippetSource::bm25;
    } else if (source == "symbol_graph") {
        s.source = SnippetSource::symbol_graph;
    } else {
        throw Error(ErrorCode::invalid_input, "unknown snippet source: " + source);
    }
    s.score = j.contains("score") ? std::optional<double>(j["score"].get<double>()) : std::nullopt;
    s.depth = j.contains("depth") ? std::optional<int>(j["depth"].get<int>()) : std::nullopt;
}

bool is_ecmascript_family(std::string_view language)
{
    return language == "javascript" || language == "typescript" || language == "tsx";
}

std::set<std::string> load_term_list(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::io, "cannot open term list " + path.string());
    }
    std::set<std::string> terms;
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        terms.emplace(t);
    }
    return terms;
}

SymbolFilter::SymbolFilter(std::set<std::string> stop_words, std::map<std::string, std::set<std::string>> keywords)
{
    for (const auto& w : stop_words) stop_words_.insert(to_lower_ascii(w));
    for (auto& [lang, words] : keywords) keywords_.emplace(lang, std::move(words));
}

SymbolFilter SymbolFilter::load(const std::filesystem::path& stop_words,
                                const std::map<std::string, std::filesystem::path>& keyword_files)
{
    std::map<std::string, std::set<std::string>> keywords;
    for (const auto& [lang, path] : keyword_files) keywords[lang] = load_term_list(path);
    return SymbolFilter(load_term_list(stop_words), std::move(keywords));
}

std::vector<Symbol> SymbolFilter::filter(const std::vector<Symbol>& symbols, std::string_view language) const
{
    const std::set<std::string>* keywords = nullptr;
    if (auto it = keywords_.find(language); it != keywords_.end()) keywords = &it->second;

    std::vector<Symbol> out;
    std::set<std::string> seen;
    for (const auto& s : symbols) {
        if (s.name.empty()) continue;
        if (stop_words_.contains(to_lower_ascii(s.name))) continue;
        if (keywords != nullptr && keywords->contains(s.name)) continue;
        if (!seen.insert(s.name).second) continue;
        out.push_back(s);
    }
    return out;
}

std::vector<Symbol> filter_symbols(const std::vector<Symbol>& symbols, std::string_view language,
                                   const SymbolFilter& filter)
{
    return filter.filter(symbols, language);
}

RepositoryIndex build_bm25_index(std::vector<Chunk> chunks, Bm25Params params)
{
    std::vector<std::string> docs;
    docs.reserve(chunks.size());
    for (const auto& c : chunks) docs.push_back(c.text);
    RepositoryIndex repo;
    repo.bm25 = Bm25Index(docs, params);
    repo.chunks = std::move(chunks);
    return repo;
}

RepositoryIndex index_repository(const std::vector<SourceFile>& files, const Taxonomy& taxonomy,
                                 std::size_t chunk_tokens, Bm25Params params, unsigned workers)
{
    std::vector<std::vector<Chunk>> per_file(files.size());
    parallel_for(files.size(), workers, [&](std::size_t i) {
        const auto* lt = taxonomy.find(files[i].language);
        if (lt == nullptr || !has_grammar(files[i].language)) return;
        per_file[i] = chunk_syntactic(parse(files[i]), *lt, chunk_tokens);
    });
    std::vector<Chunk> chunks;
    for (auto& v : per_file) {
        for (auto& c : v) chunks.push_back(std::move(c));
    }
    return build_bm25_index(std::move(chunks), params);
}

std::vector<ContextSnippet> retrieve(const RepositoryIndex& index, const std::vector<Symbol>& symbols, std::size_t k,
                                     std::string_view exclude_path)
{
    if (k == 0) return {};
    std::vector<std::string> query;
    for (const auto& s : symbols) {
        auto terms = code_terms(s.name);
        query.insert(query.end(), terms.begin(), terms.end());
    }
    if (query.empty()) return {};

    auto scored = index.bm25.score(query);
    std::erase_if(scored, [&](const ScoredDoc& d) {
        return !exclude_path.empty() && index.chunks[d.doc].file == exclude_path;
    });
    auto before = [&](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        const auto& ca = index.chunks[a.doc];
        const auto& cb = index.chunks[b.doc];
        if (ca.file != cb.file) return ca.file < cb.file;
        return ca.byte_range.start < cb.byte_range.start;
    };
    std::sort(scored.begin(), scored.end(), before);
    if (scored.size() > k) scored.resize(k);

    std::vector<ContextSnippet> out;
    out.reserve(scored.size());
    for (const auto& d : scored) {
        const auto& c = index.chunks[d.doc];
        out.push_back({c.file, c.byte_range, c.text, SnippetSource::bm25, d.score, std::nullopt});
    }
    return out;
}

bool leaks_middle(const ContextSnippet& snippet, const FimExample& example)
{
    if (snippet.path == example.path && snippet.byte_range.intersects(example.middle_byte_range)) {
        return true;
    }
    auto middle = normalize_whitespace(example.middle);
    if (middle.empty()) return false;
    auto text = normalize_whitespace(snippet.text);
    if (text.empty()) return false;
    return text.find(middle) != std::string::npos || middle.find(text) != std::string::npos;
}

std::vector<ContextSnippet> strip_leakage(std::vector<ContextSnippet> snippets, const FimExample& example)
{
    std::erase_if(snippets, [&](const ContextSnippet& s) { return leaks_middle(s, example); });
    return snippets;
}

void sort_by_priority(std::vector<ContextSnippet>& snippets)
{
    std::stable_sort(snippets.begin(), snippets.end(), [](const ContextSnippet& a, const ContextSnippet& b) {
        if (a.source != b.source) return a.source == SnippetSource::symbol_graph;
        if (a.source == SnippetSource::symbol_graph) return a.depth.value_or(0) < b.depth.value_or(0);
        return a.score.value_or(0.0) > b.score.value_or(0.0);
    });
}

std::vector<ContextSnippet> trim_snippets(std::vector<ContextSnippet> snippets, std::size_t budget,
                                          const TokenEstimator& estimator)
{
    std::size_t used = 0;
    std::size_t keep = 0;
    for (; keep < snippets.size(); ++keep) {
        auto cost = estimator.estimate(snippets[keep].text);
        if (used + cost > budget) break;
        used += cost;
    }
    snippets.resize(keep);
    return snippets;
}

namespace {

std::vector<ContextSnippet> from_definitions(const std::vector<DefinitionRecord>& defs, int max_depth)
{
    std::vector<ContextSnippet> out;
    for (const auto& d : defs) {
        if (d.depth < 0 || d.depth > max_depth || d.text.empty()) continue;
        out.push_back({d.file, d.byte_range, d.text, SnippetSource::symbol_graph, std::nullopt, d.depth});
    }
    return out;
}

}  // namespace

GatherResult gather_context(const FimExample& example, const RepositoryIndex& repo, const Taxonomy& taxonomy,
                            const SymbolFilter& filter, SymbolResolver* resolver, const ContextOptions& options,
                            const TokenEstimator& estimator)
{
    GatherResult result;
    if (options.budget == 0) return result;

    const auto* lt = taxonomy.find(example.language);
    if (lt == nullptr || !has_grammar(example.language)) {
        result.warnings.push_back("unsupported_language: " + example.language);
        return result;
    }
    thread_local Parser parser;
    auto tree = parser.parse(example.language, example.prefix + example.middle + example.suffix, example.path);
    auto symbols = filter.filter(extract_identifiers(tree, *lt, example.middle_byte_range), example.language);

    std::vector<ContextSnippet> snippets;
    bool resolved = false;
    if (is_ecmascript_family(example.language)) {
        if (resolver == nullptr) {
            result.warnings.push_back("resolver_unavailable: no resolver configured, using bm25");
        } else {
            ResolveRequest request;
            request.id = example.id;
            request.project_root = options.project_root;
            request.max_depth = options.max_depth;
            request.token_budget = options.budget;
            for (const auto& s : symbols) request.occurrences.push_back({example.path, s.offset, s.name});
            try {
                auto response = resolver->resolve(request);
                for (auto& w : response.warnings) result.warnings.push_back("resolver: " + w);
                snippets = from_definitions(response.definitions, options.max_depth);
                resolved = true;
            } catch (const Error& e) {
                result.warnings.push_back(std::string("resolver_unavailable: ") + e.what() + ", using bm25");
            }
        }
    }
    if (!resolved) {
        snippets = retrieve(repo, symbols, options.top_k, example.path);
    }

    snippets = strip_leakage(std::move(snippets), example);
    sort_by_priority(snippets);
    result.snippets = trim_snippets(std::move(snippets), options.budget, estimator);
    return result;
}

}  // namespace fimcraft
