#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fimcraft/bm25.hpp"
#include "fimcraft/curriculum.hpp"
#include "fimcraft/resolver.hpp"
#include "fimcraft/syntax.hpp"
#include "json.hpp"

namespace fimcraft {

enum class SnippetSource { bm25, symbol_graph };

std::string_view to_string(SnippetSource source);

struct ContextSnippet {
    std::string path;
    ByteRange byte_range;
    std::string text;
    SnippetSource source = SnippetSource::bm25;
    std::optional<double> score;  // bm25 only
    std::optional<int> depth;     // symbol_graph only
};

void to_json(nlohmann::json& j, const ContextSnippet& s);
void from_json(const nlohmann::json& j, ContextSnippet& s);

bool is_ecmascript_family(std::string_view language);

/// Reads a plain-text term list: one term per line, blank lines and
/// `#` comments ignored.
std::set<std::string> load_term_list(const std::filesystem::path& path);

/// English stop words (case-insensitive) plus per-language keywords
/// (case-sensitive).
class SymbolFilter {
  public:
    SymbolFilter() = default;
    SymbolFilter(std::set<std::string> stop_words, std::map<std::string, std::set<std::string>> keywords);

    static SymbolFilter load(const std::filesystem::path& stop_words,
                             const std::map<std::string, std::filesystem::path>& keyword_files);

    /// Drops stop words and keywords, then duplicates; keeps first-seen order.
    std::vector<Symbol> filter(const std::vector<Symbol>& symbols, std::string_view language) const;

  private:
    std::set<std::string> stop_words_;
    std::map<std::string, std::set<std::string>, std::less<>> keywords_;
};

std::vector<Symbol> filter_symbols(const std::vector<Symbol>& symbols, std::string_view language,
                                   const SymbolFilter& filter);

/// BM25 index over the syntactic chunks of one repository.
struct RepositoryIndex {
    std::vector<Chunk> chunks;
    Bm25Index bm25;
};

RepositoryIndex build_bm25_index(std::vector<Chunk> chunks, Bm25Params params = {});

/// Chunks every parseable file and indexes the result.
RepositoryIndex index_repository(const std::vector<SourceFile>& files, const Taxonomy& taxonomy,
                                 std::size_t chunk_tokens, Bm25Params params = {}, unsigned workers = 1);

/// Top-k chunks for the subtokens of the symbol names: score descending,
/// ties by path then start offset. Chunks from `exclude_path` are skipped.
std::vector<ContextSnippet> retrieve(const RepositoryIndex& index, const std::vector<Symbol>& symbols, std::size_t k,
                                     std::string_view exclude_path = {});

/// Removes snippets that overlap the middle in its own file, or whose
/// whitespace-normalized text contains the normalized middle (or the
/// reverse).
std::vector<ContextSnippet> strip_leakage(std::vector<ContextSnippet> snippets, const FimExample& example);

/// True if `snippet` would be removed by strip_leakage.
bool leaks_middle(const ContextSnippet& snippet, const FimExample& example);

/// symbol_graph by ascending depth, then bm25 by descending score. Stable.
void sort_by_priority(std::vector<ContextSnippet>& snippets);

/// Keeps the longest priority-ordered prefix within `budget` tokens.
std::vector<ContextSnippet> trim_snippets(std::vector<ContextSnippet> snippets, std::size_t budget,
                                          const TokenEstimator& estimator);

struct ContextOptions {
    std::size_t budget = 2048;
    std::size_t top_k = 10;
    int max_depth = 2;
    std::string project_root;
};

struct GatherResult {
    std::vector<ContextSnippet> snippets;
    std::vector<std::string> warnings;
};

/// Symbol-graph context from `resolver` for ECMAScript-family examples,
/// BM25 otherwise (and as the fallback when the resolver is missing or
/// fails, which is recorded as a warning).
GatherResult gather_context(const FimExample& example, const RepositoryIndex& repo, const Taxonomy& taxonomy,
                            const SymbolFilter& filter, SymbolResolver* resolver, const ContextOptions& options,
                            const TokenEstimator& estimator = default_estimator());

}  // namespace fimcraft
