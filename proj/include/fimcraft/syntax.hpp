#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <tree_sitter/api.h>

#include "fimcraft/ingest.hpp"
#include "fimcraft/tokens.hpp"
#include "fimcraft/util.hpp"
#include "json.hpp"

namespace fimcraft {

// Rows of the curriculum table, in table order.
enum class CurriculumCategory {
    random_span,
    call_expression,
    function_definition_full,
    class_definition,
    function_parameters,
    function_definition_with_prefix,
    if_statement,
    try_catch,
    assignment,
};

inline constexpr std::array<CurriculumCategory, 9> kAllCategories = {
    CurriculumCategory::random_span,
    CurriculumCategory::call_expression,
    CurriculumCategory::function_definition_full,
    CurriculumCategory::class_definition,
    CurriculumCategory::function_parameters,
    CurriculumCategory::function_definition_with_prefix,
    CurriculumCategory::if_statement,
    CurriculumCategory::try_catch,
    CurriculumCategory::assignment,
};

std::string_view to_string(CurriculumCategory category);
std::optional<CurriculumCategory> category_from_string(std::string_view name);

/// Maps one grammar kind to curriculum categories. When `required_field` is
/// set the rule only applies if the node has that field (written
/// `kind[field]` in taxonomy files).
struct KindRule {
    std::string kind;
    std::string required_field;
    std::vector<CurriculumCategory> categories;
};

struct LanguageTaxonomy {
    std::vector<KindRule> rules;
    std::set<std::string> identifier_kinds;

    /// Categories for `node`, first entry is the node's primary category.
    std::vector<CurriculumCategory> categories_of(TSNode node) const;
    bool is_identifier(TSNode node) const;
};

/// Per-language grammar-kind taxonomy.
///
/// File format:
///   { "<language>": { "kinds": { "<kind>" | "<kind>[<field>]": "<category>" | ["<category>", ...] },
///                     "identifier_kinds": ["<kind>", ...] } }
class Taxonomy {
  public:
    static Taxonomy defaults();
    static Taxonomy from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    /// nullptr when the language has no taxonomy.
    const LanguageTaxonomy* find(std::string_view language) const;

  private:
    std::map<std::string, LanguageTaxonomy, std::less<>> languages_;
};

/// Immutable concrete syntax tree plus the text it was parsed from.
class SyntaxTree {
  public:
    SyntaxTree(std::shared_ptr<const std::string> source, std::string language, std::string path, TSTree* tree);

    TSNode root() const { return ts_tree_root_node(tree_.get()); }
    std::string_view source() const { return *source_; }
    const std::string& language() const { return language_; }
    const std::string& path() const { return path_; }
    /// The root always covers the whole source, including surrounding whitespace.
    ByteRange root_range() const { return {0, source_->size()}; }
    bool has_error() const { return ts_node_has_error(root()); }
    std::string_view text(TSNode node) const;

  private:
    struct TreeDeleter {
        void operator()(TSTree* t) const { ts_tree_delete(t); }
    };

    std::shared_ptr<const std::string> source_;
    std::string language_;
    std::string path_;
    std::unique_ptr<TSTree, TreeDeleter> tree_;
};

bool has_grammar(std::string_view language);

/// Owns a tree-sitter parser. Not thread-safe; use one per worker.
class Parser {
  public:
    Parser();
    Parser(const Parser&) = delete;
    Parser& operator=(const Parser&) = delete;

    /// Always yields a tree; syntax errors become ERROR/MISSING nodes.
    /// Throws Error(unsupported_language) for languages without a grammar.
    SyntaxTree parse(const SourceFile& file);
    SyntaxTree parse(std::string_view language, std::string content, std::string path = {});

  private:
    struct ParserDeleter {
        void operator()(TSParser* p) const { ts_parser_delete(p); }
    };
    std::unique_ptr<TSParser, ParserDeleter> parser_;
};

/// Parses with a thread-local parser.
SyntaxTree parse(const SourceFile& file);

struct LineRange {
    std::size_t first = 0;  // 1-based, inclusive
    std::size_t last = 0;
};

struct NodeSpan {
    CurriculumCategory category = CurriculumCategory::random_span;
    std::string kind;  // grammar kind of the node the span came from
    ByteRange byte_range;
    LineRange line_range;
    std::string text;
    std::size_t complexity = 0;
};

struct Symbol {
    std::string name;
    std::string path;
    std::size_t offset = 0;
};

struct Chunk {
    std::string file;
    ByteRange byte_range;
    std::string text;
    std::string kind;
};

LineRange line_range_of(std::string_view source, ByteRange range);

/// Every node whose kind maps to `category`, in document order (outer
/// before inner). For function_definition_with_prefix the span is the
/// function body, so the header stays outside it.
std::vector<NodeSpan> extract_category_nodes(const SyntaxTree& tree, const LanguageTaxonomy& taxonomy,
                                             CurriculumCategory category);

/// Number of distinct identifier texts among identifier leaves inside `span`.
std::size_t complexity_score(const SyntaxTree& tree, const LanguageTaxonomy& taxonomy, ByteRange span);

/// Identifier leaves inside `span`, first occurrence of each distinct text.
std::vector<Symbol> extract_identifiers(const SyntaxTree& tree, const LanguageTaxonomy& taxonomy, ByteRange span);

/// Splits the file into syntactic units. Top-level functions and classes
/// become their own chunks; other top-level code is packed into contiguous
/// residual chunks. Anything over `max_tokens` is replaced by its children,
/// falling back to line and character splits for oversized leaves.
std::vector<Chunk> chunk_syntactic(const SyntaxTree& tree, const LanguageTaxonomy& taxonomy, std::size_t max_tokens,
                                   const TokenEstimator& estimator = default_estimator());

struct CursorNodeType {
    std::optional<CurriculumCategory> category;
    std::string label;  // category name, or the raw grammar kind
};

CursorNodeType node_type_at_cursor(const SyntaxTree& tree, const LanguageTaxonomy& taxonomy, std::size_t offset);

}  // namespace fimcraft
