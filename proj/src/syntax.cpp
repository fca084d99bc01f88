#include "fimcraft/syntax.hpp"

#include <algorithm>
#include <unordered_set>

extern "C" {
const TSLanguage* tree_sitter_python(void);
const TSLanguage* tree_sitter_javascript(void);
const TSLanguage* tree_sitter_typescript(void);
const TSLanguage* tree_sitter_tsx(void);
}

namespace fimcraft {

namespace {

const TSLanguage* grammar_for(std::string_view language)
{
    if (language == "python") return tree_sitter_python();
    if (language == "javascript") return tree_sitter_javascript();
    if (language == "typescript") return tree_sitter_typescript();
    if (language == "tsx") return tree_sitter_tsx();
    return nullptr;
}

ByteRange range_of(TSNode node) { return {ts_node_start_byte(node), ts_node_end_byte(node)}; }

/// Pre-order walk. `visit` returns whether to descend into the node.
template <typename Visit>
void walk_preorder(TSNode root, Visit&& visit)
{
    TSTreeCursor cursor = ts_tree_cursor_new(root);
    bool descend = visit(ts_tree_cursor_current_node(&cursor));
    for (;;) {
        if (descend && ts_tree_cursor_goto_first_child(&cursor)) {
            descend = visit(ts_tree_cursor_current_node(&cursor));
            continue;
        }
        while (!ts_tree_cursor_goto_next_sibling(&cursor)) {
            if (!ts_tree_cursor_goto_parent(&cursor)) {
                ts_tree_cursor_delete(&cursor);
                return;
            }
        }
        descend = visit(ts_tree_cursor_current_node(&cursor));
    }
}

std::vector<TSNode> children_of(TSNode node)
{
    std::vector<TSNode> out;
    uint32_t n = ts_node_child_count(node);
    out.reserve(n);
    for (uint32_t i = 0; i < n; ++i) out.push_back(ts_node_child(node, i));
    return out;
}

}  // namespace

SyntaxTree::SyntaxTree(std::shared_ptr<const std::string> source, std::string language, std::string path,
                       TSTree* tree)
    : source_(std::move(source)), language_(std::move(language)), path_(std::move(path)), tree_(tree)
{
}

std::string_view SyntaxTree::text(TSNode node) const
{
    auto r = range_of(node);
    return source().substr(r.start, r.size());
}

bool has_grammar(std::string_view language) { return grammar_for(language) != nullptr; }

Parser::Parser() : parser_(ts_parser_new()) {}

SyntaxTree Parser::parse(const SourceFile& file) { return parse(file.language, file.content, file.path); }

SyntaxTree Parser::parse(std::string_view language, std::string content, std::string path)
{
    const TSLanguage* grammar = grammar_for(language);
    if (grammar == nullptr) {
        throw Error(ErrorCode::unsupported_language, "no grammar registered for language '" + std::string(language) + "'");
    }
    if (!ts_parser_set_language(parser_.get(), grammar)) {
        throw Error(ErrorCode::unsupported_language, "incompatible grammar for " + std::string(language));
    }
    auto source = std::make_shared<const std::string>(std::move(content));
    TSTree* tree =
        ts_parser_parse_string(parser_.get(), nullptr, source->data(), static_cast<uint32_t>(source->size()));
    if (tree == nullptr) {
        throw Error(ErrorCode::invalid_input, "parser returned no tree for " + path);
    }
    return SyntaxTree(std::move(source), std::string(language), std::move(path), tree);
}

SyntaxTree parse(const SourceFile& file)
{
    thread_local Parser parser;
    return parser.parse(file);
}

LineRange line_range_of(std::string_view source, ByteRange range)
{
    auto begin = source.begin();
    auto first = 1 + static_cast<std::size_t>(std::count(begin, begin + static_cast<std::ptrdiff_t>(range.start), '\n'));
    auto end = range.end > range.start ? range.end - 1 : range.start;
    auto last = first + static_cast<std::size_t>(std::count(begin + static_cast<std::ptrdiff_t>(range.start),
                                                            begin + static_cast<std::ptrdiff_t>(end), '\n'));
    return {first, last};
}

std::vector<NodeSpan> extract_category_nodes(const SyntaxTree& tree, const LanguageTaxonomy& taxonomy,
                                             CurriculumCategory category)
{
    std::vector<NodeSpan> spans;
    if (category == CurriculumCategory::random_span) return spans;

    walk_preorder(tree.root(), [&](TSNode node) {
        if (!ts_node_is_named(node)) return true;
        auto cats = taxonomy.categories_of(node);
        if (std::find(cats.begin(), cats.end(), category) == cats.end()) return true;

        TSNode target = node;
        if (category == CurriculumCategory::function_definition_with_prefix) {
            target = ts_node_child_by_field_name(node, "body", 4);
            if (ts_node_is_null(target)) return true;
        }
        auto r = range_of(target);
        if (r.empty()) return true;
        NodeSpan span;
        span.category = category;
        span.kind = ts_node_type(node);
        span.byte_range = r;
        span.line_range = line_range_of(tree.source(), r);
        span.text = std::string(tree.source().substr(r.start, r.size()));
        span.complexity = complexity_score(tree, taxonomy, r);
        spans.push_back(std::move(span));
        return true;
    });
    return spans;
}

namespace {

template <typename OnLeaf>
void for_each_identifier(const SyntaxTree& tree, const LanguageTaxonomy& taxonomy, ByteRange span, OnLeaf&& on_leaf)
{
    walk_preorder(tree.root(), [&](TSNode node) {
        auto r = range_of(node);
        if (!r.intersects(span) && !(r.empty() && span.contains(r))) return false;
        if (taxonomy.is_identifier(node) && span.contains(r) && !r.empty()) {
            on_leaf(node, r);
            return false;
        }
        return true;
    });
}

}  // namespace

std::size_t complexity_score(const SyntaxTree& tree, const LanguageTaxonomy& taxonomy, ByteRange span)
{
    std::unordered_set<std::string_view> names;
    for_each_identifier(tree, taxonomy, span,
                        [&](TSNode, ByteRange r) { names.insert(tree.source().substr(r.start, r.size())); });
    return names.size();
}

std::vector<Symbol> extract_identifiers(const SyntaxTree& tree, const LanguageTaxonomy& taxonomy, ByteRange span)
{
    std::vector<Symbol> symbols;
    std::unordered_set<std::string_view> seen;
    for_each_identifier(tree, taxonomy, span, [&](TSNode, ByteRange r) {
        auto name = tree.source().substr(r.start, r.size());
        if (seen.insert(name).second) {
            symbols.push_back({std::string(name), tree.path(), r.start});
        }
    });
    return symbols;
}

namespace {

bool is_unit(TSNode node, const LanguageTaxonomy& taxonomy, int depth)
{
    for (auto c : taxonomy.categories_of(node)) {
        if (c == CurriculumCategory::function_definition_full || c == CurriculumCategory::class_definition) {
            return true;
        }
    }
    if (depth == 0) return false;
    // Wrappers such as export statements, decorators or `const f = () => ...`.
    uint32_t n = ts_node_named_child_count(node);
    for (uint32_t i = 0; i < n; ++i) {
        if (is_unit(ts_node_named_child(node, i), taxonomy, depth - 1)) return true;
    }
    return false;
}

class Chunker {
  public:
    Chunker(const SyntaxTree& tree, std::size_t max_tokens, const TokenEstimator& estimator)
        : tree_(tree), source_(tree.source()), max_tokens_(max_tokens), estimator_(estimator)
    {
    }

    std::vector<Chunk> take() { return std::move(chunks_); }

    bool fits(ByteRange r) const { return estimator_.estimate(source_.substr(r.start, r.size())) <= max_tokens_; }

    void emit(ByteRange r, std::string kind)
    {
        auto text = source_.substr(r.start, r.size());
        if (trim(text).empty()) return;
        chunks_.push_back({tree_.path(), r, std::string(text), std::move(kind)});
    }

    void emit_node(TSNode node)
    {
        auto r = range_of(node);
        if (fits(r)) {
            emit(r, ts_node_type(node));
        } else if (ts_node_child_count(node) > 0) {
            pack(children_of(node), "group");
        } else {
            split_text(r);
        }
    }

    /// Greedily packs consecutive siblings into chunks within budget.
    void pack(const std::vector<TSNode>& nodes, const std::string& group_kind)
    {
        std::optional<ByteRange> group;
        std::size_t members = 0;
        std::string single_kind;
        auto flush = [&] {
            if (group) emit(*group, members == 1 ? single_kind : group_kind);
            group.reset();
            members = 0;
        };
        for (TSNode child : nodes) {
            auto r = range_of(child);
            if (r.empty()) continue;
            if (!fits(r)) {
                flush();
                emit_node(child);
                continue;
            }
            if (group && fits({group->start, r.end})) {
                group->end = r.end;
                ++members;
            } else {
                flush();
                group = r;
                members = 1;
                single_kind = ts_node_type(child);
            }
        }
        flush();
    }

    /// Line-wise split of an oversized leaf; single lines that still do
    /// not fit are cut at code point boundaries.
    void split_text(ByteRange r)
    {
        std::size_t pos = r.start;
        while (pos < r.end) {
            // Extend by whole lines while the piece fits.
            std::size_t end = pos;
            for (;;) {
                auto nl = source_.find('\n', end);
                std::size_t next = nl == std::string_view::npos || nl + 1 > r.end ? r.end : nl + 1;
                if (next == end || !fits({pos, next})) break;
                end = next;
                if (end == r.end) break;
            }
            if (end == pos) {
                // Largest code-point-aligned prefix of the line within budget.
                auto nl = source_.find('\n', pos);
                std::size_t hi = nl == std::string_view::npos || nl + 1 > r.end ? r.end : nl + 1;
                std::size_t lo = ceil_codepoint(source_, pos + 1);
                while (lo < hi) {
                    std::size_t mid = floor_codepoint(source_, lo + (hi - lo) / 2);
                    if (mid <= lo) mid = ceil_codepoint(source_, lo + 1);
                    if (mid >= hi) break;
                    if (fits({pos, mid})) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                end = lo;
            }
            emit({pos, end}, "text");
            pos = end;
        }
    }

  private:
    const SyntaxTree& tree_;
    std::string_view source_;
    std::size_t max_tokens_;
    const TokenEstimator& estimator_;
    std::vector<Chunk> chunks_;
};

}  // namespace

std::vector<Chunk> chunk_syntactic(const SyntaxTree& tree, const LanguageTaxonomy& taxonomy, std::size_t max_tokens,
                                   const TokenEstimator& estimator)
{
    if (max_tokens == 0) {
        throw Error(ErrorCode::invalid_input, "chunk budget must be positive");
    }
    Chunker chunker(tree, max_tokens, estimator);
    std::vector<TSNode> residual;
    auto flush_residual = [&] {
        chunker.pack(residual, "residual");
        residual.clear();
    };
    for (TSNode child : children_of(tree.root())) {
        if (ts_node_is_named(child) && is_unit(child, taxonomy, 2)) {
            flush_residual();
            chunker.emit_node(child);
        } else {
            residual.push_back(child);
        }
    }
    flush_residual();
    return chunker.take();
}

CursorNodeType node_type_at_cursor(const SyntaxTree& tree, const LanguageTaxonomy& taxonomy, std::size_t offset)
{
    offset = std::min(offset, tree.source().size());
    std::vector<TSNode> path{tree.root()};
    for (;;) {
        TSNode node = path.back();
        uint32_t n = ts_node_named_child_count(node);
        std::optional<TSNode> inside;
        std::optional<TSNode> ending_here;
        for (uint32_t i = 0; i < n; ++i) {
            TSNode child = ts_node_named_child(node, i);
            auto r = range_of(child);
            if (r.start <= offset && offset < r.end) {
                inside = child;
                break;
            }
            if (r.end == offset && r.start <= offset) ending_here = child;
            if (r.start > offset) break;
        }
        if (inside) {
            path.push_back(*inside);
        } else if (ending_here) {
            path.push_back(*ending_here);
        } else {
            break;
        }
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        auto cats = taxonomy.categories_of(*it);
        if (!cats.empty()) {
            return {cats.front(), std::string(to_string(cats.front()))};
        }
    }
    return {std::nullopt, ts_node_type(path.back())};
}

}  // namespace fimcraft
