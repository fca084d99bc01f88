#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "corpus.hpp"
#include "fimcraft/syntax.hpp"
#include "oracles.hpp"

using namespace fimcraft;

namespace {

const LanguageTaxonomy& tax(const std::string& lang)
{
    static const Taxonomy t = Taxonomy::defaults();
    return *t.find(lang);
}

SourceFile fixture(const std::string& rel, const std::string& lang)
{
    SourceFile f;
    f.path = rel;
    f.language = lang;
    f.content = fimtest::slurp(std::filesystem::path(FIMCRAFT_FIXTURES) / "repo" / rel);
    return f;
}

}  // namespace

TEST(Parser, UnsupportedLanguage)
{
    Parser p;
    try {
        p.parse("cobol", "MOVE A TO B.");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::unsupported_language);
    }
    EXPECT_FALSE(has_grammar("rust"));
    EXPECT_TRUE(has_grammar("tsx"));
}

TEST(Parser, SyntaxErrorsStillYieldTree)
{
    Parser p;
    auto t = p.parse("python", "def broken(:\n    pass\n");
    EXPECT_TRUE(t.has_error());
    EXPECT_EQ(t.root_range(), (ByteRange{0, 22}));
}

TEST(Complexity, WorkedExampleScoresThree)
{
    Parser p;
    std::string src = "logUserDetails(user, currentTimeStamp);\n";
    auto t = p.parse("typescript", src);
    ByteRange call{0, src.find(';')};
    EXPECT_EQ(complexity_score(t, tax("typescript"), call), 3U);
    auto py = p.parse("python", "logUserDetails(user, currentTimeStamp)\n");
    EXPECT_EQ(complexity_score(py, tax("python"), {0, 38}), 3U);
}

TEST(Complexity, RepeatedNamesCountOnce)
{
    Parser p;
    std::string src = "x = x + y * x\n";
    auto t = p.parse("python", src);
    EXPECT_EQ(complexity_score(t, tax("python"), {0, src.size()}), 2U);
    // partially covered identifier is not counted
    EXPECT_EQ(complexity_score(t, tax("python"), {1, src.size()}), 2U);
    EXPECT_EQ(complexity_score(t, tax("python"), {5, src.size()}), 2U);
    EXPECT_EQ(complexity_score(t, tax("python"), {9, src.size()}), 1U);
    EXPECT_EQ(complexity_score(t, tax("python"), {10, src.size()}), 1U);
}

TEST(Complexity, MatchesBruteForceOnFixtures)
{
    std::mt19937_64 gen(11);
    for (auto [rel, lang] : {std::pair{"src/session.ts", "typescript"}, {"src/util.js", "javascript"},
                             {"app/models.py", "python"}}) {
        auto f = fixture(rel, lang);
        auto t = parse(f);
        for (int i = 0; i < 200; ++i) {
            std::size_t a = gen() % (f.content.size() + 1);
            std::size_t b = gen() % (f.content.size() + 1);
            if (a > b) std::swap(a, b);
            EXPECT_EQ(complexity_score(t, tax(lang), {a, b}),
                      fimtest::brute_complexity(t.root(), t.source(), lang, a, b))
                << rel << " [" << a << "," << b << ")";
        }
    }
}

TEST(Identifiers, FirstOccurrenceOrder)
{
    Parser p;
    auto t = p.parse("javascript", "foo(bar, foo.baz, bar)", "a.js");
    auto ids = extract_identifiers(t, tax("javascript"), {0, 22});
    ASSERT_EQ(ids.size(), 3U);
    EXPECT_EQ(ids[0].name, "foo");
    EXPECT_EQ(ids[1].name, "bar");
    EXPECT_EQ(ids[1].offset, 4U);
    EXPECT_EQ(ids[2].name, "baz");
    EXPECT_EQ(ids[2].path, "a.js");
}

TEST(CategoryNodes, PythonKinds)
{
    auto f = fixture("app/models.py", "python");
    auto t = parse(f);
    const auto& lt = tax("python");
    auto classes = extract_category_nodes(t, lt, CurriculumCategory::class_definition);
    ASSERT_EQ(classes.size(), 1U);
    EXPECT_TRUE(classes[0].text.starts_with("class Invoice:"));
    EXPECT_EQ(classes[0].line_range.first, 4U);

    auto full = extract_category_nodes(t, lt, CurriculumCategory::function_definition_full);
    auto body = extract_category_nodes(t, lt, CurriculumCategory::function_definition_with_prefix);
    ASSERT_EQ(full.size(), 4U);
    ASSERT_EQ(body.size(), 4U);
    for (std::size_t i = 0; i < full.size(); ++i) {
        EXPECT_TRUE(full[i].text.starts_with("def "));
        EXPECT_TRUE(full[i].byte_range.contains(body[i].byte_range));
        EXPECT_GT(body[i].byte_range.start, full[i].byte_range.start);
        EXPECT_EQ(body[i].byte_range.end, full[i].byte_range.end);
    }
    EXPECT_EQ(extract_category_nodes(t, lt, CurriculumCategory::try_catch).size(), 1U);
    EXPECT_TRUE(extract_category_nodes(t, lt, CurriculumCategory::random_span).empty());
    for (const auto& s : extract_category_nodes(t, lt, CurriculumCategory::call_expression)) {
        EXPECT_EQ(s.kind, "call");
        EXPECT_EQ(s.text, f.content.substr(s.byte_range.start, s.byte_range.size()));
    }
}

TEST(CategoryNodes, VariableDeclaratorNeedsValue)
{
    Parser p;
    auto t = p.parse("javascript", "let a;\nlet b = 2;\nc = 3;\n");
    auto spans = extract_category_nodes(t, tax("javascript"), CurriculumCategory::assignment);
    ASSERT_EQ(spans.size(), 2U);
    EXPECT_EQ(spans[0].text, "b = 2");
    EXPECT_EQ(spans[1].text, "c = 3");
}

TEST(CategoryNodes, NestedTypesAreIdentifiersInTypescript)
{
    auto f = fixture("src/session.ts", "typescript");
    auto t = parse(f);
    auto fns = extract_category_nodes(t, tax("typescript"), CurriculumCategory::function_parameters);
    bool saw = false;
    for (const auto& s : fns) {
        if (s.text == "(user: UserProfile, currentTimeStamp: number)") {
            saw = true;
            EXPECT_EQ(s.complexity, 3U);  // user, UserProfile, currentTimeStamp
        }
    }
    EXPECT_TRUE(saw);
}

TEST(Chunking, CoversEveryNonBlankByteWithinBudget)
{
    auto corpus = fimtest::generate_corpus(5, 4);
    CharHeuristicEstimator est;
    for (std::size_t budget : {8U, 32U, 256U}) {
        for (const auto& g : corpus) {
            Parser p;
            auto t = p.parse(g.language, g.content, g.path);
            auto chunks = chunk_syntactic(t, tax(g.language), budget, est);
            std::vector<bool> covered(g.content.size(), false);
            std::size_t last_end = 0;
            for (const auto& c : chunks) {
                EXPECT_LE(est.estimate(c.text), budget);
                EXPECT_GE(c.byte_range.start, last_end) << "chunks overlap or are out of order";
                last_end = c.byte_range.end;
                EXPECT_EQ(c.text, g.content.substr(c.byte_range.start, c.byte_range.size()));
                EXPECT_EQ(c.file, g.path);
                for (auto i = c.byte_range.start; i < c.byte_range.end; ++i) covered[i] = true;
            }
            for (std::size_t i = 0; i < g.content.size(); ++i) {
                if (!std::isspace(static_cast<unsigned char>(g.content[i]))) {
                    ASSERT_TRUE(covered[i]) << g.path << " byte " << i << " budget " << budget;
                }
            }
        }
    }
}

TEST(Chunking, TopLevelUnitsStandAlone)
{
    Parser p;
    std::string src = "import os\nX = 1\n\ndef f():\n    return X\n\nclass C:\n    pass\nY = 2\n";
    auto t = p.parse("python", src);
    auto chunks = chunk_syntactic(t, tax("python"), 256);
    ASSERT_EQ(chunks.size(), 4U);
    EXPECT_EQ(chunks[0].text, "import os\nX = 1");
    EXPECT_EQ(chunks[1].kind, "function_definition");
    EXPECT_EQ(chunks[2].kind, "class_definition");
    EXPECT_EQ(chunks[3].text, "Y = 2");
    EXPECT_THROW(chunk_syntactic(t, tax("python"), 0), Error);
}

TEST(Chunking, SplitsOversizedLeavesOnCodepoints)
{
    Parser p;
    std::string s = "x = \"" + std::string(40, 'a') + "\xc3\xa9\xc3\xa9\xc3\xa9" + "\"\n";
    auto t = p.parse("python", s);
    auto chunks = chunk_syntactic(t, tax("python"), 2);
    std::string joined;
    for (const auto& c : chunks) {
        EXPECT_TRUE(is_valid_utf8(c.text)) << c.text;
        EXPECT_LE(default_estimator().estimate(c.text), 2U);
    }
    EXPECT_GT(chunks.size(), 5U);
}

TEST(CursorNodeType, InnermostMappedAncestor)
{
    Parser p;
    std::string src = "def f(a):\n    if a:\n        g(a, 1)\n    return a\n";
    auto t = p.parse("python", src);
    const auto& lt = tax("python");
    auto at = [&](std::string_view needle, std::size_t delta = 0) {
        return node_type_at_cursor(t, lt, src.find(needle) + delta);
    };
    EXPECT_EQ(at("g(a").label, "call_expression");
    EXPECT_EQ(at("(a, 1", 1).label, "call_expression");
    EXPECT_EQ(at("if a").label, "if_statement");
    EXPECT_EQ(at("(a):", 1).label, "function_parameters");
    EXPECT_EQ(at("return").label, "function_definition_full");
    auto outside = node_type_at_cursor(t, lt, src.size());
    EXPECT_EQ(outside.label, "module");  // past the trailing newline
    EXPECT_EQ(node_type_at_cursor(t, lt, src.size() - 1).label, "function_definition_full");
    auto empty = p.parse("python", "\n\n");
    auto r = node_type_at_cursor(empty, lt, 1);
    EXPECT_FALSE(r.category);
    EXPECT_EQ(r.label, "module");
}

TEST(LineRange, Basics)
{
    std::string s = "a\nbc\nd\n";
    EXPECT_EQ(line_range_of(s, {0, 1}).first, 1U);
    EXPECT_EQ(line_range_of(s, {2, 5}).first, 2U);
    EXPECT_EQ(line_range_of(s, {2, 5}).last, 2U);  // trailing newline stays on line 2
    EXPECT_EQ(line_range_of(s, {2, 6}).last, 3U);
}
