#include <gtest/gtest.h>

#include <filesystem>

#include "corpus.hpp"
#include "fimcraft/context.hpp"
#include "oracles.hpp"

using namespace fimcraft;
namespace fs = std::filesystem;

namespace {

SymbolFilter default_filter()
{
    fs::path data = fs::path(FIMCRAFT_CONFIG_DIR) / ".." / "data";
    return SymbolFilter::load(data / "stopwords" / "english.txt",
                              {{"python", data / "keywords" / "python.txt"},
                               {"javascript", data / "keywords" / "javascript.txt"},
                               {"typescript", data / "keywords" / "typescript.txt"}});
}

ContextSnippet snip(std::string path, ByteRange r, std::string text, SnippetSource src = SnippetSource::bm25,
                    std::optional<double> score = 1.0, std::optional<int> depth = std::nullopt)
{
    return {std::move(path), r, std::move(text), src, score, depth};
}

FimExample example(std::string path, std::string prefix, std::string middle, std::string suffix,
                   std::string lang = "python")
{
    FimExample e;
    e.id = "ex";
    e.repo_id = "r";
    e.path = std::move(path);
    e.language = std::move(lang);
    e.middle_byte_range = {prefix.size(), prefix.size() + middle.size()};
    e.prefix = std::move(prefix);
    e.middle = std::move(middle);
    e.suffix = std::move(suffix);
    return e;
}

std::vector<SourceFile> fixture_files()
{
    return scan_repository(fs::path(FIMCRAFT_FIXTURES) / "repo", LanguageMap::defaults(), "fixture").files;
}

std::vector<std::string> names(const std::vector<Symbol>& s)
{
    std::vector<std::string> out;
    for (const auto& x : s) out.push_back(x.name);
    return out;
}

}  // namespace

TEST(SymbolFilter, StopWordsKeywordsAndDuplicates)
{
    SymbolFilter f({"The", "data"}, {{"python", {"self", "None"}}});
    std::vector<Symbol> in{{"the", "a", 0}, {"DATA", "a", 1}, {"self", "a", 2}, {"Self", "a", 3},
                           {"value", "a", 4}, {"value", "a", 9}, {"none", "a", 5}};
    EXPECT_EQ(names(f.filter(in, "python")), (std::vector<std::string>{"Self", "value", "none"}));
    EXPECT_EQ(names(f.filter(in, "javascript")), (std::vector<std::string>{"self", "Self", "value", "none"}));
    EXPECT_EQ(f.filter(in, "python")[1].offset, 4U);
}

TEST(SymbolFilter, ShippedListsLoad)
{
    auto f = default_filter();
    std::vector<Symbol> in{{"this", "a", 0}, {"self", "a", 0}, {"invoice", "a", 0}, {"The", "a", 0}};
    EXPECT_EQ(names(f.filter(in, "python")), (std::vector<std::string>{"invoice"}));
    EXPECT_EQ(names(f.filter(in, "typescript")), (std::vector<std::string>{"self", "invoice"}));
}

TEST(TermList, CommentsAndBlanks)
{
    fimtest::TempDir dir;
    fimtest::spit(dir.path() / "t.txt", "# header\n\nfoo\n  bar  \n#baz\n");
    EXPECT_EQ(load_term_list(dir.path() / "t.txt"), (std::set<std::string>{"foo", "bar"}));
    try {
        load_term_list(dir.path() / "missing.txt");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::io);
    }
}

TEST(Retrieve, OrdersAndExcludesOwnFile)
{
    std::vector<Chunk> chunks{
        {"b.py", {0, 10}, "token refresh", "x"},
        {"a.py", {20, 30}, "token refresh", "x"},
        {"a.py", {0, 10}, "token refresh", "x"},
        {"self.py", {0, 10}, "token refresh token", "x"},
        {"c.py", {0, 10}, "unrelated words here", "x"},
    };
    auto index = build_bm25_index(chunks);
    auto got = retrieve(index, {{"refreshToken", "self.py", 0}}, 10, "self.py");
    ASSERT_EQ(got.size(), 3U);
    EXPECT_EQ(got[0].path, "a.py");
    EXPECT_EQ(got[0].byte_range.start, 0U);
    EXPECT_EQ(got[1].path, "a.py");
    EXPECT_EQ(got[1].byte_range.start, 20U);
    EXPECT_EQ(got[2].path, "b.py");
    for (const auto& s : got) {
        EXPECT_EQ(s.source, SnippetSource::bm25);
        ASSERT_TRUE(s.score);
        EXPECT_GT(*s.score, 0.0);
    }
    EXPECT_EQ(retrieve(index, {{"refreshToken", "x", 0}}, 2).size(), 2U);
    EXPECT_EQ(retrieve(index, {{"refreshToken", "x", 0}}, 10).front().path, "self.py");
    EXPECT_TRUE(retrieve(index, {{"refreshToken", "x", 0}}, 0).empty());
    EXPECT_TRUE(retrieve(index, {}, 5).empty());
}

TEST(Leakage, OverlapAndContainment)
{
    auto e = example("m.py", "x = 1\n", "return   total(a,\n b)", "\n");
    EXPECT_TRUE(leaks_middle(snip("m.py", {3, 8}, "unrelated"), e));
    EXPECT_FALSE(leaks_middle(snip("m.py", {0, 6}, "unrelated"), e));
    EXPECT_FALSE(leaks_middle(snip("other.py", {6, 20}, "unrelated"), e));
    EXPECT_TRUE(leaks_middle(snip("o.py", {0, 1}, "def f():\n    return total(a, b)\n"), e));
    EXPECT_TRUE(leaks_middle(snip("o.py", {0, 1}, "total(a,"), e));  // snippet inside middle
    EXPECT_FALSE(leaks_middle(snip("o.py", {0, 1}, "return total(a, c)"), e));
    EXPECT_FALSE(leaks_middle(snip("o.py", {0, 1}, "  \n"), e));
    auto blank = example("m.py", "x", " \n ", "y");
    EXPECT_FALSE(leaks_middle(snip("o.py", {0, 1}, "anything"), blank));
    auto kept = strip_leakage({snip("o.py", {0, 1}, "return total(a, b)"), snip("o.py", {0, 1}, "fine")}, e);
    ASSERT_EQ(kept.size(), 1U);
    EXPECT_EQ(kept[0].text, "fine");
}

TEST(Priority, SymbolGraphByDepthThenBm25ByScore)
{
    std::vector<ContextSnippet> v{
        snip("a", {}, "b1", SnippetSource::bm25, 1.0),
        snip("a", {}, "s2", SnippetSource::symbol_graph, std::nullopt, 2),
        snip("a", {}, "b3", SnippetSource::bm25, 3.0),
        snip("a", {}, "s0", SnippetSource::symbol_graph, std::nullopt, 0),
        snip("a", {}, "s0b", SnippetSource::symbol_graph, std::nullopt, 0),
        snip("a", {}, "b3b", SnippetSource::bm25, 3.0),
    };
    sort_by_priority(v);
    std::vector<std::string> order;
    for (const auto& s : v) order.push_back(s.text);
    EXPECT_EQ(order, (std::vector<std::string>{"s0", "s0b", "s2", "b3", "b3b", "b1"}));
}

TEST(Budget, StopsAtFirstSnippetThatDoesNotFit)
{
    CharHeuristicEstimator est;
    std::vector<ContextSnippet> v{snip("a", {}, std::string(8, 'x')), snip("a", {}, std::string(40, 'x')),
                                  snip("a", {}, std::string(4, 'x'))};
    EXPECT_EQ(trim_snippets(v, 13, est).size(), 3U);
    EXPECT_EQ(trim_snippets(v, 12, est).size(), 2U);
    EXPECT_EQ(trim_snippets(v, 11, est).size(), 1U);
    EXPECT_EQ(trim_snippets(v, 1, est).size(), 0U);
    EXPECT_EQ(trim_snippets(v, 2, est).size(), 1U);
}

TEST(Gather, PythonUsesBm25WithoutWarnings)
{
    auto files = fixture_files();
    auto tax = Taxonomy::defaults();
    auto repo = index_repository(files, tax, 64);
    const auto& models = files[0];
    ASSERT_EQ(models.path, "app/models.py");
    auto at = models.content.find("amount += line.price");
    auto e = example(models.path, models.content.substr(0, at), "amount += line.price * line.quantity",
                     models.content.substr(at + 36));
    auto r = gather_context(e, repo, tax, default_filter(), nullptr, {});
    EXPECT_TRUE(r.warnings.empty());
    for (const auto& s : r.snippets) {
        EXPECT_EQ(s.source, SnippetSource::bm25);
        EXPECT_NE(s.path, models.path);
    }
}

TEST(Gather, EcmascriptWithoutResolverFallsBack)
{
    auto files = fixture_files();
    auto tax = Taxonomy::defaults();
    auto repo = index_repository(files, tax, 64);
    const auto& ts = files[1];
    ASSERT_EQ(ts.path, "src/session.ts");
    auto at = ts.content.find("formatDate(new Date())");
    auto e = example(ts.path, ts.content.substr(0, at), "formatDate(new Date())", ts.content.substr(at + 22),
                     "typescript");
    auto r = gather_context(e, repo, tax, default_filter(), nullptr, {});
    ASSERT_EQ(r.warnings.size(), 1U);
    EXPECT_EQ(r.warnings[0], "resolver_unavailable: no resolver configured, using bm25");
    ASSERT_FALSE(r.snippets.empty());
    EXPECT_EQ(r.snippets[0].path, "src/util.js");  // defines formatDate
    EXPECT_TRUE(gather_context(e, repo, tax, default_filter(), nullptr, {0, 10, 2, ""}).snippets.empty());
}

TEST(Gather, ResolverSnippetsFilteredAndOrdered)
{
    auto files = fixture_files();
    auto tax = Taxonomy::defaults();
    auto repo = index_repository(files, tax, 64);
    const auto& ts = files[1];
    auto at = ts.content.find("console.log(user.name, currentTimeStamp)");
    std::string middle = "console.log(user.name, currentTimeStamp)";
    auto e = example(ts.path, ts.content.substr(0, at), middle, ts.content.substr(at + middle.size()), "typescript");
    SubprocessResolver resolver({FIMCRAFT_FAKE_RESOLVER}, std::chrono::seconds(10));
    ContextOptions opts;
    opts.project_root = FIMCRAFT_FIXTURES;
    auto r = gather_context(e, repo, tax, default_filter(), &resolver, opts);
    ASSERT_FALSE(r.snippets.empty());
    int last_depth = 0;
    for (const auto& s : r.snippets) {
        EXPECT_EQ(s.source, SnippetSource::symbol_graph);
        ASSERT_TRUE(s.depth);
        EXPECT_LE(*s.depth, 2);
        EXPECT_GE(*s.depth, last_depth);
        last_depth = *s.depth;
    }
    // console is a listed builtin; log, user, name, currentTimeStamp get depths 0..3
    EXPECT_EQ(r.snippets.size(), 3U);
    ASSERT_EQ(r.warnings.size(), 1U);
    EXPECT_TRUE(r.warnings[0].starts_with("resolver: pid:"));
}

TEST(Gather, ResolverFailureFallsBackToBm25)
{
    auto files = fixture_files();
    auto tax = Taxonomy::defaults();
    auto repo = index_repository(files, tax, 64);
    const auto& ts = files[1];
    auto at = ts.content.find("formatDate(new Date())");
    auto e = example(ts.path, ts.content.substr(0, at), "formatDate(new Date())", ts.content.substr(at + 22),
                     "typescript");
    for (std::string mode : {"crash", "bad-json", "error", "wrong-id"}) {
        SubprocessResolver resolver({FIMCRAFT_FAKE_RESOLVER, mode}, std::chrono::seconds(10));
        auto r = gather_context(e, repo, tax, default_filter(), &resolver, {});
        ASSERT_EQ(r.warnings.size(), 1U) << mode;
        EXPECT_TRUE(r.warnings[0].starts_with("resolver_unavailable: ")) << r.warnings[0];
        EXPECT_TRUE(r.warnings[0].ends_with(", using bm25"));
        ASSERT_FALSE(r.snippets.empty()) << mode;
        EXPECT_EQ(r.snippets[0].source, SnippetSource::bm25);
    }
}

TEST(Gather, NoSnippetContainsTheMiddle)
{
    auto gen = fimtest::generate_corpus(31, 8);
    std::vector<SourceFile> files;
    for (auto& g : gen) files.push_back({"r", g.path, g.language, g.content, g.content.size()});
    auto tax = Taxonomy::defaults();
    auto repo = index_repository(files, tax, 128);
    auto stats = build_corpus_stats(files, tax, 100000);
    auto ds = extract_dataset(files, tax, stats, CurriculumDistribution::defaults(), {1, 4, 1});
    auto filter = default_filter();
    std::size_t snippets = 0;
    for (const auto& e : ds.examples) {
        auto r = gather_context(e, repo, tax, filter, nullptr, {});
        for (const auto& s : r.snippets) {
            ++snippets;
            auto text = fimtest::tokens_joined(s.text);
            auto mid = fimtest::tokens_joined(e.middle);
            if (!mid.empty()) EXPECT_EQ(text.find(mid), std::string::npos) << e.id;
            EXPECT_FALSE(s.path == e.path && s.byte_range.intersects(e.middle_byte_range));
        }
    }
    EXPECT_GT(snippets, 0U);
}

TEST(Snippet, JsonRoundTrip)
{
    auto s = snip("a.ts", {3, 9}, "text", SnippetSource::symbol_graph, std::nullopt, 1);
    auto back = nlohmann::json(s).get<ContextSnippet>();
    EXPECT_EQ(back.path, "a.ts");
    EXPECT_EQ(back.byte_range, (ByteRange{3, 9}));
    EXPECT_EQ(back.depth, 1);
    EXPECT_FALSE(back.score);
    auto j = nlohmann::json(s);
    j["source"] = "magic";
    EXPECT_THROW(j.get<ContextSnippet>(), Error);
}
