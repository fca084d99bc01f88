#include <gtest/gtest.h>

#include <random>
#include <set>

#include "corpus.hpp"
#include "fimcraft/curriculum.hpp"
#include "oracles.hpp"

using namespace fimcraft;
using CC = CurriculumCategory;

namespace {

CurriculumDistribution only(CC c)
{
    CurriculumDistribution::Weights w{};
    w[static_cast<std::size_t>(c)] = 1.0;
    return CurriculumDistribution(w);
}

SourceFile src(std::string lang, std::string path, std::string content)
{
    SourceFile f;
    f.repo_id = "r";
    f.path = std::move(path);
    f.language = std::move(lang);
    f.content = std::move(content);
    f.size_bytes = f.content.size();
    return f;
}

std::vector<SourceFile> corpus_files(std::uint64_t seed, std::size_t n)
{
    std::vector<SourceFile> out;
    for (auto& g : fimtest::generate_corpus(seed, n)) out.push_back(src(g.language, g.path, g.content));
    return out;
}

}  // namespace

TEST(Distribution, DefaultWeights)
{
    auto d = CurriculumDistribution::defaults();
    EXPECT_EQ(d.weight(CC::random_span), 0.35);
    EXPECT_EQ(d.weight(CC::call_expression), 0.12);
    EXPECT_EQ(d.weight(CC::function_definition_full), 0.12);
    EXPECT_EQ(d.weight(CC::class_definition), 0.10);
    EXPECT_EQ(d.weight(CC::function_parameters), 0.08);
    EXPECT_EQ(d.weight(CC::function_definition_with_prefix), 0.08);
    EXPECT_EQ(d.weight(CC::if_statement), 0.08);
    EXPECT_EQ(d.weight(CC::try_catch), 0.04);
    EXPECT_EQ(d.weight(CC::assignment), 0.03);
}

TEST(Distribution, JsonValidation)
{
    auto j = CurriculumDistribution::defaults().to_json();
    EXPECT_EQ(CurriculumDistribution::from_json(j).weights(), CurriculumDistribution::defaults().weights());
    auto missing = j;
    missing.erase("assignment");
    EXPECT_THROW(CurriculumDistribution::from_json(missing), Error);
    auto unknown = j;
    unknown["loops"] = 0.0;
    EXPECT_THROW(CurriculumDistribution::from_json(unknown), Error);
    auto bad_sum = j;
    bad_sum["assignment"] = 0.5;
    EXPECT_THROW(CurriculumDistribution::from_json(bad_sum), Error);
    auto negative = j;
    negative["assignment"] = -0.03;
    negative["random_span"] = 0.41;
    EXPECT_THROW(CurriculumDistribution::from_json(negative), Error);
}

TEST(Distribution, CdfWalk)
{
    auto d = CurriculumDistribution::defaults();
    EXPECT_EQ(d.pick(0.0), CC::random_span);
    EXPECT_EQ(d.pick(0.35), CC::random_span);
    EXPECT_EQ(d.pick(0.3500001), CC::call_expression);
    EXPECT_EQ(d.pick(0.9999), CC::assignment);
    EXPECT_EQ(only(CC::try_catch).pick(0.0), CC::try_catch);
    EXPECT_EQ(only(CC::try_catch).pick(0.999), CC::try_catch);
}

TEST(Distribution, PickAmongRenormalizes)
{
    auto d = CurriculumDistribution::defaults();
    std::array<bool, 9> allowed{};
    allowed[static_cast<std::size_t>(CC::class_definition)] = true;  // 0.10
    allowed[static_cast<std::size_t>(CC::assignment)] = true;        // 0.03
    EXPECT_EQ(d.pick_among(0.0, allowed), CC::class_definition);
    EXPECT_EQ(d.pick_among(0.10 / 0.13 - 1e-9, allowed), CC::class_definition);
    EXPECT_EQ(d.pick_among(0.10 / 0.13 + 1e-9, allowed), CC::assignment);
    EXPECT_FALSE(d.pick_among(0.5, std::array<bool, 9>{}));
    EXPECT_FALSE(only(CC::if_statement).pick_among(0.5, allowed));
}

TEST(Quantiles, NearestRankMatchesOracle)
{
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::size_t> v(1 + gen() % 300);
        for (auto& x : v) x = gen() % 1000;
        auto b = quantile_bounds(v);
        ASSERT_TRUE(b);
        EXPECT_EQ(b->q05, fimtest::rank_quantile(v, 5, 100));
        EXPECT_EQ(b->q95, fimtest::rank_quantile(v, 95, 100));
    }
    EXPECT_FALSE(quantile_bounds({}));
    std::vector<std::size_t> hundred(100);
    for (std::size_t i = 0; i < 100; ++i) hundred[i] = i + 1;
    EXPECT_EQ(quantile_bounds(hundred), (LengthBounds{5, 95}));
    EXPECT_TRUE((LengthBounds{5, 95}).admits(5));
    EXPECT_TRUE((LengthBounds{5, 95}).admits(95));
    EXPECT_FALSE((LengthBounds{5, 95}).admits(96));
}

TEST(Reservoir, CapsAndCounts)
{
    Rng rng(1);
    Reservoir r(10);
    for (std::size_t i = 0; i < 1000; ++i) r.add(i, rng);
    EXPECT_EQ(r.observed(), 1000U);
    EXPECT_EQ(r.samples().size(), 10U);
    Reservoir small(10);
    for (std::size_t i = 0; i < 5; ++i) small.add(i, rng);
    EXPECT_EQ(small.samples(), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(Stats, RandomSpanCellAggregatesEveryCategory)
{
    auto files = corpus_files(21, 6);
    auto stats = build_corpus_stats(files, Taxonomy::defaults(), 100000, 0, 1);
    for (std::string lang : {"python", "javascript", "typescript"}) {
        std::size_t sum = 0;
        for (const auto& [key, cell] : stats.cells()) {
            if (key.first == lang && key.second != CC::random_span) sum += cell.observed;
        }
        auto it = stats.cells().find({lang, CC::random_span});
        ASSERT_NE(it, stats.cells().end());
        EXPECT_EQ(it->second.observed, sum);
        EXPECT_EQ(it->second.samples.size(), sum);
    }
    auto round = CorpusStats::from_json(stats.to_json());
    EXPECT_EQ(round.to_json(), stats.to_json());
    EXPECT_THROW(build_corpus_stats({}, Taxonomy::defaults(), 10), Error);
}

TEST(Stats, BoundsMatchSortOracleOverNodeLengths)
{
    auto files = corpus_files(22, 5);
    auto tax = Taxonomy::defaults();
    auto stats = build_corpus_stats(files, tax, 100000, 0, 2);
    std::map<std::pair<std::string, CC>, std::vector<std::size_t>> lengths;
    for (const auto& f : files) {
        auto tree = parse(f);
        for (auto c : kAllCategories) {
            for (const auto& s : extract_category_nodes(tree, *tax.find(f.language), c)) {
                lengths[{f.language, c}].push_back(s.byte_range.size());
            }
        }
    }
    for (const auto& [key, v] : lengths) {
        auto b = stats.bounds(key.first, key.second);
        ASSERT_TRUE(b);
        EXPECT_EQ(b->q05, fimtest::rank_quantile(v, 5, 100));
        EXPECT_EQ(b->q95, fimtest::rank_quantile(v, 95, 100));
    }
}

TEST(Extraction, ReconstructsAndRespectsBounds)
{
    auto files = corpus_files(23, 10);
    auto tax = Taxonomy::defaults();
    auto stats = build_corpus_stats(files, tax, 100000, 0, 1);
    auto res = extract_dataset(files, tax, stats, CurriculumDistribution::defaults(), {7, 5, 1});
    ASSERT_EQ(res.examples.size(), files.size() * 5);
    std::set<std::string> ids;
    std::map<std::string, std::string> content;
    for (const auto& f : files) content[f.path] = f.content;
    for (const auto& e : res.examples) {
        EXPECT_EQ(e.prefix + e.middle + e.suffix, content[e.path]);
        EXPECT_EQ(e.middle_byte_range.start, e.prefix.size());
        EXPECT_EQ(e.middle_byte_range.size(), e.middle.size());
        EXPECT_FALSE(e.middle.empty());
        if (e.category != CC::random_span) {
            EXPECT_TRUE(stats.bounds(e.language, e.category)->admits(e.middle.size()));
        }
        ids.insert(e.id);
    }
    EXPECT_EQ(ids.size(), res.examples.size());
}

TEST(Extraction, DeterministicAcrossWorkers)
{
    auto files = corpus_files(24, 6);
    auto tax = Taxonomy::defaults();
    auto stats = build_corpus_stats(files, tax, 100000, 5, 1);
    auto stats4 = build_corpus_stats(files, tax, 100000, 5, 4);
    EXPECT_EQ(stats.to_json(), stats4.to_json());
    auto a = extract_dataset(files, tax, stats, CurriculumDistribution::defaults(), {9, 3, 1});
    auto b = extract_dataset(files, tax, stats, CurriculumDistribution::defaults(), {9, 3, 4});
    EXPECT_EQ(a.examples, b.examples);
    auto c = extract_dataset(files, tax, stats, CurriculumDistribution::defaults(), {10, 3, 1});
    EXPECT_NE(a.examples, c.examples);
}

TEST(Extraction, MostComplexNodeTiesToEarliest)
{
    auto f = src("python", "m.py", "a(b)\nc(d)\nf(g, h)\nx(y, z)\n");
    auto tax = Taxonomy::defaults();
    CorpusStats stats;
    stats.set_cell("python", CC::call_expression, {1, 100}, 2);
    Rng rng(0);
    auto tree = parse(f);
    auto out = extract_example(f, tree, *tax.find("python"), stats, only(CC::call_expression), rng);
    ASSERT_TRUE(out.example);
    EXPECT_EQ(out.example->middle, "f(g, h)");
    EXPECT_EQ(out.example->complexity, 3U);
    EXPECT_FALSE(out.resampled);
}

TEST(Extraction, WithPrefixMiddleIsTheBody)
{
    auto f = src("python", "m.py", "def f(a):\n    return a\n");
    CorpusStats stats;
    stats.set_cell("python", CC::function_definition_with_prefix, {1, 1000}, 2);
    Rng rng(0);
    auto tree = parse(f);
    auto out = extract_example(f, tree, *Taxonomy::defaults().find("python"), stats,
                               only(CC::function_definition_with_prefix), rng);
    ASSERT_TRUE(out.example);
    EXPECT_EQ(out.example->prefix, "def f(a):\n    ");
    EXPECT_EQ(out.example->middle, "return a");
}

TEST(Extraction, FallsBackWhenCategoryMissingOrOutOfBounds)
{
    auto f = src("python", "m.py", "x = 1\nprint(x)\n");
    auto tax = Taxonomy::defaults();
    CorpusStats stats;
    stats.set_cell("python", CC::call_expression, {1, 100}, 2);
    stats.set_cell("python", CC::assignment, {50, 60}, 2);  // x = 1 is too short
    Rng rng(0);
    auto tree = parse(f);
    auto out = extract_example(f, tree, *tax.find("python"), stats, CurriculumDistribution::defaults(), rng);
    ASSERT_TRUE(out.example);
    EXPECT_EQ(out.example->category, CC::call_expression);

    CorpusStats empty;
    auto none = extract_example(f, tree, *tax.find("python"), empty, CurriculumDistribution::defaults(), rng);
    EXPECT_FALSE(none.example);
    EXPECT_EQ(none.skip_reason, "no_eligible_node");
}

TEST(Extraction, UnsupportedLanguageIsCounted)
{
    std::vector<SourceFile> files{src("rust", "a.rs", "fn main() {}\n")};
    CorpusStats stats;
    auto res = extract_dataset(files, Taxonomy::defaults(), stats, CurriculumDistribution::defaults(), {});
    EXPECT_TRUE(res.examples.empty());
    EXPECT_EQ(res.skipped["unsupported_language"], 1U);
}

TEST(Extraction, JsonRoundTrip)
{
    FimExample e{"id1", "r", "a.py", "python", "p", "m", "s", CC::try_catch, 4, {1, 2}};
    EXPECT_EQ(nlohmann::json(e).get<FimExample>(), e);
    auto j = nlohmann::json(e);
    j["category"] = "loops";
    EXPECT_THROW(j.get<FimExample>(), Error);
}
