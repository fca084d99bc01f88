#include "fimcraft/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fimcraft {

namespace {
constexpr std::size_t kCategoryCount = kAllCategories.size();
}

CurriculumDistribution CurriculumDistribution::defaults()
{
    return CurriculumDistribution({0.35, 0.12, 0.12, 0.10, 0.08, 0.08, 0.08, 0.04, 0.03});
}

CurriculumDistribution::CurriculumDistribution(const Weights& weights) : weights_(weights)
{
    double sum = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw Error(ErrorCode::invalid_config, "curriculum weights must be finite and non-negative");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorCode::invalid_config, "curriculum weights must sum to 1, got " + std::to_string(sum));
    }
}

CurriculumDistribution CurriculumDistribution::from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw Error(ErrorCode::invalid_config, "distribution must be an object of category weights");
    }
    Weights weights{};
    std::array<bool, kCategoryCount> seen{};
    for (const auto& [name, value] : j.items()) {
        auto category = category_from_string(name);
        if (!category) {
            throw Error(ErrorCode::invalid_config, "unknown curriculum category: " + name);
        }
        auto idx = static_cast<std::size_t>(*category);
        weights[idx] = value.get<double>();
        seen[idx] = true;
    }
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
        if (!seen[i]) {
            throw Error(ErrorCode::invalid_config,
                        "distribution is missing category " + std::string(to_string(kAllCategories[i])));
        }
    }
    return CurriculumDistribution(weights);
}

nlohmann::json CurriculumDistribution::to_json() const
{
    nlohmann::json j = nlohmann::json::object();
    for (auto c : kAllCategories) j[std::string(to_string(c))] = weight(c);
    return j;
}

CurriculumCategory CurriculumDistribution::pick(double u) const
{
    double cumulative = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
        if (weights_[i] <= 0.0) continue;
        cumulative += weights_[i];
        last = i;
        if (u <= cumulative) return kAllCategories[i];
    }
    return kAllCategories[last];
}

std::optional<CurriculumCategory> CurriculumDistribution::pick_among(double u,
                                                                     const std::array<bool, kCategoryCount>& allowed) const
{
    double total = 0.0;
    std::optional<std::size_t> last;
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
        if (allowed[i] && weights_[i] > 0.0) {
            total += weights_[i];
            last = i;
        }
    }
    if (!last) return std::nullopt;
    double target = u * total;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
        if (!allowed[i] || weights_[i] <= 0.0) continue;
        cumulative += weights_[i];
        if (target <= cumulative) return kAllCategories[i];
    }
    return kAllCategories[*last];
}

CurriculumCategory sample_category(Rng& rng, const CurriculumDistribution& dist) { return dist.pick(rng.uniform()); }

std::size_t nearest_rank(const std::vector<std::size_t>& sorted, double p)
{
    if (sorted.empty()) {
        throw Error(ErrorCode::invalid_input, "percentile of an empty sample");
    }
    auto n = static_cast<double>(sorted.size());
    // The epsilon keeps products like 0.95 * 100 on the intended rank.
    auto rank = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

std::optional<LengthBounds> quantile_bounds(std::vector<std::size_t> samples)
{
    if (samples.empty()) return std::nullopt;
    std::sort(samples.begin(), samples.end());
    return LengthBounds{nearest_rank(samples, 0.05), nearest_rank(samples, 0.95)};
}

void Reservoir::add(std::size_t value, Rng& rng)
{
    ++observed_;
    if (samples_.size() < capacity_) {
        samples_.push_back(value);
        return;
    }
    auto j = rng.uniform_int(0, observed_ - 1);
    if (j < capacity_) samples_[j] = value;
}

void CorpusStats::set_cell(const std::string& language, CurriculumCategory category, std::vector<std::size_t> samples,
                           std::size_t observed)
{
    std::sort(samples.begin(), samples.end());
    StatsCell cell;
    cell.observed = observed;
    cell.bounds = quantile_bounds(samples);
    cell.samples = std::move(samples);
    cells_[{language, category}] = std::move(cell);
}

std::optional<LengthBounds> CorpusStats::bounds(const std::string& language, CurriculumCategory category) const
{
    auto it = cells_.find({language, category});
    if (it == cells_.end()) return std::nullopt;
    return it->second.bounds;
}

nlohmann::json CorpusStats::to_json() const
{
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& [key, cell] : cells_) {
        nlohmann::json c = {
            {"language", key.first},
            {"category", std::string(to_string(key.second))},
            {"observed", cell.observed},
            {"samples", cell.samples},
        };
        if (cell.bounds) {
            c["q05"] = cell.bounds->q05;
            c["q95"] = cell.bounds->q95;
        } else {
            c["q05"] = nullptr;
            c["q95"] = nullptr;
        }
        cells.push_back(std::move(c));
    }
    return {{"quantile_method", "nearest_rank"}, {"cells", cells}};
}

CorpusStats CorpusStats::from_json(const nlohmann::json& j)
{
    CorpusStats stats;
    for (const auto& c : j.at("cells")) {
        auto category = category_from_string(c.at("category").get<std::string>());
        if (!category) {
            throw Error(ErrorCode::invalid_input, "unknown category in stats file");
        }
        // Bounds are re-derived from the stored samples.
        stats.set_cell(c.at("language").get<std::string>(), *category,
                       c.at("samples").get<std::vector<std::size_t>>(), c.at("observed").get<std::size_t>());
    }
    return stats;
}

std::map<CurriculumCategory, std::vector<std::size_t>> node_lengths(const SyntaxTree& tree,
                                                                   const LanguageTaxonomy& taxonomy)
{
    std::map<CurriculumCategory, std::vector<std::size_t>> out;
    for (auto c : kAllCategories) {
        if (c == CurriculumCategory::random_span) continue;
        for (const auto& span : extract_category_nodes(tree, taxonomy, c)) {
            out[c].push_back(span.byte_range.size());
        }
    }
    return out;
}

CorpusStats build_corpus_stats(const std::vector<SourceFile>& files, const Taxonomy& taxonomy, std::size_t sample_cap,
                               std::uint64_t seed, unsigned workers)
{
    if (files.empty()) {
        throw Error(ErrorCode::invalid_input, "cannot build corpus statistics from zero files");
    }
    if (sample_cap == 0) {
        throw Error(ErrorCode::invalid_config, "sample_cap must be positive");
    }

    // Per-file work in parallel; the reservoir merge runs in file order so
    // the result does not depend on scheduling.
    std::vector<std::map<CurriculumCategory, std::vector<std::size_t>>> per_file(files.size());
    parallel_for(files.size(), workers, [&](std::size_t i) {
        const auto* lt = taxonomy.find(files[i].language);
        if (lt == nullptr || !has_grammar(files[i].language)) return;
        per_file[i] = node_lengths(parse(files[i]), *lt);
    });

    std::map<CorpusStats::Key, Reservoir> reservoirs;
    std::map<CorpusStats::Key, Rng> rngs;
    auto feed = [&](const std::string& language, CurriculumCategory category, std::size_t value) {
        CorpusStats::Key key{language, category};
        auto it = reservoirs.find(key);
        if (it == reservoirs.end()) {
            it = reservoirs.emplace(key, Reservoir(sample_cap)).first;
            rngs.emplace(key, Rng(derive_seed(seed, language + "/" + std::string(to_string(category)))));
        }
        it->second.add(value, rngs.at(key));
    };

    for (std::size_t i = 0; i < files.size(); ++i) {
        for (const auto& [category, lengths] : per_file[i]) {
            for (auto len : lengths) {
                feed(files[i].language, category, len);
                feed(files[i].language, CurriculumCategory::random_span, len);
            }
        }
    }

    CorpusStats stats;
    for (auto& [key, reservoir] : reservoirs) {
        stats.set_cell(key.first, key.second, reservoir.samples(), reservoir.observed());
    }
    return stats;
}

void to_json(nlohmann::json& j, const FimExample& e)
{
    j = nlohmann::json{
        {"id", e.id},
        {"repo_id", e.repo_id},
        {"path", e.path},
        {"language", e.language},
        {"prefix", e.prefix},
        {"middle", e.middle},
        {"suffix", e.suffix},
        {"category", std::string(to_string(e.category))},
        {"complexity", e.complexity},
        {"middle_byte_range", {e.middle_byte_range.start, e.middle_byte_range.end}},
    };
}

void from_json(const nlohmann::json& j, FimExample& e)
{
    j.at("id").get_to(e.id);
    j.at("repo_id").get_to(e.repo_id);
    j.at("path").get_to(e.path);
    j.at("language").get_to(e.language);
    j.at("prefix").get_to(e.prefix);
    j.at("middle").get_to(e.middle);
    j.at("suffix").get_to(e.suffix);
    auto category = category_from_string(j.at("category").get<std::string>());
    if (!category) {
        throw Error(ErrorCode::invalid_input, "unknown category in example " + e.id);
    }
    e.category = *category;
    j.at("complexity").get_to(e.complexity);
    const auto& range = j.at("middle_byte_range");
    e.middle_byte_range = {range.at(0).get<std::size_t>(), range.at(1).get<std::size_t>()};
}

namespace {

struct Candidate {
    ByteRange range;
    std::size_t complexity = 0;
};

class CandidateCache {
  public:
    CandidateCache(const SourceFile& file, const SyntaxTree& tree, const LanguageTaxonomy& taxonomy,
                   const CorpusStats& stats)
        : file_(file), tree_(tree), taxonomy_(taxonomy), stats_(stats)
    {
    }

    bool eligible(CurriculumCategory c)
    {
        if (c == CurriculumCategory::random_span) return random_span_lengths().has_value();
        return best(c).has_value();
    }

    /// Most complex in-bounds node, ties to the earliest start.
    const std::optional<Candidate>& best(CurriculumCategory c)
    {
        auto idx = static_cast<std::size_t>(c);
        if (!computed_[idx]) {
            computed_[idx] = true;
            auto bounds = stats_.bounds(file_.language, c);
            if (bounds) {
                for (const auto& span : extract_category_nodes(tree_, taxonomy_, c)) {
                    if (!bounds->admits(span.byte_range.size())) continue;
                    auto& cur = best_[idx];
                    if (!cur || span.complexity > cur->complexity ||
                        (span.complexity == cur->complexity && span.byte_range.start < cur->range.start)) {
                        cur = Candidate{span.byte_range, span.complexity};
                    }
                }
            }
        }
        return best_[idx];
    }

    /// Inclusive [min, max] span lengths available for a random span.
    std::optional<std::pair<std::size_t, std::size_t>> random_span_lengths() const
    {
        auto bounds = stats_.bounds(file_.language, CurriculumCategory::random_span);
        if (!bounds) return std::nullopt;
        std::size_t lo = std::max<std::size_t>(bounds->q05, 1);
        std::size_t hi = std::min(bounds->q95, file_.content.size());
        if (lo > hi) return std::nullopt;
        return std::make_pair(lo, hi);
    }

  private:
    const SourceFile& file_;
    const SyntaxTree& tree_;
    const LanguageTaxonomy& taxonomy_;
    const CorpusStats& stats_;
    std::array<bool, kCategoryCount> computed_{};
    std::array<std::optional<Candidate>, kCategoryCount> best_{};
};

std::string example_id(const SourceFile& file, std::size_t pass, CurriculumCategory category, ByteRange range)
{
    std::string key = file.repo_id;
    key += '\0';
    key += file.path;
    key += '\0';
    key += std::to_string(pass);
    key += '\0';
    key += to_string(category);
    key += '\0';
    key += std::to_string(range.start) + ":" + std::to_string(range.end);
    return sha256_hex(key).substr(0, 16);
}

}  // namespace

ExtractOutcome extract_example(const SourceFile& file, const SyntaxTree& tree, const LanguageTaxonomy& taxonomy,
                               const CorpusStats& stats, const CurriculumDistribution& dist, Rng& rng,
                               std::size_t pass)
{
    ExtractOutcome outcome;
    CandidateCache cache(file, tree, taxonomy, stats);

    auto category = dist.pick(rng.uniform());
    outcome.sampled = category;
    if (!cache.eligible(category)) {
        std::array<bool, kCategoryCount> allowed{};
        for (std::size_t i = 0; i < kCategoryCount; ++i) {
            allowed[i] = cache.eligible(kAllCategories[i]);
        }
        auto fallback = dist.pick_among(rng.uniform(), allowed);
        if (!fallback) {
            outcome.skip_reason = "no_eligible_node";
            return outcome;
        }
        category = *fallback;
        outcome.resampled = true;
    }

    ByteRange range;
    std::size_t complexity = 0;
    const std::string_view content = file.content;
    if (category == CurriculumCategory::random_span) {
        auto [lo, hi] = *cache.random_span_lengths();
        auto length = static_cast<std::size_t>(rng.uniform_int(lo, hi));
        auto start = static_cast<std::size_t>(rng.uniform_int(0, content.size() - length));
        range.start = floor_codepoint(content, start);
        range.end = ceil_codepoint(content, start + length);
        complexity = complexity_score(tree, taxonomy, range);
    } else {
        const auto& best = *cache.best(category);
        range = best.range;
        complexity = best.complexity;
    }

    FimExample example;
    example.repo_id = file.repo_id;
    example.path = file.path;
    example.language = file.language;
    example.prefix = std::string(content.substr(0, range.start));
    example.middle = std::string(content.substr(range.start, range.size()));
    example.suffix = std::string(content.substr(range.end));
    example.category = category;
    example.complexity = complexity;
    example.middle_byte_range = range;
    example.id = example_id(file, pass, category, range);
    outcome.example = std::move(example);
    return outcome;
}

ExtractionResult extract_dataset(const std::vector<SourceFile>& files, const Taxonomy& taxonomy,
                                 const CorpusStats& stats, const CurriculumDistribution& dist,
                                 const ExtractionOptions& options)
{
    std::vector<std::vector<ExtractOutcome>> per_file(files.size());
    parallel_for(files.size(), options.workers, [&](std::size_t i) {
        const auto& file = files[i];
        const auto* lt = taxonomy.find(file.language);
        if (lt == nullptr || !has_grammar(file.language)) {
            ExtractOutcome skipped;
            skipped.skip_reason = "unsupported_language";
            per_file[i].push_back(std::move(skipped));
            return;
        }
        auto tree = parse(file);
        Rng rng(derive_seed(options.seed, file.repo_id + "/" + file.path));
        for (std::size_t pass = 0; pass < options.examples_per_file; ++pass) {
            per_file[i].push_back(extract_example(file, tree, *lt, stats, dist, rng, pass));
        }
    });

    ExtractionResult result;
    for (auto& outcomes : per_file) {
        for (auto& outcome : outcomes) {
            if (outcome.resampled) ++result.resampled;
            if (outcome.example) {
                result.examples.push_back(std::move(*outcome.example));
            } else {
                ++result.skipped[outcome.skip_reason];
            }
        }
    }
    return result;
}

}  // namespace fimcraft
