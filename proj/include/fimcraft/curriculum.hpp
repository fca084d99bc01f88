#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fimcraft/ingest.hpp"
#include "fimcraft/syntax.hpp"
#include "fimcraft/util.hpp"
#include "json.hpp"

namespace fimcraft {

/// Category -> weight table. Weights are non-negative and sum to 1.
class CurriculumDistribution {
  public:
    using Weights = std::array<double, kAllCategories.size()>;

    /// The default curriculum mix.
    static CurriculumDistribution defaults();
    static CurriculumDistribution from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    explicit CurriculumDistribution(const Weights& weights);

    double weight(CurriculumCategory c) const { return weights_[static_cast<std::size_t>(c)]; }
    const Weights& weights() const { return weights_; }

    /// CDF walk in table order: the first category whose cumulative weight
    /// reaches `u`. Zero-weight categories are never returned.
    CurriculumCategory pick(double u) const;

    /// Same walk over the renormalized weights of `allowed` categories.
    /// nullopt when no allowed category has positive weight.
    std::optional<CurriculumCategory> pick_among(double u, const std::array<bool, kAllCategories.size()>& allowed) const;

  private:
    Weights weights_{};
};

CurriculumCategory sample_category(Rng& rng, const CurriculumDistribution& dist);

struct LengthBounds {
    std::size_t q05 = 0;
    std::size_t q95 = 0;

    bool admits(std::size_t length) const { return q05 <= length && length <= q95; }
    friend bool operator==(const LengthBounds&, const LengthBounds&) = default;
};

/// Nearest-rank percentile of ascending `sorted`: element ceil(p * n), 1-based.
std::size_t nearest_rank(const std::vector<std::size_t>& sorted, double p);
/// (q05, q95) of the samples, nullopt when empty.
std::optional<LengthBounds> quantile_bounds(std::vector<std::size_t> samples);

/// Fixed-capacity uniform sample of a stream (Algorithm R).
class Reservoir {
  public:
    explicit Reservoir(std::size_t capacity) : capacity_(capacity) {}

    void add(std::size_t value, Rng& rng);
    std::size_t observed() const { return observed_; }
    const std::vector<std::size_t>& samples() const { return samples_; }

  private:
    std::size_t capacity_;
    std::size_t observed_ = 0;
    std::vector<std::size_t> samples_;
};

struct StatsCell {
    std::size_t observed = 0;
    std::vector<std::size_t> samples;  // ascending
    std::optional<LengthBounds> bounds;
};

/// Middle-length statistics per (language, category). The random_span cell
/// of a language aggregates the lengths of all its AST-category nodes.
class CorpusStats {
  public:
    using Key = std::pair<std::string, CurriculumCategory>;

    void set_cell(const std::string& language, CurriculumCategory category, std::vector<std::size_t> samples,
                  std::size_t observed);
    /// nullopt when the cell has no observations.
    std::optional<LengthBounds> bounds(const std::string& language, CurriculumCategory category) const;
    const std::map<Key, StatsCell>& cells() const { return cells_; }

    nlohmann::json to_json() const;
    static CorpusStats from_json(const nlohmann::json& j);

  private:
    std::map<Key, StatsCell> cells_;
};

/// Lengths (bytes) of every extractable node in `tree`, per AST category.
std::map<CurriculumCategory, std::vector<std::size_t>> node_lengths(const SyntaxTree& tree,
                                                                   const LanguageTaxonomy& taxonomy);

/// Throws Error(invalid_input) when `files` is empty.
CorpusStats build_corpus_stats(const std::vector<SourceFile>& files, const Taxonomy& taxonomy, std::size_t sample_cap,
                               std::uint64_t seed = 0, unsigned workers = 1);

struct FimExample {
    std::string id;
    std::string repo_id;
    std::string path;
    std::string language;
    std::string prefix;
    std::string middle;
    std::string suffix;
    CurriculumCategory category = CurriculumCategory::random_span;
    std::size_t complexity = 0;
    ByteRange middle_byte_range;

    friend bool operator==(const FimExample&, const FimExample&) = default;
};

void to_json(nlohmann::json& j, const FimExample& e);
void from_json(const nlohmann::json& j, FimExample& e);

struct ExtractOutcome {
    std::optional<FimExample> example;
    CurriculumCategory sampled = CurriculumCategory::random_span;
    bool resampled = false;
    std::string skip_reason;
};

/// Picks one ground-truth middle for `file`: sample a category, keep nodes
/// whose length lies within the cell's bounds, take the most complex (ties
/// to the earliest). Falls back to the renormalized mix of the categories
/// the file can serve.
ExtractOutcome extract_example(const SourceFile& file, const SyntaxTree& tree, const LanguageTaxonomy& taxonomy,
                               const CorpusStats& stats, const CurriculumDistribution& dist, Rng& rng,
                               std::size_t pass = 0);

struct ExtractionOptions {
    std::uint64_t seed = 0;
    std::size_t examples_per_file = 1;
    unsigned workers = 1;
};

struct ExtractionResult {
    std::vector<FimExample> examples;
    std::map<std::string, std::size_t> skipped;  // reason -> count
    std::size_t resampled = 0;
};

/// Runs extract_example over every file with a generator derived from
/// (seed, repo_id/path). Output order follows `files`.
ExtractionResult extract_dataset(const std::vector<SourceFile>& files, const Taxonomy& taxonomy,
                                 const CorpusStats& stats, const CurriculumDistribution& dist,
                                 const ExtractionOptions& options);

}  // namespace fimcraft
