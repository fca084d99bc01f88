#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fimcraft {

/// Lowercased search terms for code text. Every alphanumeric run is a term;
/// runs that split further at camelCase, acronym or letter/digit boundaries
/// also contribute each subtoken ("refreshToken" -> refreshtoken, refresh,
/// token). Underscores and other punctuation separate runs.
std::vector<std::string> code_terms(std::string_view text);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;
};

struct ScoredDoc {
    std::uint32_t doc = 0;
    double score = 0.0;
};

/// Okapi BM25 over an immutable document set. idf uses the non-negative
/// form ln(1 + (N - df + 0.5) / (df + 0.5)).
class Bm25Index {
  public:
    Bm25Index() = default;
    Bm25Index(const std::vector<std::string>& documents, Bm25Params params = {});

    std::size_t document_count() const { return doc_lengths_.size(); }
    double average_length() const { return avg_length_; }
    std::size_t document_length(std::uint32_t doc) const { return doc_lengths_.at(doc); }
    const Bm25Params& params() const { return params_; }
    /// Empty when the term is not indexed.
    const std::vector<Posting>& postings(const std::string& term) const;
    double idf(const std::string& term) const;

    /// Scores of every document matching at least one query term. Repeated
    /// query terms count once per occurrence. Unordered.
    std::vector<ScoredDoc> score(const std::vector<std::string>& query_terms) const;

  private:
    Bm25Params params_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::vector<std::size_t> doc_lengths_;
    double avg_length_ = 0.0;
};

}  // namespace fimcraft
