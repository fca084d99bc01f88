#include "fimcraft/bm25.hpp"

#include <cctype>
#include <cmath>

#include "fimcraft/util.hpp"

namespace fimcraft {

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Boundaries: aB, ABc (before the last upper), letter/digit transitions.
std::vector<std::string_view> split_subtokens(std::string_view word)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 1; i < word.size(); ++i) {
        char prev = word[i - 1];
        char cur = word[i];
        bool boundary = (is_lower(prev) && is_upper(cur)) || (is_digit(prev) != is_digit(cur)) ||
                        (is_upper(prev) && is_upper(cur) && i + 1 < word.size() && is_lower(word[i + 1]));
        if (boundary) {
            parts.push_back(word.substr(start, i - start));
            start = i;
        }
    }
    parts.push_back(word.substr(start));
    return parts;
}

}  // namespace

std::vector<std::string> code_terms(std::string_view text)
{
    std::vector<std::string> terms;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_alnum(text[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && is_alnum(text[j])) ++j;
        auto word = text.substr(i, j - i);
        terms.push_back(to_lower_ascii(word));
        auto parts = split_subtokens(word);
        if (parts.size() > 1) {
            for (auto p : parts) terms.push_back(to_lower_ascii(p));
        }
        i = j;
    }
    return terms;
}

Bm25Index::Bm25Index(const std::vector<std::string>& documents, Bm25Params params) : params_(params)
{
    doc_lengths_.reserve(documents.size());
    std::size_t total = 0;
    for (std::size_t d = 0; d < documents.size(); ++d) {
        auto terms = code_terms(documents[d]);
        std::unordered_map<std::string, std::uint32_t> tf;
        for (auto& t : terms) ++tf[t];
        for (auto& [term, count] : tf) {
            postings_[term].push_back({static_cast<std::uint32_t>(d), count});
        }
        doc_lengths_.push_back(terms.size());
        total += terms.size();
    }
    avg_length_ = documents.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(documents.size());
}

const std::vector<Posting>& Bm25Index::postings(const std::string& term) const
{
    static const std::vector<Posting> none;
    auto it = postings_.find(term);
    return it == postings_.end() ? none : it->second;
}

double Bm25Index::idf(const std::string& term) const
{
    auto n = static_cast<double>(document_count());
    auto df = static_cast<double>(postings(term).size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<ScoredDoc> Bm25Index::score(const std::vector<std::string>& query_terms) const
{
    std::unordered_map<std::uint32_t, double> acc;
    for (const auto& term : query_terms) {
        const auto& plist = postings(term);
        if (plist.empty()) continue;
        double w = idf(term);
        for (const auto& p : plist) {
            double tf = p.tf;
            double norm = avg_length_ > 0.0 ? static_cast<double>(doc_lengths_[p.doc]) / avg_length_ : 0.0;
            acc[p.doc] += w * tf * (params_.k1 + 1.0) / (tf + params_.k1 * (1.0 - params_.b + params_.b * norm));
        }
    }
    std::vector<ScoredDoc> out;
    out.reserve(acc.size());
    for (auto& [doc, s] : acc) out.push_back({doc, s});
    return out;
}

}  // namespace fimcraft
