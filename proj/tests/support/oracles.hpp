#pragma once

// Reference implementations used only by tests. Each one is written
// independently of the library code it checks.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <tree_sitter/api.h>

namespace fimtest {

inline const std::set<std::string>& identifier_kinds(const std::string& language)
{
    static const std::map<std::string, std::set<std::string>> kinds = {
        {"python", {"identifier"}},
        {"javascript",
         {"identifier", "property_identifier", "shorthand_property_identifier",
          "shorthand_property_identifier_pattern", "private_property_identifier"}},
        {"typescript",
         {"identifier", "property_identifier", "shorthand_property_identifier",
          "shorthand_property_identifier_pattern", "private_property_identifier", "type_identifier"}},
    };
    static const std::set<std::string> none;
    auto it = kinds.find(language == "tsx" ? "typescript" : language);
    return it == kinds.end() ? none : it->second;
}

/// Distinct identifier texts among every identifier node lying wholly
/// inside [start, end). Plain recursion over all children.
inline std::size_t brute_complexity(TSNode root, std::string_view source, const std::string& language,
                                    std::size_t start, std::size_t end)
{
    const auto& kinds = identifier_kinds(language);
    std::set<std::string> names;
    std::function<void(TSNode)> visit = [&](TSNode n) {
        std::size_t s = ts_node_start_byte(n);
        std::size_t e = ts_node_end_byte(n);
        if (s >= start && e <= end && e > s && kinds.count(ts_node_type(n))) {
            names.insert(std::string(source.substr(s, e - s)));
        }
        for (uint32_t i = 0; i < ts_node_child_count(n); ++i) visit(ts_node_child(n, i));
    };
    visit(root);
    return names.size();
}

/// Whitespace-token normalization: split on spaces/tabs/newlines, rejoin
/// with single spaces.
inline std::string tokens_joined(std::string_view text)
{
    std::istringstream in{std::string(text)};
    std::string word;
    std::string out;
    while (in >> word) {
        if (!out.empty()) out += ' ';
        out += word;
    }
    return out;
}

/// Textbook recursive Levenshtein with memoization, over bytes.
inline std::size_t reference_levenshtein(const std::string& a, const std::string& b)
{
    std::vector<std::vector<long>> memo(a.size() + 1, std::vector<long>(b.size() + 1, -1));
    std::function<long(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> long {
        if (i == 0) return static_cast<long>(j);
        if (j == 0) return static_cast<long>(i);
        auto& m = memo[i][j];
        if (m >= 0) return m;
        long sub = d(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1);
        m = std::min({d(i - 1, j) + 1, d(i, j - 1) + 1, sub});
        return m;
    };
    return static_cast<std::size_t>(d(a.size(), b.size()));
}

/// Nearest-rank quantile over integer arithmetic: index ceil(num/den * n), 1-based.
inline std::size_t rank_quantile(std::vector<std::size_t> values, std::size_t num, std::size_t den)
{
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    std::size_t r = (num * n + den - 1) / den;
    if (r == 0) r = 1;
    return values[r - 1];
}

}  // namespace fimtest
