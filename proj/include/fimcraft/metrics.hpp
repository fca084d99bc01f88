#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fimcraft/curriculum.hpp"
#include "json.hpp"

namespace fimcraft {

/// Character-level (code point) Levenshtein distance.
std::size_t levenshtein(std::string_view a, std::string_view b);

bool exact_match(std::string_view generated, std::string_view truth, bool single_line);
bool prefix_match(std::string_view generated, std::string_view truth);
/// 1 - lev / max(len); 1.0 when both are empty. Inputs are trimmed first.
double edit_similarity(std::string_view generated, std::string_view truth);

struct PredictionRecord {
    std::string example_id;
    std::string generated;
    std::optional<double> latency_seconds;
};

void to_json(nlohmann::json& j, const PredictionRecord& p);
void from_json(const nlohmann::json& j, PredictionRecord& p);

struct MetricSelection {
    bool em = true;
    bool pm = true;
    bool es = true;

    /// Comma-separated subset of em,pm,es.
    static MetricSelection parse(std::string_view list);
};

struct EvalOptions {
    MetricSelection metrics;
    bool single_line = false;
    /// example id -> passed; enables pass_at_1 when present.
    std::optional<std::map<std::string, bool>> pass_verdicts;
    unsigned workers = 1;
};

struct MetricsSummary {
    std::size_t examples = 0;
    std::size_t predicted = 0;
    std::size_t missing = 0;
    std::optional<double> exact_match;
    std::optional<double> prefix_match;
    std::optional<double> edit_similarity;
    std::optional<double> pass_at_1;
};

struct MetricsReport {
    MetricsSummary overall;
    std::map<std::string, MetricsSummary> by_language;
    /// Predictions whose id is not in the dataset; sorted.
    std::vector<std::string> unknown_predictions;
};

nlohmann::json to_json(const MetricsReport& report);

/// Missing predictions score zero on every metric. Duplicate prediction ids
/// are rejected.
MetricsReport evaluate_run(const std::vector<FimExample>& dataset, const std::vector<PredictionRecord>& predictions,
                           const EvalOptions& options);

}  // namespace fimcraft
