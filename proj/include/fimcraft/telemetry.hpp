#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fimcraft/syntax.hpp"
#include "json.hpp"

namespace fimcraft {

struct PersistenceSnapshot {
    int horizon_seconds = 0;
    std::string region_text;
};

struct CompletionEvent {
    std::string event_id;
    std::string language;
    std::size_t cursor_offset = 0;
    std::optional<std::string> file_snapshot;
    std::optional<std::string> node_type;
    double displayed_ms = 0.0;
    bool accepted = false;
    std::string accepted_text;
    std::vector<PersistenceSnapshot> persistence_snapshots;
};

void to_json(nlohmann::json& j, const CompletionEvent& e);
/// Rejects accepted events with empty accepted_text.
void from_json(const nlohmann::json& j, CompletionEvent& e);

struct AnalyzerConfig {
    double min_display_ms = 750.0;
    double persistence_threshold = 0.33;
    std::vector<int> horizons{30, 120, 300};
    std::size_t min_count = 50;

    void validate() const;
};

void to_json(nlohmann::json& j, const AnalyzerConfig& c);
void from_json(const nlohmann::json& j, AnalyzerConfig& c);

/// Accepted / displayed-longer-than-the-gate; nullopt with no qualifying events.
std::optional<double> compute_car(const std::vector<CompletionEvent>& events, const AnalyzerConfig& config);

/// Smallest edit distance between `accepted` and any substring of `region`.
std::size_t windowed_distance(std::string_view accepted, std::string_view region);

/// windowed_distance normalized by the code point length of `accepted`.
double persistence_distance(std::string_view accepted, std::string_view region);

/// Persisted / accepted-with-a-snapshot-at-horizon; nullopt when none.
/// Throws if `horizon` is not configured.
std::optional<double> compute_cpr(const std::vector<CompletionEvent>& events, int horizon,
                                  const AnalyzerConfig& config);

inline constexpr const char* kAllNodes = "all";

struct NodeCar {
    std::string node_type;
    std::size_t qualifying = 0;
    std::size_t accepted = 0;
    double car = 0.0;
    std::optional<double> relative_percent;  // nullopt when suppressed or language CAR is 0
    bool suppressed = false;
};

/// Node type of an event: the precomputed one, else classified from the
/// snapshot at the cursor, else "unknown".
std::string event_node_type(const CompletionEvent& event, const Taxonomy& taxonomy);

/// language -> rows sorted by node type, including the kAllNodes row.
std::map<std::string, std::vector<NodeCar>> relative_car_by_node(const std::vector<CompletionEvent>& events,
                                                                 const AnalyzerConfig& config,
                                                                 const Taxonomy& taxonomy);

/// Sample Pearson r. Throws on length mismatch, fewer than two points,
/// non-finite input or zero variance.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

struct TelemetryReport {
    std::size_t events = 0;
    std::optional<double> car;
    std::map<int, std::optional<double>> cpr;
    std::map<std::string, std::optional<double>> car_by_language;
    std::map<std::string, std::vector<NodeCar>> relative_car;
    std::optional<double> correlation;
};

TelemetryReport analyze_events(const std::vector<CompletionEvent>& events, const AnalyzerConfig& config,
                               const Taxonomy& taxonomy);

nlohmann::json to_json(const TelemetryReport& report);

/// language,node_type,events,car,relative_car_percent for unsuppressed rows.
std::string plot_data_csv(const TelemetryReport& report);

}  // namespace fimcraft
