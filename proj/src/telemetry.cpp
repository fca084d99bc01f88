#include "fimcraft/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fimcraft {

void to_json(nlohmann::json& j, const CompletionEvent& e)
{
    nlohmann::json snaps = nlohmann::json::array();
    for (const auto& s : e.persistence_snapshots) {
        snaps.push_back({{"horizon_seconds", s.horizon_seconds}, {"document_region_text", s.region_text}});
    }
    j = nlohmann::json{
        {"event_id", e.event_id},
        {"language", e.language},
        {"cursor_offset", e.cursor_offset},
        {"displayed_ms", e.displayed_ms},
        {"accepted", e.accepted},
        {"accepted_text", e.accepted_text},
        {"persistence_snapshots", snaps},
    };
    if (e.file_snapshot) j["file_snapshot"] = *e.file_snapshot;
    if (e.node_type) j["node_type"] = *e.node_type;
}

void from_json(const nlohmann::json& j, CompletionEvent& e)
{
    j.at("event_id").get_to(e.event_id);
    j.at("language").get_to(e.language);
    e.cursor_offset = j.value("cursor_offset", std::size_t{0});
    e.file_snapshot.reset();
    e.node_type.reset();
    if (j.contains("file_snapshot") && !j["file_snapshot"].is_null()) e.file_snapshot = j["file_snapshot"];
    if (j.contains("node_type") && !j["node_type"].is_null()) e.node_type = j["node_type"];
    j.at("displayed_ms").get_to(e.displayed_ms);
    j.at("accepted").get_to(e.accepted);
    e.accepted_text = j.value("accepted_text", std::string{});
    e.persistence_snapshots.clear();
    if (j.contains("persistence_snapshots")) {
        for (const auto& s : j["persistence_snapshots"]) {
            e.persistence_snapshots.push_back(
                {s.at("horizon_seconds").get<int>(), s.at("document_region_text").get<std::string>()});
        }
    }
    if (e.accepted && e.accepted_text.empty()) {
        throw Error(ErrorCode::invalid_input, "accepted event without accepted_text: " + e.event_id);
    }
}

void AnalyzerConfig::validate() const
{
    if (!(persistence_threshold > 0.0 && persistence_threshold < 1.0)) {
        throw Error(ErrorCode::invalid_config, "persistence_threshold must lie in (0, 1)");
    }
    if (!std::isfinite(min_display_ms) || min_display_ms < 0.0) {
        throw Error(ErrorCode::invalid_config, "min_display_ms must be non-negative");
    }
    if (horizons.empty()) {
        throw Error(ErrorCode::invalid_config, "at least one persistence horizon is required");
    }
    for (int h : horizons) {
        if (h <= 0) throw Error(ErrorCode::invalid_config, "horizons must be positive");
    }
}

void to_json(nlohmann::json& j, const AnalyzerConfig& c)
{
    j = nlohmann::json{
        {"min_display_ms", c.min_display_ms},
        {"persistence_threshold", c.persistence_threshold},
        {"horizons", c.horizons},
        {"min_count", c.min_count},
    };
}

void from_json(const nlohmann::json& j, AnalyzerConfig& c)
{
    for (const auto& [key, value] : j.items()) {
        if (key == "min_display_ms") {
            value.get_to(c.min_display_ms);
        } else if (key == "persistence_threshold") {
            value.get_to(c.persistence_threshold);
        } else if (key == "horizons") {
            value.get_to(c.horizons);
        } else if (key == "min_count") {
            value.get_to(c.min_count);
        } else {
            throw Error(ErrorCode::invalid_config, "unknown analyzer key: " + key);
        }
    }
    c.validate();
}

namespace {

bool qualifies(const CompletionEvent& e, const AnalyzerConfig& config)
{
    return e.displayed_ms > config.min_display_ms;
}

struct CarTally {
    std::size_t qualifying = 0;
    std::size_t accepted = 0;

    void add(const CompletionEvent& e, const AnalyzerConfig& config)
    {
        if (!qualifies(e, config)) return;
        ++qualifying;
        accepted += e.accepted ? 1 : 0;
    }
    std::optional<double> ratio() const
    {
        if (qualifying == 0) return std::nullopt;
        return static_cast<double>(accepted) / static_cast<double>(qualifying);
    }
};

}  // namespace

std::optional<double> compute_car(const std::vector<CompletionEvent>& events, const AnalyzerConfig& config)
{
    CarTally t;
    for (const auto& e : events) t.add(e, config);
    return t.ratio();
}

std::size_t windowed_distance(std::string_view accepted, std::string_view region)
{
    auto a = decode_utf8(accepted);
    auto r = decode_utf8(region);
    // Free start and end in the region: row 0 is all zeros, answer is the
    // row minimum.
    std::vector<std::size_t> row(r.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= r.size(); ++j) {
            std::size_t up = row[j];
            row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] == r[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return *std::min_element(row.begin(), row.end());
}

double persistence_distance(std::string_view accepted, std::string_view region)
{
    auto len = codepoint_count(accepted);
    if (len == 0) return 0.0;
    return static_cast<double>(windowed_distance(accepted, region)) / static_cast<double>(len);
}

std::optional<double> compute_cpr(const std::vector<CompletionEvent>& events, int horizon,
                                  const AnalyzerConfig& config)
{
    if (std::find(config.horizons.begin(), config.horizons.end(), horizon) == config.horizons.end()) {
        throw Error(ErrorCode::invalid_config, "horizon not configured: " + std::to_string(horizon));
    }
    std::size_t total = 0;
    std::size_t persisted = 0;
    for (const auto& e : events) {
        if (!e.accepted) continue;
        for (const auto& s : e.persistence_snapshots) {
            if (s.horizon_seconds != horizon) continue;
            ++total;
            if (persistence_distance(e.accepted_text, s.region_text) < config.persistence_threshold) ++persisted;
            break;
        }
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(persisted) / static_cast<double>(total);
}

std::string event_node_type(const CompletionEvent& event, const Taxonomy& taxonomy)
{
    if (event.node_type) return *event.node_type;
    if (event.file_snapshot && has_grammar(event.language)) {
        if (const auto* lt = taxonomy.find(event.language)) {
            thread_local Parser parser;
            auto tree = parser.parse(event.language, *event.file_snapshot);
            auto offset = std::min(event.cursor_offset, event.file_snapshot->size());
            return node_type_at_cursor(tree, *lt, offset).label;
        }
    }
    return "unknown";
}

std::map<std::string, std::vector<NodeCar>> relative_car_by_node(const std::vector<CompletionEvent>& events,
                                                                 const AnalyzerConfig& config,
                                                                 const Taxonomy& taxonomy)
{
    std::map<std::string, std::map<std::string, CarTally>> tallies;
    for (const auto& e : events) {
        if (!qualifies(e, config)) continue;
        tallies[e.language][event_node_type(e, taxonomy)].add(e, config);
        tallies[e.language][kAllNodes].add(e, config);
    }

    std::map<std::string, std::vector<NodeCar>> out;
    for (const auto& [lang, nodes] : tallies) {
        auto language_car = *nodes.at(kAllNodes).ratio();
        auto& rows = out[lang];
        for (const auto& [node, t] : nodes) {
            NodeCar row;
            row.node_type = node;
            row.qualifying = t.qualifying;
            row.accepted = t.accepted;
            row.car = *t.ratio();
            row.suppressed = node != kAllNodes && t.qualifying < config.min_count;
            if (!row.suppressed && language_car > 0.0) {
                row.relative_percent = (row.car - language_car) / language_car * 100.0;
            }
            rows.push_back(std::move(row));
        }
    }
    return out;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys)
{
    if (xs.size() != ys.size()) {
        throw Error(ErrorCode::invalid_input, "pearson: series lengths differ");
    }
    if (xs.size() < 2) {
        throw Error(ErrorCode::invalid_input, "pearson: need at least two points");
    }
    double n = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
            throw Error(ErrorCode::invalid_input, "pearson: non-finite value");
        }
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mx;
        double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw Error(ErrorCode::invalid_input, "pearson: zero variance");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

TelemetryReport analyze_events(const std::vector<CompletionEvent>& events, const AnalyzerConfig& config,
                               const Taxonomy& taxonomy)
{
    config.validate();
    TelemetryReport report;
    report.events = events.size();
    report.car = compute_car(events, config);
    for (int h : config.horizons) report.cpr[h] = compute_cpr(events, h, config);
    std::map<std::string, CarTally> per_language;
    for (const auto& e : events) per_language[e.language].add(e, config);
    for (const auto& [lang, t] : per_language) report.car_by_language[lang] = t.ratio();
    report.relative_car = relative_car_by_node(events, config, taxonomy);
    return report;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v)
{
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const TelemetryReport& report)
{
    nlohmann::json cpr = nlohmann::json::object();
    for (const auto& [h, v] : report.cpr) cpr[std::to_string(h)] = optional_json(v);
    nlohmann::json car_by_language = nlohmann::json::object();
    for (const auto& [lang, v] : report.car_by_language) car_by_language[lang] = optional_json(v);
    nlohmann::json relative = nlohmann::json::object();
    for (const auto& [lang, rows] : report.relative_car) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : rows) {
            arr.push_back({
                {"node_type", r.node_type},
                {"events", r.qualifying},
                {"accepted", r.accepted},
                {"car", r.car},
                {"relative_car_percent", optional_json(r.relative_percent)},
                {"suppressed", r.suppressed},
            });
        }
        relative[lang] = arr;
    }
    nlohmann::json j{
        {"events", report.events},
        {"car", optional_json(report.car)},
        {"cpr", cpr},
        {"car_by_language", car_by_language},
        {"relative_car_by_node", relative},
    };
    if (report.correlation) j["pearson"] = *report.correlation;
    return j;
}

std::string plot_data_csv(const TelemetryReport& report)
{
    std::ostringstream out;
    out << "language,node_type,events,car,relative_car_percent\n";
    for (const auto& [lang, rows] : report.relative_car) {
        for (const auto& r : rows) {
            if (r.suppressed || !r.relative_percent) continue;
            out << lang << ',' << r.node_type << ',' << r.qualifying << ',' << nlohmann::json(r.car).dump() << ','
                << nlohmann::json(*r.relative_percent).dump() << '\n';
        }
    }
    return out.str();
}

}  // namespace fimcraft
