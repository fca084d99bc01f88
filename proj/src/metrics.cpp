#include "fimcraft/metrics.hpp"

#include <algorithm>
#include <array>
#include <set>

namespace fimcraft {

namespace {

template <class Str>
std::size_t levenshtein_seq(const Str& s_in, const Str& t_in)
{
    const Str* s = &s_in;
    const Str* t = &t_in;
    if (s->size() < t->size()) std::swap(s, t);
    const std::size_t n = t->size();
    std::array<std::size_t, 65> small{};
    std::vector<std::size_t> large;
    std::size_t* row = small.data();
    if (n + 1 > small.size()) {
        large.resize(n + 1);
        row = large.data();
    }
    for (std::size_t j = 0; j <= n; ++j) row[j] = j;
    for (std::size_t i = 1; i <= s->size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        const auto si = (*s)[i - 1];
        for (std::size_t j = 1; j <= n; ++j) {
            std::size_t up = row[j];
            row[j] = std::min({up + 1, row[j - 1] + 1, diag + (si == (*t)[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[n];
}

bool is_ascii(std::string_view text)
{
    return std::all_of(text.begin(), text.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

}  // namespace

std::size_t levenshtein(std::string_view a, std::string_view b)
{
    if (is_ascii(a) && is_ascii(b)) return levenshtein_seq(a, b);
    return levenshtein_seq(decode_utf8(a), decode_utf8(b));
}

bool exact_match(std::string_view generated, std::string_view truth, bool single_line)
{
    if (single_line) {
        auto nl = generated.find_first_of("\r\n");
        if (nl != std::string_view::npos) generated = generated.substr(0, nl);
    }
    return trim(generated) == trim(truth);
}

bool prefix_match(std::string_view generated, std::string_view truth)
{
    return trim(generated).starts_with(trim(truth));
}

double edit_similarity(std::string_view generated, std::string_view truth)
{
    generated = trim(generated);
    truth = trim(truth);
    auto longest = std::max(codepoint_count(generated), codepoint_count(truth));
    if (longest == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(generated, truth)) / static_cast<double>(longest);
}

void to_json(nlohmann::json& j, const PredictionRecord& p)
{
    j = nlohmann::json{{"example_id", p.example_id}, {"generated", p.generated}};
    if (p.latency_seconds) j["latency_seconds"] = *p.latency_seconds;
}

void from_json(const nlohmann::json& j, PredictionRecord& p)
{
    j.at("example_id").get_to(p.example_id);
    j.at("generated").get_to(p.generated);
    if (j.contains("latency_seconds") && !j["latency_seconds"].is_null()) {
        p.latency_seconds = j["latency_seconds"].get<double>();
    } else {
        p.latency_seconds.reset();
    }
}

MetricSelection MetricSelection::parse(std::string_view list)
{
    MetricSelection sel{false, false, false};
    while (!list.empty()) {
        auto comma = list.find(',');
        auto name = trim(list.substr(0, comma));
        if (name == "em") {
            sel.em = true;
        } else if (name == "pm") {
            sel.pm = true;
        } else if (name == "es") {
            sel.es = true;
        } else if (!name.empty()) {
            throw Error(ErrorCode::invalid_config, "unknown metric: " + std::string(name));
        }
        if (comma == std::string_view::npos) break;
        list.remove_prefix(comma + 1);
    }
    return sel;
}

namespace {

struct Tally {
    std::size_t examples = 0;
    std::size_t predicted = 0;
    std::size_t em = 0;
    std::size_t pm = 0;
    double es = 0.0;
    std::size_t passed = 0;
};

struct Scored {
    bool predicted = false;
    bool em = false;
    bool pm = false;
    double es = 0.0;
    bool passed = false;
};

MetricsSummary summarize(const Tally& t, const EvalOptions& options)
{
    MetricsSummary s;
    s.examples = t.examples;
    s.predicted = t.predicted;
    s.missing = t.examples - t.predicted;
    auto rate = [&](double num) { return t.examples == 0 ? 0.0 : num / static_cast<double>(t.examples); };
    if (options.metrics.em) s.exact_match = rate(static_cast<double>(t.em));
    if (options.metrics.pm) s.prefix_match = rate(static_cast<double>(t.pm));
    if (options.metrics.es) s.edit_similarity = rate(t.es);
    if (options.pass_verdicts) s.pass_at_1 = rate(static_cast<double>(t.passed));
    return s;
}

nlohmann::json summary_json(const MetricsSummary& s)
{
    nlohmann::json j{{"examples", s.examples}, {"predicted", s.predicted}, {"missing", s.missing}};
    if (s.exact_match) j["exact_match"] = *s.exact_match;
    if (s.prefix_match) j["prefix_match"] = *s.prefix_match;
    if (s.edit_similarity) j["edit_similarity"] = *s.edit_similarity;
    if (s.pass_at_1) j["pass_at_1"] = *s.pass_at_1;
    return j;
}

}  // namespace

nlohmann::json to_json(const MetricsReport& report)
{
    nlohmann::json by_language = nlohmann::json::object();
    for (const auto& [lang, s] : report.by_language) by_language[lang] = summary_json(s);
    return nlohmann::json{
        {"overall", summary_json(report.overall)},
        {"by_language", by_language},
        {"unknown_predictions", report.unknown_predictions},
    };
}

MetricsReport evaluate_run(const std::vector<FimExample>& dataset, const std::vector<PredictionRecord>& predictions,
                           const EvalOptions& options)
{
    std::map<std::string, const PredictionRecord*> by_id;
    for (const auto& p : predictions) {
        if (!by_id.emplace(p.example_id, &p).second) {
            throw Error(ErrorCode::invalid_input, "duplicate prediction for example " + p.example_id);
        }
    }

    std::vector<Scored> scored(dataset.size());
    parallel_for(dataset.size(), options.workers, [&](std::size_t i) {
        const auto& ex = dataset[i];
        auto& out = scored[i];
        if (options.pass_verdicts) {
            auto v = options.pass_verdicts->find(ex.id);
            out.passed = v != options.pass_verdicts->end() && v->second;
        }
        auto it = by_id.find(ex.id);
        if (it == by_id.end()) return;
        const auto& gen = it->second->generated;
        out.predicted = true;
        if (options.metrics.em) out.em = exact_match(gen, ex.middle, options.single_line);
        if (options.metrics.pm) out.pm = prefix_match(gen, ex.middle);
        if (options.metrics.es) out.es = edit_similarity(gen, ex.middle);
    });

    Tally overall;
    std::map<std::string, Tally> per_language;
    std::set<std::string> known;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        known.insert(dataset[i].id);
        for (auto* t : {&overall, &per_language[dataset[i].language]}) {
            const auto& s = scored[i];
            ++t->examples;
            t->predicted += s.predicted ? 1 : 0;
            t->em += s.em ? 1 : 0;
            t->pm += s.pm ? 1 : 0;
            t->es += s.es;
            t->passed += s.passed ? 1 : 0;
        }
    }

    MetricsReport report;
    report.overall = summarize(overall, options);
    for (const auto& [lang, t] : per_language) report.by_language[lang] = summarize(t, options);
    for (const auto& [id, p] : by_id) {
        if (!known.contains(id)) report.unknown_predictions.push_back(id);
    }
    return report;
}

}  // namespace fimcraft
