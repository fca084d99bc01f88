#include "fimcraft/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <system_error>

#include "fimcraft/util.hpp"

namespace fs = std::filesystem;

namespace fimcraft {

LanguageMap::LanguageMap(std::vector<std::pair<std::string, std::string>> entries) : entries_(std::move(entries))
{
    for (auto& [ext, lang] : entries_) {
        ext = to_lower_ascii(ext);
        if (ext.empty() || ext.front() != '.') {
            ext.insert(ext.begin(), '.');
        }
    }
}

LanguageMap LanguageMap::defaults()
{
    return LanguageMap({
        {".py", "python"},
        {".js", "javascript"},
        {".jsx", "javascript"},
        {".mjs", "javascript"},
        {".cjs", "javascript"},
        {".ts", "typescript"},
        {".mts", "typescript"},
        {".cts", "typescript"},
        {".tsx", "tsx"},
    });
}

std::string LanguageMap::language_for(const fs::path& path) const
{
    auto ext = to_lower_ascii(path.extension().string());
    for (const auto& [e, lang] : entries_) {
        if (e == ext) return lang;
    }
    return {};
}

namespace {

struct Walker {
    const fs::path& root;
    fs::path canonical_root;
    const LanguageMap& languages;
    std::set<fs::path> visited_dirs;
    std::set<fs::path> visited_files;
    std::vector<std::pair<std::string, fs::path>> hits;  // relative path, real path
    std::vector<ScanWarning> warnings;

    bool inside_root(const fs::path& canonical) const
    {
        auto rel = canonical.lexically_relative(canonical_root);
        return !rel.empty() && *rel.begin() != "..";
    }

    void walk(const fs::path& dir, const std::string& rel_prefix)
    {
        std::error_code ec;
        std::vector<fs::directory_entry> entries;
        for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
            entries.push_back(*it);
        }
        if (ec) {
            warnings.push_back({rel_prefix.empty() ? "." : rel_prefix, "cannot list directory: " + ec.message()});
            return;
        }
        std::sort(entries.begin(), entries.end(),
                  [](const auto& a, const auto& b) { return a.path().filename() < b.path().filename(); });

        for (const auto& entry : entries) {
            auto name = entry.path().filename().string();
            auto rel = rel_prefix.empty() ? name : rel_prefix + "/" + name;
            auto real = fs::canonical(entry.path(), ec);
            if (ec) {
                // Dangling symlink or vanished entry.
                warnings.push_back({rel, "cannot resolve: " + ec.message()});
                ec.clear();
                continue;
            }
            if (real != canonical_root && !inside_root(real)) {
                continue;
            }
            if (fs::is_directory(real, ec)) {
                if (name == ".git") continue;
                if (visited_dirs.insert(real).second) {
                    walk(entry.path(), rel);
                }
                continue;
            }
            if (!fs::is_regular_file(real, ec)) continue;
            if (languages.language_for(entry.path()).empty()) continue;
            if (visited_files.insert(real).second) {
                hits.emplace_back(rel, real);
            }
        }
    }
};

}  // namespace

ScanResult scan_repository(const fs::path& root, const LanguageMap& languages, const std::string& repo_id)
{
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw Error(ErrorCode::io, "repository root is not a readable directory: " + root.string());
    }
    fs::directory_iterator probe(root, ec);
    if (ec) {
        throw Error(ErrorCode::io, "cannot read repository root " + root.string() + ": " + ec.message());
    }

    Walker walker{root, fs::canonical(root), languages, {}, {}, {}, {}};
    walker.visited_dirs.insert(walker.canonical_root);
    walker.walk(root, "");

    std::sort(walker.hits.begin(), walker.hits.end());

    ScanResult result;
    result.warnings = std::move(walker.warnings);
    for (const auto& [rel, real] : walker.hits) {
        SourceFile file;
        file.repo_id = repo_id;
        file.path = rel;
        file.language = languages.language_for(rel);
        try {
            file.content = read_file(real);
        } catch (const Error& e) {
            result.warnings.push_back({rel, e.what()});
            continue;
        }
        file.size_bytes = file.content.size();
        result.files.push_back(std::move(file));
    }
    return result;
}

void FilterPolicy::validate() const
{
    if (max_line_length == 0 || max_mean_line_length == 0 || max_file_bytes == 0) {
        throw Error(ErrorCode::invalid_config, "filter thresholds must be positive");
    }
    if (!(min_alphanumeric_fraction >= 0.0 && min_alphanumeric_fraction <= 1.0)) {
        throw Error(ErrorCode::invalid_config, "min_alphanumeric_fraction must lie in [0, 1]");
    }
}

FilterVerdict apply_quality_filters(const SourceFile& file, const FilterPolicy& policy)
{
    FilterVerdict verdict;
    auto reject = [&](const char* code) {
        verdict.accepted = false;
        verdict.reasons.emplace_back(code);
    };

    const std::string_view text = file.content;
    if (text.size() > policy.max_file_bytes) {
        reject(reason::file_too_large);
    }
    if (!is_valid_utf8(text)) {
        reject(reason::invalid_encoding);
        return verdict;
    }

    std::size_t longest = 0;
    std::size_t lines = 0;
    std::size_t total_chars = 0;
    std::size_t alnum = 0;
    std::size_t current = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        auto c = static_cast<unsigned char>(text[i]);
        if ((c & 0xC0U) == 0x80U) continue;  // continuation byte
        ++total_chars;
        if (c < 0x80U && std::isalnum(c)) ++alnum;
        if (c == '\n') {
            longest = std::max(longest, current);
            ++lines;
            current = 0;
        } else {
            ++current;
        }
    }
    if (current > 0) {
        longest = std::max(longest, current);
        ++lines;
    }
    std::size_t content_chars = total_chars - std::count(text.begin(), text.end(), '\n');

    if (longest > policy.max_line_length) {
        reject(reason::line_too_long);
    }
    if (lines > 0 && static_cast<double>(content_chars) / static_cast<double>(lines) >
                         static_cast<double>(policy.max_mean_line_length)) {
        reject(reason::mean_line_too_long);
    }
    double fraction = total_chars == 0 ? 0.0 : static_cast<double>(alnum) / static_cast<double>(total_chars);
    if (fraction < policy.min_alphanumeric_fraction) {
        reject(reason::low_alphanumeric);
    }
    if (!policy.autogenerated_markers.empty()) {
        auto lowered = to_lower_ascii(text);
        for (const auto& marker : policy.autogenerated_markers) {
            if (!marker.empty() && lowered.find(to_lower_ascii(marker)) != std::string::npos) {
                reject(reason::autogenerated);
                break;
            }
        }
    }
    return verdict;
}

void to_json(nlohmann::json& j, const FilterPolicy& policy)
{
    j = nlohmann::json{
        {"max_line_length", policy.max_line_length},
        {"max_mean_line_length", policy.max_mean_line_length},
        {"min_alphanumeric_fraction", policy.min_alphanumeric_fraction},
        {"max_file_bytes", policy.max_file_bytes},
        {"autogenerated_markers", policy.autogenerated_markers},
    };
}

void from_json(const nlohmann::json& j, FilterPolicy& policy)
{
    for (const auto& [key, value] : j.items()) {
        if (key == "max_line_length") {
            policy.max_line_length = value.get<std::size_t>();
        } else if (key == "max_mean_line_length") {
            policy.max_mean_line_length = value.get<std::size_t>();
        } else if (key == "min_alphanumeric_fraction") {
            policy.min_alphanumeric_fraction = value.get<double>();
        } else if (key == "max_file_bytes") {
            policy.max_file_bytes = value.get<std::size_t>();
        } else if (key == "autogenerated_markers") {
            policy.autogenerated_markers = value.get<std::vector<std::string>>();
        } else {
            throw Error(ErrorCode::invalid_config, "unknown filter key: " + key);
        }
    }
    policy.validate();
}

}  // namespace fimcraft
