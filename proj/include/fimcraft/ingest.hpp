#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace fimcraft {

struct SourceFile {
    std::string repo_id;
    std::string path;  // repo-relative, '/' separated
    std::string language;
    std::string content;
    std::size_t size_bytes = 0;
};

/// Ordered extension -> language table. The first entry matching an
/// extension wins, so earlier entries take precedence.
class LanguageMap {
  public:
    LanguageMap() = default;
    explicit LanguageMap(std::vector<std::pair<std::string, std::string>> entries);

    static LanguageMap defaults();

    /// Language for `path`, or empty when the extension is not supported.
    std::string language_for(const std::filesystem::path& path) const;
    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

struct ScanWarning {
    std::string path;
    std::string message;
};

struct ScanResult {
    std::vector<SourceFile> files;
    std::vector<ScanWarning> warnings;
};

/// Walks `root` and loads every file whose extension maps to a supported
/// language, sorted by path. Symlinks are followed once per real target;
/// targets outside the root are ignored. `.git` directories are skipped.
/// Throws Error(io) if the root cannot be read.
ScanResult scan_repository(const std::filesystem::path& root, const LanguageMap& languages,
                           const std::string& repo_id);

struct FilterPolicy {
    std::size_t max_line_length = 1000;
    std::size_t max_mean_line_length = 100;
    double min_alphanumeric_fraction = 0.25;
    std::size_t max_file_bytes = 1U << 20;
    std::vector<std::string> autogenerated_markers = {
        "auto-generated", "autogenerated", "automatically generated", "do not edit", "@generated",
    };

    /// Throws Error(invalid_config) when a threshold is out of range.
    void validate() const;
};

namespace reason {
inline constexpr const char* line_too_long = "line_too_long";
inline constexpr const char* mean_line_too_long = "mean_line_too_long";
inline constexpr const char* low_alphanumeric = "low_alphanumeric";
inline constexpr const char* file_too_large = "file_too_large";
inline constexpr const char* autogenerated = "autogenerated";
inline constexpr const char* invalid_encoding = "invalid_encoding";
}  // namespace reason

struct FilterVerdict {
    bool accepted = true;
    std::vector<std::string> reasons;
};

FilterVerdict apply_quality_filters(const SourceFile& file, const FilterPolicy& policy);

void to_json(nlohmann::json& j, const FilterPolicy& policy);
void from_json(const nlohmann::json& j, FilterPolicy& policy);

}  // namespace fimcraft
