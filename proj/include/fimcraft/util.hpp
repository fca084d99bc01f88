#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fimcraft {

enum class ErrorCode {
    io,
    invalid_config,
    unsupported_language,
    invalid_input,
    protocol,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

/// Half-open byte range [start, end).
struct ByteRange {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - start; }
    bool empty() const { return end <= start; }
    bool contains(const ByteRange& other) const { return start <= other.start && other.end <= end; }
    bool intersects(const ByteRange& other) const { return start < other.end && other.start < end; }
    friend bool operator==(const ByteRange&, const ByteRange&) = default;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// UTF-8 helpers. Offsets are byte offsets.
bool is_valid_utf8(std::string_view text);
std::size_t codepoint_count(std::string_view text);
std::u32string decode_utf8(std::string_view text);
/// Moves `offset` backwards onto the start of a code point.
std::size_t floor_codepoint(std::string_view text, std::size_t offset);
/// Moves `offset` forwards onto the start of a code point (or the end).
std::size_t ceil_codepoint(std::string_view text, std::size_t offset);

std::string_view trim(std::string_view text);
/// Collapses every whitespace run to one space and trims the ends.
std::string normalize_whitespace(std::string_view text);
std::string to_lower_ascii(std::string_view text);

std::string sha256_hex(std::string_view data);

// Deterministic seeding. std distributions are implementation defined, so
// draws go through these helpers instead.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();
    /// Uniform in [0, 1).
    double uniform();
    /// Uniform integer in [lo, hi], inclusive.
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);

  private:
    std::uint64_t state_;
};

/// Runs fn(i) for i in [0, count) on up to `workers` threads. workers == 0
/// means hardware concurrency. The first exception thrown is rethrown.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace fimcraft
