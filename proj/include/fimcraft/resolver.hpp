#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fimcraft/process.hpp"
#include "fimcraft/util.hpp"
#include "json.hpp"

namespace fimcraft {

// Resolver wire protocol: one JSON object per line on the resolver's
// stdin/stdout, correlated by `id`.
//
// request:  {"proto_version":1, "id":"...", "project_root":"...",
//            "occurrences":[{"file":"src/a.ts","offset":120,"symbol":"user"}],
//            "max_depth":2, "token_budget":2048}
// response: {"proto_version":1, "id":"...",
//            "definitions":[{"symbol":"User","file":"src/types.ts","byte_range":[0,80],
//                            "text":"interface User {...}","kind":"interface","depth":0,
//                            "parent":null}],
//            "warnings":["..."]}
// failure:  {"proto_version":1, "id":"...", "error":"..."}
inline constexpr int kResolverProtoVersion = 1;

struct Occurrence {
    std::string file;
    std::size_t offset = 0;
    std::string symbol;
};

struct ResolveRequest {
    std::string id;
    std::string project_root;
    std::vector<Occurrence> occurrences;
    int max_depth = 2;
    std::size_t token_budget = 0;
};

struct DefinitionRecord {
    std::string symbol;
    std::string file;
    ByteRange byte_range;
    std::string text;
    std::string kind;
    int depth = 0;
    std::optional<std::string> parent;
};

struct ResolveResponse {
    std::string id;
    std::vector<DefinitionRecord> definitions;
    std::vector<std::string> warnings;
    std::optional<std::string> error;
};

void to_json(nlohmann::json& j, const ResolveRequest& r);
void from_json(const nlohmann::json& j, ResolveRequest& r);
void to_json(nlohmann::json& j, const DefinitionRecord& d);
void from_json(const nlohmann::json& j, DefinitionRecord& d);
void to_json(nlohmann::json& j, const ResolveResponse& r);
void from_json(const nlohmann::json& j, ResolveResponse& r);

class SymbolResolver {
  public:
    virtual ~SymbolResolver() = default;
    /// Throws Error(protocol) when the resolver cannot answer.
    virtual ResolveResponse resolve(const ResolveRequest& request) = 0;
};

/// One resolver subprocess handling requests serially.
class SubprocessResolver final : public SymbolResolver {
  public:
    SubprocessResolver(std::vector<std::string> command, std::chrono::milliseconds timeout);
    ResolveResponse resolve(const ResolveRequest& request) override;

  private:
    std::vector<std::string> command_;
    std::chrono::milliseconds timeout_;
    std::unique_ptr<ChildProcess> child_;
};

/// Bounded pool of resolver subprocesses; an instance serves one request
/// at a time. Instances are started on demand.
class ResolverPool final : public SymbolResolver {
  public:
    ResolverPool(std::vector<std::string> command, std::size_t size,
                 std::chrono::milliseconds timeout = std::chrono::seconds(60));
    ResolveResponse resolve(const ResolveRequest& request) override;

  private:
    std::vector<std::string> command_;
    std::chrono::milliseconds timeout_;
    std::size_t size_;
    std::size_t started_ = 0;
    std::vector<std::unique_ptr<SubprocessResolver>> idle_;
    std::mutex mutex_;
    std::condition_variable available_;
};

}  // namespace fimcraft
