#include "fimcraft/resolver.hpp"

namespace fimcraft {

void to_json(nlohmann::json& j, const ResolveRequest& r)
{
    nlohmann::json occ = nlohmann::json::array();
    for (const auto& o : r.occurrences) {
        occ.push_back({{"file", o.file}, {"offset", o.offset}, {"symbol", o.symbol}});
    }
    j = nlohmann::json{
        {"proto_version", kResolverProtoVersion},
        {"id", r.id},
        {"project_root", r.project_root},
        {"occurrences", occ},
        {"max_depth", r.max_depth},
        {"token_budget", r.token_budget},
    };
}

void from_json(const nlohmann::json& j, ResolveRequest& r)
{
    j.at("id").get_to(r.id);
    j.at("project_root").get_to(r.project_root);
    r.occurrences.clear();
    for (const auto& o : j.at("occurrences")) {
        r.occurrences.push_back({o.at("file").get<std::string>(), o.at("offset").get<std::size_t>(),
                                 o.at("symbol").get<std::string>()});
    }
    r.max_depth = j.value("max_depth", 2);
    r.token_budget = j.value("token_budget", std::size_t{0});
}

void to_json(nlohmann::json& j, const DefinitionRecord& d)
{
    j = nlohmann::json{
        {"symbol", d.symbol},
        {"file", d.file},
        {"byte_range", {d.byte_range.start, d.byte_range.end}},
        {"text", d.text},
        {"kind", d.kind},
        {"depth", d.depth},
        {"parent", d.parent ? nlohmann::json(*d.parent) : nlohmann::json(nullptr)},
    };
}

void from_json(const nlohmann::json& j, DefinitionRecord& d)
{
    j.at("symbol").get_to(d.symbol);
    j.at("file").get_to(d.file);
    const auto& range = j.at("byte_range");
    d.byte_range = {range.at(0).get<std::size_t>(), range.at(1).get<std::size_t>()};
    j.at("text").get_to(d.text);
    d.kind = j.value("kind", std::string("other"));
    j.at("depth").get_to(d.depth);
    if (j.contains("parent") && !j["parent"].is_null()) {
        d.parent = j["parent"].get<std::string>();
    } else {
        d.parent.reset();
    }
}

void to_json(nlohmann::json& j, const ResolveResponse& r)
{
    j = nlohmann::json{{"proto_version", kResolverProtoVersion}, {"id", r.id}};
    if (r.error) {
        j["error"] = *r.error;
        return;
    }
    j["definitions"] = r.definitions;
    j["warnings"] = r.warnings;
}

void from_json(const nlohmann::json& j, ResolveResponse& r)
{
    j.at("id").get_to(r.id);
    if (j.contains("error") && !j["error"].is_null()) {
        r.error = j["error"].get<std::string>();
    }
    r.definitions = j.value("definitions", std::vector<DefinitionRecord>{});
    r.warnings = j.value("warnings", std::vector<std::string>{});
}

SubprocessResolver::SubprocessResolver(std::vector<std::string> command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout)
{
}

ResolveResponse SubprocessResolver::resolve(const ResolveRequest& request)
{
    if (!child_) {
        child_ = std::make_unique<ChildProcess>(command_);
    }
    if (!child_->write_line(nlohmann::json(request).dump())) {
        child_.reset();
        throw Error(ErrorCode::protocol, "resolver closed its input");
    }
    auto line = child_->read_line(timeout_);
    if (!line) {
        child_.reset();
        throw Error(ErrorCode::protocol, "resolver produced no response");
    }
    ResolveResponse response;
    try {
        auto j = nlohmann::json::parse(*line);
        if (j.value("proto_version", 0) != kResolverProtoVersion) {
            throw Error(ErrorCode::protocol, "resolver speaks an unsupported protocol version");
        }
        response = j.get<ResolveResponse>();
    } catch (const nlohmann::json::exception& e) {
        child_.reset();
        throw Error(ErrorCode::protocol, std::string("malformed resolver response: ") + e.what());
    }
    if (response.id != request.id) {
        child_.reset();
        throw Error(ErrorCode::protocol, "resolver response id mismatch");
    }
    if (response.error) {
        throw Error(ErrorCode::protocol, "resolver error: " + *response.error);
    }
    return response;
}

ResolverPool::ResolverPool(std::vector<std::string> command, std::size_t size, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout), size_(std::max<std::size_t>(size, 1))
{
}

ResolveResponse ResolverPool::resolve(const ResolveRequest& request)
{
    std::unique_ptr<SubprocessResolver> instance;
    {
        std::unique_lock lock(mutex_);
        available_.wait(lock, [&] { return !idle_.empty() || started_ < size_; });
        if (!idle_.empty()) {
            instance = std::move(idle_.back());
            idle_.pop_back();
        } else {
            ++started_;
            instance = std::make_unique<SubprocessResolver>(command_, timeout_);
        }
    }
    auto give_back = [&] {
        std::lock_guard lock(mutex_);
        idle_.push_back(std::move(instance));
        available_.notify_one();
    };
    try {
        auto response = instance->resolve(request);
        give_back();
        return response;
    } catch (...) {
        give_back();
        throw;
    }
}

}  // namespace fimcraft
