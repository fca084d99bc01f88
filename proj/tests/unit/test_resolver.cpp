#include <gtest/gtest.h>

#include <set>
#include <thread>

#include "fimcraft/resolver.hpp"

using namespace fimcraft;
using namespace std::chrono_literals;

namespace {

ResolveRequest request(std::string id)
{
    ResolveRequest r;
    r.id = std::move(id);
    r.project_root = "/tmp/project";
    r.occurrences = {{"src/a.ts", 12, "user"}, {"src/a.ts", 40, "Profile"}};
    r.max_depth = 2;
    r.token_budget = 512;
    return r;
}

std::string pid_of(const ResolveResponse& r)
{
    for (const auto& w : r.warnings) {
        if (w.starts_with("pid:")) return w.substr(4);
    }
    return {};
}

void expect_protocol_error(SymbolResolver& resolver, const std::string& needle)
{
    try {
        resolver.resolve(request("r1"));
        FAIL() << "expected a protocol error containing " << needle;
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::protocol);
        EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
}

}  // namespace

TEST(ResolverProtocol, RequestWireFormat)
{
    auto j = nlohmann::json(request("abc"));
    EXPECT_EQ(j["proto_version"], kResolverProtoVersion);
    EXPECT_EQ(j["id"], "abc");
    EXPECT_EQ(j["occurrences"][1]["symbol"], "Profile");
    EXPECT_EQ(j["occurrences"][0]["offset"], 12);
    EXPECT_EQ(j["max_depth"], 2);
    EXPECT_EQ(j["token_budget"], 512);
    auto back = j.get<ResolveRequest>();
    EXPECT_EQ(back.occurrences.size(), 2U);
    EXPECT_EQ(back.project_root, "/tmp/project");
}

TEST(ResolverProtocol, ResponseParsing)
{
    auto j = nlohmann::json::parse(R"({"proto_version":1,"id":"x","definitions":[
        {"symbol":"User","file":"t.ts","byte_range":[3,9],"text":"interface User {}","depth":1,"parent":"Profile"},
        {"symbol":"P","file":"t.ts","byte_range":[0,1],"text":"p","kind":"type","depth":0,"parent":null}],
        "warnings":["w"]})");
    auto r = j.get<ResolveResponse>();
    ASSERT_EQ(r.definitions.size(), 2U);
    EXPECT_EQ(r.definitions[0].byte_range, (ByteRange{3, 9}));
    EXPECT_EQ(r.definitions[0].kind, "other");
    EXPECT_EQ(r.definitions[0].parent, "Profile");
    EXPECT_FALSE(r.definitions[1].parent);
    EXPECT_EQ(r.warnings, (std::vector<std::string>{"w"}));
    EXPECT_FALSE(r.error);
    auto err = nlohmann::json::parse(R"({"proto_version":1,"id":"x","error":"nope"})").get<ResolveResponse>();
    EXPECT_EQ(err.error, "nope");
}

TEST(SubprocessResolver, RoundTripAndReuse)
{
    SubprocessResolver resolver({FIMCRAFT_FAKE_RESOLVER}, 10s);
    auto a = resolver.resolve(request("one"));
    EXPECT_EQ(a.id, "one");
    ASSERT_EQ(a.definitions.size(), 2U);
    EXPECT_EQ(a.definitions[0].symbol, "user");
    EXPECT_EQ(a.definitions[0].depth, 0);
    EXPECT_EQ(a.definitions[1].depth, 1);
    EXPECT_EQ(a.definitions[1].parent, "Profile");
    EXPECT_EQ(a.definitions[0].byte_range.end, a.definitions[0].text.size());
    auto b = resolver.resolve(request("two"));
    EXPECT_EQ(b.id, "two");
    EXPECT_EQ(pid_of(a), pid_of(b));
}

TEST(SubprocessResolver, Failures)
{
    SubprocessResolver crash({FIMCRAFT_FAKE_RESOLVER, "crash"}, 10s);
    expect_protocol_error(crash, "no response");
    SubprocessResolver bad({FIMCRAFT_FAKE_RESOLVER, "bad-json"}, 10s);
    expect_protocol_error(bad, "malformed");
    SubprocessResolver wrong({FIMCRAFT_FAKE_RESOLVER, "wrong-id"}, 10s);
    expect_protocol_error(wrong, "id mismatch");
    SubprocessResolver err({FIMCRAFT_FAKE_RESOLVER, "error"}, 10s);
    expect_protocol_error(err, "project not found");
    SubprocessResolver version({FIMCRAFT_FAKE_RESOLVER, "wrong-version"}, 10s);
    expect_protocol_error(version, "protocol version");
    SubprocessResolver missing({"/nonexistent/resolver-binary"}, 10s);
    expect_protocol_error(missing, "");
}

TEST(SubprocessResolver, TimeoutIsBounded)
{
    SubprocessResolver slow({FIMCRAFT_FAKE_RESOLVER, "slow"}, 200ms);
    auto start = std::chrono::steady_clock::now();
    expect_protocol_error(slow, "no response");
    EXPECT_LT(std::chrono::steady_clock::now() - start, 3s);
}

TEST(SubprocessResolver, RestartsAfterCrash)
{
    SubprocessResolver resolver({FIMCRAFT_FAKE_RESOLVER, "crash-after-1"}, 10s);
    auto first = resolver.resolve(request("a"));
    expect_protocol_error(resolver, "no response");
    auto third = resolver.resolve(request("c"));
    EXPECT_EQ(third.id, "c");
    EXPECT_NE(pid_of(first), pid_of(third));
}

TEST(ResolverPool, BoundsConcurrentInstances)
{
    ResolverPool pool({FIMCRAFT_FAKE_RESOLVER, "busy"}, 2, 10s);
    std::mutex m;
    std::set<std::string> pids;
    std::vector<std::thread> threads;
    for (int i = 0; i < 6; ++i) {
        threads.emplace_back([&, i] {
            auto r = pool.resolve(request("req" + std::to_string(i)));
            EXPECT_EQ(r.id, "req" + std::to_string(i));
            std::lock_guard lock(m);
            pids.insert(pid_of(r));
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_GE(pids.size(), 1U);
    EXPECT_LE(pids.size(), 2U);
}

TEST(ResolverPool, FailedInstanceIsReplacedOnNextRequest)
{
    ResolverPool pool({FIMCRAFT_FAKE_RESOLVER, "crash-after-1"}, 1, 10s);
    EXPECT_NO_THROW(pool.resolve(request("a")));
    EXPECT_THROW(pool.resolve(request("b")), Error);
    EXPECT_EQ(pool.resolve(request("c")).id, "c");
}
