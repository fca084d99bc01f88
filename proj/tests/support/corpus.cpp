#include "corpus.hpp"

#include <array>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace fimtest {

namespace {

constexpr std::array kWords = {
    "user",   "order",  "account", "session", "token",  "price",   "cart",   "item",    "record",
    "payload", "config", "cache",  "event",   "report", "invoice", "stream", "buffer",  "queue",
    "ledger", "metric", "profile", "address", "ticket", "widget",  "vendor", "channel", "bucket",
};
constexpr std::array kVerbs = {
    "load", "save", "build", "parse", "merge", "apply", "resolve", "fetch", "render", "update", "compute", "format",
};

class Gen {
  public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
    std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
    std::string word() { return kWords[below(kWords.size())]; }
    std::string verb() { return kVerbs[below(kVerbs.size())]; }
    std::string num() { return std::to_string(between(1, 999)); }

    static std::string cap(std::string s)
    {
        if (!s.empty()) s[0] = static_cast<char>(s[0] - 'a' + 'A');
        return s;
    }
    // Distinct names keep most chunks pairwise distinct.
    std::string snake() { return verb() + "_" + word() + "_" + std::to_string(++counter_); }
    std::string camel() { return verb() + cap(word()) + std::to_string(++counter_); }
    std::string var() { return word() + std::to_string(++counter_); }
    std::string type() { return cap(word()) + cap(word()) + std::to_string(++counter_); }

  private:
    std::mt19937_64 rng_;
    std::size_t counter_ = 0;
};

std::string indent(int n)
{
    return std::string(static_cast<std::size_t>(n) * 4, ' ');
}

std::string join(const std::vector<std::string>& parts, const std::string& sep)
{
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i != 0) out += sep;
        out += parts[i];
    }
    return out;
}

// ---- Python -------------------------------------------------------------------

const std::array<std::string, 2> kSharedPython = {
    "def normalize_shared_payload(payload, defaults):\n"
    "    merged = dict(defaults)\n"
    "    merged.update(payload)\n"
    "    return {key: value for key, value in merged.items() if value is not None}\n\n\n",
    "def shared_retry_budget(attempts, base_delay):\n"
    "    delays = []\n"
    "    for attempt in range(attempts):\n"
    "        delays.append(base_delay * (2 ** attempt))\n"
    "    return delays\n\n\n",
};

std::string py_statements(Gen& g, int depth, const std::vector<std::string>& names, std::size_t count)
{
    std::string out;
    for (std::size_t i = 0; i < count; ++i) {
        auto v = g.var();
        switch (g.below(4)) {
        case 0:
            out += indent(depth) + v + " = " + g.snake() + "(" + names[g.below(names.size())] + ", " + g.num() + ")\n";
            break;
        case 1:
            out += indent(depth) + v + " = " + names[g.below(names.size())] + " * " + g.num() + "\n";
            break;
        case 2:
            out += indent(depth) + names[g.below(names.size())] + "." + g.verb() + "(" + g.var() + ")\n";
            break;
        default:
            out += indent(depth) + v + " = [" + g.var() + ", " + g.var() + "]\n";
            break;
        }
    }
    return out;
}

std::string py_function(Gen& g, int depth, bool method)
{
    std::vector<std::string> params;
    for (std::size_t i = 0, n = g.between(1, 4); i < n; ++i) params.push_back(g.var());
    auto sig = method ? "self, " + join(params, ", ") : join(params, ", ");
    std::string out = indent(depth) + "def " + g.snake() + "(" + sig + "):\n";
    out += py_statements(g, depth + 1, params, g.between(1, 4));
    out += indent(depth + 1) + "if " + params[0] + " > " + g.num() + ":\n";
    out += py_statements(g, depth + 2, params, g.between(1, 2));
    if (g.below(4) != 0) {
        out += indent(depth + 1) + "try:\n";
        out += py_statements(g, depth + 2, params, g.between(1, 3));
        out += indent(depth + 1) + "except ValueError as err:\n";
        out += indent(depth + 2) + g.snake() + "(err, " + params.back() + ")\n";
    }
    out += indent(depth + 1) + "return " + g.snake() + "(" + join(params, ", ") + ")\n";
    return out;
}

std::string py_class(Gen& g)
{
    std::vector<std::string> fields;
    for (std::size_t i = 0, n = g.between(1, 3); i < n; ++i) fields.push_back(g.var());
    std::string out = "class " + g.type() + ":\n";
    out += indent(1) + "def __init__(self, " + join(fields, ", ") + "):\n";
    for (const auto& f : fields) out += indent(2) + "self." + f + " = " + f + "\n";
    for (std::size_t i = 0, n = g.between(1, 2); i < n; ++i) {
        out += "\n" + py_function(g, 1, true);
    }
    return out;
}

std::string python_file(Gen& g, std::size_t index)
{
    std::string out = "import os\nimport json\n\n";
    out += g.var() + " = os.environ.get(\"" + g.word() + "\", " + g.num() + ")\n\n\n";
    if (index % 3 == 0) out += kSharedPython[(index / 3) % kSharedPython.size()];
    auto classes = g.between(2, 3);
    auto functions = g.between(2, 4);
    while (classes + functions > 0) {
        bool cls = functions == 0 || (classes > 0 && g.below(classes + functions) < classes);
        out += (cls ? py_class(g) : py_function(g, 0, false)) + "\n\n";
        (cls ? classes : functions)--;
    }
    out += "if __name__ == \"__main__\":\n";
    out += indent(1) + g.snake() + "(" + g.num() + ")\n";
    return out;
}

// ---- JavaScript / TypeScript ---------------------------------------------------

const std::array<std::string, 2> kSharedJs = {
    "function normalizeSharedPayload(payload, defaults) {\n"
    "    const merged = Object.assign({}, defaults, payload);\n"
    "    return Object.keys(merged).filter((key) => merged[key] !== undefined);\n"
    "}\n\n",
    "function sharedRetryBudget(attempts, baseDelay) {\n"
    "    const delays = [];\n"
    "    for (let attempt = 0; attempt < attempts; attempt++) {\n"
    "        delays.push(baseDelay * Math.pow(2, attempt));\n"
    "    }\n"
    "    return delays;\n"
    "}\n\n",
};

std::string js_statements(Gen& g, int depth, const std::vector<std::string>& names, std::size_t count)
{
    std::string out;
    for (std::size_t i = 0; i < count; ++i) {
        auto v = g.var();
        switch (g.below(4)) {
        case 0:
            out += indent(depth) + "const " + v + " = " + g.camel() + "(" + names[g.below(names.size())] + ", " +
                   g.num() + ");\n";
            break;
        case 1:
            out += indent(depth) + "let " + v + " = " + names[g.below(names.size())] + " * " + g.num() + ";\n";
            break;
        case 2:
            out += indent(depth) + names[g.below(names.size())] + "." + g.verb() + "(" + g.var() + ");\n";
            break;
        default:
            out += indent(depth) + names[g.below(names.size())] + " = " + g.camel() + "(" + g.var() + ");\n";
            break;
        }
    }
    return out;
}

std::string js_body(Gen& g, int depth, const std::vector<std::string>& params)
{
    std::string out = js_statements(g, depth, params, g.between(1, 4));
    out += indent(depth) + "if (" + params[0] + " > " + g.num() + ") {\n";
    out += js_statements(g, depth + 1, params, g.between(1, 2));
    out += indent(depth) + "}\n";
    if (g.below(4) != 0) {
        out += indent(depth) + "try {\n";
        out += js_statements(g, depth + 1, params, g.between(1, 3));
        out += indent(depth) + "} catch (err) {\n";
        out += indent(depth + 1) + g.camel() + "(err, " + params.back() + ");\n";
        out += indent(depth) + "}\n";
    }
    out += indent(depth) + "return " + g.camel() + "(" + join(params, ", ") + ");\n";
    return out;
}

std::vector<std::string> params_for(Gen& g)
{
    std::vector<std::string> params;
    for (std::size_t i = 0, n = g.between(1, 4); i < n; ++i) params.push_back(g.var());
    return params;
}

std::string typed(const std::vector<std::string>& params, bool ts)
{
    if (!ts) return join(params, ", ");
    std::vector<std::string> out;
    for (const auto& p : params) out.push_back(p + ": number");
    return join(out, ", ");
}

std::string js_function(Gen& g, bool ts)
{
    auto params = params_for(g);
    if (g.below(3) == 0) {
        return "export const " + g.camel() + " = (" + typed(params, ts) + ") => {\n" + js_body(g, 1, params) + "};\n";
    }
    return "function " + g.camel() + "(" + typed(params, ts) + ")" + (ts ? ": number" : "") + " {\n" +
           js_body(g, 1, params) + "}\n";
}

std::string js_class(Gen& g, bool ts)
{
    auto fields = params_for(g);
    std::string out = "class " + g.type() + " {\n";
    out += indent(1) + "constructor(" + typed(fields, ts) + ") {\n";
    for (const auto& f : fields) out += indent(2) + "this." + f + " = " + f + ";\n";
    out += indent(1) + "}\n";
    for (std::size_t i = 0, n = g.between(1, 2); i < n; ++i) {
        auto params = params_for(g);
        out += "\n" + indent(1) + g.camel() + "(" + typed(params, ts) + ") {\n" + js_body(g, 2, params) +
               indent(1) + "}\n";
    }
    return out + "}\n";
}

std::string ts_interface(Gen& g, std::vector<std::string>& types)
{
    auto name = g.type();
    std::string out = "export interface " + name + " {\n";
    for (std::size_t i = 0, n = g.between(2, 4); i < n; ++i) out += indent(1) + g.var() + ": number;\n";
    if (!types.empty()) out += indent(1) + g.var() + ": " + types.back() + ";\n";
    types.push_back(name);
    return out + "}\n";
}

std::string ecmascript_file(Gen& g, std::size_t index, bool ts)
{
    std::string out = "import { " + g.camel() + " } from './" + g.word() + "';\n\n";
    out += "const " + g.var() + " = " + g.num() + ";\n\n";
    std::vector<std::string> types;
    if (ts) {
        for (std::size_t i = 0, n = g.between(1, 2); i < n; ++i) out += ts_interface(g, types) + "\n";
    }
    if (index % 3 == 1) out += kSharedJs[(index / 3) % kSharedJs.size()];
    auto classes = g.between(2, 3);
    auto functions = g.between(2, 4);
    while (classes + functions > 0) {
        bool cls = functions == 0 || (classes > 0 && g.below(classes + functions) < classes);
        out += (cls ? js_class(g, ts) : js_function(g, ts)) + "\n";
        (cls ? classes : functions)--;
    }
    return out;
}

}  // namespace

std::vector<GeneratedFile> generate_corpus(std::uint64_t seed, std::size_t per_language)
{
    Gen g(seed);
    std::vector<GeneratedFile> files;
    for (std::size_t i = 0; i < per_language; ++i) {
        auto dir = "pkg" + std::to_string(i % 7);
        files.push_back({"py/" + dir + "/module_" + std::to_string(i) + ".py", "python", python_file(g, i)});
        files.push_back({"js/" + dir + "/module" + std::to_string(i) + ".js", "javascript", ecmascript_file(g, i, false)});
        files.push_back({"ts/" + dir + "/module" + std::to_string(i) + ".ts", "typescript", ecmascript_file(g, i, true)});
    }
    return files;
}

void write_corpus(const std::filesystem::path& root, const std::vector<GeneratedFile>& files)
{
    for (const auto& f : files) spit(root / f.path, f.content);
}

TempDir::TempDir(const std::string& tag)
{
    auto pattern = (std::filesystem::temp_directory_path() / (tag + "-XXXXXX")).string();
    if (mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
}

TempDir::~TempDir()
{
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::string slurp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

}  // namespace fimtest
