#include "toolgrade/judge.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "toolgrade/digest.hpp"

namespace toolgrade {

using json = nlohmann::json;

std::string to_string(OutputSchema s) {
    switch (s) {
        case OutputSchema::binary_verdict: return "binary-verdict";
        case OutputSchema::parameter_extraction_list: return "parameter-extraction-list";
        case OutputSchema::pairwise_verdict_list: return "pairwise-verdict-list";
        case OutputSchema::comparison_verdict: return "comparison-verdict";
    }
    return "binary-verdict";
}

OutputSchema output_schema_from_string(std::string_view s) {
    if (s == "binary-verdict") return OutputSchema::binary_verdict;
    if (s == "parameter-extraction-list") return OutputSchema::parameter_extraction_list;
    if (s == "pairwise-verdict-list") return OutputSchema::pairwise_verdict_list;
    if (s == "comparison-verdict") return OutputSchema::comparison_verdict;
    throw ConfigError("unknown output schema: " + std::string(s));
}

std::string to_string(Mode m) {
    switch (m) {
        case Mode::live: return "live";
        case Mode::record: return "record";
        case Mode::replay: return "replay";
    }
    return "replay";
}

Mode mode_from_string(std::string_view s) {
    if (s == "live") return Mode::live;
    if (s == "record") return Mode::record;
    if (s == "replay") return Mode::replay;
    throw ConfigError("unknown mode: " + std::string(s) + " (expected live|record|replay)");
}

// ---- Templates ----

namespace {

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Scans the body for {identifier} placeholders. Anything else between braces
// (JSON snippets, "{{", spaces) is literal text.
std::vector<std::string> scan_placeholders(std::string_view body) {
    std::set<std::string> names;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] != '{') continue;
        std::size_t j = i + 1;
        if (j < body.size() && !is_ident_char(body[j])) continue;
        while (j < body.size() && is_ident_char(body[j])) ++j;
        if (j < body.size() && body[j] == '}' && j > i + 1) {
            names.insert(std::string(body.substr(i + 1, j - i - 1)));
            i = j;
        }
    }
    return {names.begin(), names.end()};
}

}  // namespace

PromptTemplate parse_template_text(std::string_view template_id, std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line.rfind("schema:", 0) != 0)
        throw ConfigError("template '" + std::string(template_id) +
                          "': first line must be 'schema: <name>'");
    std::string schema_name = line.substr(7);
    schema_name.erase(0, schema_name.find_first_not_of(" \t"));
    schema_name.erase(schema_name.find_last_not_of(" \t\r") + 1);

    if (!std::getline(in, line) || line.rfind("---", 0) != 0)
        throw ConfigError("template '" + std::string(template_id) +
                          "': expected '---' separator after schema line");

    PromptTemplate tmpl;
    tmpl.template_id = std::string(template_id);
    tmpl.schema = output_schema_from_string(schema_name);
    std::string body;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        body += line;
        body += '\n';
    }
    if (!body.empty() && text.back() != '\n') body.pop_back();
    tmpl.body = std::move(body);
    tmpl.bindings = scan_placeholders(tmpl.body);
    return tmpl;
}

std::string render_prompt(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& bindings) {
    const std::string_view body = tmpl.body;
    std::string out;
    out.reserve(body.size());
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] != '{') {
            out.push_back(body[i]);
            continue;
        }
        std::size_t j = i + 1;
        while (j < body.size() && is_ident_char(body[j])) ++j;
        if (j < body.size() && body[j] == '}' && j > i + 1) {
            const std::string name(body.substr(i + 1, j - i - 1));
            auto it = bindings.find(name);
            if (it == bindings.end())
                throw ConfigError("template '" + tmpl.template_id + "': unbound placeholder " + name);
            out += it->second;  // literal: braces in the binding stay verbatim
            i = j;
        } else {
            out.push_back(body[i]);
        }
    }
    return out;
}

TemplateStore TemplateStore::load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
        throw ConfigError("templates directory not found: " + dir.string());
    TemplateStore store;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        std::ifstream in(entry.path());
        std::stringstream buf;
        buf << in.rdbuf();
        const std::string id = entry.path().stem().string();
        store.templates_.emplace(id, parse_template_text(id, buf.str()));
    }
    if (store.templates_.empty())
        throw ConfigError("no templates found under " + dir.string());
    return store;
}

const PromptTemplate& TemplateStore::get(std::string_view template_id) const {
    auto it = templates_.find(template_id);
    if (it == templates_.end())
        throw ConfigError("unknown template id: " + std::string(template_id));
    return it->second;
}

std::vector<std::string> TemplateStore::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : templates_) out.push_back(id);
    return out;
}

// ---- Digest & transcript store ----

std::string request_digest(std::string_view prompt, std::string_view model_name,
                           double temperature, int max_output_tokens) {
    // json (std::map-backed) sorts keys, so the encoding is canonical.
    json j;
    j["max_tokens"] = max_output_tokens;
    j["model"] = model_name;
    j["prompt"] = prompt;
    j["temperature"] = temperature;
    return sha256_hex(j.dump());
}

TranscriptStore::TranscriptStore(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;  // fresh store
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("digest") || !j.contains("raw_text"))
            throw DataError("transcript store " + path_.string() + ": bad record at line " +
                            std::to_string(line_no));
        entries_[j.at("digest").get<std::string>()] = j.at("raw_text").get<std::string>();
    }
}

std::optional<std::string> TranscriptStore::lookup(const std::string& digest) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(digest);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void TranscriptStore::append(const std::string& digest, const std::string& model_name,
                             const std::string& raw_text) {
    std::lock_guard lock(mutex_);
    entries_[digest] = raw_text;  // last record wins, both here and on load

    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));

    std::ofstream out(path_, std::ios::app);
    if (!out) throw DataError("cannot append to transcript store: " + path_.string());
    json j;
    j["digest"] = digest;
    j["model_name"] = model_name;
    j["raw_text"] = raw_text;
    j["recorded_at"] = stamp;
    out << j.dump() << '\n';
}

std::size_t TranscriptStore::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

// ---- Client ----

namespace {

constexpr const char* kDefaultPreamble =
    "You are a careful data-quality assessor for tool-using AI assistants. "
    "Follow the requested output format exactly.";

}  // namespace

JudgeClient::JudgeClient(JudgeConfig cfg, std::shared_ptr<TranscriptStore> store,
                         std::shared_ptr<Transport> transport)
    : cfg_(std::move(cfg)), store_(std::move(store)), transport_(std::move(transport)) {
    if (cfg_.system_preamble.empty()) cfg_.system_preamble = kDefaultPreamble;
    if (!store_) throw ConfigError("judge client requires a transcript store");
}

JudgeResponse JudgeClient::complete(const std::string& prompt) {
    const auto t0 = std::chrono::steady_clock::now();
    JudgeResponse resp;
    resp.request_digest =
        request_digest(prompt, cfg_.model_name, cfg_.temperature, cfg_.max_output_tokens);

    if (!cfg_.force_refresh) {
        if (auto hit = store_->lookup(resp.request_digest)) {
            resp.raw_text = *hit;
            resp.cache_hit = true;
            resp.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0);
            return resp;
        }
    }
    if (cfg_.mode == Mode::replay) throw ReplayMiss(resp.request_digest);
    if (!transport_) throw ConfigError("no transport configured for " + to_string(cfg_.mode) + " mode");

    json body;
    body["model"] = cfg_.model_name;
    body["temperature"] = cfg_.temperature;
    body["max_tokens"] = cfg_.max_output_tokens;
    body["messages"] = json::array({json{{"role", "system"}, {"content", cfg_.system_preamble}},
                                    json{{"role", "user"}, {"content", prompt}}});

    std::vector<std::pair<std::string, std::string>> headers{{"Content-Type", "application/json"}};
    if (!cfg_.auth_token.empty()) headers.emplace_back("Authorization", "Bearer " + cfg_.auth_token);

    HttpReply reply;
    std::string transport_error;
    auto backoff = cfg_.retry_backoff;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff = std::min(backoff * 2, std::chrono::milliseconds(10000));
        }
        try {
            reply = transport_->post(cfg_.endpoint, headers, body.dump());
            transport_error.clear();
        } catch (const std::exception& e) {
            transport_error = e.what();
            continue;
        }
        if (reply.status == 200) break;
    }
    if (!transport_error.empty())
        throw UpstreamError("judge request failed after " + std::to_string(cfg_.max_retries + 1) +
                            " attempts: " + transport_error);
    if (reply.status != 200)
        throw UpstreamError("judge request failed after " + std::to_string(cfg_.max_retries + 1) +
                            " attempts, last status " + std::to_string(reply.status));

    json parsed = json::parse(reply.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("choices") || parsed.at("choices").empty())
        throw UpstreamError("judge response is not a chat completion: " + reply.body.substr(0, 200));
    resp.raw_text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();

    if (cfg_.mode == Mode::record)
        store_->append(resp.request_digest, cfg_.model_name, resp.raw_text);

    resp.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - t0);
    return resp;
}

// ---- Structured parsing ----

std::string to_string(Diff::Kind k) {
    switch (k) {
        case Diff::Kind::missing_in_gt: return "missing-in-gt";
        case Diff::Kind::hallucinated_in_gt: return "hallucinated-in-gt";
        case Diff::Kind::value_mismatch: return "value-mismatch";
    }
    return "value-mismatch";
}

namespace {

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

// Last "Answer: Yes|No" marker in the text (case-insensitive), or nullopt.
std::optional<bool> find_answer_marker(const std::string& text) {
    static const std::regex re(R"(answer\s*:\s*(yes|no)\b)", std::regex::icase);
    std::optional<bool> result;
    auto begin = std::sregex_iterator(text.begin(), text.end(), re);
    for (auto it = begin; it != std::sregex_iterator(); ++it)
        result = lowercase((*it)[1].str()) == "yes";
    return result;
}

// "N. rest" numbered-line prefix; returns rest or nullopt.
std::optional<std::string> numbered_rest(const std::string& line) {
    static const std::regex re(R"(^\s*(\d+)[.)]\s*(.*)$)");
    std::smatch m;
    if (!std::regex_match(line, m, re)) return std::nullopt;
    return m[2].str();
}

std::vector<ExtractionItem> parse_extraction_list(const std::string& text) {
    std::vector<ExtractionItem> items;
    for (const auto& line : split_lines(text)) {
        auto rest = numbered_rest(line);
        if (!rest) continue;
        const auto colon = rest->find(':');
        if (colon == std::string::npos || colon == 0) continue;
        ExtractionItem item;
        item.name = trim(std::string_view(*rest).substr(0, colon));
        item.value = trim(std::string_view(*rest).substr(colon + 1));
        if (item.name.empty()) continue;
        const std::string v = lowercase(item.value);
        if (v == "#missing" || v == "missing" || v == "#missing." || v.empty()) {
            item.missing = true;
            item.value.clear();
        }
        items.push_back(std::move(item));
    }
    if (items.empty()) throw ParseFailure("no extraction list found in judge output");
    return items;
}

std::vector<bool> parse_pairwise_list(const std::string& text) {
    static const std::regex re(R"(^\s*(yes|no)\b)", std::regex::icase);
    std::vector<bool> verdicts;
    for (const auto& line : split_lines(text)) {
        auto rest = numbered_rest(line);
        if (!rest) continue;
        std::smatch m;
        if (!std::regex_search(*rest, m, re)) continue;
        verdicts.push_back(lowercase(m[1].str()) == "yes");
    }
    if (verdicts.empty()) throw ParseFailure("no pairwise verdict list found in judge output");
    return verdicts;
}

ComparisonVerdict parse_comparison(const std::string& text) {
    auto answer = find_answer_marker(text);
    if (!answer) throw ParseFailure("no Answer marker found in comparison output");
    ComparisonVerdict verdict;
    verdict.aligned = *answer;

    static const std::regex diff_re(R"(^(missing|hallucinated|mismatch)\b[ :]*([^:]*):\s*(.*)$)",
                                    std::regex::icase);
    for (const auto& line : split_lines(text)) {
        auto rest = numbered_rest(line);
        if (!rest) continue;
        std::smatch m;
        if (!std::regex_match(*rest, m, diff_re)) continue;
        Diff d;
        const std::string kind = lowercase(m[1].str());
        if (kind == "missing") d.kind = Diff::Kind::missing_in_gt;
        else if (kind == "hallucinated") d.kind = Diff::Kind::hallucinated_in_gt;
        else d.kind = Diff::Kind::value_mismatch;
        d.name = trim(m[2].str());
        d.detail = trim(m[3].str());
        verdict.diffs.push_back(std::move(d));
    }

    // AlignmentResult holds valid <=> diffs empty; a bare "No" still has to
    // carry at least one diff, and a "Yes" with diffs is contradictory.
    if (!verdict.aligned && verdict.diffs.empty())
        verdict.diffs.push_back({Diff::Kind::value_mismatch, "", "judge reported misalignment without detail"});
    if (verdict.aligned && !verdict.diffs.empty())
        throw ParseFailure("comparison output claims alignment but lists diffs");
    return verdict;
}

}  // namespace

ParsedVerdict parse_structured(const std::string& raw_text, OutputSchema schema) {
    switch (schema) {
        case OutputSchema::binary_verdict: {
            auto answer = find_answer_marker(raw_text);
            if (!answer) throw ParseFailure("no Answer marker found in judge output");
            return *answer;
        }
        case OutputSchema::parameter_extraction_list:
            return parse_extraction_list(raw_text);
        case OutputSchema::pairwise_verdict_list:
            return parse_pairwise_list(raw_text);
        case OutputSchema::comparison_verdict:
            return parse_comparison(raw_text);
    }
    throw ParseFailure("unknown schema");
}

// ---- httplib transport ----

}  // namespace toolgrade

#ifdef TOOLGRADE_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace toolgrade {

namespace {

class HttplibTransport final : public Transport {
public:
    explicit HttplibTransport(std::chrono::milliseconds timeout) : timeout_(timeout) {}

    HttpReply post(const std::string& url,
                   const std::vector<std::pair<std::string, std::string>>& headers,
                   const std::string& body) override {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos)
            throw ConfigError("endpoint URL must include a scheme: " + url);
        const auto path_start = url.find('/', scheme_end + 3);
        const std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
        const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

        httplib::Client client(base);
        client.set_connection_timeout(timeout_);
        client.set_read_timeout(timeout_);
        client.set_write_timeout(timeout_);

        httplib::Headers h;
        std::string content_type = "application/json";
        for (const auto& [k, v] : headers) {
            if (lowercase_ascii(k) == "content-type")
                content_type = v;
            else
                h.emplace(k, v);
        }
        auto res = client.Post(path, h, body, content_type);
        if (!res) throw UpstreamError("transport error: " + httplib::to_string(res.error()));
        return {res->status, res->body};
    }

private:
    static std::string lowercase_ascii(std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        return s;
    }

    std::chrono::milliseconds timeout_;
};

}  // namespace

std::shared_ptr<Transport> make_httplib_transport(std::chrono::milliseconds timeout) {
    return std::make_shared<HttplibTransport>(timeout);
}

}  // namespace toolgrade
