#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "toolgrade/errors.hpp"

namespace toolgrade {

enum class OutputSchema {
    binary_verdict,
    parameter_extraction_list,
    pairwise_verdict_list,
    comparison_verdict,
};

std::string to_string(OutputSchema s);
OutputSchema output_schema_from_string(std::string_view s);

// A prompt template: free text with {identifier} placeholders. The binding
// set is derived from the body, so the invariant "every placeholder appears
// in the binding set" holds by construction; render_prompt then rejects any
// unbound placeholder.
struct PromptTemplate {
    std::string template_id;
    std::string body;
    OutputSchema schema = OutputSchema::binary_verdict;
    std::vector<std::string> bindings;  // sorted, unique
};

/// Parse one template file: a "schema: <name>" line, a "---" separator line,
/// then the body verbatim.
PromptTemplate parse_template_text(std::string_view template_id, std::string_view text);

/// Literal placeholder substitution; byte-deterministic, no recursive
/// substitution. Throws ConfigError naming the first unbound placeholder.
std::string render_prompt(const PromptTemplate& tmpl,
                          const std::map<std::string, std::string>& bindings);

// Loads every "*.txt" under a directory, one template per file, id = stem.
class TemplateStore {
public:
    static TemplateStore load(const std::filesystem::path& dir);

    const PromptTemplate& get(std::string_view template_id) const;
    std::vector<std::string> ids() const;

private:
    std::map<std::string, PromptTemplate, std::less<>> templates_;
};

enum class Mode { live, record, replay };

std::string to_string(Mode m);
Mode mode_from_string(std::string_view s);

struct JudgeConfig {
    std::string endpoint;     // e.g. "http://localhost:8080/v1/chat/completions"
    std::string model_name;
    double temperature = 0.0;  // all shipped configurations pin 0
    int max_output_tokens = 512;
    std::chrono::milliseconds timeout{30000};
    int max_retries = 3;
    std::chrono::milliseconds retry_backoff{250};  // doubled per attempt
    Mode mode = Mode::replay;
    std::string system_preamble;  // empty -> default preamble
    bool force_refresh = false;   // skip the cache lookup, refetch
    std::string auth_token;
};

struct JudgeResponse {
    std::string raw_text;
    bool cache_hit = false;
    std::chrono::milliseconds latency{0};
    std::string request_digest;
};

/// Digest keying the transcript store: a pure function of the rendered
/// prompt, model name, temperature and token cap.
std::string request_digest(std::string_view prompt, std::string_view model_name,
                           double temperature, int max_output_tokens);

// Append-only transcript store, line-delimited records
// {digest, model_name, raw_text, recorded_at}. Thread-safe.
class TranscriptStore {
public:
    /// Opens (and loads) the store; the file is created lazily on first append.
    explicit TranscriptStore(std::filesystem::path path);

    std::optional<std::string> lookup(const std::string& digest) const;
    void append(const std::string& digest, const std::string& model_name,
                const std::string& raw_text);
    std::size_t size() const;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::map<std::string, std::string> entries_;
    mutable std::mutex mutex_;
};

struct HttpReply {
    int status = 0;
    std::string body;
};

// Wire transport for chat-completion requests; injectable so tests can count
// or script network traffic.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpReply post(const std::string& url,
                           const std::vector<std::pair<std::string, std::string>>& headers,
                           const std::string& body) = 0;
};

/// Real HTTP(S) transport backed by cpp-httplib.
std::shared_ptr<Transport> make_httplib_transport(std::chrono::milliseconds timeout);

// Chat-completion client with deterministic caching and record/replay. Also
// serves as the ICE runner (same wire protocol, distinct config block).
// Safe for concurrent use.
class JudgeClient {
public:
    JudgeClient(JudgeConfig cfg, std::shared_ptr<TranscriptStore> store,
                std::shared_ptr<Transport> transport);

    /// One completion. Replay misses throw ReplayMiss; transport failures
    /// after max_retries throw UpstreamError carrying the last status.
    JudgeResponse complete(const std::string& prompt);

    const JudgeConfig& config() const { return cfg_; }

private:
    JudgeConfig cfg_;
    std::shared_ptr<TranscriptStore> store_;
    std::shared_ptr<Transport> transport_;
};

// ---- Structured judge outputs ----

struct ExtractionItem {
    std::string name;
    std::string value;   // empty when missing
    bool missing = false;
};

struct Diff {
    enum class Kind { missing_in_gt, hallucinated_in_gt, value_mismatch };
    Kind kind = Kind::value_mismatch;
    std::string name;
    std::string detail;
};

std::string to_string(Diff::Kind k);

struct ComparisonVerdict {
    bool aligned = false;
    std::vector<Diff> diffs;
};

using ParsedVerdict =
    std::variant<bool, std::vector<ExtractionItem>, std::vector<bool>, ComparisonVerdict>;

/// Parse a judge completion under the given schema. Lenient to surrounding
/// prose, strict on the marker grammar:
///   binary-verdict             "Answer: Yes" / "Answer: No" (last one wins)
///   parameter-extraction-list  numbered "N. name: value" lines, value may be #missing
///   pairwise-verdict-list      numbered "N. Yes|No" lines
///   comparison-verdict         "Answer: Yes|No", then numbered
///                              "N. missing|hallucinated|mismatch name: detail" lines
/// Throws ParseFailure when no recognizable marker is present.
ParsedVerdict parse_structured(const std::string& raw_text, OutputSchema schema);

}  // namespace toolgrade
