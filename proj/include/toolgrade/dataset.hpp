#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace toolgrade {

using ordered_json = nlohmann::ordered_json;

struct ApiParameter {
    std::string name;
    std::string description;
    std::string value_type;  // free-form tag, e.g. "string", "integer"
    bool required = false;
};

struct OutputField {
    std::string name;
    std::string description;
};

struct ApiDoc {
    std::string name;
    std::string description;
    std::vector<ApiParameter> parameters;
    std::vector<OutputField> output_fields;
};

// One call in a ground-truth sequence. Argument order is preserved as given
// in the source record; values are verbatim text, never coerced.
struct ApiCall {
    std::string api_name;
    std::vector<std::pair<std::string, std::string>> arguments;
};

enum class Source { toolbench_like, toolalpaca_like, canonical };

std::string to_string(Source s);
Source source_from_string(std::string_view s);

struct Instance {
    std::string id;
    std::string instruction;
    std::vector<ApiDoc> apis;
    std::vector<ApiCall> call_sequence;
    std::optional<std::string> final_response;
    Source source = Source::canonical;

    // The exact canonical line this instance was ingested from (or serialized
    // to, for adapter outputs). Subset emission writes these bytes back out.
    std::string raw;
};

struct Dataset {
    std::string name;
    std::vector<Instance> instances;
    std::map<std::string, std::string> provenance;
};

struct RejectRecord {
    std::size_t line_no = 0;  // 1-based
    std::string reason;
    std::string raw_prefix;  // first 200 chars of the offending line
};

struct ParseResult {
    Dataset dataset;
    std::vector<RejectRecord> rejects;
};

struct Violation {
    std::string tag;     // "unresolved-api", "empty-instruction", ...
    std::string detail;
};

struct ValidateOptions {
    bool allow_empty_sequence = false;  // set for test-only instances
};

/// Streaming parse of the canonical line-delimited format. Total over byte
/// streams: malformed lines land in `rejects`, never abort the parse.
/// Blank lines are skipped; |instances| + |rejects| equals the count of
/// non-blank lines.
ParseResult parse_canonical(std::istream& in);

/// All invariant violations for one instance; empty means clean.
std::vector<Violation> validate_instance(const Instance& inst, const ValidateOptions& opts = {});

/// Deterministic serialization of a call sequence: calls joined by "; ",
/// each rendered as name(k1=v1, k2=v2) with argument keys sorted
/// lexicographically. Structural characters inside names/values are
/// backslash-escaped so the mapping is injective.
std::string canonical_call_string(const std::vector<ApiCall>& seq);

/// Inverse of canonical_call_string. Throws DataError on grammar violations.
std::vector<ApiCall> parse_call_string(std::string_view text);

ordered_json instance_to_json(const Instance& inst);
Instance instance_from_json(const ordered_json& j);

ordered_json reject_to_json(const RejectRecord& r);

/// Plain-text rendering of API docs for judge/runner prompts: one block per
/// API with description, parameters and output fields.
std::string render_api_docs(const std::vector<ApiDoc>& apis);

}  // namespace toolgrade
