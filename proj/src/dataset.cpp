#include "toolgrade/dataset.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "toolgrade/errors.hpp"

namespace toolgrade {

std::string to_string(Source s) {
    switch (s) {
        case Source::toolbench_like: return "toolbench-like";
        case Source::toolalpaca_like: return "toolalpaca-like";
        case Source::canonical: return "canonical";
    }
    return "canonical";
}

Source source_from_string(std::string_view s) {
    if (s == "toolbench-like") return Source::toolbench_like;
    if (s == "toolalpaca-like") return Source::toolalpaca_like;
    if (s == "canonical") return Source::canonical;
    throw DataError("unknown source tag: " + std::string(s));
}

namespace {

constexpr std::string_view kEscaped = "\\();,=";

void append_escaped(std::string& out, std::string_view text) {
    for (char c : text) {
        if (kEscaped.find(c) != std::string_view::npos) out.push_back('\\');
        out.push_back(c);
    }
}

std::string require_string(const ordered_json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_string())
        throw DataError(std::string("missing or non-string field '") + key + "'");
    return j.at(key).get<std::string>();
}

ApiParameter parameter_from_json(const ordered_json& j) {
    ApiParameter p;
    p.name = require_string(j, "name");
    p.description = j.value("description", std::string{});
    p.value_type = j.value("value_type", std::string{});
    p.required = j.value("required", false);
    return p;
}

ApiDoc api_from_json(const ordered_json& j) {
    ApiDoc doc;
    doc.name = require_string(j, "name");
    doc.description = j.value("description", std::string{});
    if (j.contains("parameters")) {
        if (!j.at("parameters").is_array()) throw DataError("'parameters' must be an array");
        for (const auto& pj : j.at("parameters")) doc.parameters.push_back(parameter_from_json(pj));
    }
    if (j.contains("output_fields")) {
        for (const auto& oj : j.at("output_fields")) {
            OutputField f;
            f.name = require_string(oj, "name");
            f.description = oj.value("description", std::string{});
            doc.output_fields.push_back(std::move(f));
        }
    }
    return doc;
}

ApiCall call_from_json(const ordered_json& j) {
    ApiCall call;
    call.api_name = require_string(j, "api_name");
    if (j.contains("arguments")) {
        const auto& args = j.at("arguments");
        if (!args.is_object()) throw DataError("'arguments' must be an object");
        for (auto it = args.begin(); it != args.end(); ++it) {
            const auto& v = it.value();
            call.arguments.emplace_back(it.key(), v.is_string() ? v.get<std::string>() : v.dump());
        }
    }
    return call;
}

}  // namespace

std::string canonical_call_string(const std::vector<ApiCall>& seq) {
    std::string out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i > 0) out += "; ";
        append_escaped(out, seq[i].api_name);
        out.push_back('(');
        auto args = seq[i].arguments;
        std::sort(args.begin(), args.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t k = 0; k < args.size(); ++k) {
            if (k > 0) out += ", ";
            append_escaped(out, args[k].first);
            out.push_back('=');
            append_escaped(out, args[k].second);
        }
        out.push_back(')');
    }
    return out;
}

std::vector<ApiCall> parse_call_string(std::string_view text) {
    std::vector<ApiCall> calls;
    std::size_t i = 0;
    const std::size_t n = text.size();

    auto fail = [&](const std::string& what) -> DataError {
        return DataError("call string parse error at offset " + std::to_string(i) + ": " + what);
    };
    // Reads escaped text until an unescaped char in `stops`.
    auto read_until = [&](std::string_view stops) {
        std::string tok;
        while (i < n && stops.find(text[i]) == std::string_view::npos) {
            char c = text[i];
            if (c == '\\') {
                if (i + 1 >= n) throw fail("dangling escape");
                tok.push_back(text[i + 1]);
                i += 2;
            } else {
                tok.push_back(c);
                ++i;
            }
        }
        return tok;
    };

    while (i < n) {
        ApiCall call;
        call.api_name = read_until("(");
        if (i >= n || text[i] != '(') throw fail("expected '('");
        if (call.api_name.empty()) throw fail("empty call name");
        ++i;
        if (i < n && text[i] == ')') {
            ++i;
        } else {
            while (true) {
                std::string key = read_until("=");
                if (i >= n || text[i] != '=') throw fail("expected '='");
                ++i;
                std::string value = read_until(",)");
                call.arguments.emplace_back(std::move(key), std::move(value));
                if (i >= n) throw fail("unterminated call");
                if (text[i] == ')') {
                    ++i;
                    break;
                }
                ++i;  // ','
                if (i < n && text[i] == ' ') ++i;
            }
        }
        calls.push_back(std::move(call));
        if (i == n) break;
        if (text.substr(i, 2) != "; ") throw fail("expected '; ' between calls");
        i += 2;
        if (i == n) throw fail("trailing call separator");
    }
    return calls;
}

std::vector<Violation> validate_instance(const Instance& inst, const ValidateOptions& opts) {
    std::vector<Violation> out;
    if (inst.instruction.empty()) out.push_back({"empty-instruction", "instance " + inst.id});

    std::set<std::string> api_names;
    for (const auto& api : inst.apis) {
        if (!api_names.insert(api.name).second)
            out.push_back({"duplicate-api", "api '" + api.name + "' declared twice"});
        std::set<std::string> param_names;
        for (const auto& p : api.parameters) {
            if (p.name.empty())
                out.push_back({"empty-parameter-name", "api '" + api.name + "'"});
            else if (!param_names.insert(p.name).second)
                out.push_back({"duplicate-parameter", "api '" + api.name + "', parameter '" + p.name + "'"});
        }
    }

    for (std::size_t k = 0; k < inst.call_sequence.size(); ++k) {
        const auto& call = inst.call_sequence[k];
        if (api_names.find(call.api_name) == api_names.end())
            out.push_back({"unresolved-api",
                           "call " + std::to_string(k + 1) + " names unknown api '" + call.api_name + "'"});
    }

    if (inst.call_sequence.empty() && !opts.allow_empty_sequence)
        out.push_back({"empty-call-sequence", "instance " + inst.id});
    return out;
}

ordered_json instance_to_json(const Instance& inst) {
    ordered_json j;
    j["id"] = inst.id;
    j["instruction"] = inst.instruction;
    auto apis = ordered_json::array();
    for (const auto& api : inst.apis) {
        ordered_json aj;
        aj["name"] = api.name;
        aj["description"] = api.description;
        auto params = ordered_json::array();
        for (const auto& p : api.parameters) {
            params.push_back({{"name", p.name},
                              {"description", p.description},
                              {"value_type", p.value_type},
                              {"required", p.required}});
        }
        aj["parameters"] = std::move(params);
        auto outputs = ordered_json::array();
        for (const auto& f : api.output_fields)
            outputs.push_back({{"name", f.name}, {"description", f.description}});
        aj["output_fields"] = std::move(outputs);
        apis.push_back(std::move(aj));
    }
    j["apis"] = std::move(apis);
    auto calls = ordered_json::array();
    for (const auto& call : inst.call_sequence) {
        ordered_json cj;
        cj["api_name"] = call.api_name;
        ordered_json args;  // object; preserves insertion order
        for (const auto& [k, v] : call.arguments) args[k] = v;
        cj["arguments"] = std::move(args);
        calls.push_back(std::move(cj));
    }
    j["call_sequence"] = std::move(calls);
    if (inst.final_response)
        j["final_response"] = *inst.final_response;
    else
        j["final_response"] = nullptr;
    j["source"] = to_string(inst.source);
    return j;
}

Instance instance_from_json(const ordered_json& j) {
    Instance inst;
    inst.id = require_string(j, "id");
    if (inst.id.empty()) throw DataError("empty id");
    inst.instruction = require_string(j, "instruction");
    if (j.contains("apis")) {
        if (!j.at("apis").is_array()) throw DataError("'apis' must be an array");
        for (const auto& aj : j.at("apis")) inst.apis.push_back(api_from_json(aj));
    }
    if (j.contains("call_sequence")) {
        if (!j.at("call_sequence").is_array()) throw DataError("'call_sequence' must be an array");
        for (const auto& cj : j.at("call_sequence")) inst.call_sequence.push_back(call_from_json(cj));
    }
    if (j.contains("final_response") && j.at("final_response").is_string())
        inst.final_response = j.at("final_response").get<std::string>();
    inst.source = j.contains("source") ? source_from_string(j.at("source").get<std::string>())
                                       : Source::canonical;
    return inst;
}

ordered_json reject_to_json(const RejectRecord& r) {
    return ordered_json{{"line_no", r.line_no}, {"reason", r.reason}, {"raw_prefix", r.raw_prefix}};
}

namespace {

// Structural invariants that make a line unusable as an instance. An
// unresolved api_name is deliberately not among them: such instances are
// exactly the low-quality data the pipeline must score, so they survive
// ingestion and surface through validate_instance instead.
bool is_rejecting(const Violation& v) {
    return v.tag == "empty-instruction" || v.tag == "duplicate-parameter" ||
           v.tag == "duplicate-api" || v.tag == "empty-parameter-name";
}

}  // namespace

ParseResult parse_canonical(std::istream& in) {
    ParseResult result;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;

    auto reject = [&](const std::string& reason) {
        result.rejects.push_back({line_no, reason, line.substr(0, 200)});
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        ordered_json j = ordered_json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            reject("invalid json");
            continue;
        }
        Instance inst;
        try {
            inst = instance_from_json(j);
        } catch (const DataError& e) {
            reject(e.what());
            continue;
        }

        bool bad = false;
        for (const auto& v : validate_instance(inst, {.allow_empty_sequence = true})) {
            if (is_rejecting(v)) {
                reject(v.tag + ": " + v.detail);
                bad = true;
                break;
            }
        }
        if (bad) continue;

        if (!seen_ids.insert(inst.id).second) {
            reject("duplicate-id: '" + inst.id + "'");
            continue;
        }
        inst.raw = line;
        result.dataset.instances.push_back(std::move(inst));
    }
    if (in.bad()) throw DataError("i/o failure while reading dataset stream");
    return result;
}

std::string render_api_docs(const std::vector<ApiDoc>& apis) {
    std::ostringstream out;
    for (const auto& api : apis) {
        out << "API: " << api.name << "\n";
        if (!api.description.empty()) out << "  description: " << api.description << "\n";
        if (api.parameters.empty()) {
            out << "  parameters: none\n";
        } else {
            out << "  parameters:\n";
            for (const auto& p : api.parameters) {
                out << "    - " << p.name;
                if (!p.value_type.empty()) out << " (" << p.value_type << ")";
                out << (p.required ? " [required]" : " [optional]");
                if (!p.description.empty()) out << ": " << p.description;
                out << "\n";
            }
        }
        if (!api.output_fields.empty()) {
            out << "  output:\n";
            for (const auto& f : api.output_fields) {
                out << "    - " << f.name;
                if (!f.description.empty()) out << ": " << f.description;
                out << "\n";
            }
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace toolgrade
