#include "toolgrade/adapters.hpp"

#include <cctype>

#include "toolgrade/errors.hpp"

namespace toolgrade {

std::string normalize_tool_name(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    bool pending_sep = false;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            if (pending_sep && !out.empty()) out.push_back('_');
            pending_sep = false;
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            pending_sep = true;
        }
    }
    return out;
}

namespace {

std::string value_as_text(const ordered_json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
}

std::vector<std::pair<std::string, std::string>> arguments_from(const ordered_json& args) {
    std::vector<std::pair<std::string, std::string>> out;
    ordered_json obj = args;
    if (obj.is_string()) {
        // ToolBench traces carry Action Input as a JSON-encoded string.
        obj = ordered_json::parse(obj.get<std::string>(), nullptr, false);
        if (obj.is_discarded()) throw DataError("call arguments are not valid json");
    }
    if (obj.is_null()) return out;
    if (!obj.is_object()) throw DataError("call arguments must be a json object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        out.emplace_back(it.key(), value_as_text(it.value()));
    return out;
}

std::vector<ApiParameter> parameters_from_list(const ordered_json& list, bool required) {
    std::vector<ApiParameter> out;
    if (!list.is_array()) return out;
    for (const auto& pj : list) {
        ApiParameter p;
        p.name = pj.value("name", std::string{});
        p.description = pj.value("description", std::string{});
        p.value_type = pj.value("type", std::string{});
        p.required = required;
        out.push_back(std::move(p));
    }
    return out;
}

void finalize(Instance& inst) {
    inst.raw = instance_to_json(inst).dump();
}

}  // namespace

Instance adapt_toolbench(const ordered_json& record, std::string_view fallback_id) {
    Instance inst;
    inst.source = Source::toolbench_like;

    if (record.contains("query_id"))
        inst.id = "toolbench-" + value_as_text(record.at("query_id"));
    else
        inst.id = std::string(fallback_id);
    if (inst.id.empty()) throw DataError("toolbench record has no query_id and no fallback id");

    if (!record.contains("query") || !record.at("query").is_string() ||
        record.at("query").get<std::string>().empty())
        throw DataError("toolbench record " + inst.id + ": missing instruction");
    inst.instruction = record.at("query").get<std::string>();

    std::vector<std::string> tool_suffixes;  // "_for_<normalized tool>"
    if (record.contains("api_list") && record.at("api_list").is_array()) {
        for (const auto& aj : record.at("api_list")) {
            ApiDoc doc;
            doc.name = normalize_tool_name(aj.value("api_name", std::string{}));
            doc.description = aj.value("api_description", std::string{});
            auto req = parameters_from_list(aj.value("required_parameters", ordered_json::array()), true);
            auto opt = parameters_from_list(aj.value("optional_parameters", ordered_json::array()), false);
            doc.parameters = std::move(req);
            doc.parameters.insert(doc.parameters.end(), opt.begin(), opt.end());
            if (aj.contains("output_components") && aj.at("output_components").is_array()) {
                for (const auto& oj : aj.at("output_components"))
                    doc.output_fields.push_back(
                        {oj.value("name", std::string{}), oj.value("description", std::string{})});
            }
            inst.apis.push_back(std::move(doc));
            const std::string tool = normalize_tool_name(aj.value("tool_name", std::string{}));
            if (!tool.empty()) tool_suffixes.push_back("_for_" + tool);
        }
    }

    if (!record.contains("solution_path") || !record.at("solution_path").is_array())
        throw DataError("toolbench record " + inst.id + ": missing solution path");

    for (const auto& step : record.at("solution_path")) {
        if (step.is_string()) continue;  // free-text reasoning, discarded
        if (!step.is_object() || !step.contains("name"))
            throw DataError("toolbench record " + inst.id + ": malformed solution step");
        ApiCall call;
        call.api_name = normalize_tool_name(step.at("name").get<std::string>());
        for (const auto& suffix : tool_suffixes) {
            if (call.api_name.size() > suffix.size() && call.api_name.ends_with(suffix)) {
                call.api_name.resize(call.api_name.size() - suffix.size());
                break;
            }
        }
        if (step.contains("arguments")) call.arguments = arguments_from(step.at("arguments"));
        inst.call_sequence.push_back(std::move(call));
    }
    if (inst.call_sequence.empty())
        throw DataError("toolbench record " + inst.id + ": empty solution path");

    finalize(inst);
    return inst;
}

Instance adapt_toolalpaca(const ordered_json& record, std::string_view fallback_id) {
    Instance inst;
    inst.source = Source::toolalpaca_like;

    inst.id = record.contains("id") ? value_as_text(record.at("id")) : std::string(fallback_id);
    if (inst.id.empty()) throw DataError("toolalpaca record has no id and no fallback id");

    if (!record.contains("input") || !record.at("input").is_string() ||
        record.at("input").get<std::string>().empty())
        throw DataError("toolalpaca record " + inst.id + ": missing instruction");
    inst.instruction = record.at("input").get<std::string>();

    if (!record.contains("Functions") || !record.at("Functions").is_array() ||
        record.at("Functions").empty())
        throw DataError("toolalpaca record " + inst.id + ": missing API documentation");

    for (const auto& fj : record.at("Functions")) {
        ApiDoc doc;
        doc.name = normalize_tool_name(fj.value("name", std::string{}));
        doc.description = fj.value("description", std::string{});
        if (fj.contains("parameters") && fj.at("parameters").is_array()) {
            for (const auto& pj : fj.at("parameters")) {
                ApiParameter p;
                p.name = pj.value("name", std::string{});
                p.description = pj.value("description", std::string{});
                p.value_type = pj.value("type", std::string{});
                p.required = pj.value("required", false);
                doc.parameters.push_back(std::move(p));
            }
        }
        if (fj.contains("output") && fj.at("output").is_string())
            doc.output_fields.push_back({"output", fj.at("output").get<std::string>()});
        inst.apis.push_back(std::move(doc));
    }

    if (!record.contains("intermediate_steps") || !record.at("intermediate_steps").is_array())
        throw DataError("toolalpaca record " + inst.id + ": missing intermediate steps");

    // Each step is [[function_name, arguments_json, thought], observation].
    for (const auto& step : record.at("intermediate_steps")) {
        if (!step.is_array() || step.empty() || !step.at(0).is_array() || step.at(0).empty())
            throw DataError("toolalpaca record " + inst.id + ": malformed intermediate step");
        const auto& act = step.at(0);
        ApiCall call;
        call.api_name = normalize_tool_name(act.at(0).get<std::string>());
        if (act.size() > 1) call.arguments = arguments_from(act.at(1));
        inst.call_sequence.push_back(std::move(call));
    }
    if (inst.call_sequence.empty())
        throw DataError("toolalpaca record " + inst.id + ": empty solution path");

    if (record.contains("output") && record.at("output").is_string())
        inst.final_response = record.at("output").get<std::string>();

    finalize(inst);
    return inst;
}

}  // namespace toolgrade
