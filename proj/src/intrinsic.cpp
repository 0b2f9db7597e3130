#include "toolgrade/intrinsic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <sstream>

#include "toolgrade/errors.hpp"

namespace toolgrade {

std::string to_string(Tri t) {
    switch (t) {
        case Tri::valid: return "valid";
        case Tri::invalid: return "invalid";
        case Tri::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

ordered_json tri_to_json(Tri t) {
    if (t == Tri::indeterminate) return "indeterminate";
    return t == Tri::valid;
}

Tri tri_from_json(const ordered_json& v) {
    if (v.is_boolean()) return v.get<bool>() ? Tri::valid : Tri::invalid;
    if (v.is_string() && v.get<std::string>() == "indeterminate") return Tri::indeterminate;
    throw DataError("verdict field must be a boolean or \"indeterminate\"");
}

Tri tri_conjunction(std::initializer_list<Tri> parts) {
    bool all_valid = true;
    for (Tri t : parts) {
        if (t == Tri::indeterminate) return Tri::indeterminate;
        if (t == Tri::invalid) all_valid = false;
    }
    return all_valid ? Tri::valid : Tri::invalid;
}

void aggregate_verdicts(CriteriaVerdicts& v) {
    v.instruction_correct = tri_conjunction({v.specificity, v.coherence, v.solvability});
    v.sequence_correct = tri_conjunction({v.parameter_alignment, v.sufficiency, v.minimality});
    v.overall_correct = tri_conjunction({v.instruction_correct, v.sequence_correct});
}

// ---- Sentence splitting ----

namespace {

// Trailing tokens that end with '.' but do not close a sentence.
const std::set<std::string>& abbreviation_stoplist() {
    static const std::set<std::string> list = {
        "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "vs.", "etc.", "e.g.",
        "i.e.", "inc.", "ltd.", "co.", "no.", "jr.", "sr.", "fig.", "al.", "approx.",
    };
    return list;
}

std::string trim_copy(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::vector<std::string> split_sentences(const std::string& instruction) {
    std::vector<std::string> sentences;
    const std::size_t n = instruction.size();
    std::size_t start = 0;

    auto emit = [&](std::size_t end) {
        std::string s = trim_copy(std::string_view(instruction).substr(start, end - start));
        if (!s.empty()) sentences.push_back(std::move(s));
        start = end;
    };

    for (std::size_t i = 0; i < n; ++i) {
        const char c = instruction[i];
        if (c != '.' && c != '!' && c != '?') continue;

        // Collapse runs like "?!" into one boundary candidate.
        std::size_t j = i;
        while (j + 1 < n && (instruction[j + 1] == '.' || instruction[j + 1] == '!' ||
                             instruction[j + 1] == '?'))
            ++j;

        if (j + 1 == n) {  // end of text
            emit(n);
            i = j;
            continue;
        }

        if (!std::isspace(static_cast<unsigned char>(instruction[j + 1]))) {
            i = j;
            continue;  // e.g. the dots inside "www.site.com"
        }
        std::size_t next = j + 1;
        while (next < n && std::isspace(static_cast<unsigned char>(instruction[next]))) ++next;
        if (next >= n) {
            emit(n);
            break;
        }
        if (!std::isupper(static_cast<unsigned char>(instruction[next]))) {
            i = j;
            continue;
        }

        if (c == '.') {
            std::size_t tok_begin = i;
            while (tok_begin > start &&
                   !std::isspace(static_cast<unsigned char>(instruction[tok_begin - 1])))
                --tok_begin;
            std::string token = instruction.substr(tok_begin, j + 1 - tok_begin);
            std::transform(token.begin(), token.end(), token.begin(),
                           [](unsigned char ch) { return std::tolower(ch); });
            if (abbreviation_stoplist().count(token)) {
                i = j;
                continue;
            }
        }

        emit(j + 1);
        i = j;
    }
    if (start < n) emit(n);
    return sentences;
}

double specificity_score(int n_extracted, int n_total) {
    if (n_total <= 0) return 1.0;
    return static_cast<double>(n_extracted) / static_cast<double>(n_total);
}

std::vector<GroundTruthParam> pooled_ground_truth(const std::vector<ApiCall>& seq) {
    std::vector<GroundTruthParam> out;
    for (std::size_t i = 0; i < seq.size(); ++i)
        for (const auto& [name, value] : seq[i].arguments)
            out.push_back({static_cast<int>(i + 1), name, value});
    return out;
}

namespace {

bool value_is_absent(const std::string& v) {
    const std::string t = trim_copy(v);
    return t.empty() || t == "None" || t == "none" || t == "null" || t == "#missing";
}

std::string render_extraction(const std::vector<ExtractionItem>& items) {
    std::ostringstream out;
    for (std::size_t i = 0; i < items.size(); ++i)
        out << (i + 1) << ". " << items[i].name << ": "
            << (items[i].missing ? "#missing" : items[i].value) << "\n";
    if (items.empty()) out << "(no parameters)\n";
    return out.str();
}

std::string render_ground_truth(const std::vector<GroundTruthParam>& params) {
    std::ostringstream out;
    for (std::size_t i = 0; i < params.size(); ++i)
        out << (i + 1) << ". " << params[i].name << ": " << params[i].value << " (call "
            << params[i].call_index << ")\n";
    if (params.empty()) out << "(no arguments)\n";
    return out.str();
}

}  // namespace

std::vector<Diff> exact_compare(const std::vector<ExtractionItem>& extracted,
                                const std::vector<GroundTruthParam>& ground_truth,
                                const std::string& instruction) {
    std::vector<Diff> diffs;
    auto find_gt = [&](const std::string& name) -> const GroundTruthParam* {
        for (const auto& g : ground_truth)
            if (normalize_key(g.name) == normalize_key(name)) return &g;
        return nullptr;
    };

    std::set<std::string> matched_gt_names;
    for (const auto& e : extracted) {
        const GroundTruthParam* g = find_gt(e.name);
        if (g) matched_gt_names.insert(normalize_key(g->name));
        if (e.missing) {
            if (g && !value_is_absent(g->value))
                diffs.push_back({Diff::Kind::hallucinated_in_gt, g->name,
                                 "value '" + g->value + "' not provided by the instruction"});
            continue;
        }
        if (!g || value_is_absent(g->value)) {
            diffs.push_back({Diff::Kind::missing_in_gt, e.name,
                             "instruction provides '" + e.value + "' but ground truth omits it"});
            continue;
        }
        if (g->value != e.value)
            diffs.push_back({Diff::Kind::value_mismatch, e.name,
                             "instruction says '" + e.value + "', ground truth uses '" + g->value + "'"});
    }
    for (const auto& g : ground_truth) {
        if (matched_gt_names.count(normalize_key(g.name)) || value_is_absent(g.value)) continue;
        if (instruction.find(g.value) == std::string::npos)
            diffs.push_back({Diff::Kind::hallucinated_in_gt, g.name,
                             "value '" + g.value + "' does not appear in the instruction"});
    }
    return diffs;
}

// ---- Assessor ----

Assessor::Assessor(const TemplateStore& templates, JudgeClient& judge, AssessorOptions opts)
    : templates_(templates), judge_(judge), opts_(opts) {}

SpecificityResult Assessor::assess_specificity(const Instance& inst) const {
    SpecificityResult result;
    const auto& tmpl = templates_.get("specificity_extract");
    const std::string prompt = render_prompt(
        tmpl, {{"instruction", inst.instruction}, {"api_docs", render_api_docs(inst.apis)}});
    const JudgeResponse resp = judge_.complete(prompt);
    result.raw_text = resp.raw_text;
    result.digest = resp.request_digest;
    try {
        auto items = std::get<std::vector<ExtractionItem>>(parse_structured(resp.raw_text, tmpl.schema));
        result.extracted = std::move(items);
    } catch (const ParseFailure&) {
        result.verdict = Tri::indeterminate;
        result.valid = false;
        return result;
    }
    for (const auto& item : result.extracted) {
        result.required_params.push_back(item.name);
        ++result.n_total;
        if (!item.missing) ++result.n_extracted;
    }
    result.score = specificity_score(result.n_extracted, result.n_total);
    result.valid = result.score == 1.0;
    result.verdict = result.valid ? Tri::valid : Tri::invalid;
    return result;
}

CoherenceResult Assessor::assess_coherence(const Instance& inst) const {
    CoherenceResult result;
    result.sentences = split_sentences(inst.instruction);
    if (result.sentences.size() <= 1) return result;  // single request: coherent, zero calls

    const auto& tmpl = templates_.get("coherence_nsp");
    for (std::size_t i = 0; i + 1 < result.sentences.size(); ++i) {
        const std::string prompt = render_prompt(
            tmpl, {{"first", result.sentences[i]}, {"second", result.sentences[i + 1]}});
        const JudgeResponse resp = judge_.complete(prompt);
        result.raw_texts.push_back(resp.raw_text);
        result.digests.push_back(resp.request_digest);
        try {
            result.pair_verdicts.push_back(std::get<bool>(parse_structured(resp.raw_text, tmpl.schema)));
        } catch (const ParseFailure&) {
            result.verdict = Tri::indeterminate;
            result.valid = false;
            return result;
        }
    }
    result.valid = std::all_of(result.pair_verdicts.begin(), result.pair_verdicts.end(),
                               [](bool b) { return b; });
    result.verdict = result.valid ? Tri::valid : Tri::invalid;
    return result;
}

namespace {

Tri run_binary(const TemplateStore& templates, JudgeClient& judge, const char* template_id,
               const std::map<std::string, std::string>& bindings, std::string* raw,
               std::string* digest) {
    const auto& tmpl = templates.get(template_id);
    const JudgeResponse resp = judge.complete(render_prompt(tmpl, bindings));
    if (raw) *raw = resp.raw_text;
    if (digest) *digest = resp.request_digest;
    try {
        return std::get<bool>(parse_structured(resp.raw_text, tmpl.schema)) ? Tri::valid
                                                                            : Tri::invalid;
    } catch (const ParseFailure&) {
        return Tri::indeterminate;
    }
}

}  // namespace

Tri Assessor::assess_solvability(const Instance& inst, std::string* raw,
                                 std::string* digest) const {
    if (inst.apis.empty())
        throw DataError("solvability requires a non-empty API set (instance " + inst.id + ")");
    return run_binary(templates_, judge_, "solvability",
                      {{"instruction", inst.instruction}, {"api_docs", render_api_docs(inst.apis)}},
                      raw, digest);
}

AlignmentResult Assessor::assess_parameter_alignment(const Instance& inst,
                                                     const SpecificityResult& spec) const {
    AlignmentResult result;
    result.extracted = spec.extracted;
    result.ground_truth_params = pooled_ground_truth(inst.call_sequence);

    if (spec.verdict == Tri::indeterminate) {
        // Step 1 (the extraction) is unusable, so the comparison is too.
        result.verdict = Tri::indeterminate;
        result.valid = false;
        return result;
    }

    if (opts_.offline_exact_compare) {
        result.diffs = exact_compare(result.extracted, result.ground_truth_params, inst.instruction);
        result.valid = result.diffs.empty();
        result.verdict = result.valid ? Tri::valid : Tri::invalid;
        return result;
    }

    const auto& tmpl = templates_.get("param_alignment_compare");
    const std::string prompt =
        render_prompt(tmpl, {{"instruction", inst.instruction},
                             {"extracted_params", render_extraction(result.extracted)},
                             {"ground_truth_params", render_ground_truth(result.ground_truth_params)}});
    const JudgeResponse resp = judge_.complete(prompt);
    result.raw_text = resp.raw_text;
    result.digest = resp.request_digest;
    try {
        auto verdict = std::get<ComparisonVerdict>(parse_structured(resp.raw_text, tmpl.schema));
        result.diffs = std::move(verdict.diffs);
        result.valid = result.diffs.empty();
        result.verdict = result.valid ? Tri::valid : Tri::invalid;
    } catch (const ParseFailure&) {
        result.verdict = Tri::indeterminate;
        result.valid = false;
    }
    return result;
}

Tri Assessor::assess_sufficiency(const Instance& inst, std::string* raw,
                                 std::string* digest) const {
    return run_binary(templates_, judge_, "sufficiency",
                      {{"instruction", inst.instruction},
                       {"api_docs", render_api_docs(inst.apis)},
                       {"call_sequence", canonical_call_string(inst.call_sequence)}},
                      raw, digest);
}

Tri Assessor::assess_minimality(const Instance& inst, std::string* raw,
                                std::string* digest) const {
    return run_binary(templates_, judge_, "minimality",
                      {{"instruction", inst.instruction},
                       {"api_docs", render_api_docs(inst.apis)},
                       {"call_sequence", canonical_call_string(inst.call_sequence)}},
                      raw, digest);
}

CriteriaVerdicts Assessor::assess_instance(const Instance& inst) const {
    CriteriaVerdicts v;
    v.instance_id = inst.id;

    v.specificity_detail = assess_specificity(inst);
    v.specificity = v.specificity_detail.verdict;
    v.raw_texts["specificity"] = v.specificity_detail.raw_text;
    if (!v.specificity_detail.digest.empty()) v.judge_digests.push_back(v.specificity_detail.digest);

    v.coherence_detail = assess_coherence(inst);
    v.coherence = v.coherence_detail.verdict;
    for (std::size_t i = 0; i < v.coherence_detail.raw_texts.size(); ++i)
        v.raw_texts["coherence_pair_" + std::to_string(i + 1)] = v.coherence_detail.raw_texts[i];
    for (const auto& d : v.coherence_detail.digests) v.judge_digests.push_back(d);

    std::string raw, digest;
    v.solvability = assess_solvability(inst, &raw, &digest);
    v.raw_texts["solvability"] = raw;
    v.judge_digests.push_back(digest);

    v.alignment_detail = assess_parameter_alignment(inst, v.specificity_detail);
    v.parameter_alignment = v.alignment_detail.verdict;
    v.raw_texts["parameter_alignment"] = v.alignment_detail.raw_text;
    if (!v.alignment_detail.digest.empty()) v.judge_digests.push_back(v.alignment_detail.digest);

    v.sufficiency = assess_sufficiency(inst, &raw, &digest);
    v.raw_texts["sufficiency"] = raw;
    v.judge_digests.push_back(digest);

    v.minimality = assess_minimality(inst, &raw, &digest);
    v.raw_texts["minimality"] = raw;
    v.judge_digests.push_back(digest);

    aggregate_verdicts(v);
    return v;
}

// ---- Serialization ----

ordered_json verdicts_to_json(const CriteriaVerdicts& v) {
    ordered_json j;
    j["instance_id"] = v.instance_id;
    j["specificity"] = tri_to_json(v.specificity);
    j["coherence"] = tri_to_json(v.coherence);
    j["solvability"] = tri_to_json(v.solvability);
    j["parameter_alignment"] = tri_to_json(v.parameter_alignment);
    j["sufficiency"] = tri_to_json(v.sufficiency);
    j["minimality"] = tri_to_json(v.minimality);
    j["instruction_correct"] = tri_to_json(v.instruction_correct);
    j["sequence_correct"] = tri_to_json(v.sequence_correct);
    j["overall_correct"] = tri_to_json(v.overall_correct);
    j["specificity_score"] = v.specificity_detail.score;
    auto diffs = ordered_json::array();
    for (const auto& d : v.alignment_detail.diffs)
        diffs.push_back({{"kind", to_string(d.kind)}, {"name", d.name}, {"detail", d.detail}});
    j["diffs"] = std::move(diffs);
    j["sentence_count"] = v.coherence_detail.sentences.size();
    j["judge_digests"] = v.judge_digests;
    return j;
}

CriteriaVerdicts verdicts_from_json(const ordered_json& j) {
    CriteriaVerdicts v;
    v.instance_id = j.at("instance_id").get<std::string>();
    v.specificity = tri_from_json(j.at("specificity"));
    v.coherence = tri_from_json(j.at("coherence"));
    v.solvability = tri_from_json(j.at("solvability"));
    v.parameter_alignment = tri_from_json(j.at("parameter_alignment"));
    v.sufficiency = tri_from_json(j.at("sufficiency"));
    v.minimality = tri_from_json(j.at("minimality"));
    v.instruction_correct = tri_from_json(j.at("instruction_correct"));
    v.sequence_correct = tri_from_json(j.at("sequence_correct"));
    v.overall_correct = tri_from_json(j.at("overall_correct"));
    if (j.contains("specificity_score"))
        v.specificity_detail.score = j.at("specificity_score").get<double>();
    if (j.contains("diffs")) {
        for (const auto& dj : j.at("diffs")) {
            Diff d;
            const std::string kind = dj.value("kind", "value-mismatch");
            if (kind == "missing-in-gt") d.kind = Diff::Kind::missing_in_gt;
            else if (kind == "hallucinated-in-gt") d.kind = Diff::Kind::hallucinated_in_gt;
            else d.kind = Diff::Kind::value_mismatch;
            d.name = dj.value("name", std::string{});
            d.detail = dj.value("detail", std::string{});
            v.alignment_detail.diffs.push_back(std::move(d));
        }
        v.alignment_detail.valid = v.alignment_detail.diffs.empty();
    }
    if (j.contains("sentence_count")) {
        const auto n = j.at("sentence_count").get<std::size_t>();
        v.coherence_detail.sentences.resize(n);
    }
    if (j.contains("judge_digests"))
        v.judge_digests = j.at("judge_digests").get<std::vector<std::string>>();
    return v;
}

}  // namespace toolgrade
