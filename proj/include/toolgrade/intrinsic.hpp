#pragma once

#include <map>
#include <string>
#include <vector>

#include "toolgrade/dataset.hpp"
#include "toolgrade/judge.hpp"

namespace toolgrade {

// Three-valued criterion outcome. Indeterminate (judge output unparseable)
// is first-class: it is reported separately and never coerced to a verdict.
enum class Tri { valid, invalid, indeterminate };

std::string to_string(Tri t);
Tri tri_from_json(const ordered_json& v);
ordered_json tri_to_json(Tri t);

/// Conjunction over criterion outcomes: any indeterminate input makes the
/// aggregate indeterminate; otherwise the aggregate is the logical AND.
Tri tri_conjunction(std::initializer_list<Tri> parts);

struct SpecificityResult {
    std::vector<std::string> required_params;
    std::vector<ExtractionItem> extracted;
    int n_extracted = 0;
    int n_total = 0;
    double score = 1.0;
    bool valid = true;
    Tri verdict = Tri::valid;
    std::string raw_text;
    std::string digest;
};

struct CoherenceResult {
    std::vector<std::string> sentences;
    std::vector<bool> pair_verdicts;  // length max(0, |sentences|-1)
    bool valid = true;
    Tri verdict = Tri::valid;
    std::vector<std::string> raw_texts;
    std::vector<std::string> digests;
};

struct GroundTruthParam {
    int call_index = 0;  // 1-based position in the call sequence
    std::string name;
    std::string value;
};

struct AlignmentResult {
    std::vector<ExtractionItem> extracted;
    std::vector<GroundTruthParam> ground_truth_params;
    bool valid = true;
    std::vector<Diff> diffs;
    Tri verdict = Tri::valid;
    std::string raw_text;
    std::string digest;
};

struct CriteriaVerdicts {
    std::string instance_id;

    Tri specificity = Tri::indeterminate;
    Tri coherence = Tri::indeterminate;
    Tri solvability = Tri::indeterminate;
    Tri parameter_alignment = Tri::indeterminate;
    Tri sufficiency = Tri::indeterminate;
    Tri minimality = Tri::indeterminate;

    Tri instruction_correct = Tri::indeterminate;
    Tri sequence_correct = Tri::indeterminate;
    Tri overall_correct = Tri::indeterminate;

    SpecificityResult specificity_detail;
    CoherenceResult coherence_detail;
    AlignmentResult alignment_detail;
    std::map<std::string, std::string> raw_texts;   // criterion -> raw judge text
    std::vector<std::string> judge_digests;
};

/// Fills the three aggregate flags from the six criterion outcomes.
void aggregate_verdicts(CriteriaVerdicts& v);

/// Sentence segmentation: terminal punctuation (. ! ?) followed by
/// whitespace and an uppercase letter, or end of text. A small abbreviation
/// stop-list guards titles and latinisms. Never returns empty strings.
std::vector<std::string> split_sentences(const std::string& instruction);

/// S = N_e / N_t; a request needing no parameters cannot lack specificity,
/// so N_t = 0 yields 1.
double specificity_score(int n_extracted, int n_total);

/// Pooled ground-truth arguments across all calls of the sequence.
std::vector<GroundTruthParam> pooled_ground_truth(const std::vector<ApiCall>& seq);

/// Deterministic exact-string comparison between extraction and ground
/// truth. Offline smoke-test fallback only; production comparison semantics
/// are delegated to the judge.
std::vector<Diff> exact_compare(const std::vector<ExtractionItem>& extracted,
                                const std::vector<GroundTruthParam>& ground_truth,
                                const std::string& instruction);

struct AssessorOptions {
    bool offline_exact_compare = false;  // replace the alignment judge call
};

// Drives the six criterion assessments through the judge client. The
// per-instance flow is sequential (alignment consumes the specificity
// extraction); callers own cross-instance fan-out.
class Assessor {
public:
    Assessor(const TemplateStore& templates, JudgeClient& judge, AssessorOptions opts = {});

    SpecificityResult assess_specificity(const Instance& inst) const;
    CoherenceResult assess_coherence(const Instance& inst) const;
    Tri assess_solvability(const Instance& inst, std::string* raw = nullptr,
                           std::string* digest = nullptr) const;
    AlignmentResult assess_parameter_alignment(const Instance& inst,
                                               const SpecificityResult& spec) const;
    Tri assess_sufficiency(const Instance& inst, std::string* raw = nullptr,
                           std::string* digest = nullptr) const;
    Tri assess_minimality(const Instance& inst, std::string* raw = nullptr,
                          std::string* digest = nullptr) const;

    CriteriaVerdicts assess_instance(const Instance& inst) const;

private:
    const TemplateStore& templates_;
    JudgeClient& judge_;
    AssessorOptions opts_;
};

/// Assessment record (one line of the assessment output file).
ordered_json verdicts_to_json(const CriteriaVerdicts& v);
CriteriaVerdicts verdicts_from_json(const ordered_json& j);

}  // namespace toolgrade
