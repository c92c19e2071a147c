#pragma once

#include <span>
#include <string>
#include <vector>

#include "kgc/graph.hpp"
#include "kgc/llm.hpp"
#include "kgc/qa.hpp"
#include "kgc/task.hpp"

namespace kgc {

struct ReasoningTrace {
    std::string text;
    std::string model_name;
    int token_count = 0;
};

enum class Decision { Yes, No, Unparseable };

std::string to_string(Decision d);
Decision decision_from_string(const std::string& s);

struct GraderVerdict {
    std::string grader_name;
    Decision decision = Decision::Unparseable;
    std::string raw;
};

struct CurriculumItem {
    std::string id;
    QaTask task;
    ReasoningTrace trace;
    std::vector<GraderVerdict> verdicts;
    bool accepted = false;
};

/// Generates the path-grounded explanation for a task. Throws EmptyTrace on
/// a blank completion and FormatViolation("trace delimiter") if the text
/// contains a <think> or </think> marker (it would corrupt SFT export).
ReasoningTrace distill_trace(Backend& backend, const QaTask& task, const KgPath& path, const KnowledgeGraph& graph,
                             const GenerationSettings& settings = {});

/// Case-insensitive scan for "Correct:" followed by Yes or No (optionally
/// wrapped in brackets, quotes or asterisks). The first such occurrence
/// decides; no occurrence gives Unparseable. Total over arbitrary input.
Decision parse_verdict(const std::string& raw);

/// Asks both graders (always both, in order) and accepts iff both say Yes.
/// Unparseable output counts as not-Yes.
CurriculumItem correctness_filter(const QaTask& task, const ReasoningTrace& trace, const KgPath& path,
                                  const KnowledgeGraph& graph, std::span<Backend* const> graders,
                                  const GenerationSettings& settings = {});

/// The acceptance rule on its own.
bool two_factor_accept(Decision first, Decision second);

}  // namespace kgc
