#pragma once

#include <string>
#include <vector>

#include "kgc/graph.hpp"
#include "kgc/qa.hpp"

namespace kgc::prompts {

/// Hop premises joined into the single-line context string used by every
/// path-bearing prompt.
std::string path_context(const std::vector<std::string>& premises);

/// Question generation from a path (source, target, verbalized path, and the
/// <Question>/<Options>/<Answer> format block).
std::string render_qa_prompt(const KgPath& path, const KnowledgeGraph& graph);
std::string render_qa_prompt(const KgPath& named_path);

/// Thinking-trace generation for a task, grounded in its path.
std::string render_trace_prompt(const QaTask& task, const KgPath& path, const KnowledgeGraph& graph);
std::string render_trace_prompt(const QaTask& task, const KgPath& named_path);

/// Correctness grading; `trace` may be empty (bench items are graded without one).
std::string render_grader_prompt(const QaTask& task, const std::string& trace, const KgPath& path,
                                 const KnowledgeGraph& graph);
std::string render_grader_prompt(const QaTask& task, const std::string& trace, const KgPath& named_path);

/// Evaluation prompt: question and options only, never the path.
std::string render_bench_prompt(const QaTask& task);

/// Taxonomy alignment of a single node.
std::string render_classifier_prompt(const std::string& entity_name, const std::vector<std::string>& taxonomy);

/// Hop-level alignment judge: one premise against a full trace.
std::string render_hop_judge_prompt(const std::string& premise, const std::string& trace);

// Leading lines the mock synthesizer uses to recognize each template.
inline constexpr const char* kQaPromptHead = "Create a medical examination question";
inline constexpr const char* kTracePromptHead = "Generate a detailed explanation for the question:";
inline constexpr const char* kGraderPromptHead = "You are a medical examiner.";
inline constexpr const char* kBenchPromptHead = "You are a medical expert presented with an MCQ question.";
inline constexpr const char* kClassifierPromptHead = "Classify the medical concept";
inline constexpr const char* kJudgePromptHead = "You are checking a reasoning trace against one relationship.";

}  // namespace kgc::prompts
