#pragma once

#include <string>
#include <variant>

#include "kgc/graph.hpp"
#include "kgc/llm.hpp"
#include "kgc/qa.hpp"

namespace kgc {

enum class FilterReason {
    Ok,
    ApiArtifact,
    FormatViolation,
    DuplicateDistractor,
    DistractorMatchesAnswer,
    NearDuplicateDistractor,
};

std::string to_string(FilterReason r);

struct FilterVerdict {
    FilterReason reason = FilterReason::Ok;
    std::string detail;

    bool passed() const { return reason == FilterReason::Ok; }
};

struct QualityConfig {
    /// token-set Jaccard at or above which a distractor is "too close" to the answer
    double jaccard_threshold = 0.9;
    /// minimum run of non-alphanumeric, non-space characters flagged as an artifact
    std::size_t symbol_run = 20;
};

/// Extracts vignette, options A-D and the answer label from a
/// <Question>/<Options>/<Answer> block. Throws FormatViolation naming the
/// first missing or duplicated element ("question", "options", "option C",
/// "answer", "answer label", ...).
QaTask parse_qa(const std::string& raw);

/// Canonical block that parse_qa reads back into the same fields.
std::string serialize_qa(const QaTask& task);

double token_jaccard(const std::string& a, const std::string& b);

/// First failing check wins: api-artifact, duplicate-distractor,
/// distractor-matches-answer, near-duplicate-distractor.
FilterVerdict quality_filter(const QaTask& task, const QualityConfig& config = {});

struct GenerationSettings {
    double temperature = 0.7;
    int max_new_tokens = 4096;
    std::optional<std::uint64_t> seed;
};

struct GenerationRejected {
    FilterVerdict verdict;
    std::string raw;
    /// whether the raw text got through parse_qa before being rejected
    bool parsed = false;
};

using TaskOutcome = std::variant<QaTask, GenerationRejected>;

/// Render the QA prompt, call the backend, parse and quality-filter. The
/// returned task carries the path and (model, timestamp) meta. Backend errors
/// propagate.
TaskOutcome generate_task(Backend& backend, const KgPath& path, const KnowledgeGraph& graph,
                          const GenerationSettings& settings, const std::string& timestamp,
                          const QualityConfig& quality = {});

}  // namespace kgc
