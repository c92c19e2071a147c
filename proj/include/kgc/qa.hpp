#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kgc/graph.hpp"

namespace kgc {

inline constexpr char kOptionLabels[] = {'A', 'B', 'C', 'D'};

struct Option {
    char label = 'A';
    std::string text;

    bool operator==(const Option&) const = default;
};

struct SourceMeta {
    std::string model;
    std::string timestamp;

    bool operator==(const SourceMeta&) const = default;
};

/// A multiple-choice task: vignette, options A-D in order, one answer label,
/// and the path it was generated from.
struct QaTask {
    std::string vignette;
    std::vector<Option> options;
    char answer = 'A';
    std::optional<KgPath> path;
    SourceMeta meta;

    /// Throws FormatViolation naming the first broken invariant.
    void validate() const;
    const std::string& option_text(char label) const;
    const std::string& answer_text() const { return option_text(answer); }
};

/// "<vignette>\nA. ...\nB. ...\nC. ...\nD. ..." as embedded in prompts.
std::string question_with_options(const QaTask& task);

}  // namespace kgc
