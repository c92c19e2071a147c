#include "kgc/task.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "kgc/error.hpp"
#include "kgc/prompts.hpp"
#include "kgc/text.hpp"

namespace kgc {

std::string to_string(FilterReason r) {
    switch (r) {
        case FilterReason::Ok: return "ok";
        case FilterReason::ApiArtifact: return "api-artifact";
        case FilterReason::FormatViolation: return "format-violation";
        case FilterReason::DuplicateDistractor: return "duplicate-distractor";
        case FilterReason::DistractorMatchesAnswer: return "distractor-matches-answer";
        case FilterReason::NearDuplicateDistractor: return "near-duplicate-distractor";
    }
    return "ok";
}

// ---- QaTask ----

void QaTask::validate() const {
    if (text::trim(vignette).empty()) throw FormatViolation("question");
    if (options.size() != 4) throw FormatViolation("option count");
    for (std::size_t i = 0; i < 4; ++i) {
        if (options[i].label != kOptionLabels[i]) throw FormatViolation("option order");
        if (text::trim(options[i].text).empty()) throw FormatViolation(std::string("option ") + kOptionLabels[i]);
    }
    if (answer < 'A' || answer > 'D') throw FormatViolation("answer label");
}

const std::string& QaTask::option_text(char label) const {
    for (const auto& o : options) {
        if (o.label == label) return o.text;
    }
    throw FormatViolation(std::string("option ") + label);
}

std::string question_with_options(const QaTask& task) {
    std::string s = task.vignette;
    for (const auto& o : task.options) s += "\n" + std::string(1, o.label) + ". " + o.text;
    return s;
}

// ---- parse / serialize ----

namespace {

/// Content between <tag> and </tag>; nullopt if either is missing. A
/// duplicated opening tag is a violation.
std::optional<std::string> tag_content(const std::string& raw, const std::string& tag, const std::string& element) {
    const std::string open = "<" + tag + ">";
    const std::string close = "</" + tag + ">";
    const auto b = raw.find(open);
    if (b == std::string::npos) return std::nullopt;
    const auto e = raw.find(close, b + open.size());
    if (e == std::string::npos) return std::nullopt;
    if (raw.find(open, b + open.size()) != std::string::npos) throw FormatViolation("duplicate " + element);
    return raw.substr(b + open.size(), e - b - open.size());
}

/// "A." / "A)" at the start of a trimmed line, label in A-D.
std::optional<char> option_label(const std::string& line) {
    if (line.size() >= 2 && line[0] >= 'A' && line[0] <= 'D' && (line[1] == '.' || line[1] == ')')) {
        if (line.size() == 2 || std::isspace(static_cast<unsigned char>(line[2]))) return line[0];
    }
    return std::nullopt;
}

}  // namespace

QaTask parse_qa(const std::string& raw) {
    QaTask task;
    auto q = tag_content(raw, "Question", "question");
    if (!q) throw FormatViolation("question");
    task.vignette = text::trim(*q);
    if (task.vignette.empty()) throw FormatViolation("question");

    auto opts = tag_content(raw, "Options", "options");
    if (!opts) throw FormatViolation("options");
    std::vector<Option> found;
    for (const auto& raw_line : text::split_lines(*opts)) {
        const auto line = text::trim(raw_line);
        if (line.empty()) continue;
        if (auto label = option_label(line)) {
            for (const auto& o : found) {
                if (o.label == *label) throw FormatViolation(std::string("duplicate option ") + *label);
            }
            found.push_back(Option{*label, text::trim(line.substr(2))});
        } else if (!found.empty()) {
            found.back().text += " " + line;
        } else {
            throw FormatViolation("option A");
        }
    }
    for (char label : kOptionLabels) {
        auto it = std::find_if(found.begin(), found.end(), [&](const Option& o) { return o.label == label; });
        if (it == found.end() || it->text.empty()) throw FormatViolation(std::string("option ") + label);
    }
    for (std::size_t i = 0; i < 4; ++i) {
        if (found[i].label != kOptionLabels[i]) throw FormatViolation("option order");
    }
    task.options = std::move(found);

    // The QA template renders "<Answer>:", so tolerate text between the tag and the letter.
    const auto ab = raw.find("<Answer>");
    const auto ae = ab == std::string::npos ? ab : raw.find("</Answer>", ab);
    if (ab == std::string::npos || ae == std::string::npos) throw FormatViolation("answer");
    std::string ans = text::trim(raw.substr(ab + 8, ae - ab - 8));
    std::size_t i = 0;
    while (i < ans.size() && (ans[i] == ':' || ans[i] == '[' || ans[i] == '*' || ans[i] == '(' ||
                              std::isspace(static_cast<unsigned char>(ans[i])))) {
        ++i;
    }
    if (i == ans.size()) throw FormatViolation("answer");
    const char letter = ans[i];
    const bool standalone = i + 1 == ans.size() || !std::isalnum(static_cast<unsigned char>(ans[i + 1]));
    if (letter < 'A' || letter > 'D' || !standalone) throw FormatViolation("answer label");
    task.answer = letter;
    return task;
}

std::string serialize_qa(const QaTask& task) {
    std::string s = "<Question>\n" + task.vignette + "\n</Question>\n<Options>\n";
    for (const auto& o : task.options) s += std::string(1, o.label) + ". " + o.text + "\n";
    s += "</Options>\n<Answer>:\n" + std::string(1, task.answer) + "\n</Answer>\n";
    return s;
}

// ---- quality filter ----

double token_jaccard(const std::string& a, const std::string& b) {
    const auto ta = text::tokenize(a), tb = text::tokenize(b);
    const std::set<std::string> sa(ta.begin(), ta.end()), sb(tb.begin(), tb.end());
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& t : sa) inter += sb.count(t);
    return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

FilterVerdict quality_filter(const QaTask& task, const QualityConfig& config) {
    auto artifact = [&](const std::string& s) {
        return s.find("```") != std::string::npos || text::has_symbol_run(s, config.symbol_run);
    };
    if (artifact(task.vignette)) return {FilterReason::ApiArtifact, "vignette"};
    for (const auto& o : task.options) {
        if (artifact(o.text)) return {FilterReason::ApiArtifact, std::string("option ") + o.label};
    }

    std::vector<const Option*> distractors;
    for (const auto& o : task.options) {
        if (o.label != task.answer) distractors.push_back(&o);
    }
    std::vector<std::string> norm;
    for (const auto* d : distractors) norm.push_back(text::normalize_option(d->text));
    for (std::size_t i = 0; i < norm.size(); ++i) {
        for (std::size_t j = i + 1; j < norm.size(); ++j) {
            if (norm[i] == norm[j]) {
                return {FilterReason::DuplicateDistractor,
                        std::string("options ") + distractors[i]->label + " and " + distractors[j]->label};
            }
        }
    }
    const auto& answer = task.answer_text();
    const auto answer_norm = text::normalize_option(answer);
    for (std::size_t i = 0; i < norm.size(); ++i) {
        if (norm[i] == answer_norm) {
            return {FilterReason::DistractorMatchesAnswer, std::string("option ") + distractors[i]->label};
        }
    }
    for (const auto* d : distractors) {
        if (token_jaccard(d->text, answer) >= config.jaccard_threshold) {
            return {FilterReason::NearDuplicateDistractor, std::string("option ") + d->label};
        }
    }
    return {};
}

// ---- generation ----

TaskOutcome generate_task(Backend& backend, const KgPath& path, const KnowledgeGraph& graph,
                          const GenerationSettings& settings, const std::string& timestamp,
                          const QualityConfig& quality) {
    const KgPath named = path.has_names() ? path : path.with_names(graph);
    GenerationRequest req;
    req.prompt = prompts::render_qa_prompt(named);
    req.temperature = settings.temperature;
    req.max_new_tokens = settings.max_new_tokens;
    req.seed = settings.seed;
    const auto result = backend.generate(req);

    // Artifacts are screened on the raw text first: a code fence can also break parsing.
    if (result.text.find("```") != std::string::npos) {
        return GenerationRejected{{FilterReason::ApiArtifact, "code fence"}, result.text, false};
    }
    QaTask task;
    try {
        task = parse_qa(result.text);
    } catch (const FormatViolation& e) {
        return GenerationRejected{{FilterReason::FormatViolation, e.element()}, result.text, false};
    }
    auto verdict = quality_filter(task, quality);
    if (!verdict.passed()) return GenerationRejected{std::move(verdict), result.text, true};
    task.path = named;
    task.meta = SourceMeta{backend.model_name(), timestamp};
    return task;
}

}  // namespace kgc
