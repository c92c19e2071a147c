#include "kgc/trace.hpp"

#include <algorithm>
#include <cctype>

#include "kgc/error.hpp"
#include "kgc/prompts.hpp"
#include "kgc/text.hpp"

namespace kgc {

std::string to_string(Decision d) {
    switch (d) {
        case Decision::Yes: return "yes";
        case Decision::No: return "no";
        case Decision::Unparseable: return "unparseable";
    }
    return "unparseable";
}

Decision decision_from_string(const std::string& s) {
    if (s == "yes") return Decision::Yes;
    if (s == "no") return Decision::No;
    if (s == "unparseable") return Decision::Unparseable;
    throw InvalidConfig("unknown grader decision '" + s + "'");
}

ReasoningTrace distill_trace(Backend& backend, const QaTask& task, const KgPath& path, const KnowledgeGraph& graph,
                             const GenerationSettings& settings) {
    GenerationRequest req;
    req.prompt = prompts::render_trace_prompt(task, path.has_names() ? path : path.with_names(graph));
    req.temperature = settings.temperature;
    req.max_new_tokens = settings.max_new_tokens;
    req.seed = settings.seed;
    auto result = backend.generate(req);
    auto body = text::trim(result.text);
    if (body.empty()) throw EmptyTrace();
    if (body.find("<think>") != std::string::npos || body.find("</think>") != std::string::npos) {
        throw FormatViolation("trace delimiter");
    }
    return ReasoningTrace{std::move(body), backend.model_name(), result.completion_tokens};
}

Decision parse_verdict(const std::string& raw) {
    std::string lower(raw.size(), '\0');
    std::transform(raw.begin(), raw.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    static constexpr std::string_view kKey = "correct:";
    auto word_at = [&](std::size_t i, std::string_view w) {
        if (lower.compare(i, w.size(), w) != 0) return false;
        const auto end = i + w.size();
        return end == lower.size() || !std::isalnum(static_cast<unsigned char>(lower[end]));
    };
    for (auto pos = lower.find(kKey); pos != std::string::npos; pos = lower.find(kKey, pos + 1)) {
        std::size_t i = pos + kKey.size();
        while (i < lower.size() && (std::isspace(static_cast<unsigned char>(lower[i])) || lower[i] == '[' ||
                                    lower[i] == '*' || lower[i] == '"' || lower[i] == '\'')) {
            ++i;
        }
        if (word_at(i, "yes")) return Decision::Yes;
        if (word_at(i, "no")) return Decision::No;
    }
    return Decision::Unparseable;
}

bool two_factor_accept(Decision first, Decision second) {
    return first == Decision::Yes && second == Decision::Yes;
}

CurriculumItem correctness_filter(const QaTask& task, const ReasoningTrace& trace, const KgPath& path,
                                  const KnowledgeGraph& graph, std::span<Backend* const> graders,
                                  const GenerationSettings& settings) {
    if (graders.size() != 2) throw InvalidConfig("correctness filtering needs exactly two graders");
    const KgPath named = path.has_names() ? path : path.with_names(graph);
    GenerationRequest req;
    req.prompt = prompts::render_grader_prompt(task, trace.text, named);
    req.temperature = settings.temperature;
    req.max_new_tokens = settings.max_new_tokens;
    req.seed = settings.seed;

    CurriculumItem item;
    item.task = task;
    item.trace = trace;
    for (Backend* g : graders) {
        auto result = g->generate(req);
        item.verdicts.push_back(GraderVerdict{g->model_name(), parse_verdict(result.text), result.text});
    }
    item.accepted = two_factor_accept(item.verdicts[0].decision, item.verdicts[1].decision);
    return item;
}

}  // namespace kgc
