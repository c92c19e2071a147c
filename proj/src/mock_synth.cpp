// Template-aware responses for the offline backend. Each branch recognizes
// one prompt rendered by kgc::prompts and answers in the format the
// corresponding parser expects, so whole pipelines run without a network.

#include <cstdio>

#include "kgc/hash.hpp"
#include "kgc/llm.hpp"
#include "kgc/prompts.hpp"
#include "kgc/qa.hpp"
#include "kgc/text.hpp"

namespace kgc {
namespace {

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

std::string between(const std::string& s, const std::string& open, const std::string& close) {
    auto b = s.find(open);
    if (b == std::string::npos) return {};
    b += open.size();
    auto e = s.find(close, b);
    if (e == std::string::npos) e = s.size();
    return s.substr(b, e - b);
}

struct Premise {
    std::string head, relation, tail;
};

std::vector<Premise> parse_context(const std::string& ctx) {
    std::vector<Premise> out;
    std::size_t start = 0;
    while (start < ctx.size()) {
        auto sep = ctx.find("; ", start);
        if (sep == std::string::npos) sep = ctx.size();
        const std::string item = ctx.substr(start, sep - start);
        const auto a = item.find(" --");
        const auto b = item.rfind("--> ");
        if (a != std::string::npos && b != std::string::npos && b > a) {
            out.push_back({item.substr(0, a), item.substr(a + 3, b - a - 3), item.substr(b + 4)});
        }
        start = sep + 2;
    }
    return out;
}

bool is_decoy(const std::string& option) {
    for (const auto& d : mock_decoys()) {
        if (d == option) return true;
    }
    return false;
}

/// Label of the first option line ("A. text") whose text is not a decoy.
char non_decoy_label(const std::string& block) {
    for (const auto& raw : text::split_lines(block)) {
        const auto line = text::trim(raw);
        if (line.size() >= 3 && line[0] >= 'A' && line[0] <= 'D' && line[1] == '.') {
            if (!is_decoy(text::trim(line.substr(2)))) return line[0];
        }
    }
    return 'A';
}

std::string hex32(std::uint64_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(v & 0xffffffffu));
    return buf;
}

std::optional<std::string> synth_qa(const std::string& prompt) {
    const auto ctx = between(prompt, "The relationship is: ", ". The question should:");
    const auto premises = parse_context(ctx);
    if (premises.empty()) return std::nullopt;
    const auto& src = premises.front().head;
    const auto& tgt = premises.back().tail;
    const auto h = fnv1a64(ctx);
    const auto cid = hex32(h >> 16);
    const int age = 20 + static_cast<int>(h % 60);
    const auto pos = static_cast<std::size_t>((h >> 8) % 4);

    std::string v = "Case " + cid + ": a " + std::to_string(age) +
                    "-year-old patient is evaluated for a problem involving " + src + ". In case " + cid +
                    " the team reviews how " + src + " relates to other findings through " +
                    std::to_string(premises.size()) + (premises.size() == 1 ? " linked step. For case " : " linked steps. For case ") + cid +
                    ", which option is ultimately implicated downstream of " + src + "?";

    std::vector<std::string> opts = mock_decoys();
    opts.insert(opts.begin() + static_cast<std::ptrdiff_t>(pos), tgt);
    std::string out = "<Question>\n" + v + "\n</Question>\n<Options>\n";
    for (std::size_t i = 0; i < 4; ++i) out += std::string(1, kOptionLabels[i]) + ". " + opts[i] + "\n";
    out += "</Options>\n<Answer>:\n" + std::string(1, kOptionLabels[pos]) + "\n</Answer>\n";
    return out;
}

std::optional<std::string> synth_trace(const std::string& prompt) {
    const auto premises = parse_context(between(prompt, "Use the following context ", ". The explanation should be:"));
    if (premises.empty()) return std::nullopt;
    const char label = non_decoy_label(between(prompt, prompts::kTracePromptHead, "\n\nUse the following context "));
    std::string t = "Begin with " + premises.front().head + ".";
    for (const auto& p : premises) {
        t += " " + p.head + " is connected to " + p.tail + " through the relation \"" + p.relation + "\".";
    }
    t += " Following these links step by step leads to " + premises.back().tail + ", so the answer is option " +
         std::string(1, label) + ".";
    return t;
}

std::string synth_bench(const GenerationRequest& req) {
    const char label = non_decoy_label(between(req.prompt, "<Options>\n", "</Options>"));
    const std::string L(1, label);
    if (req.assistant_prefix.empty()) {
        return "<think>\nThe vignette describes a chain of linked findings. Weighing each option against that "
               "chain, option " + L + " fits best.\n</think>\nFinal Answer: " + L;
    }
    return "\nChecking each linked step again, option " + L + " still fits best.\n</think>\nFinal Answer: " + L;
}

std::string synth_classifier(const std::string& prompt) {
    const auto name = between(prompt, "\"", "\"");
    std::vector<std::string> labels;
    for (const auto& line : text::split_lines(between(prompt, "Categories:\n", "Respond with"))) {
        if (line.rfind("- ", 0) == 0) labels.push_back(line.substr(2));
    }
    if (labels.empty()) return "Categories: None";
    const auto pick = fnv1a64(name) % (labels.size() + 1);
    if (pick == labels.size()) return "Categories: None";
    return "Categories: " + labels[pick];
}

std::string synth_judge(const std::string& prompt) {
    const auto premise = parse_context(between(prompt, "Relationship: ", "\n"));
    const auto trace = between(prompt, "Reasoning trace:\n", "\n\nIs this relationship explicitly used");
    if (premise.empty()) return "Correct: No";
    const bool used = text::contains_ci(trace, premise[0].head) && text::contains_ci(trace, premise[0].tail);
    return used ? "Correct: Yes" : "Correct: No";
}

}  // namespace

const std::vector<std::string>& mock_decoys() {
    static const std::vector<std::string> decoys{"Idiopathic marker alpha", "Idiopathic marker beta",
                                                 "Idiopathic marker gamma"};
    return decoys;
}

std::optional<std::string> synthesize_mock_response(const GenerationRequest& request) {
    const auto& p = request.prompt;
    if (starts_with(p, prompts::kQaPromptHead)) return synth_qa(p);
    if (starts_with(p, prompts::kTracePromptHead)) return synth_trace(p);
    if (starts_with(p, prompts::kGraderPromptHead)) return std::string("Correct: Yes");
    if (starts_with(p, prompts::kBenchPromptHead)) return synth_bench(request);
    if (starts_with(p, prompts::kClassifierPromptHead)) return synth_classifier(p);
    if (starts_with(p, prompts::kJudgePromptHead)) return synth_judge(p);
    return std::nullopt;
}

}  // namespace kgc
