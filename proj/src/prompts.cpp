#include "kgc/prompts.hpp"

#include "kgc/text.hpp"

namespace kgc::prompts {

std::string path_context(const std::vector<std::string>& premises) { return text::join(premises, "; "); }

std::string render_qa_prompt(const KgPath& path, const KnowledgeGraph& graph) {
    return render_qa_prompt(path.with_names(graph));
}

std::string render_qa_prompt(const KgPath& named_path) {
    const auto premises = verbalize_path(named_path);
    const auto& names = named_path.names();
    std::string p;
    p += kQaPromptHead;
    p += " for advanced medical students that tests the relationship between ";
    p += names.front() + " and " + names.back() + ".  The relationship is: " + path_context(premises) +
         ". The question should:\n";
    p += "  1. Be in multiple choice format (4 options)\n"
         "  2. Require clinical reasoning along the relationship\n"
         "  3. Include a brief clinical vignette\n"
         "  4. Not directly mention the relationship in the question stem\n"
         "  5. Have one clearly correct answer\n"
         "\n"
         "Format:\n"
         "<Question>\n"
         "[Clinical Vignette]\n"
         "</Question>\n"
         "<Options>\n"
         "A. [Option]\n"
         "B. [Option]\n"
         "C. [Option]\n"
         "D. [Option]\n"
         "</Options>\n"
         "<Answer>:\n"
         "[Correct Option Letter]\n"
         "</Answer>\n";
    return p;
}

std::string render_trace_prompt(const QaTask& task, const KgPath& path, const KnowledgeGraph& graph) {
    return render_trace_prompt(task, path.with_names(graph));
}

std::string render_trace_prompt(const QaTask& task, const KgPath& named_path) {
    std::string p;
    p += kTracePromptHead;
    p += " " + question_with_options(task) + "\n\n";
    p += "Use the following context " + path_context(verbalize_path(named_path)) + ". The explanation should be:\n";
    p += "  1. Detailed and include all the steps leading to the answer.\n"
         "  2. You are to use the provided context to explain the relationship between the concepts.\n"
         "  3. Strictly do not mention that you are using a given context to generate the explanation.\n";
    return p;
}

std::string render_grader_prompt(const QaTask& task, const std::string& trace, const KgPath& path,
                                 const KnowledgeGraph& graph) {
    return render_grader_prompt(task, trace, path.with_names(graph));
}

std::string render_grader_prompt(const QaTask& task, const std::string& trace, const KgPath& named_path) {
    std::string p;
    p += kGraderPromptHead;
    p += " You are given a medical question along with an explanation and the answer. "
         "You have also been given a source context.\n"
         "  1. Judge whether the question and answer are logically correct and medically accurate, and follow "
         "the source. If there is an explanation, also evaluate whether the explanation follows from the source "
         "to reach the correct answer.\n"
         "  2. Respond with only \"Yes\" or \"No\".\n"
         "Format your response exactly like this: \"Correct: [Yes/No]\"\n\n";
    p += "Question: " + question_with_options(task) + "\n\n";
    p += "Explanation: " + trace + "\n\n";
    p += std::string("Answer: ") + task.answer + "\n\n";
    p += "Source Context: " + path_context(verbalize_path(named_path)) + "\n";
    return p;
}

std::string render_bench_prompt(const QaTask& task) {
    std::string p;
    p += kBenchPromptHead;
    p += " Your final answer should be (A, B, C, or D)\n";
    p += "<Question>\n" + task.vignette + "\n</Question>\n<Options>\n";
    for (const auto& o : task.options) p += std::string(1, o.label) + ". " + o.text + "\n";
    p += "</Options>\n";
    p += "End your response with a line of the form \"Final Answer: <letter>\".\n";
    return p;
}

std::string render_classifier_prompt(const std::string& entity_name, const std::vector<std::string>& taxonomy) {
    std::string p;
    p += kClassifierPromptHead;
    p += " \"" + entity_name + "\" into the categories below. Assign a category only if the concept has a strong "
         "affinity with it; a concept may belong to several categories or to none.\n"
         "Categories:\n";
    for (const auto& label : taxonomy) p += "- " + label + "\n";
    p += "Respond with one line exactly like this: \"Categories: <label>, <label>\", using labels verbatim "
         "from the list, or \"Categories: None\".\n";
    return p;
}

std::string render_hop_judge_prompt(const std::string& premise, const std::string& trace) {
    std::string p;
    p += kJudgePromptHead;
    p += "\nRelationship: " + premise + "\n";
    p += "Reasoning trace:\n" + trace + "\n\n";
    p += "Is this relationship explicitly used in the reasoning? Respond with only \"Yes\" or \"No\".\n"
         "Format your response exactly like this: \"Correct: [Yes/No]\"\n";
    return p;
}

}  // namespace kgc::prompts
