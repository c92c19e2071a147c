#include "kgc/align.hpp"

#include <sstream>

#include "kgc/error.hpp"
#include "kgc/prompts.hpp"
#include "kgc/trace.hpp"
#include "parallel.hpp"

namespace kgc {

std::vector<HopJudgment> judge_hops(Backend& judge, const std::string& trace, const KgPath& path,
                                    const KnowledgeGraph* graph, const GenerationSettings& settings) {
    if (trace.find_first_not_of(" \t\r\n") == std::string::npos) throw InvalidConfig("alignment trace is empty");
    const auto premises = path.has_names() || !graph ? verbalize_path(path) : verbalize_path(path, *graph);
    std::vector<HopJudgment> out;
    for (std::size_t i = 0; i < premises.size(); ++i) {
        GenerationRequest req;
        req.prompt = prompts::render_hop_judge_prompt(premises[i], trace);
        req.temperature = settings.temperature;
        req.max_new_tokens = settings.max_new_tokens;
        req.seed = settings.seed;
        auto res = judge.generate(req);
        HopJudgment j;
        j.hop_index = i;
        j.premise = premises[i];
        j.present = parse_verdict(res.text) == Decision::Yes;
        j.raw = std::move(res.text);
        out.push_back(std::move(j));
    }
    return out;
}

AlignmentRecord make_alignment_record(const std::string& item_id, int hops, std::vector<HopJudgment> judgments,
                                      bool correct) {
    if (hops < 1 || judgments.size() != static_cast<std::size_t>(hops)) {
        throw InvalidConfig("item " + item_id + ": expected one judgment per hop");
    }
    AlignmentRecord r;
    r.item_id = item_id;
    r.hops = hops;
    r.correct = correct;
    for (const auto& j : judgments) r.present_count += j.present ? 1 : 0;
    r.recall = static_cast<double>(r.present_count) / hops;
    r.judgments = std::move(judgments);
    return r;
}

std::vector<AlignmentRow> alignment_report(std::span<const AlignmentRecord> records) {
    std::map<int, AlignmentRow> groups;
    for (const auto& r : records) {
        auto& g = groups[r.hops];
        g.hops = r.hops;
        ++g.n;
        g.mean_recall += r.recall;
        g.accuracy += r.correct ? 1.0 : 0.0;
    }
    std::vector<AlignmentRow> rows;
    for (auto& [h, g] : groups) {
        g.mean_recall /= static_cast<double>(g.n);
        g.accuracy /= static_cast<double>(g.n);
        rows.push_back(g);
    }
    return rows;
}

std::string alignment_csv(std::span<const AlignmentRow> rows) {
    std::ostringstream os;
    os << "hop-length,mean-recall,accuracy,n\n";
    for (const auto& r : rows) os << r.hops << ',' << r.mean_recall << ',' << r.accuracy << ',' << r.n << '\n';
    return os.str();
}

std::vector<AlignmentRecord> align_results(std::span<const BenchItem> bench, const EvalReport& results, Backend& judge,
                                           const KnowledgeGraph* graph, int workers,
                                           const GenerationSettings& settings) {
    std::map<std::string, const EvalRecord*> by_id;
    for (const auto& r : results.records) by_id[r.item_id] = &r;

    struct Job {
        const BenchItem* item;
        const EvalRecord* result;
        const std::string* trace;
    };
    std::vector<Job> jobs;
    for (const auto& item : bench) {
        auto it = by_id.find(item.id);
        if (it == by_id.end()) continue;
        if (!item.task.path) throw InvalidConfig("bench item " + item.id + " has no path");
        const std::string* trace = nullptr;
        for (const auto& s : it->second->streams) {
            if (s.trace.find_first_not_of(" \t\r\n") != std::string::npos) {
                trace = &s.trace;
                break;
            }
        }
        if (!trace) continue;
        jobs.push_back({&item, it->second, trace});
    }
    std::vector<AlignmentRecord> out(jobs.size());
    detail::parallel_for(jobs.size(), workers, [&](std::size_t i) {
        const auto& j = jobs[i];
        auto judgments = judge_hops(judge, *j.trace, *j.item->task.path, graph, settings);
        out[i] = make_alignment_record(j.item->id, static_cast<int>(j.item->task.path->length()), std::move(judgments),
                                       j.result->correct);
    });
    return out;
}

nlohmann::json alignment_record_to_json(const AlignmentRecord& r) {
    nlohmann::json js = nlohmann::json::array();
    for (const auto& j : r.judgments) {
        js.push_back({{"hop", j.hop_index}, {"premise", j.premise}, {"present", j.present}, {"raw", j.raw}});
    }
    return {{"id", r.item_id},   {"hops", r.hops},       {"present", r.present_count},
            {"recall", r.recall}, {"correct", r.correct}, {"judgments", js}};
}

}  // namespace kgc
