#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgc/bench.hpp"
#include "kgc/eval.hpp"
#include "kgc/graph.hpp"
#include "kgc/llm.hpp"
#include "kgc/task.hpp"

namespace kgc {

struct HopJudgment {
    std::size_t hop_index = 0;
    std::string premise;
    bool present = false;
    std::string raw;
};

struct AlignmentRecord {
    std::string item_id;
    int hops = 0;
    std::vector<HopJudgment> judgments;
    std::size_t present_count = 0;
    double recall = 0.0;  // present_count / hops
    bool correct = false;
};

/// One judge call per hop; unparseable output counts as absent. Uses the
/// names embedded in the path when present, else the graph.
std::vector<HopJudgment> judge_hops(Backend& judge, const std::string& trace, const KgPath& path,
                                    const KnowledgeGraph* graph = nullptr, const GenerationSettings& settings = {});

AlignmentRecord make_alignment_record(const std::string& item_id, int hops, std::vector<HopJudgment> judgments,
                                      bool correct);

struct AlignmentRow {
    int hops = 0;
    double mean_recall = 0.0;
    double accuracy = 0.0;
    std::size_t n = 0;
};

/// Per-hop-length means, ascending; empty groups do not appear.
std::vector<AlignmentRow> alignment_report(std::span<const AlignmentRecord> records);

std::string alignment_csv(std::span<const AlignmentRow> rows);

/// Judges the first non-empty stream trace of every evaluated bench item.
/// Items are matched by id; bench items without a result are skipped.
std::vector<AlignmentRecord> align_results(std::span<const BenchItem> bench, const EvalReport& results, Backend& judge,
                                           const KnowledgeGraph* graph = nullptr, int workers = 1,
                                           const GenerationSettings& settings = {});

nlohmann::json alignment_record_to_json(const AlignmentRecord& r);

}  // namespace kgc
