#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgc/decontam.hpp"
#include "kgc/graph.hpp"
#include "kgc/llm.hpp"
#include "kgc/sampler.hpp"
#include "kgc/task.hpp"
#include "kgc/trace.hpp"

namespace kgc {

struct PipelineConfig {
    std::size_t total_samples = 100;
    int max_hops = 3;
    std::uint64_t seed = 0;
    double epsilon = 1.0;
    /// fresh-source retries after a DeadEnd, per attempt
    int max_path_attempts = 32;
    /// stall once attempts exceed attempt_cap * total_samples
    std::size_t attempt_cap = 50;
    int workers = 1;
    GenerationSettings generation;
    GenerationSettings tracing;
    GenerationSettings grading;
    QualityConfig quality;
    std::size_t ngram = 18;
    /// ISO-8601 timestamps in source_meta instead of logical "attempt-<n>" stamps
    bool wall_clock = false;

    void validate() const;
    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& j);
    /// SHA-256 of the canonical JSON form.
    std::string digest() const;
};

struct PipelineBackends {
    Backend* generator = nullptr;
    Backend* tracer = nullptr;
    Backend* grader1 = nullptr;
    Backend* grader2 = nullptr;

    void validate() const;
};

/// Where a run writes. Everything is staged in `<file>.partial` and renamed
/// into place only when the run completes.
struct PipelineOutputs {
    std::filesystem::path dataset;
    std::filesystem::path manifest;
    std::filesystem::path frequencies;
    std::filesystem::path rejections;
    std::filesystem::path audit;
    std::filesystem::path checkpoint;

    static PipelineOutputs in_directory(const std::filesystem::path& dir);
};

/// Stage-wise accounting. attempted >= parsed >= quality_passed >=
/// decontam_passed >= traced >= graded >= accepted.
struct FunnelTally {
    std::size_t attempted = 0;
    std::size_t parsed = 0;
    std::size_t quality_passed = 0;
    std::size_t decontam_passed = 0;
    std::size_t traced = 0;
    std::size_t graded = 0;
    std::size_t accepted = 0;
    std::size_t dead_ends = 0;
    std::size_t sampling_failures = 0;
    std::map<std::string, std::size_t> rejections;
    std::map<std::string, std::map<std::string, std::size_t>> grader_decisions;

    bool monotone() const;
    nlohmann::json to_json() const;
    static FunnelTally from_json(const nlohmann::json& j);
};

struct PipelineResult {
    std::vector<CurriculumItem> items;
    FunnelTally tally;
    nlohmann::json manifest;
};

/// The curation loop: diversity-weighted source, uniform length, no-revisit
/// path, QA generation + quality filter, optional decontamination against
/// `protected_bench`, trace distillation, two-grader correctness filter.
/// Frequencies are updated only for accepted items. Checkpoints after every
/// accepted item; with `resume` a previous checkpoint in `outputs` is picked
/// up. Throws ProgressStall when the attempt budget runs out.
PipelineResult run_pipeline(const PipelineConfig& config, const KnowledgeGraph& graph,
                            const PipelineBackends& backends, const PipelineOutputs& outputs,
                            const ProtectedSet* protected_bench = nullptr, bool resume = false);

nlohmann::json build_manifest(const std::vector<CurriculumItem>& items, const FunnelTally& tally,
                              const PipelineConfig& config, const KnowledgeGraph* graph,
                              const std::string& token_counting);

/// Items whose path length is in `hops`, original order kept.
std::vector<CurriculumItem> hop_subset(const std::vector<CurriculumItem>& items, const std::set<std::size_t>& hops);

// ---- SFT export ----

inline constexpr const char* kThinkOpen = "<think>";
inline constexpr const char* kThinkClose = "</think>";

struct SftRecord {
    std::string id;
    QaTask task;  // vignette, options, answer (no path)
    std::string trace;
};

/// Chat records: header line, then one record per item with the user turn
/// (question + options) and the assistant turn "<think>\ntrace\n</think>\n\n
/// Final Answer: X"; `loss_mask` marks the assistant turn as the target.
std::string export_sft(const std::vector<CurriculumItem>& items);
void export_sft_file(const std::vector<CurriculumItem>& items, const std::filesystem::path& path);

std::vector<SftRecord> parse_sft(const std::string& content);

}  // namespace kgc
