#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgc/bench.hpp"
#include "kgc/llm.hpp"
#include "kgc/qa.hpp"

namespace kgc {

/// An extracted option label, or nullopt for an abstaining stream.
using Answer = std::optional<char>;

std::string answer_string(const Answer& a);

struct EvalConfig {
    int streams = 1;       // K parallel samples, majority-voted
    int refinements = 0;   // R continuation rounds per stream
    double temperature = 0.6;
    std::string refinement_phrase = "hmm, let's double check";
    std::uint64_t seed = 0;
    /// token budget per stream, shared by all of its segments
    int max_new_tokens = 8192;
    std::string delimiter = "</think>";
    int workers = 1;

    void validate() const;
    nlohmann::json to_json() const;
    static EvalConfig from_json(const nlohmann::json& j);
};

struct StreamResult {
    std::string trace;
    Answer answer;
    int thinking_tokens = 0;
    int refinements = 0;
    bool budget_exhausted = false;
};

struct EvalRecord {
    std::string item_id;
    std::string category;
    int hops = 0;
    char gold = 'A';
    std::vector<StreamResult> streams;
    Answer voted;
    bool correct = false;
    double mean_thinking_tokens = 0.0;
};

struct GroupStats {
    std::size_t n = 0;
    double accuracy = 0.0;
    double mean_thinking_tokens = 0.0;
};

struct EvalReport {
    EvalConfig config;
    std::vector<EvalRecord> records;
    double accuracy = 0.0;
    double mean_thinking_tokens = 0.0;
    std::map<std::string, GroupStats> per_category;
    std::map<int, GroupStats> per_hop;
    std::string token_counting;

    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);
    /// header + one summary row: label, K, R, accuracy, mean thinking tokens, items
    std::string summary_csv(const std::string& label) const;
};

/// Last "Final Answer:" followed by a label wins; otherwise the last
/// standalone A-D token after the last `delimiter`; otherwise abstain.
Answer extract_answer(const std::string& generation, const std::string& delimiter = "</think>");

/// Abstains do not vote; the most frequent label wins and ties go to the tied
/// label that appears at the lowest stream index. All-abstain gives abstain.
Answer majority_vote(std::span<const Answer> answers);

/// One stream: generate up to the end-of-thinking delimiter; R times replace
/// the delimiter with the refinement phrase and continue; then let the model
/// close its thinking and answer. Running out of budget marks the stream
/// abstaining.
StreamResult run_stream(Backend& backend, const QaTask& task, const EvalConfig& config, std::uint64_t stream_seed);

/// Seed of stream `stream` on item `item`; shared by evaluate and
/// estimate_difficulty so K=1 evaluation equals one-sample difficulty.
std::uint64_t stream_seed(std::uint64_t seed, std::size_t item, std::size_t stream);

EvalReport evaluate(std::span<const BenchItem> bench, Backend& backend, const EvalConfig& config);

/// Recomputes the aggregates of `report` from its records.
void aggregate(EvalReport& report);

struct DifficultyRecord {
    std::string item_id;
    std::size_t successes = 0;
    std::size_t samples = 0;
    double pass_at_1 = 0.0;
    int bin = 1;
};

struct DifficultyConfig {
    std::size_t samples = 16;
    /// descending thresholds; bin 1 is [c0, 1], bin k is [c_{k-1}, c_{k-2}), bin 5 is [0, c3)
    std::array<double, 4> cutoffs{0.8, 0.6, 0.4, 0.2};
    EvalConfig eval;  // temperature, seed, budget, delimiter, workers

    void validate() const;
};

int difficulty_bin(double pass_at_1, const std::array<double, 4>& cutoffs);

std::vector<DifficultyRecord> estimate_difficulty(std::span<const BenchItem> bench, Backend& backend,
                                                  const DifficultyConfig& config);

nlohmann::json difficulty_to_json(const DifficultyRecord& r);

}  // namespace kgc
