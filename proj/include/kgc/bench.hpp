#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgc/graph.hpp"
#include "kgc/llm.hpp"
#include "kgc/qa.hpp"
#include "kgc/task.hpp"
#include "kgc/trace.hpp"

namespace kgc {

struct Taxonomy {
    std::vector<std::string> labels;

    void validate() const;
    bool contains(const std::string& label) const;
    std::string digest() const;
    /// JSON list of labels.
    static Taxonomy load(const std::filesystem::path& path);
};

/// Items per category for each hop length.
struct StrataSpec {
    std::map<int, std::size_t> per_hop;

    /// Hop lengths must be >= 2; one-hop tasks are excluded from benchmarks.
    void validate() const;
    std::size_t per_category() const;
    std::size_t total(std::size_t categories) const { return per_category() * categories; }

    /// {"2": 100, "3": 100, ...}
    static StrataSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    /// 100 two-hop, 100 three-hop, 30 four-hop and 15 five-hop items per category.
    static StrataSpec full();
};

struct BenchItem {
    std::string id;
    QaTask task;
    std::string category;
    int hops = 0;
    std::vector<GraderVerdict> verdicts;
};

nlohmann::json bench_item_to_json(const BenchItem& item);
BenchItem bench_item_from_json(const nlohmann::json& j);
std::vector<BenchItem> read_bench(const std::filesystem::path& path);
void write_bench(const std::filesystem::path& path, const std::vector<BenchItem>& items);

struct ClassifierParse {
    std::set<std::string> labels;
    std::vector<std::string> dropped;
};

/// Reads the last "Categories:" line; "None" means no label. Labels outside
/// the taxonomy end up in `dropped`.
ClassifierParse parse_classifier_response(const std::string& raw, const Taxonomy& taxonomy);

struct ClassifyStats {
    std::size_t backend_calls = 0;
    std::size_t cache_hits = 0;
    std::size_t dropped_labels = 0;
};

/// Maps every node to its taxonomy labels (possibly none) with one classifier
/// call per node. With `cache` (JSONL {id, labels, taxonomy}) entries recorded
/// under the same taxonomy digest are reused, and new ones are appended.
CategoryMap classify_nodes(Backend& backend, const KnowledgeGraph& graph, const Taxonomy& taxonomy,
                           const std::optional<std::filesystem::path>& cache = std::nullopt,
                           const GenerationSettings& settings = {}, ClassifyStats* stats = nullptr);

struct BenchConfig {
    StrataSpec strata = StrataSpec::full();
    std::uint64_t seed = 0;
    /// attempts allowed per requested item before a cell counts as unfillable
    std::size_t cell_attempt_cap = 50;
    int max_path_attempts = 32;
    GenerationSettings generation;
    GenerationSettings grading;
    QualityConfig quality;

    void validate() const;
    static BenchConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct BenchBackends {
    Backend* generator = nullptr;
    Backend* grader1 = nullptr;
    Backend* grader2 = nullptr;
};

/// Fills every (category, hop) cell with exactly the requested number of
/// items: uniform source among the category's nodes, a path of exactly that
/// many hops, QA generation, quality filter, and two-grader correctness with
/// an empty explanation slot. Paths are distinct across the bench. Throws
/// StrataUnfillable when a cell exhausts its attempt budget.
std::vector<BenchItem> build_bench(const BenchConfig& config, const Taxonomy& taxonomy, const BenchBackends& backends,
                                   const KnowledgeGraph& graph, const CategoryMap& categories);

}  // namespace kgc
