#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>

#include <json.hpp>

#include "kgc/graph.hpp"
#include "kgc/rng.hpp"

namespace kgc {

/// Running per-entity selection counts f_i with smoothing constant epsilon.
/// Source nodes are drawn with weight 1 / (f_i + epsilon).
class FrequencyTable {
public:
    explicit FrequencyTable(double epsilon = 1.0);

    double epsilon() const { return epsilon_; }
    std::uint64_t count(const EntityId& id) const;
    const std::map<EntityId, std::uint64_t>& counts() const { return counts_; }

    void increment(const EntityId& id, std::uint64_t by = 1) { counts_[id] += by; }

    /// JSON map {entity-id: count}; zero counts are omitted.
    nlohmann::json to_json() const;
    static FrequencyTable from_json(const nlohmann::json& j, double epsilon = 1.0);

private:
    double epsilon_;
    std::map<EntityId, std::uint64_t> counts_;
};

struct SamplerConfig {
    int max_hops = 3;
    std::uint64_t seed = 0;
    /// fresh-source retries after a DeadEnd
    int max_attempts = 32;

    void validate() const;
};

/// Diversity sampling: node i with probability w_i / Z, w_i = 1 / (f_i + eps),
/// Z summed over every node of the graph (sinks included). Throws EmptyGraph.
EntityId sample_source(const FrequencyTable& freq, const KnowledgeGraph& graph, Rng& rng);

/// Complexity sampling: uniform over {1, ..., max_hops}. Throws InvalidConfig for max_hops < 1.
int sample_length(int max_hops, Rng& rng);

/// Traversal stopped because every candidate at step `depth + 1` was already visited
/// (or the node had no out-edges).
struct DeadEnd {
    std::size_t depth = 0;
};

using PathSample = std::variant<KgPath, DeadEnd>;

/// No-revisit uniform traversal of exactly `hops` steps from `source`. At
/// each step the next (relation, neighbor) is uniform over the out-edges
/// whose neighbor is not yet on the path. The returned path carries names.
PathSample sample_path(const KnowledgeGraph& graph, const EntityId& source, int hops, Rng& rng);

/// f_i += 1 for every entity on the path.
void update_frequencies(FrequencyTable& freq, const KgPath& path);

}  // namespace kgc
