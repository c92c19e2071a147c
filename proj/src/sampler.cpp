#include "kgc/sampler.hpp"

#include <unordered_set>

#include "kgc/error.hpp"

namespace kgc {

FrequencyTable::FrequencyTable(double epsilon) : epsilon_(epsilon) {
    if (!(epsilon > 0.0)) throw InvalidConfig("frequency epsilon must be > 0");
}

std::uint64_t FrequencyTable::count(const EntityId& id) const {
    auto it = counts_.find(id);
    return it == counts_.end() ? 0 : it->second;
}

nlohmann::json FrequencyTable::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, c] : counts_) {
        if (c > 0) j[id] = c;
    }
    return j;
}

FrequencyTable FrequencyTable::from_json(const nlohmann::json& j, double epsilon) {
    if (!j.is_object()) throw InvalidConfig("frequency table must be a JSON object");
    FrequencyTable t(epsilon);
    for (auto it = j.begin(); it != j.end(); ++it) t.counts_[it.key()] = it.value().get<std::uint64_t>();
    return t;
}

void SamplerConfig::validate() const {
    if (max_hops < 1) throw InvalidConfig("max_hops must be >= 1");
    if (max_attempts < 1) throw InvalidConfig("max_attempts must be >= 1");
}

EntityId sample_source(const FrequencyTable& freq, const KnowledgeGraph& graph, Rng& rng) {
    const auto& entities = graph.entities();
    if (entities.empty()) throw EmptyGraph();
    const double eps = freq.epsilon();

    // Entities and counts are both sorted by id; merge instead of a lookup per node.
    std::vector<double> cumulative(entities.size());
    const auto& counts = freq.counts();
    auto c = counts.begin();
    double z = 0.0;
    for (std::size_t i = 0; i < entities.size(); ++i) {
        while (c != counts.end() && c->first < entities[i].id) ++c;
        const double f = (c != counts.end() && c->first == entities[i].id) ? static_cast<double>(c->second) : 0.0;
        z += 1.0 / (f + eps);
        cumulative[i] = z;
    }
    const double u = rng.unit() * z;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return entities[static_cast<std::size_t>(it - cumulative.begin())].id;
}

int sample_length(int max_hops, Rng& rng) {
    if (max_hops < 1) throw InvalidConfig("max_hops must be >= 1");
    return 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_hops)));
}

PathSample sample_path(const KnowledgeGraph& graph, const EntityId& source, int hops, Rng& rng) {
    if (hops < 1) throw InvalidConfig("path length must be >= 1");
    std::size_t current = graph.index_of(source);
    std::unordered_set<EntityId> visited{source};
    std::vector<Triple> triples;
    std::vector<std::string> names{graph.entities()[current].name};
    std::vector<const Edge*> candidates;

    for (int step = 0; step < hops; ++step) {
        candidates.clear();
        for (const auto& e : graph.neighbors_at(current)) {
            if (!visited.contains(e.target)) candidates.push_back(&e);
        }
        if (candidates.empty()) return DeadEnd{triples.size()};
        const Edge& pick = *candidates[rng.below(candidates.size())];
        triples.push_back(Triple{graph.entities()[current].id, pick.relation, pick.target});
        visited.insert(pick.target);
        current = graph.index_of(pick.target);
        names.push_back(graph.entities()[current].name);
    }
    return KgPath(std::move(triples), std::move(names));
}

void update_frequencies(FrequencyTable& freq, const KgPath& path) {
    for (const auto& id : path.entity_ids()) freq.increment(id);
}

}  // namespace kgc
