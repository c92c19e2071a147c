#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace kgc {

using EntityId = std::string;

struct Entity {
    EntityId id;
    std::string name;
    std::set<std::string> categories;
};

struct Triple {
    EntityId head;
    std::string relation;
    EntityId tail;

    auto operator<=>(const Triple&) const = default;
};

/// One outgoing (relation, neighbor) pair.
struct Edge {
    std::string relation;
    EntityId target;

    auto operator<=>(const Edge&) const = default;
};

using CategoryMap = std::map<EntityId, std::set<std::string>>;

/// Immutable directed multigraph. Entities are kept sorted by id and each
/// adjacency list is sorted, so two loads of the same records compare equal
/// regardless of record order.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    std::size_t entity_count() const { return entities_.size(); }
    std::size_t triple_count() const { return triples_.size(); }
    bool empty() const { return entities_.empty(); }

    const std::vector<Entity>& entities() const { return entities_; }
    const std::vector<Triple>& triples() const { return triples_; }

    bool contains(const EntityId& id) const { return index_.contains(id); }
    const Entity* find(const EntityId& id) const;
    /// Throws UnknownNode.
    const Entity& entity(const EntityId& id) const;
    /// Position of `id` in entities(); throws UnknownNode.
    std::size_t index_of(const EntityId& id) const;

    /// Outgoing (relation, neighbor) pairs; throws UnknownNode.
    std::span<const Edge> neighbors(const EntityId& id) const;
    std::span<const Edge> neighbors_at(std::size_t index) const { return out_[index]; }

    friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
        return a.triples_ == b.triples_ && a.out_ == b.out_ && a.entities_.size() == b.entities_.size() &&
               std::equal(a.entities_.begin(), a.entities_.end(), b.entities_.begin(),
                          [](const Entity& x, const Entity& y) {
                              return x.id == y.id && x.name == y.name && x.categories == y.categories;
                          });
    }

private:
    friend KnowledgeGraph load_graph(std::istream&, const std::set<std::string>&, const CategoryMap&);

    std::vector<Entity> entities_;
    std::unordered_map<EntityId, std::size_t> index_;
    std::vector<Triple> triples_;
    std::vector<std::vector<Edge>> out_;
};

/// Reads the 5-column TSV triple format (head-id, head-name, relation,
/// tail-id, tail-name). `#` lines and blank lines are skipped, duplicate
/// triples collapse, self-loops are dropped with a warning, and records whose
/// relation is in `excluded_relations` are left out.
KnowledgeGraph load_graph(std::istream& source, const std::set<std::string>& excluded_relations = {},
                          const CategoryMap& categories = {});

KnowledgeGraph load_graph_file(const std::filesystem::path& tsv, const std::set<std::string>& excluded_relations = {},
                               const std::optional<std::filesystem::path>& categories_json = std::nullopt);

/// JSON object {entity-id: [label, ...]}.
CategoryMap load_category_map(const std::filesystem::path& path);

/// Ordered chain of triples with pairwise-distinct entities. Optionally
/// carries the display names of its N+1 entities so it can be verbalized
/// without the graph (dataset records embed them).
class KgPath {
public:
    KgPath() = default;
    /// Validates chaining, non-emptiness and entity distinctness; throws InvalidConfig.
    explicit KgPath(std::vector<Triple> triples, std::vector<std::string> names = {});

    std::size_t length() const { return triples_.size(); }
    const std::vector<Triple>& triples() const { return triples_; }
    const std::vector<std::string>& names() const { return names_; }
    bool has_names() const { return names_.size() == triples_.size() + 1; }

    const EntityId& source() const { return triples_.front().head; }
    const EntityId& target() const { return triples_.back().tail; }
    std::vector<EntityId> entity_ids() const;

    /// Copy with names resolved from `graph`; throws DanglingEntity.
    KgPath with_names(const class KnowledgeGraph& graph) const;

    friend bool operator==(const KgPath& a, const KgPath& b) { return a.triples_ == b.triples_; }

private:
    std::vector<Triple> triples_;
    std::vector<std::string> names_;
};

/// One premise per hop, "<head name> --<relation>--> <tail name>".
/// Throws DanglingEntity if the path references an id the graph lacks.
std::vector<std::string> verbalize_path(const KgPath& path, const KnowledgeGraph& graph);

/// Same, using the names embedded in the path.
std::vector<std::string> verbalize_path(const KgPath& path);

std::string format_premise(const std::string& head_name, const std::string& relation, const std::string& tail_name);

struct GraphStats {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::map<std::string, std::size_t> relation_counts;
    /// total degree (in + out) -> number of nodes
    std::map<std::size_t, std::size_t> degree_histogram;
    std::size_t sinks = 0;
    /// undirected shortest-path distance -> number of sampled pairs
    std::map<std::size_t, std::size_t> distance_histogram;
    std::size_t unreachable_pairs = 0;
    std::size_t sampled_pairs = 0;
};

/// Summary statistics; `pairs` random node pairs (drawn with `seed`) feed the
/// shortest-path histogram.
GraphStats compute_stats(const KnowledgeGraph& graph, std::size_t pairs, std::uint64_t seed);

}  // namespace kgc
