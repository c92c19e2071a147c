#include "kgc/graph.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <queue>

#include "kgc/error.hpp"
#include "kgc/io.hpp"
#include "kgc/rng.hpp"
#include "kgc/text.hpp"

namespace kgc {

const Entity* KnowledgeGraph::find(const EntityId& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &entities_[it->second];
}

const Entity& KnowledgeGraph::entity(const EntityId& id) const {
    return entities_[index_of(id)];
}

std::size_t KnowledgeGraph::index_of(const EntityId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownNode(id);
    return it->second;
}

std::span<const Edge> KnowledgeGraph::neighbors(const EntityId& id) const { return out_[index_of(id)]; }

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

}  // namespace

KnowledgeGraph load_graph(std::istream& source, const std::set<std::string>& excluded_relations,
                          const CategoryMap& categories) {
    static constexpr const char* kFieldNames[] = {"head-id", "head-name", "relation", "tail-id", "tail-name"};

    std::map<EntityId, std::string> names;
    std::set<Triple> triples;
    std::size_t self_loops = 0;

    auto add_entity = [&](const std::string& id, const std::string& name) {
        auto [it, inserted] = names.emplace(id, name);
        if (!inserted && it->second != name) throw ConflictingName(id, it->second, name);
    };

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(source, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        auto fields = split_tabs(line);
        if (fields.size() != 5) {
            throw MalformedRecord(lineno, "expected 5 tab-separated fields, got " + std::to_string(fields.size()));
        }
        for (std::size_t i = 0; i < 5; ++i) {
            fields[i] = text::trim(fields[i]);
            if (fields[i].empty()) throw MalformedRecord(lineno, std::string("empty ") + kFieldNames[i]);
        }
        if (excluded_relations.contains(fields[2])) continue;
        add_entity(fields[0], fields[1]);
        add_entity(fields[3], fields[4]);
        if (fields[0] == fields[3]) {
            ++self_loops;
            spdlog::warn("line {}: dropping self-loop on '{}'", lineno, fields[0]);
            continue;
        }
        triples.insert(Triple{fields[0], fields[2], fields[3]});
    }
    if (self_loops > 0) spdlog::warn("dropped {} self-loop record(s)", self_loops);

    KnowledgeGraph g;
    g.entities_.reserve(names.size());
    for (auto& [id, name] : names) {
        Entity e{id, name, {}};
        if (auto it = categories.find(id); it != categories.end()) e.categories = it->second;
        g.index_.emplace(id, g.entities_.size());
        g.entities_.push_back(std::move(e));
    }
    g.out_.resize(g.entities_.size());
    g.triples_.assign(triples.begin(), triples.end());
    // std::set order = (head, relation, tail), so each adjacency list comes out sorted
    for (const auto& t : g.triples_) g.out_[g.index_.at(t.head)].push_back(Edge{t.relation, t.tail});
    return g;
}

KnowledgeGraph load_graph_file(const std::filesystem::path& tsv, const std::set<std::string>& excluded_relations,
                               const std::optional<std::filesystem::path>& categories_json) {
    std::ifstream in(tsv, std::ios::binary);
    if (!in) throw IoError("cannot open graph file '" + tsv.string() + "'");
    CategoryMap cats;
    if (categories_json) cats = load_category_map(*categories_json);
    return load_graph(in, excluded_relations, cats);
}

CategoryMap load_category_map(const std::filesystem::path& path) {
    const auto j = io::read_json(path);
    if (!j.is_object()) throw InvalidConfig("category map '" + path.string() + "' must be a JSON object");
    CategoryMap out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        auto& labels = out[it.key()];
        for (const auto& label : it.value()) labels.insert(label.get<std::string>());
    }
    return out;
}

// ---------------------------------------------------------------------------

KgPath::KgPath(std::vector<Triple> triples, std::vector<std::string> names)
    : triples_(std::move(triples)), names_(std::move(names)) {
    if (triples_.empty()) throw InvalidConfig("path must have at least one hop");
    if (!names_.empty() && names_.size() != triples_.size() + 1) {
        throw InvalidConfig("path names must list every entity on the path");
    }
    std::set<EntityId> seen{triples_.front().head};
    for (std::size_t i = 0; i < triples_.size(); ++i) {
        if (i > 0 && triples_[i].head != triples_[i - 1].tail) {
            throw InvalidConfig("path hop " + std::to_string(i) + " does not continue from the previous tail");
        }
        if (triples_[i].relation.empty()) throw InvalidConfig("path hop with empty relation");
        if (!seen.insert(triples_[i].tail).second) {
            throw InvalidConfig("path revisits entity '" + triples_[i].tail + "'");
        }
    }
}

std::vector<EntityId> KgPath::entity_ids() const {
    std::vector<EntityId> ids;
    ids.reserve(triples_.size() + 1);
    ids.push_back(source());
    for (const auto& t : triples_) ids.push_back(t.tail);
    return ids;
}

KgPath KgPath::with_names(const KnowledgeGraph& graph) const {
    std::vector<std::string> names;
    for (const auto& id : entity_ids()) {
        const Entity* e = graph.find(id);
        if (!e) throw DanglingEntity(id);
        names.push_back(e->name);
    }
    return KgPath(triples_, std::move(names));
}

std::string format_premise(const std::string& head_name, const std::string& relation, const std::string& tail_name) {
    return head_name + " --" + relation + "--> " + tail_name;
}

std::vector<std::string> verbalize_path(const KgPath& path, const KnowledgeGraph& graph) {
    return verbalize_path(path.with_names(graph));
}

std::vector<std::string> verbalize_path(const KgPath& path) {
    if (!path.has_names()) throw DanglingEntity(path.length() ? path.source() : std::string{});
    std::vector<std::string> premises;
    premises.reserve(path.length());
    const auto& names = path.names();
    for (std::size_t i = 0; i < path.length(); ++i) {
        premises.push_back(format_premise(names[i], path.triples()[i].relation, names[i + 1]));
    }
    return premises;
}

// ---------------------------------------------------------------------------

GraphStats compute_stats(const KnowledgeGraph& graph, std::size_t pairs, std::uint64_t seed) {
    GraphStats s;
    s.nodes = graph.entity_count();
    s.edges = graph.triple_count();
    const std::size_t n = graph.entity_count();
    std::vector<std::size_t> degree(n, 0);
    std::vector<std::vector<std::size_t>> undirected(n);
    for (const auto& t : graph.triples()) {
        ++s.relation_counts[t.relation];
        const auto h = graph.index_of(t.head), tl = graph.index_of(t.tail);
        ++degree[h];
        ++degree[tl];
        undirected[h].push_back(tl);
        undirected[tl].push_back(h);
    }
    for (std::size_t i = 0; i < n; ++i) {
        ++s.degree_histogram[degree[i]];
        if (graph.neighbors_at(i).empty()) ++s.sinks;
    }
    if (n < 2) return s;

    Rng rng(seed);
    std::vector<int> dist(n);
    for (std::size_t p = 0; p < pairs; ++p) {
        const auto a = rng.below(n);
        auto b = rng.below(n - 1);
        if (b >= a) ++b;
        std::fill(dist.begin(), dist.end(), -1);
        std::queue<std::size_t> q;
        dist[a] = 0;
        q.push(a);
        while (!q.empty() && dist[b] < 0) {
            const auto u = q.front();
            q.pop();
            for (auto v : undirected[u]) {
                if (dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    q.push(v);
                }
            }
        }
        ++s.sampled_pairs;
        if (dist[b] < 0) {
            ++s.unreachable_pairs;
        } else {
            ++s.distance_histogram[static_cast<std::size_t>(dist[b])];
        }
    }
    return s;
}

}  // namespace kgc
