#include "kgc/bench.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_set>

#include "kgc/decontam.hpp"
#include "kgc/error.hpp"
#include "kgc/hash.hpp"
#include "kgc/io.hpp"
#include "kgc/prompts.hpp"
#include "kgc/records.hpp"
#include "kgc/rng.hpp"
#include "kgc/sampler.hpp"
#include "kgc/text.hpp"

namespace kgc {

using nlohmann::json;

// ---- taxonomy / strata ----

void Taxonomy::validate() const {
    if (labels.empty()) throw InvalidConfig("taxonomy must not be empty");
    std::set<std::string> seen;
    for (const auto& l : labels) {
        if (text::trim(l).empty()) throw InvalidConfig("taxonomy labels must not be empty");
        if (!seen.insert(l).second) throw InvalidConfig("duplicate taxonomy label '" + l + "'");
    }
}

bool Taxonomy::contains(const std::string& label) const {
    return std::find(labels.begin(), labels.end(), label) != labels.end();
}

std::string Taxonomy::digest() const { return sha256_hex(json(labels).dump()); }

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
    const auto j = io::read_json(path);
    if (!j.is_array()) throw InvalidConfig("taxonomy file must hold a JSON list of labels");
    Taxonomy t{j.get<std::vector<std::string>>()};
    t.validate();
    return t;
}

void StrataSpec::validate() const {
    if (per_hop.empty()) throw InvalidConfig("strata spec is empty");
    for (const auto& [hops, count] : per_hop) {
        if (hops < 2) {
            throw InvalidConfig("strata spec lists " + std::to_string(hops) +
                                "-hop items; benchmark paths must have at least 2 hops");
        }
    }
}

std::size_t StrataSpec::per_category() const {
    std::size_t n = 0;
    for (const auto& [hops, count] : per_hop) n += count;
    return n;
}

StrataSpec StrataSpec::from_json(const json& j) {
    if (!j.is_object()) throw InvalidConfig("strata must be an object {hops: count}");
    StrataSpec s;
    for (auto it = j.begin(); it != j.end(); ++it) {
        int hops = 0;
        try {
            hops = std::stoi(it.key());
        } catch (const std::exception&) {
            throw InvalidConfig("strata key '" + it.key() + "' is not a hop count");
        }
        if (!it.value().is_number_integer() || it.value().get<long long>() < 0) {
            throw InvalidConfig("strata count for " + it.key() + " hops must be a non-negative integer");
        }
        s.per_hop[hops] = it.value().get<std::size_t>();
    }
    s.validate();
    return s;
}

json StrataSpec::to_json() const {
    json j = json::object();
    for (const auto& [hops, count] : per_hop) j[std::to_string(hops)] = count;
    return j;
}

StrataSpec StrataSpec::full() { return StrataSpec{{{2, 100}, {3, 100}, {4, 30}, {5, 15}}}; }

// ---- records ----

json bench_item_to_json(const BenchItem& item) {
    json j = records::task_to_json(item.task);
    j["id"] = item.id;
    j["category"] = item.category;
    j["hops"] = item.hops;
    json verdicts = json::array();
    for (const auto& v : item.verdicts) {
        verdicts.push_back({{"grader", v.grader_name}, {"decision", to_string(v.decision)}, {"raw", v.raw}});
    }
    j["verdicts"] = std::move(verdicts);
    return j;
}

BenchItem bench_item_from_json(const json& j) {
    BenchItem item;
    item.task = records::task_from_json(j);
    try {
        item.id = j.at("id").get<std::string>();
        item.category = j.value("category", std::string{});
        item.hops = j.value("hops", item.task.path ? static_cast<int>(item.task.path->length()) : 0);
        if (auto v = j.find("verdicts"); v != j.end()) {
            for (const auto& x : *v) {
                item.verdicts.push_back(GraderVerdict{x.at("grader").get<std::string>(),
                                                      decision_from_string(x.at("decision").get<std::string>()),
                                                      x.value("raw", std::string{})});
            }
        }
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("malformed bench record: ") + e.what());
    }
    if (item.task.path && static_cast<std::size_t>(item.hops) != item.task.path->length()) {
        throw InvalidConfig("bench item '" + item.id + "' hop count disagrees with its path");
    }
    return item;
}

std::vector<BenchItem> read_bench(const std::filesystem::path& path) {
    std::vector<BenchItem> out;
    for (const auto& j : io::read_jsonl(path)) out.push_back(bench_item_from_json(j));
    return out;
}

void write_bench(const std::filesystem::path& path, const std::vector<BenchItem>& items) {
    io::AtomicWriter w(path);
    for (const auto& item : items) w.write_line(bench_item_to_json(item));
    w.commit();
}

// ---- classification ----

ClassifierParse parse_classifier_response(const std::string& raw, const Taxonomy& taxonomy) {
    ClassifierParse out;
    std::string body;
    for (const auto& line : text::split_lines(raw)) {
        const auto lower = text::nfc_lower(line);
        if (auto p = lower.find("categories:"); p != std::string::npos) {
            // byte offsets agree for the ASCII key
            body = line.substr(p + 11);
        }
    }
    std::string item;
    auto flush = [&] {
        auto label = text::trim(item);
        item.clear();
        while (!label.empty() && (label.back() == '.' || label.back() == '"')) label.pop_back();
        while (!label.empty() && label.front() == '"') label.erase(0, 1);
        if (label.empty() || text::nfc_lower(label) == "none") return;
        if (taxonomy.contains(label)) {
            out.labels.insert(label);
        } else {
            out.dropped.push_back(label);
        }
    };
    for (char c : body) {
        if (c == ',' || c == ';') {
            flush();
        } else {
            item.push_back(c);
        }
    }
    flush();
    return out;
}

CategoryMap classify_nodes(Backend& backend, const KnowledgeGraph& graph, const Taxonomy& taxonomy,
                           const std::optional<std::filesystem::path>& cache, const GenerationSettings& settings,
                           ClassifyStats* stats) {
    taxonomy.validate();
    const auto digest = taxonomy.digest();
    ClassifyStats local;
    CategoryMap result;
    std::vector<json> cache_lines;

    if (cache && std::filesystem::exists(*cache)) {
        for (auto& j : io::read_jsonl(*cache)) {
            if (j.value("taxonomy", std::string{}) == digest && graph.contains(j.at("id").get<std::string>())) {
                std::set<std::string> labels;
                for (const auto& l : j.at("labels")) {
                    const auto s = l.get<std::string>();
                    if (taxonomy.contains(s)) labels.insert(s);
                }
                result[j.at("id").get<std::string>()] = std::move(labels);
            }
            cache_lines.push_back(std::move(j));
        }
    }

    bool dirty = false;
    for (const auto& e : graph.entities()) {
        if (result.contains(e.id)) {
            ++local.cache_hits;
            continue;
        }
        GenerationRequest req;
        req.prompt = prompts::render_classifier_prompt(e.name, taxonomy.labels);
        req.temperature = settings.temperature;
        req.max_new_tokens = settings.max_new_tokens;
        req.seed = settings.seed;
        const auto response = backend.generate(req);
        ++local.backend_calls;
        auto parsed = parse_classifier_response(response.text, taxonomy);
        for (const auto& d : parsed.dropped) {
            spdlog::warn("classifier returned unknown label '{}' for '{}'; dropped", d, e.id);
        }
        local.dropped_labels += parsed.dropped.size();
        cache_lines.push_back({{"id", e.id}, {"labels", parsed.labels}, {"taxonomy", digest}});
        result[e.id] = std::move(parsed.labels);
        dirty = true;
    }

    if (cache && dirty) {
        io::AtomicWriter w(*cache);
        for (const auto& j : cache_lines) w.write_line(j);
        w.commit();
    }
    if (stats) *stats = local;
    return result;
}

// ---- build ----

void BenchConfig::validate() const {
    strata.validate();
    if (cell_attempt_cap < 1) throw InvalidConfig("cell_attempt_cap must be >= 1");
    if (max_path_attempts < 1) throw InvalidConfig("max_path_attempts must be >= 1");
}

BenchConfig BenchConfig::from_json(const json& j) {
    BenchConfig c;
    try {
        if (j.contains("strata")) c.strata = StrataSpec::from_json(j["strata"]);
        c.seed = j.value("seed", c.seed);
        c.cell_attempt_cap = j.value("cell_attempt_cap", c.cell_attempt_cap);
        c.max_path_attempts = j.value("max_path_attempts", c.max_path_attempts);
        if (j.contains("generation")) {
            c.generation.temperature = j["generation"].value("temperature", c.generation.temperature);
            c.generation.max_new_tokens = j["generation"].value("max_new_tokens", c.generation.max_new_tokens);
        }
        if (j.contains("grading")) {
            c.grading.temperature = j["grading"].value("temperature", c.grading.temperature);
            c.grading.max_new_tokens = j["grading"].value("max_new_tokens", c.grading.max_new_tokens);
        }
        if (j.contains("quality")) {
            c.quality.jaccard_threshold = j["quality"].value("jaccard_threshold", c.quality.jaccard_threshold);
            c.quality.symbol_run = j["quality"].value("symbol_run", c.quality.symbol_run);
        }
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("invalid bench config: ") + e.what());
    }
    c.validate();
    return c;
}

json BenchConfig::to_json() const {
    return {{"strata", strata.to_json()},
            {"seed", seed},
            {"cell_attempt_cap", cell_attempt_cap},
            {"max_path_attempts", max_path_attempts},
            {"generation", {{"temperature", generation.temperature}, {"max_new_tokens", generation.max_new_tokens}}},
            {"grading", {{"temperature", grading.temperature}, {"max_new_tokens", grading.max_new_tokens}}},
            {"quality", {{"jaccard_threshold", quality.jaccard_threshold}, {"symbol_run", quality.symbol_run}}}};
}

namespace {

std::string bench_id(std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "bench-%06zu", n);
    return buf;
}

}  // namespace

std::vector<BenchItem> build_bench(const BenchConfig& config, const Taxonomy& taxonomy, const BenchBackends& backends,
                                   const KnowledgeGraph& graph, const CategoryMap& categories) {
    config.validate();
    taxonomy.validate();
    if (!backends.generator || !backends.grader1 || !backends.grader2) {
        throw InvalidConfig("bench building needs a generator and two graders");
    }
    if (backends.grader1 == backends.grader2 || backends.grader1->model_name() == backends.grader2->model_name()) {
        throw InvalidConfig("the two graders must be distinct backends");
    }
    Backend* graders[2] = {backends.grader1, backends.grader2};

    Rng rng(derive_seed(config.seed, "bench-builder"));
    std::vector<BenchItem> bench;
    std::unordered_set<std::string> used_paths;
    std::size_t attempt = 0;

    for (const auto& category : taxonomy.labels) {
        std::vector<EntityId> eligible;
        for (const auto& [id, labels] : categories) {
            if (labels.contains(category) && graph.contains(id)) eligible.push_back(id);
        }
        for (const auto& [hops, count] : config.strata.per_hop) {
            if (count == 0) continue;
            if (eligible.empty()) throw StrataUnfillable(category, hops, 0, "no node carries this category");
            const std::size_t budget = config.cell_attempt_cap * count;
            std::size_t filled = 0, spent = 0;
            while (filled < count) {
                if (spent++ >= budget) {
                    throw StrataUnfillable(category, hops, eligible.size(),
                                           std::to_string(filled) + " of " + std::to_string(count) +
                                               " items after " + std::to_string(budget) + " attempts");
                }
                std::optional<KgPath> path;
                for (int a = 0; a < config.max_path_attempts && !path; ++a) {
                    const auto& source = eligible[rng.below(eligible.size())];
                    auto sample = sample_path(graph, source, hops, rng);
                    if (auto* p = std::get_if<KgPath>(&sample)) {
                        if (!used_paths.contains(path_key(*p))) path = std::move(*p);
                    }
                }
                if (!path) continue;
                ++attempt;

                GenerationSettings gen = config.generation, grd = config.grading;
                gen.seed = derive_seed(config.seed, attempt, 11);
                grd.seed = derive_seed(config.seed, attempt, 13);
                auto outcome = generate_task(*backends.generator, *path, graph, gen,
                                             "attempt-" + std::to_string(attempt), config.quality);
                auto* task = std::get_if<QaTask>(&outcome);
                if (!task) continue;
                auto graded = correctness_filter(*task, ReasoningTrace{}, *path, graph, graders, grd);
                if (!graded.accepted) continue;

                used_paths.insert(path_key(*path));
                BenchItem item;
                item.id = bench_id(bench.size() + 1);
                item.task = std::move(*task);
                item.category = category;
                item.hops = hops;
                item.verdicts = std::move(graded.verdicts);
                bench.push_back(std::move(item));
                ++filled;
            }
        }
    }
    return bench;
}

}  // namespace kgc
