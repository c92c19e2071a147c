#include "kgc/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "kgc/align.hpp"
#include "kgc/bench.hpp"
#include "kgc/decontam.hpp"
#include "kgc/error.hpp"
#include "kgc/eval.hpp"
#include "kgc/graph.hpp"
#include "kgc/hash.hpp"
#include "kgc/io.hpp"
#include "kgc/llm.hpp"
#include "kgc/pipeline.hpp"
#include "kgc/records.hpp"

namespace kgc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

json default_config() {
    auto mock = [](const std::string& name) { return json{{"kind", "mock"}, {"model_name", name}}; };
    return {
        {"seed", 0},
        {"backends",
         {{"generator", mock("mock-generator")},
          {"tracer", mock("mock-tracer")},
          {"grader-a", mock("mock-grader-a")},
          {"grader-b", mock("mock-grader-b")},
          {"classifier", mock("mock-classifier")},
          {"subject", mock("mock-subject")},
          {"judge", mock("mock-judge")}}},
        {"graph", {{"file", nullptr}, {"categories", nullptr}, {"excluded_relations", json::array()}}},
        {"generate",
         {{"generator", "generator"},
          {"tracer", "tracer"},
          {"graders", {"grader-a", "grader-b"}},
          {"output_dir", "out"},
          {"protect_bench", nullptr}}},
        {"decontaminate", {{"ngram", 18}}},
        {"build_bench",
         {{"generator", "generator"},
          {"graders", {"grader-a", "grader-b"}},
          {"classifier", "classifier"},
          {"classifier_cache", nullptr},
          {"taxonomy", nullptr},
          {"output", "bench.jsonl"}}},
        {"evaluate", {{"model", "subject"}, {"output", "report.json"}, {"summary", nullptr}, {"label", "run"}}},
        {"difficulty", {{"model", "subject"}, {"samples", 16}, {"cutoffs", {0.8, 0.6, 0.4, 0.2}}, {"output", "difficulty.jsonl"}}},
        {"align", {{"judge", "judge"}, {"output", "alignment.csv"}, {"records", nullptr}, {"workers", 1}}},
        {"graph_stats", {{"pairs", 1000}, {"output", nullptr}}},
    };
}

void apply_override(json& config, const std::string& dotted_path, const std::string& value) {
    if (dotted_path.empty()) throw InvalidConfig("empty override path");
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;
    json* node = &config;
    std::size_t start = 0;
    while (true) {
        const auto dot = dotted_path.find('.', start);
        const std::string key = dotted_path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw InvalidConfig("malformed override path '" + dotted_path + "'");
        if (!node->is_object()) {
            if (!node->is_null()) throw InvalidConfig("override path '" + dotted_path + "' crosses a non-object");
            *node = json::object();
        }
        node = &(*node)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    *node = std::move(parsed);
}

std::uint64_t module_seed(std::uint64_t global_seed, const std::string& module) {
    return derive_seed(global_seed, module);
}

namespace {

/// Config plus the backends it names, built lazily and shared per name.
class Context {
public:
    explicit Context(json config) : config_(std::move(config)) {}

    const json& config() const { return config_; }
    const json& section(const std::string& name) const {
        auto it = config_.find(name);
        if (it == config_.end() || !it->is_object()) throw InvalidConfig("config section '" + name + "' missing");
        return *it;
    }
    std::uint64_t global_seed() const {
        try {
            return config_.value("seed", std::uint64_t{0});
        } catch (const json::exception&) {
            throw InvalidConfig("seed must be a non-negative integer");
        }
    }
    /// The section's own seed if given, else one split from the global seed.
    std::uint64_t seed_for(const std::string& section_name, const std::string& module) const {
        const auto& s = section(section_name);
        if (auto it = s.find("seed"); it != s.end() && !it->is_null()) return it->get<std::uint64_t>();
        return module_seed(global_seed(), module);
    }
    std::string digest() const { return sha256_hex(config_.dump()); }

    Backend& backend(const std::string& name) {
        if (auto it = backends_.find(name); it != backends_.end()) return *it->second;
        const auto& all = section("backends");
        auto it = all.find(name);
        if (it == all.end()) throw InvalidConfig("no backend named '" + name + "'");
        auto desc = BackendDescriptor::from_json(*it);
        auto ptr = make_backend(desc);
        backends_[name] = ptr;
        return *ptr;
    }
    void check_backend(const std::string& name) const {
        const auto& all = section("backends");
        auto it = all.find(name);
        if (it == all.end()) throw InvalidConfig("no backend named '" + name + "'");
        (void)BackendDescriptor::from_json(*it);
    }

    KnowledgeGraph load_graph() const {
        const auto& g = section("graph");
        const auto file = optional_string(g, "file");
        if (!file) throw InvalidConfig("graph.file is not set (use --graph)");
        std::set<std::string> excluded;
        if (auto it = g.find("excluded_relations"); it != g.end() && it->is_array()) {
            for (const auto& r : *it) excluded.insert(r.get<std::string>());
        }
        std::optional<fs::path> cats;
        if (auto c = optional_string(g, "categories")) cats = *c;
        return load_graph_file(*file, excluded, cats);
    }

    static std::optional<std::string> optional_string(const json& section, const std::string& key) {
        auto it = section.find(key);
        if (it == section.end() || it->is_null()) return std::nullopt;
        if (!it->is_string()) throw InvalidConfig("'" + key + "' must be a string");
        return it->get<std::string>();
    }
    static std::string required_string(const json& section, const std::string& key) {
        auto v = optional_string(section, key);
        if (!v || v->empty()) throw InvalidConfig("'" + key + "' is required");
        return *v;
    }
    static std::pair<std::string, std::string> grader_names(const json& section) {
        auto it = section.find("graders");
        if (it == section.end() || !it->is_array() || it->size() != 2) {
            throw InvalidConfig("'graders' must list exactly two backends");
        }
        return {(*it)[0].get<std::string>(), (*it)[1].get<std::string>()};
    }

private:
    json config_;
    std::map<std::string, BackendPtr> backends_;
};

void write_manifest(const fs::path& path, json manifest, const Context& ctx, const std::string& command) {
    manifest["command"] = command;
    manifest["run_config_digest"] = ctx.digest();
    io::atomic_write(path, manifest.dump(2) + "\n");
}

fs::path side_manifest(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

// ---- commands ----

int cmd_generate(Context& ctx, bool dry_run, bool resume, std::ostream& out) {
    const auto& s = ctx.section("generate");
    auto config = PipelineConfig::from_json(s);
    if (!s.contains("seed") || s["seed"].is_null()) config.seed = module_seed(ctx.global_seed(), "generate");
    config.validate();
    const auto graph = ctx.load_graph();
    const auto [g1, g2] = Context::grader_names(s);
    const auto gen_name = Context::required_string(s, "generator");
    const auto tracer_name = Context::required_string(s, "tracer");
    const fs::path dir = Context::required_string(s, "output_dir");

    std::optional<ProtectedSet> protected_set;
    if (auto bench_file = Context::optional_string(s, "protect_bench")) {
        const auto bench = read_bench(*bench_file);
        std::vector<QaTask> tasks;
        for (const auto& b : bench) tasks.push_back(b.task);
        protected_set = ProtectedSet::from_tasks(tasks, config.ngram);
    }

    if (dry_run) {
        for (const auto& n : {gen_name, tracer_name, g1, g2}) ctx.check_backend(n);
        if (g1 == g2) throw InvalidConfig("the two graders must be distinct backends");
        out << "config ok; graph: " << graph.entities().size() << " nodes, " << graph.triples().size()
            << " edges; config digest " << config.digest() << "\n";
        return 0;
    }

    PipelineBackends backends{&ctx.backend(gen_name), &ctx.backend(tracer_name), &ctx.backend(g1), &ctx.backend(g2)};
    fs::create_directories(dir);
    const auto outputs = PipelineOutputs::in_directory(dir);
    auto result = run_pipeline(config, graph, backends, outputs, protected_set ? &*protected_set : nullptr, resume);
    write_manifest(outputs.manifest, result.manifest, ctx, "generate");

    const auto& t = result.tally;
    out << "funnel: attempted " << t.attempted << ", parsed " << t.parsed << ", quality " << t.quality_passed
        << ", decontam " << t.decontam_passed << ", traced " << t.traced << ", graded " << t.graded << ", accepted "
        << t.accepted << " (dead ends " << t.dead_ends << ")\n";
    out << "wrote " << result.items.size() << " items to " << outputs.dataset.string() << "\n";
    return 0;
}

int cmd_decontaminate(Context& ctx, const fs::path& dataset, const fs::path& bench_file, const fs::path& output,
                      const fs::path& report, std::ostream& out) {
    const auto& s = ctx.section("decontaminate");
    const auto n = s.value("ngram", std::size_t{18});
    if (n < 1) throw InvalidConfig("ngram must be >= 1");
    auto items = records::read_dataset(dataset);
    const auto bench = read_bench(bench_file);
    std::vector<QaTask> tasks;
    for (const auto& b : bench) tasks.push_back(b.task);
    const auto protected_set = ProtectedSet::from_tasks(tasks, n);
    const auto before = items.size();
    auto result = decontaminate(std::move(items), protected_set);

    std::string rows;
    for (const auto& r : result.removed) {
        rows += io::dump_line(json{{"id", r.item_id}, {"reason", to_string(r.reason)}}) + "\n";
    }
    records::write_dataset(output, result.retained);
    io::atomic_write(report, rows);
    write_manifest(side_manifest(output),
                   {{"input_items", before},
                    {"retained", result.retained.size()},
                    {"removed", result.removed.size()},
                    {"bench_items", bench.size()},
                    {"ngram", n}},
                   ctx, "decontaminate");
    out << "retained " << result.retained.size() << " of " << before << "; removed " << result.removed.size()
        << "\n";
    return 0;
}

Taxonomy load_taxonomy(const json& s) {
    auto it = s.find("taxonomy");
    if (it == s.end() || it->is_null()) throw InvalidConfig("build_bench.taxonomy is not set (use --taxonomy)");
    Taxonomy t;
    if (it->is_string()) {
        t = Taxonomy::load(it->get<std::string>());
    } else if (it->is_array()) {
        t.labels = it->get<std::vector<std::string>>();
    } else {
        throw InvalidConfig("taxonomy must be a file path or a list of labels");
    }
    t.validate();
    return t;
}

int cmd_build_bench(Context& ctx, std::ostream& out) {
    const auto& s = ctx.section("build_bench");
    auto config = BenchConfig::from_json(s);
    if (!s.contains("seed") || s["seed"].is_null()) config.seed = module_seed(ctx.global_seed(), "build-bench");
    const auto taxonomy = load_taxonomy(s);
    const auto graph = ctx.load_graph();
    const auto [g1, g2] = Context::grader_names(s);
    const fs::path output = Context::required_string(s, "output");

    CategoryMap categories;
    ClassifyStats stats;
    if (Context::optional_string(ctx.section("graph"), "categories")) {
        for (const auto& e : graph.entities()) {
            if (!e.categories.empty()) categories[e.id] = e.categories;
        }
    } else {
        std::optional<fs::path> cache;
        if (auto c = Context::optional_string(s, "classifier_cache")) cache = *c;
        categories = classify_nodes(ctx.backend(Context::required_string(s, "classifier")), graph, taxonomy, cache,
                                    config.generation, &stats);
    }

    BenchBackends backends{&ctx.backend(Context::required_string(s, "generator")), &ctx.backend(g1),
                           &ctx.backend(g2)};
    const auto items = build_bench(config, taxonomy, backends, graph, categories);
    write_bench(output, items);

    json per_cell = json::object();
    for (const auto& it : items) {
        auto& cell = per_cell[it.category][std::to_string(it.hops)];
        cell = cell.is_null() ? 1 : cell.get<int>() + 1;
    }
    write_manifest(side_manifest(output),
                   {{"item_count", items.size()},
                    {"per_cell", per_cell},
                    {"taxonomy_digest", taxonomy.digest()},
                    {"classifier_calls", stats.backend_calls},
                    {"classifier_cache_hits", stats.cache_hits},
                    {"config", config.to_json()}},
                   ctx, "build-bench");
    out << "wrote " << items.size() << " bench items to " << output.string() << " (classifier calls "
        << stats.backend_calls << ", cache hits " << stats.cache_hits << ")\n";
    return 0;
}

EvalConfig eval_config_from(const Context& ctx, const std::string& section) {
    auto c = EvalConfig::from_json(ctx.section(section));
    const auto& s = ctx.section(section);
    // evaluate and difficulty share one seed split so their streams coincide.
    if (!s.contains("seed") || s["seed"].is_null()) c.seed = module_seed(ctx.global_seed(), "eval");
    return c;
}

int cmd_evaluate(Context& ctx, const fs::path& bench_file, std::ostream& out) {
    const auto& s = ctx.section("evaluate");
    const auto config = eval_config_from(ctx, "evaluate");
    const auto bench = read_bench(bench_file);
    const fs::path output = Context::required_string(s, "output");
    auto report = evaluate(bench, ctx.backend(Context::required_string(s, "model")), config);
    auto j = report.to_json();
    j["run_config_digest"] = ctx.digest();
    io::atomic_write(output, j.dump(2) + "\n");
    if (auto summary = Context::optional_string(s, "summary")) {
        io::atomic_write(*summary, report.summary_csv(s.value("label", std::string("run"))));
    }
    out << "accuracy " << report.accuracy << " over " << report.records.size() << " items; mean thinking tokens "
        << report.mean_thinking_tokens << " (" << report.token_counting << ")\n";
    return 0;
}

int cmd_difficulty(Context& ctx, const fs::path& bench_file, std::ostream& out) {
    const auto& s = ctx.section("difficulty");
    DifficultyConfig config;
    config.eval = eval_config_from(ctx, "difficulty");
    try {
        config.samples = s.value("samples", config.samples);
        if (s.contains("cutoffs")) {
            const auto c = s["cutoffs"].get<std::vector<double>>();
            if (c.size() != 4) throw InvalidConfig("difficulty cutoffs must have four values");
            std::copy(c.begin(), c.end(), config.cutoffs.begin());
        }
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("invalid difficulty config: ") + e.what());
    }
    config.validate();
    const auto bench = read_bench(bench_file);
    const fs::path output = Context::required_string(s, "output");
    const auto records = estimate_difficulty(bench, ctx.backend(Context::required_string(s, "model")), config);
    std::string lines;
    std::map<int, std::size_t> bins;
    for (const auto& r : records) {
        lines += io::dump_line(difficulty_to_json(r)) + "\n";
        ++bins[r.bin];
    }
    io::atomic_write(output, lines);
    json bins_j = json::object();
    for (const auto& [b, n] : bins) bins_j[std::to_string(b)] = n;
    write_manifest(side_manifest(output),
                   {{"items", records.size()},
                    {"samples", config.samples},
                    {"cutoffs", config.cutoffs},
                    {"bins", bins_j},
                    {"eval", config.eval.to_json()}},
                   ctx, "difficulty");
    out << "difficulty for " << records.size() << " items written to " << output.string() << "\n";
    return 0;
}

int cmd_align(Context& ctx, const fs::path& bench_file, const fs::path& results_file, std::ostream& out) {
    const auto& s = ctx.section("align");
    const auto bench = read_bench(bench_file);
    const auto results = EvalReport::from_json(io::read_json(results_file));
    const fs::path output = Context::required_string(s, "output");
    std::optional<KnowledgeGraph> graph;
    if (Context::optional_string(ctx.section("graph"), "file")) graph = ctx.load_graph();
    GenerationSettings settings;
    settings.temperature = 0.0;
    const auto records = align_results(bench, results, ctx.backend(Context::required_string(s, "judge")),
                                       graph ? &*graph : nullptr, s.value("workers", 1), settings);
    const auto rows = alignment_report(records);
    io::atomic_write(output, alignment_csv(rows));
    if (auto rec_file = Context::optional_string(s, "records")) {
        std::string lines;
        for (const auto& r : records) lines += io::dump_line(alignment_record_to_json(r)) + "\n";
        io::atomic_write(*rec_file, lines);
    }
    write_manifest(side_manifest(output), {{"items", records.size()}, {"groups", rows.size()}}, ctx, "align");
    out << "aligned " << records.size() << " items into " << rows.size() << " hop groups\n";
    return 0;
}

int cmd_export_sft(Context& ctx, const fs::path& dataset, const fs::path& output, const std::vector<std::size_t>& hops,
                   std::ostream& out) {
    auto items = records::read_dataset(dataset);
    if (!hops.empty()) items = hop_subset(items, std::set<std::size_t>(hops.begin(), hops.end()));
    export_sft_file(items, output);
    write_manifest(side_manifest(output), {{"records", items.size()}, {"hops", hops}}, ctx, "export-sft");
    out << "exported " << items.size() << " records to " << output.string() << "\n";
    return 0;
}

json stats_to_json(const GraphStats& st) {
    auto hist = [](const std::map<std::size_t, std::size_t>& m) {
        json j = json::object();
        for (const auto& [k, v] : m) j[std::to_string(k)] = v;
        return j;
    };
    return {{"nodes", st.nodes},
            {"edges", st.edges},
            {"relations", st.relation_counts},
            {"degree_histogram", hist(st.degree_histogram)},
            {"sinks", st.sinks},
            {"distance_histogram", hist(st.distance_histogram)},
            {"unreachable_pairs", st.unreachable_pairs},
            {"sampled_pairs", st.sampled_pairs}};
}

int cmd_graph_stats(Context& ctx, std::ostream& out) {
    const auto& s = ctx.section("graph_stats");
    const auto graph = ctx.load_graph();
    const auto stats = compute_stats(graph, s.value("pairs", std::size_t{1000}), module_seed(ctx.global_seed(), "graph-stats"));
    auto j = stats_to_json(stats);
    j["run_config_digest"] = ctx.digest();
    if (auto output = Context::optional_string(s, "output")) {
        io::atomic_write(*output, j.dump(2) + "\n");
        out << "nodes " << stats.nodes << ", edges " << stats.edges << "\n";
    } else {
        out << j.dump(2) << "\n";
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Knowledge-graph grounded task synthesis, benchmarking and evaluation", "kgc"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_help_all_flag("--help-all");

    std::string config_file;
    std::vector<std::string> overrides;
    std::string log_level = "warn";
    std::optional<std::uint64_t> seed;
    app.add_option("-c,--config", config_file, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--set", overrides, "Override a config field: dotted.path=value")->take_all();
    app.add_option("--seed", seed, "Global seed");
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

    // Flag values are applied as overrides after --set.
    std::vector<std::pair<std::string, std::string>> flag_sets;
    auto bind = [&](CLI::App* sub, const std::string& flag, const std::string& path, const std::string& help) {
        sub->add_option_function<std::string>(
            flag, [&flag_sets, path](const std::string& v) { flag_sets.emplace_back(path, v); }, help);
    };
    auto bind_str = [&](CLI::App* sub, const std::string& flag, const std::string& path, const std::string& help) {
        sub->add_option_function<std::string>(
            flag, [&flag_sets, path](const std::string& v) { flag_sets.emplace_back(path, json(v).dump()); }, help);
    };

    auto* gen = app.add_subcommand("generate", "Run the curation pipeline");
    bool dry_run = false, resume = false, wall_clock = false;
    bind_str(gen, "--graph", "graph.file", "Triple TSV file");
    bind_str(gen, "--categories", "graph.categories", "Entity category map JSON");
    bind_str(gen, "-o,--out", "generate.output_dir", "Output directory");
    bind(gen, "--total", "generate.total_samples", "Items to accept");
    bind(gen, "--max-hops", "generate.max_hops", "Maximum path length");
    bind(gen, "--workers", "generate.workers", "Worker threads");
    bind_str(gen, "--protect", "generate.protect_bench", "Bench file to decontaminate against");
    gen->add_flag("--dry-run", dry_run, "Validate config and graph without backend calls");
    gen->add_flag("--resume", resume, "Continue from a checkpoint in the output directory");
    gen->add_flag("--wall-clock", wall_clock, "Wall-clock timestamps in item metadata");

    auto* dec = app.add_subcommand("decontaminate", "Remove training items that overlap a bench");
    std::string dec_dataset, dec_bench, dec_out, dec_report;
    dec->add_option("--dataset", dec_dataset, "Curriculum dataset JSONL")->required();
    dec->add_option("--bench", dec_bench, "Bench JSONL")->required();
    dec->add_option("-o,--out", dec_out, "Retained dataset JSONL")->required();
    dec->add_option("--report", dec_report, "Removal report JSONL")->required();
    bind(dec, "--ngram", "decontaminate.ngram", "Shared window length in tokens");

    auto* bb = app.add_subcommand("build-bench", "Build a stratified benchmark");
    bind_str(bb, "--graph", "graph.file", "Triple TSV file");
    bind_str(bb, "--categories", "graph.categories", "Entity category map JSON (skips classification)");
    bind_str(bb, "--taxonomy", "build_bench.taxonomy", "Taxonomy JSON file");
    bind_str(bb, "--cache", "build_bench.classifier_cache", "Classifier cache JSONL");
    bind(bb, "--strata", "build_bench.strata", "Items per category per hop, e.g. {\"2\":4,\"3\":4}");
    bind_str(bb, "-o,--out", "build_bench.output", "Bench JSONL");

    auto* ev = app.add_subcommand("evaluate", "Evaluate a model on a bench");
    std::string ev_bench;
    ev->add_option("--bench", ev_bench, "Bench JSONL")->required();
    bind_str(ev, "-o,--out", "evaluate.output", "Report JSON");
    bind_str(ev, "--summary", "evaluate.summary", "Summary CSV");
    bind_str(ev, "--label", "evaluate.label", "Label for the summary row");
    bind_str(ev, "--model", "evaluate.model", "Backend name");
    bind(ev, "-k,--streams", "evaluate.streams", "Parallel streams K");
    bind(ev, "-r,--refinements", "evaluate.refinements", "Refinement rounds R");
    bind(ev, "--workers", "evaluate.workers", "Worker threads");

    auto* dif = app.add_subcommand("difficulty", "Estimate per-item pass@1 difficulty");
    std::string dif_bench;
    dif->add_option("--bench", dif_bench, "Bench JSONL")->required();
    bind_str(dif, "-o,--out", "difficulty.output", "Difficulty JSONL");
    bind_str(dif, "--model", "difficulty.model", "Backend name");
    bind(dif, "--samples", "difficulty.samples", "Samples per item");
    bind(dif, "--workers", "difficulty.workers", "Worker threads");

    auto* al = app.add_subcommand("align", "Judge hop recall of evaluation traces");
    std::string al_bench, al_results;
    al->add_option("--bench", al_bench, "Bench JSONL")->required();
    al->add_option("--results", al_results, "Evaluation report JSON")->required();
    bind_str(al, "--graph", "graph.file", "Triple TSV file (optional; names come from bench paths otherwise)");
    bind_str(al, "-o,--out", "align.output", "Alignment CSV");
    bind_str(al, "--records", "align.records", "Per-item judgments JSONL");
    bind_str(al, "--judge", "align.judge", "Backend name");
    bind(al, "--workers", "align.workers", "Worker threads");

    auto* sft = app.add_subcommand("export-sft", "Export a dataset as chat SFT records");
    std::string sft_dataset, sft_out;
    std::vector<std::size_t> sft_hops;
    sft->add_option("--dataset", sft_dataset, "Curriculum dataset JSONL")->required();
    sft->add_option("-o,--out", sft_out, "SFT JSONL")->required();
    sft->add_option("--hops", sft_hops, "Keep only these path lengths");

    auto* gs = app.add_subcommand("graph-stats", "Summarize a graph");
    bind_str(gs, "--graph", "graph.file", "Triple TSV file");
    bind(gs, "--pairs", "graph_stats.pairs", "Sampled node pairs for distances");
    bind_str(gs, "-o,--out", "graph_stats.output", "Output JSON (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        spdlog::set_level(spdlog::level::from_str(log_level));
        json config = default_config();
        if (!config_file.empty()) config.merge_patch(io::read_json(config_file));
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) throw InvalidConfig("--set expects path=value, got '" + o + "'");
            apply_override(config, o.substr(0, eq), o.substr(eq + 1));
        }
        for (const auto& [path, value] : flag_sets) apply_override(config, path, value);
        if (seed) config["seed"] = *seed;
        if (wall_clock) config["generate"]["wall_clock"] = true;

        Context ctx(std::move(config));
        if (*gen) return cmd_generate(ctx, dry_run, resume, out);
        if (*dec) return cmd_decontaminate(ctx, dec_dataset, dec_bench, dec_out, dec_report, out);
        if (*bb) return cmd_build_bench(ctx, out);
        if (*ev) return cmd_evaluate(ctx, ev_bench, out);
        if (*dif) return cmd_difficulty(ctx, dif_bench, out);
        if (*al) return cmd_align(ctx, al_bench, al_results, out);
        if (*sft) return cmd_export_sft(ctx, sft_dataset, sft_out, sft_hops, out);
        if (*gs) return cmd_graph_stats(ctx, out);
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const json::exception& e) {
        err << "error: invalid configuration: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace kgc::cli
