#include "kgc/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include "kgc/error.hpp"
#include "kgc/hash.hpp"
#include "kgc/io.hpp"
#include "kgc/prompts.hpp"
#include "kgc/records.hpp"
#include "kgc/text.hpp"

namespace kgc {

using nlohmann::json;
namespace fs = std::filesystem;

// ---- config ----

namespace {

json settings_json(const GenerationSettings& s) {
    return {{"temperature", s.temperature}, {"max_new_tokens", s.max_new_tokens}};
}

GenerationSettings settings_from(const json& j, GenerationSettings s) {
    s.temperature = j.value("temperature", s.temperature);
    s.max_new_tokens = j.value("max_new_tokens", s.max_new_tokens);
    return s;
}

}  // namespace

void PipelineConfig::validate() const {
    if (total_samples < 1) throw InvalidConfig("total_samples must be >= 1");
    if (max_hops < 1) throw InvalidConfig("max_hops must be >= 1");
    if (!(epsilon > 0.0)) throw InvalidConfig("epsilon must be > 0");
    if (max_path_attempts < 1) throw InvalidConfig("max_path_attempts must be >= 1");
    if (attempt_cap < 1) throw InvalidConfig("attempt_cap must be >= 1");
    if (workers < 1) throw InvalidConfig("workers must be >= 1");
    if (ngram < 1) throw InvalidConfig("ngram must be >= 1");
    for (const auto* s : {&generation, &tracing, &grading}) {
        if (s->max_new_tokens < 1) throw InvalidConfig("max_new_tokens must be >= 1");
        if (s->temperature < 0) throw InvalidConfig("temperature must be >= 0");
    }
    if (!(quality.jaccard_threshold > 0.0 && quality.jaccard_threshold <= 1.0)) {
        throw InvalidConfig("quality.jaccard_threshold must be in (0, 1]");
    }
}

json PipelineConfig::to_json() const {
    return {{"total_samples", total_samples},
            {"max_hops", max_hops},
            {"seed", seed},
            {"epsilon", epsilon},
            {"max_path_attempts", max_path_attempts},
            {"attempt_cap", attempt_cap},
            {"workers", workers},
            {"generation", settings_json(generation)},
            {"tracing", settings_json(tracing)},
            {"grading", settings_json(grading)},
            {"quality", {{"jaccard_threshold", quality.jaccard_threshold}, {"symbol_run", quality.symbol_run}}},
            {"ngram", ngram},
            {"wall_clock", wall_clock}};
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    try {
        c.total_samples = j.value("total_samples", c.total_samples);
        c.max_hops = j.value("max_hops", c.max_hops);
        c.seed = j.value("seed", c.seed);
        c.epsilon = j.value("epsilon", c.epsilon);
        c.max_path_attempts = j.value("max_path_attempts", c.max_path_attempts);
        c.attempt_cap = j.value("attempt_cap", c.attempt_cap);
        c.workers = j.value("workers", c.workers);
        if (j.contains("generation")) c.generation = settings_from(j["generation"], c.generation);
        if (j.contains("tracing")) c.tracing = settings_from(j["tracing"], c.tracing);
        if (j.contains("grading")) c.grading = settings_from(j["grading"], c.grading);
        if (j.contains("quality")) {
            c.quality.jaccard_threshold = j["quality"].value("jaccard_threshold", c.quality.jaccard_threshold);
            c.quality.symbol_run = j["quality"].value("symbol_run", c.quality.symbol_run);
        }
        c.ngram = j.value("ngram", c.ngram);
        c.wall_clock = j.value("wall_clock", c.wall_clock);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("invalid pipeline config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string PipelineConfig::digest() const { return sha256_hex(to_json().dump()); }

void PipelineBackends::validate() const {
    if (!generator || !tracer || !grader1 || !grader2) throw InvalidConfig("pipeline needs all four backends");
    if (grader1 == grader2 || grader1->model_name() == grader2->model_name()) {
        throw InvalidConfig("the two graders must be distinct backends");
    }
}

PipelineOutputs PipelineOutputs::in_directory(const fs::path& dir) {
    return PipelineOutputs{dir / "dataset.jsonl",   dir / "manifest.json",  dir / "frequencies.json",
                           dir / "rejections.jsonl", dir / "audit.jsonl", dir / "checkpoint.json"};
}

// ---- tally ----

bool FunnelTally::monotone() const {
    return accepted <= graded && graded <= traced && traced <= decontam_passed && decontam_passed <= quality_passed &&
           quality_passed <= parsed && parsed <= attempted;
}

json FunnelTally::to_json() const {
    return {{"attempted", attempted},
            {"parsed", parsed},
            {"quality_passed", quality_passed},
            {"decontam_passed", decontam_passed},
            {"traced", traced},
            {"graded", graded},
            {"accepted", accepted},
            {"dead_ends", dead_ends},
            {"sampling_failures", sampling_failures},
            {"rejections", rejections},
            {"grader_decisions", grader_decisions}};
}

FunnelTally FunnelTally::from_json(const json& j) {
    FunnelTally t;
    t.attempted = j.at("attempted");
    t.parsed = j.at("parsed");
    t.quality_passed = j.at("quality_passed");
    t.decontam_passed = j.at("decontam_passed");
    t.traced = j.at("traced");
    t.graded = j.at("graded");
    t.accepted = j.at("accepted");
    t.dead_ends = j.value("dead_ends", std::size_t{0});
    t.sampling_failures = j.value("sampling_failures", std::size_t{0});
    t.rejections = j.value("rejections", std::map<std::string, std::size_t>{});
    t.grader_decisions = j.value("grader_decisions", std::map<std::string, std::map<std::string, std::size_t>>{});
    return t;
}

// ---- run ----

namespace {

std::string iso_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string item_id(std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "item-%06zu", n);
    return buf;
}

fs::path partial_of(const fs::path& p) {
    fs::path q = p;
    q += ".partial";
    return q;
}

/// Staged JSONL output: lines go to `<path>.partial`, finalize() renames.
/// With `keep` set, the first `keep` lines of an earlier partial (or of the
/// finished file) are carried over and later lines are dropped.
class StagedLog {
public:
    StagedLog(fs::path path, std::optional<std::size_t> keep = std::nullopt) : path_(std::move(path)) {
        if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
        std::vector<std::string> carried;
        if (keep) {
            const fs::path source = fs::exists(partial_of(path_)) ? partial_of(path_) : path_;
            if (fs::exists(source)) {
                std::ifstream in(source, std::ios::binary);
                for (std::string line; carried.size() < *keep && std::getline(in, line);) carried.push_back(line);
            }
        }
        out_.open(partial_of(path_), std::ios::binary | std::ios::trunc);
        if (!out_) throw IoError("cannot write '" + partial_of(path_).string() + "'");
        for (const auto& line : carried) out_ << line << '\n';
        lines_ = carried.size();
        out_.flush();
    }
    void write(const json& j) {
        out_ << io::dump_line(j) << '\n';
        out_.flush();
        ++lines_;
    }
    std::size_t lines() const { return lines_; }
    void finalize() {
        out_.close();
        fs::rename(partial_of(path_), path_);
    }

private:
    fs::path path_;
    std::ofstream out_;
    std::size_t lines_ = 0;
};

std::string resume_digest(const PipelineConfig& c) {
    json j = c.to_json();
    j.erase("total_samples");
    j.erase("workers");
    return sha256_hex(j.dump());
}

}  // namespace

json build_manifest(const std::vector<CurriculumItem>& items, const FunnelTally& tally, const PipelineConfig& config,
                    const KnowledgeGraph* graph, const std::string& token_counting) {
    std::map<std::string, std::size_t> per_hop;
    std::map<std::string, std::size_t> per_category;
    for (const auto& item : items) {
        if (!item.task.path) continue;
        ++per_hop[std::to_string(item.task.path->length())];
        if (graph) {
            if (const Entity* e = graph->find(item.task.path->source())) {
                for (const auto& c : e->categories) ++per_category[c];
            }
        }
    }
    return {{"item_count", items.size()},
            {"per_hop", per_hop},
            {"per_category", per_category},
            {"funnel", tally.to_json()},
            {"seed", config.seed},
            {"config", config.to_json()},
            {"config_digest", config.digest()},
            {"token_counting", token_counting}};
}

PipelineResult run_pipeline(const PipelineConfig& config, const KnowledgeGraph& graph,
                            const PipelineBackends& backends, const PipelineOutputs& outputs,
                            const ProtectedSet* protected_bench, bool resume) {
    config.validate();
    backends.validate();
    if (graph.empty()) throw EmptyGraph();

    Rng rng(derive_seed(config.seed, "path-sampler"));
    FrequencyTable freq(config.epsilon);
    FunnelTally tally;
    std::vector<CurriculumItem> items;
    std::optional<std::size_t> keep_rejections, keep_audit;

    if (resume && fs::exists(outputs.checkpoint)) {
        const auto cp = io::read_json(outputs.checkpoint);
        if (cp.at("resume_digest").get<std::string>() != resume_digest(config)) {
            throw InvalidConfig("checkpoint '" + outputs.checkpoint.string() + "' was written with a different config");
        }
        const std::size_t accepted = cp.at("accepted");
        const fs::path source = fs::exists(partial_of(outputs.dataset)) ? partial_of(outputs.dataset) : outputs.dataset;
        auto stored = records::read_dataset(source);
        if (stored.size() < accepted) throw InvalidConfig("dataset is shorter than its checkpoint");
        stored.resize(accepted);
        items = std::move(stored);
        tally = FunnelTally::from_json(cp.at("tally"));
        rng.restore(cp.at("rng_state").get<std::string>());
        freq = FrequencyTable::from_json(io::read_json(outputs.frequencies), config.epsilon);
        keep_rejections = cp.value("rejection_lines", std::size_t{0});
        keep_audit = cp.value("audit_lines", std::size_t{0});
        spdlog::info("resuming from checkpoint with {} accepted item(s)", items.size());
    }

    // The dataset partial is rewritten from the checkpointed items so a crash
    // between append and checkpoint cannot leave an extra line behind.
    StagedLog dataset_log(outputs.dataset);
    for (const auto& item : items) dataset_log.write(records::item_to_json(item));
    StagedLog rejection_log(outputs.rejections, keep_rejections);
    StagedLog audit_log(outputs.audit, keep_audit);

    std::mutex mu;
    std::exception_ptr failure;
    bool stalled = false;
    const std::size_t budget = config.attempt_cap * config.total_samples;
    Backend* graders[2] = {backends.grader1, backends.grader2};

    auto checkpoint = [&] {
        io::atomic_write(outputs.frequencies, freq.to_json().dump(2) + "\n");
        json cp{{"accepted", items.size()},
                {"tally", tally.to_json()},
                {"rng_state", rng.state()},
                {"resume_digest", resume_digest(config)},
                {"config_digest", config.digest()},
                {"rejection_lines", rejection_log.lines()},
                {"audit_lines", audit_log.lines()}};
        io::atomic_write(outputs.checkpoint, cp.dump(2) + "\n");
    };

    auto reject = [&](std::size_t attempt, const std::string& stage, const std::string& reason,
                      const std::string& detail, const std::string& raw, const KgPath& path) {
        ++tally.rejections[reason];
        rejection_log.write({{"attempt", attempt},
                             {"stage", stage},
                             {"reason", reason},
                             {"detail", detail},
                             {"raw", raw},
                             {"path", records::path_to_json(path)}});
    };

    auto process = [&](std::size_t attempt, const KgPath& path) {
        GenerationSettings gen = config.generation, trc = config.tracing, grd = config.grading;
        gen.seed = derive_seed(config.seed, attempt, 1);
        trc.seed = derive_seed(config.seed, attempt, 2);
        grd.seed = derive_seed(config.seed, attempt, 3);
        const std::string stamp = config.wall_clock ? iso_now() : "attempt-" + std::to_string(attempt);

        auto outcome = generate_task(*backends.generator, path, graph, gen, stamp, config.quality);
        if (auto* rej = std::get_if<GenerationRejected>(&outcome)) {
            std::lock_guard lock(mu);
            if (rej->parsed) ++tally.parsed;
            reject(attempt, "quality", to_string(rej->verdict.reason), rej->verdict.detail, rej->raw, path);
            return;
        }
        QaTask task = std::get<QaTask>(std::move(outcome));
        {
            std::lock_guard lock(mu);
            ++tally.parsed;
            ++tally.quality_passed;
        }
        if (protected_bench) {
            const auto why = check_contamination(task, *protected_bench);
            if (why != ContaminationReason::None) {
                std::lock_guard lock(mu);
                reject(attempt, "decontamination", "contaminated-" + to_string(why), "", serialize_qa(task), path);
                return;
            }
        }
        {
            std::lock_guard lock(mu);
            ++tally.decontam_passed;
        }

        ReasoningTrace trace;
        try {
            trace = distill_trace(*backends.tracer, task, path, graph, trc);
        } catch (const EmptyTrace&) {
            std::lock_guard lock(mu);
            reject(attempt, "trace", "empty-trace", "", "", path);
            return;
        } catch (const FormatViolation& e) {
            std::lock_guard lock(mu);
            reject(attempt, "trace", "trace-format", e.element(), "", path);
            return;
        }
        {
            std::lock_guard lock(mu);
            ++tally.traced;
        }

        CurriculumItem item = correctness_filter(task, trace, path, graph, graders, grd);

        std::lock_guard lock(mu);
        ++tally.graded;
        for (const auto& v : item.verdicts) {
            ++tally.grader_decisions[v.grader_name][to_string(v.decision)];
            audit_log.write({{"task_id", "attempt-" + std::to_string(attempt)},
                             {"grader_name", v.grader_name},
                             {"raw", v.raw},
                             {"decision", to_string(v.decision)}});
        }
        if (!item.accepted) {
            reject(attempt, "correctness", "correctness", "", item.trace.text, path);
            return;
        }
        if (items.size() >= config.total_samples) return;  // another worker filled the last slot
        item.id = item_id(items.size() + 1);
        ++tally.accepted;
        update_frequencies(freq, path);
        dataset_log.write(records::item_to_json(item));
        items.push_back(std::move(item));
        checkpoint();
    };

    auto worker = [&] {
        while (true) {
            std::size_t attempt = 0;
            std::optional<KgPath> path;
            {
                std::lock_guard lock(mu);
                if (failure || stalled || items.size() >= config.total_samples) return;
                if (tally.attempted + tally.sampling_failures >= budget) {
                    stalled = true;
                    return;
                }
                for (int a = 0; a < config.max_path_attempts && !path; ++a) {
                    const auto source = sample_source(freq, graph, rng);
                    const int hops = sample_length(config.max_hops, rng);
                    auto sample = sample_path(graph, source, hops, rng);
                    if (auto* p = std::get_if<KgPath>(&sample)) {
                        path = std::move(*p);
                    } else {
                        ++tally.dead_ends;
                    }
                }
                if (!path) {
                    ++tally.sampling_failures;
                    continue;
                }
                attempt = ++tally.attempted;
            }
            try {
                process(attempt, *path);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    if (config.workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < config.workers; ++i) pool.emplace_back(worker);
    }

    if (failure) std::rethrow_exception(failure);
    if (items.size() < config.total_samples) {
        checkpoint();
        throw ProgressStall("no progress: " + std::to_string(items.size()) + " of " +
                            std::to_string(config.total_samples) + " items after " +
                            std::to_string(tally.attempted) + " attempts; funnel " + tally.to_json().dump());
    }

    checkpoint();
    dataset_log.finalize();
    rejection_log.finalize();
    audit_log.finalize();
    const std::string counting = backends.tracer->reports_usage() ? "service" : "whitespace-estimate";
    json manifest = build_manifest(items, tally, config, &graph, counting);
    io::atomic_write(outputs.manifest, manifest.dump(2) + "\n");
    return PipelineResult{std::move(items), tally, std::move(manifest)};
}

std::vector<CurriculumItem> hop_subset(const std::vector<CurriculumItem>& items, const std::set<std::size_t>& hops) {
    std::vector<CurriculumItem> out;
    for (const auto& item : items) {
        if (item.task.path && hops.contains(item.task.path->length())) out.push_back(item);
    }
    return out;
}

// ---- SFT ----

std::string export_sft(const std::vector<CurriculumItem>& items) {
    std::string out = io::dump_line({{"type", "header"},
                                     {"format", "kgc-sft-chat/v1"},
                                     {"count", items.size()},
                                     {"think_open", kThinkOpen},
                                     {"think_close", kThinkClose}}) +
                      "\n";
    for (const auto& item : items) {
        if (item.trace.text.find(kThinkOpen) != std::string::npos ||
            item.trace.text.find(kThinkClose) != std::string::npos) {
            throw FormatViolation("trace delimiter in item " + item.id);
        }
        const std::string assistant = std::string(kThinkOpen) + "\n" + item.trace.text + "\n" + kThinkClose +
                                      "\n\nFinal Answer: " + std::string(1, item.task.answer);
        json rec{{"type", "record"},
                 {"id", item.id},
                 {"messages",
                  json::array({{{"role", "user"}, {"content", prompts::render_bench_prompt(item.task)}},
                               {{"role", "assistant"}, {"content", assistant}}})},
                 {"loss_mask", json::array({0, 1})},
                 {"train_on", "assistant"}};
        out += io::dump_line(rec) + "\n";
    }
    return out;
}

void export_sft_file(const std::vector<CurriculumItem>& items, const fs::path& path) {
    io::atomic_write(path, export_sft(items));
}

std::vector<SftRecord> parse_sft(const std::string& content) {
    const auto lines = text::split_lines(content);
    std::vector<SftRecord> out;
    std::optional<std::size_t> declared;
    for (const auto& line : lines) {
        if (text::trim(line).empty()) continue;
        const json j = json::parse(line);
        if (j.at("type") == "header") {
            declared = j.at("count").get<std::size_t>();
            continue;
        }
        if (!declared) throw FormatViolation("sft header");
        const auto& msgs = j.at("messages");
        const std::string user = msgs.at(0).at("content");
        const std::string assistant = msgs.at(1).at("content");
        if (text::count_occurrences(assistant, kThinkOpen) != 1 ||
            text::count_occurrences(assistant, kThinkClose) != 1) {
            throw FormatViolation("think delimiters");
        }
        const auto open = assistant.find(kThinkOpen);
        const auto close = assistant.find(kThinkClose);
        if (close < open) throw FormatViolation("think delimiter order");
        const auto trace = text::trim(assistant.substr(open + 7, close - open - 7));
        const auto fa = assistant.find("Final Answer:", close);
        if (fa == std::string::npos) throw FormatViolation("final answer");
        const auto answer = text::trim(assistant.substr(fa + 13));
        if (answer.empty()) throw FormatViolation("final answer");

        const auto qb = user.find("<Question>");
        const auto oe = user.find("</Options>");
        if (qb == std::string::npos || oe == std::string::npos) throw FormatViolation("question");
        QaTask task = parse_qa(user.substr(qb, oe + 10 - qb) + "\n<Answer>" + answer.substr(0, 1) + "</Answer>");
        out.push_back(SftRecord{j.at("id").get<std::string>(), std::move(task), trace});
    }
    if (!declared) throw FormatViolation("sft header");
    if (*declared != out.size()) throw FormatViolation("sft record count");
    return out;
}

}  // namespace kgc
