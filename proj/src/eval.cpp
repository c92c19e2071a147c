#include "kgc/eval.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "kgc/error.hpp"
#include "kgc/hash.hpp"
#include "kgc/prompts.hpp"
#include "parallel.hpp"

namespace kgc {

using nlohmann::json;

std::string answer_string(const Answer& a) { return a ? std::string(1, *a) : std::string("abstain"); }

namespace {

Answer answer_from_json(const json& j) {
    const auto s = j.get<std::string>();
    if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'D') return s[0];
    return std::nullopt;
}

bool is_label(char c) { return c >= 'A' && c <= 'D'; }
bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace

// ---- config ----

void EvalConfig::validate() const {
    if (streams < 1) throw InvalidConfig("streams (K) must be >= 1");
    if (refinements < 0) throw InvalidConfig("refinements (R) must be >= 0");
    if (temperature < 0) throw InvalidConfig("temperature must be >= 0");
    if (max_new_tokens < 1) throw InvalidConfig("max_new_tokens must be >= 1");
    if (delimiter.empty()) throw InvalidConfig("end-of-thinking delimiter must not be empty");
    if (workers < 1) throw InvalidConfig("workers must be >= 1");
    if (refinements > 0 && refinement_phrase.empty()) throw InvalidConfig("refinement phrase must not be empty");
}

json EvalConfig::to_json() const {
    return {{"streams", streams},
            {"refinements", refinements},
            {"temperature", temperature},
            {"refinement_phrase", refinement_phrase},
            {"seed", seed},
            {"max_new_tokens", max_new_tokens},
            {"delimiter", delimiter},
            {"workers", workers}};
}

EvalConfig EvalConfig::from_json(const json& j) {
    EvalConfig c;
    try {
        c.streams = j.value("streams", c.streams);
        c.refinements = j.value("refinements", c.refinements);
        c.temperature = j.value("temperature", c.temperature);
        c.refinement_phrase = j.value("refinement_phrase", c.refinement_phrase);
        c.seed = j.value("seed", c.seed);
        c.max_new_tokens = j.value("max_new_tokens", c.max_new_tokens);
        c.delimiter = j.value("delimiter", c.delimiter);
        c.workers = j.value("workers", c.workers);
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("invalid eval config: ") + e.what());
    }
    c.validate();
    return c;
}

// ---- extraction and voting ----

Answer extract_answer(const std::string& generation, const std::string& delimiter) {
    static constexpr std::string_view kKey = "final answer:";
    std::string lower(generation.size(), '\0');
    std::transform(generation.begin(), generation.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

    Answer found;
    for (auto pos = lower.find(kKey); pos != std::string::npos; pos = lower.find(kKey, pos + 1)) {
        std::size_t i = pos + kKey.size();
        while (i < generation.size()) {
            if (generation.compare(i, 7, "\\textbf") == 0) {
                i += 7;
            } else if (std::isspace(static_cast<unsigned char>(generation[i])) || generation[i] == '*' ||
                       generation[i] == '[' || generation[i] == '(' || generation[i] == '{') {
                ++i;
            } else {
                break;
            }
        }
        if (i < generation.size() && is_label(generation[i]) &&
            (i + 1 == generation.size() || !is_word(generation[i + 1]))) {
            found = generation[i];
        }
    }
    if (found) return found;

    const auto d = generation.rfind(delimiter);
    if (d == std::string::npos) return std::nullopt;
    const std::size_t from = d + delimiter.size();
    for (std::size_t i = generation.size(); i-- > from;) {
        if (!is_label(generation[i])) continue;
        const bool left = i == from || !is_word(generation[i - 1]);
        const bool right = i + 1 == generation.size() || !is_word(generation[i + 1]);
        if (left && right) return generation[i];
    }
    return std::nullopt;
}

Answer majority_vote(std::span<const Answer> answers) {
    if (answers.empty()) throw InvalidConfig("majority vote over zero streams");
    std::array<std::size_t, 4> counts{};
    std::array<std::size_t, 4> first{};
    first.fill(answers.size());
    for (std::size_t i = 0; i < answers.size(); ++i) {
        if (!answers[i] || !is_label(*answers[i])) continue;
        const auto k = static_cast<std::size_t>(*answers[i] - 'A');
        ++counts[k];
        first[k] = std::min(first[k], i);
    }
    Answer best;
    std::size_t best_count = 0, best_first = answers.size();
    for (std::size_t k = 0; k < 4; ++k) {
        if (counts[k] == 0) continue;
        if (counts[k] > best_count || (counts[k] == best_count && first[k] < best_first)) {
            best = static_cast<char>('A' + k);
            best_count = counts[k];
            best_first = first[k];
        }
    }
    return best;
}

// ---- streams ----

std::uint64_t stream_seed(std::uint64_t seed, std::size_t item, std::size_t stream) {
    return derive_seed(derive_seed(seed, "eval"), item, stream);
}

StreamResult run_stream(Backend& backend, const QaTask& task, const EvalConfig& config, std::uint64_t seed) {
    StreamResult r;
    GenerationRequest req;
    req.prompt = prompts::render_bench_prompt(task);
    req.temperature = config.temperature;
    req.seed = seed;

    int used = 0;
    // Returns false when the budget ran out.
    auto segment = [&](bool stop_at_delimiter) {
        const int remaining = config.max_new_tokens - used;
        if (remaining < 1) return false;
        req.assistant_prefix = r.trace;
        req.max_new_tokens = remaining;
        req.stop_sequences.clear();
        if (stop_at_delimiter) req.stop_sequences.push_back(config.delimiter);
        auto res = backend.generate(req);
        used += res.completion_tokens;
        r.trace += res.text;
        return res.stopped_on != StopReason::Length;
    };

    bool ok = true;
    if (config.refinements > 0) {
        ok = segment(true);
        while (ok && r.refinements < config.refinements) {
            r.trace += config.refinement_phrase;
            ++r.refinements;
            ok = segment(r.refinements < config.refinements);
        }
        // The last refinement segment above ran without the stop, so it is the final one.
    } else {
        ok = segment(false);
    }
    r.thinking_tokens = used;
    if (!ok) {
        r.budget_exhausted = true;
        r.answer = std::nullopt;
        return r;
    }
    r.answer = extract_answer(r.trace, config.delimiter);
    return r;
}

// ---- evaluate ----

void aggregate(EvalReport& report) {
    report.per_category.clear();
    report.per_hop.clear();
    double correct = 0, tokens = 0;
    for (auto& rec : report.records) {
        correct += rec.correct ? 1 : 0;
        tokens += rec.mean_thinking_tokens;
        for (GroupStats* g : {rec.category.empty() ? nullptr : &report.per_category[rec.category],
                              rec.hops > 0 ? &report.per_hop[rec.hops] : nullptr}) {
            if (!g) continue;
            ++g->n;
            g->accuracy += rec.correct ? 1 : 0;
            g->mean_thinking_tokens += rec.mean_thinking_tokens;
        }
    }
    const double n = static_cast<double>(report.records.size());
    report.accuracy = n > 0 ? correct / n : 0.0;
    report.mean_thinking_tokens = n > 0 ? tokens / n : 0.0;
    auto finish = [](GroupStats& g) {
        g.accuracy /= static_cast<double>(g.n);
        g.mean_thinking_tokens /= static_cast<double>(g.n);
    };
    for (auto& [k, g] : report.per_category) finish(g);
    for (auto& [k, g] : report.per_hop) finish(g);
}

EvalReport evaluate(std::span<const BenchItem> bench, Backend& backend, const EvalConfig& config) {
    config.validate();
    EvalReport report;
    report.config = config;
    report.token_counting = backend.reports_usage() ? "service" : "whitespace-estimate";
    report.records.resize(bench.size());
    const auto k = static_cast<std::size_t>(config.streams);
    for (std::size_t i = 0; i < bench.size(); ++i) {
        auto& rec = report.records[i];
        rec.item_id = bench[i].id;
        rec.category = bench[i].category;
        rec.hops = bench[i].hops;
        rec.gold = bench[i].task.answer;
        rec.streams.resize(k);
    }
    detail::parallel_for(bench.size() * k, config.workers, [&](std::size_t job) {
        const auto i = job / k, s = job % k;
        report.records[i].streams[s] = run_stream(backend, bench[i].task, config, stream_seed(config.seed, i, s));
    });
    for (auto& rec : report.records) {
        std::vector<Answer> answers;
        double tokens = 0;
        for (const auto& s : rec.streams) {
            answers.push_back(s.answer);
            tokens += s.thinking_tokens;
        }
        rec.voted = majority_vote(answers);
        rec.correct = rec.voted && *rec.voted == rec.gold;
        rec.mean_thinking_tokens = tokens / static_cast<double>(rec.streams.size());
    }
    aggregate(report);
    return report;
}

json EvalReport::to_json() const {
    auto group = [](const GroupStats& g) {
        return json{{"n", g.n}, {"accuracy", g.accuracy}, {"mean_thinking_tokens", g.mean_thinking_tokens}};
    };
    json cats = json::object(), hops = json::object();
    for (const auto& [k, g] : per_category) cats[k] = group(g);
    for (const auto& [k, g] : per_hop) hops[std::to_string(k)] = group(g);
    json recs = json::array();
    for (const auto& r : records) {
        json streams_j = json::array();
        for (const auto& s : r.streams) {
            streams_j.push_back({{"answer", answer_string(s.answer)},
                                 {"thinking_tokens", s.thinking_tokens},
                                 {"refinements", s.refinements},
                                 {"budget_exhausted", s.budget_exhausted},
                                 {"trace", s.trace}});
        }
        recs.push_back({{"id", r.item_id},
                        {"category", r.category},
                        {"hops", r.hops},
                        {"gold", std::string(1, r.gold)},
                        {"voted", answer_string(r.voted)},
                        {"correct", r.correct},
                        {"mean_thinking_tokens", r.mean_thinking_tokens},
                        {"streams", std::move(streams_j)}});
    }
    return {{"config", config.to_json()},
            {"items", records.size()},
            {"accuracy", accuracy},
            {"mean_thinking_tokens", mean_thinking_tokens},
            {"token_counting", token_counting},
            {"per_category", cats},
            {"per_hop", hops},
            {"records", recs}};
}

EvalReport EvalReport::from_json(const json& j) {
    EvalReport r;
    try {
        r.config = EvalConfig::from_json(j.at("config"));
        r.token_counting = j.value("token_counting", std::string{});
        for (const auto& x : j.at("records")) {
            EvalRecord rec;
            rec.item_id = x.at("id").get<std::string>();
            rec.category = x.value("category", std::string{});
            rec.hops = x.value("hops", 0);
            rec.gold = x.at("gold").get<std::string>().at(0);
            rec.voted = answer_from_json(x.at("voted"));
            rec.correct = x.at("correct").get<bool>();
            rec.mean_thinking_tokens = x.at("mean_thinking_tokens").get<double>();
            for (const auto& s : x.at("streams")) {
                StreamResult sr;
                sr.answer = answer_from_json(s.at("answer"));
                sr.thinking_tokens = s.value("thinking_tokens", 0);
                sr.refinements = s.value("refinements", 0);
                sr.budget_exhausted = s.value("budget_exhausted", false);
                sr.trace = s.value("trace", std::string{});
                rec.streams.push_back(std::move(sr));
            }
            r.records.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw InvalidConfig(std::string("malformed eval report: ") + e.what());
    }
    aggregate(r);
    return r;
}

std::string EvalReport::summary_csv(const std::string& label) const {
    std::ostringstream os;
    os << "label,streams,refinements,accuracy,mean_thinking_tokens,items\n";
    os << label << ',' << config.streams << ',' << config.refinements << ',' << accuracy << ','
       << mean_thinking_tokens << ',' << records.size() << '\n';
    return os.str();
}

// ---- difficulty ----

void DifficultyConfig::validate() const {
    if (samples < 1) throw InvalidConfig("difficulty samples must be >= 1");
    for (std::size_t i = 0; i < cutoffs.size(); ++i) {
        if (cutoffs[i] < 0.0 || cutoffs[i] > 1.0) throw InvalidConfig("difficulty cutoffs must lie in [0, 1]");
        if (i > 0 && !(cutoffs[i] < cutoffs[i - 1])) throw InvalidConfig("difficulty cutoffs must be descending");
    }
    eval.validate();
}

int difficulty_bin(double pass_at_1, const std::array<double, 4>& cutoffs) {
    int bin = 1;
    for (double c : cutoffs) {
        if (pass_at_1 < c) ++bin;
    }
    return bin;
}

std::vector<DifficultyRecord> estimate_difficulty(std::span<const BenchItem> bench, Backend& backend,
                                                  const DifficultyConfig& config) {
    config.validate();
    EvalConfig single = config.eval;
    single.streams = 1;
    single.refinements = 0;
    const auto m = config.samples;
    std::vector<char> correct(bench.size() * m, 0);
    detail::parallel_for(bench.size() * m, single.workers, [&](std::size_t job) {
        const auto i = job / m, s = job % m;
        const auto r = run_stream(backend, bench[i].task, single, stream_seed(single.seed, i, s));
        correct[job] = r.answer && *r.answer == bench[i].task.answer;
    });
    std::vector<DifficultyRecord> out;
    for (std::size_t i = 0; i < bench.size(); ++i) {
        DifficultyRecord rec;
        rec.item_id = bench[i].id;
        rec.samples = m;
        for (std::size_t s = 0; s < m; ++s) rec.successes += correct[i * m + s];
        rec.pass_at_1 = static_cast<double>(rec.successes) / static_cast<double>(m);
        rec.bin = difficulty_bin(rec.pass_at_1, config.cutoffs);
        out.push_back(std::move(rec));
    }
    return out;
}

json difficulty_to_json(const DifficultyRecord& r) {
    return {{"id", r.item_id},
            {"successes", r.successes},
            {"samples", r.samples},
            {"pass_at_1", r.pass_at_1},
            {"bin", r.bin}};
}

}  // namespace kgc
