// Offline acceptance suite: one [PASS]/[FAIL] line per criterion.
#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "kgc/bench.hpp"
#include "kgc/cli.hpp"
#include "kgc/decontam.hpp"
#include "kgc/eval.hpp"
#include "kgc/io.hpp"
#include "kgc/pipeline.hpp"
#include "kgc/prompts.hpp"
#include "kgc/sampler.hpp"
#include "kgc/text.hpp"
#include "kgc/trace.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace kgc;
namespace fs = std::filesystem;

namespace {

/// Failed checks of the criterion being run.
std::vector<std::string> failures;

void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
}

double chi_square_p(const std::vector<double>& observed, const std::vector<double>& probs) {
    double n = 0;
    for (double o : observed) n += o;
    double stat = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = n * probs[i];
        stat += (observed[i] - e) * (observed[i] - e) / e;
    }
    boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

const KnowledgeGraph& fixture() {
    static const KnowledgeGraph g =
        load_graph_file(test::data_dir() / "graph.tsv", {}, test::data_dir() / "categories.json");
    return g;
}

CategoryMap categories_of(const KnowledgeGraph& g) {
    CategoryMap m;
    for (const auto& e : g.entities()) m[e.id] = e.categories;
    return m;
}

struct BenchMocks {
    MockBackend gen{"mock-generator"};
    MockBackend g1{"mock-grader-a"};
    MockBackend g2{"mock-grader-b"};
    BenchBackends backends() { return {&gen, &g1, &g2}; }
};

// ---- criteria ----

void diversity_law() {
    auto g = test::graph_from("A\ta\tr\tB\tb\nB\tb\tr\tC\tc\n");
    FrequencyTable f(1.0);
    f.increment("B", 1);
    f.increment("C", 3);
    Rng rng(101);
    std::map<EntityId, double> counts{{"A", 0}, {"B", 0}, {"C", 0}};
    for (int i = 0; i < 100000; ++i) counts[sample_source(f, g, rng)] += 1;
    const double p = chi_square_p({counts["A"], counts["B"], counts["C"]}, {4.0 / 7, 2.0 / 7, 1.0 / 7});
    expect(p > 0.001, "chi-square p = " + std::to_string(p));
}

void path_soundness() {
    std::size_t bad = 0, sampled = 0;
    for (std::uint64_t gi = 0; gi < 10 && sampled < 100000; ++gi) {
        const auto g = test::random_graph(300, 4, 1000 + gi);
        std::vector<EntityId> ids;
        for (const auto& e : g.entities()) ids.push_back(e.id);
        Rng rng(gi);
        while (sampled < (gi + 1) * 10000) {
            const int hops = 1 + static_cast<int>(rng.below(5));
            const auto& src = ids[rng.below(ids.size())];
            const auto s = sample_path(g, src, hops, rng);
            if (!std::holds_alternative<KgPath>(s)) continue;
            const auto& p = std::get<KgPath>(s);
            const auto ents = p.entity_ids();
            const std::set<EntityId> uniq(ents.begin(), ents.end());
            if (p.length() != static_cast<std::size_t>(hops) || uniq.size() != ents.size() || p.source() != src) {
                ++bad;
            }
            ++sampled;
        }
    }
    expect(sampled == 100000, "sampled " + std::to_string(sampled) + " paths");
    expect(bad == 0, std::to_string(bad) + " unsound paths");

    Rng rng(77);
    std::vector<double> c(3, 0);
    for (int i = 0; i < 30000; ++i) c[sample_length(3, rng) - 1] += 1;
    const double p = chi_square_p(c, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    expect(p > 0.001, "length chi-square p = " + std::to_string(p));
}

void end_to_end() {
    const auto base = test::scratch("acc-e2e");
    auto gen = [&](const std::string& name) {
        std::ostringstream out, err;
        const int code = cli::run({"generate", "--total", "50", "--seed", "7", "--graph",
                                   (test::data_dir() / "graph.tsv").string(), "-o", (base / name).string()},
                                  out, err);
        expect(code == 0, "exit code " + std::to_string(code) + ": " + err.str());
    };
    gen("a");
    gen("b");
    if (!failures.empty()) return;
    const auto a = io::read_file(base / "a" / "dataset.jsonl");
    expect(a == io::read_file(base / "b" / "dataset.jsonl"), "datasets differ");
    expect(io::read_jsonl(base / "a" / "dataset.jsonl").size() == 50, "item count != 50");
    for (const auto* run : {"a", "b"}) {
        const auto m = io::read_json(base / run / "manifest.json");
        const auto t = FunnelTally::from_json(m.at("funnel"));
        expect(t.monotone(), std::string("funnel not monotone in run ") + run);
        expect(t.accepted == 50, "accepted tally != 50");
    }
}

void two_factor() {
    auto g = test::graph_from("A\tAlpha\tcauses\tB\tBeta\nB\tBeta\tcauses\tC\tGamma\n");
    QaTask t;
    t.vignette = "A patient presents.";
    t.options = {{'A', "Gamma"}, {'B', "Delta"}, {'C', "Epsilon"}, {'D', "Zeta"}};
    t.answer = 'A';
    t.path = KgPath({{"A", "causes", "B"}, {"B", "causes", "C"}});
    const ReasoningTrace tr{"Alpha causes Beta which causes Gamma.", "tracer", 6};
    const std::string text[] = {"Correct: Yes", "Correct: No", "no verdict here"};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            MockSpec a, b;
            a.constant = text[i];
            b.constant = text[j];
            MockBackend g1("g1", a), g2("g2", b);
            Backend* graders[] = {&g1, &g2};
            const auto item = correctness_filter(t, tr, *t.path, g, graders);
            expect(item.accepted == (i == 0 && j == 0), "combination " + text[i] + " / " + text[j]);
        }
    }
}

void decontamination() {
    const auto c = test::random_corpus(200, 200, 2026);
    const auto prot = ProtectedSet::from_tasks(c.bench, 18);
    std::size_t mismatches = 0, removed = 0;
    for (const auto& t : c.items) {
        const auto want = test::oracle_reason(t, c.bench, 18);
        mismatches += check_contamination(t, prot) != want;
        removed += want != ContaminationReason::None;
    }
    expect(mismatches == 0, std::to_string(mismatches) + " mismatches against the oracle");
    expect(removed > 0 && removed < c.items.size(), "degenerate corpus");

    std::string bench_text, window18, window17;
    for (int i = 0; i < 40; ++i) bench_text += "w" + std::to_string(i) + " ";
    for (int i = 5; i < 23; ++i) window18 += "w" + std::to_string(i) + " ";
    for (int i = 5; i < 22; ++i) window17 += "w" + std::to_string(i) + " ";
    NgramIndex idx(18);
    idx.add_text(bench_text);
    expect(text_contaminated("fresh " + window18 + "tail", idx), "18-token window retained");
    expect(!text_contaminated("fresh " + window17 + "tail", idx), "17-token window removed");
}

void bench_strata() {
    BenchConfig c;
    c.strata = StrataSpec::from_json({{"2", 4}, {"3", 4}, {"4", 2}, {"5", 1}});
    c.seed = 1;
    const auto taxonomy = Taxonomy::load(test::data_dir() / "taxonomy.json");
    BenchMocks m;
    const auto items = build_bench(c, taxonomy, m.backends(), fixture(), categories_of(fixture()));
    expect(items.size() == 33, "item count " + std::to_string(items.size()));
    std::map<std::pair<std::string, int>, std::size_t> cells;
    for (const auto& it : items) ++cells[{it.category, it.hops}];
    for (const auto& label : taxonomy.labels) {
        for (const auto& [hops, n] : c.strata.per_hop) {
            expect(cells[{label, hops}] == n, "cell " + label + "/" + std::to_string(hops));
        }
    }
    expect(StrataSpec::full().total(15) == 3675, "full-spec total");
}

void voting_and_refinement() {
    std::mt19937_64 gen(10);
    std::size_t mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
        std::vector<Answer> v(1 + gen() % 8);
        for (auto& a : v) {
            const auto r = gen() % 5;
            a = r == 4 ? Answer{} : Answer(static_cast<char>('A' + r));
        }
        mismatches += majority_vote(v) != test::oracle_vote(v);
    }
    expect(mismatches == 0, std::to_string(mismatches) + " vote mismatches");

    MockSpec s;
    s.constant = "thinking about it </think>\nFinal Answer: B";
    MockBackend m("subject", s);
    EvalConfig c;
    c.refinements = 2;
    QaTask t;
    t.vignette = "Question";
    t.options = {{'A', "a"}, {'B', "b"}, {'C', "c"}, {'D', "d"}};
    t.answer = 'B';
    for (std::size_t k = 0; k < 20; ++k) {
        const auto r = run_stream(m, t, c, k);
        expect(text::count_occurrences(r.trace, c.refinement_phrase) == 2, "phrase count");
        const auto last_phrase = r.trace.rfind(c.refinement_phrase);
        expect(r.trace.find(c.delimiter) == std::string::npos || r.trace.find(c.delimiter) > last_phrase,
               "delimiter before final segment");
    }
}

void difficulty() {
    BenchItem b;
    b.id = "item";
    b.hops = 2;
    b.task.vignette = "Question";
    b.task.options = {{'A', "a"}, {'B', "b"}, {'C', "c"}, {'D', "d"}};
    b.task.answer = 'A';
    DifficultyConfig d;
    d.eval.seed = 99;
    // Scripted by stream seed: samples 0..11 answer correctly, 12..15 do not.
    std::set<std::uint64_t> correct;
    for (std::size_t s = 0; s < 12; ++s) correct.insert(stream_seed(d.eval.seed, 0, s));
    CallbackBackend backend("scripted", [&](const GenerationRequest& r) {
        GenerationResult g;
        g.text = std::string("reasoning </think> Final Answer: ") + (correct.contains(*r.seed) ? "A" : "C");
        apply_stop_sequences(g.text, r.stop_sequences);
        g.completion_tokens = static_cast<int>(text::whitespace_tokens(g.text));
        return g;
    });
    const auto rec = estimate_difficulty(std::vector<BenchItem>{b}, backend, d).at(0);
    expect(rec.successes == 12 && rec.samples == 16, "successes " + std::to_string(rec.successes));
    expect(rec.pass_at_1 == 0.75, "pass@1 " + std::to_string(rec.pass_at_1));

    const std::array<double, 4> cut{0.8, 0.6, 0.4, 0.2};
    const std::pair<double, int> cases[] = {{1.0, 1},    {0.8, 1}, {0.7999, 2}, {0.6, 2}, {0.5999, 3}, {0.4, 3},
                                            {0.3999, 4}, {0.2, 4}, {0.1999, 5}, {0.0, 5}};
    for (const auto& [p, bin] : cases) {
        expect(difficulty_bin(p, cut) == bin, "bin of " + std::to_string(p));
    }
}

void sft_export() {
    MockBackend gen("mock-generator"), tracer("mock-tracer"), g1("mock-grader-a"), g2("mock-grader-b");
    PipelineConfig c;
    c.total_samples = 1000;
    c.seed = 5;
    const auto items = run_pipeline(c, fixture(), {&gen, &tracer, &g1, &g2},
                                    PipelineOutputs::in_directory(test::scratch("acc-sft")))
                           .items;
    expect(items.size() == 1000, "generated " + std::to_string(items.size()));
    const auto content = export_sft(items);
    std::size_t spans_bad = 0;
    for (const auto& line : text::split_lines(content)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        if (j["type"] != "record") continue;
        const std::string a = j["messages"][1]["content"];
        const auto open = a.find("<think>"), close = a.find("</think>");
        const std::string id = j["id"];
        const auto it = std::find_if(items.begin(), items.end(), [&](const auto& x) { return x.id == id; });
        const bool ok = text::count_occurrences(a, "<think>") == 1 && text::count_occurrences(a, "</think>") == 1 &&
                        open < close && it != items.end() &&
                        a.substr(open, close - open).find(it->trace.text) != std::string::npos;
        spans_bad += !ok;
    }
    expect(spans_bad == 0, std::to_string(spans_bad) + " records with a bad think span");
    const auto parsed = parse_sft(content);
    expect(parsed.size() == items.size(), "parsed count");
    std::size_t diff = 0;
    for (std::size_t i = 0; i < std::min(parsed.size(), items.size()); ++i) {
        diff += parsed[i].id != items[i].id || parsed[i].trace != items[i].trace.text ||
                parsed[i].task.vignette != items[i].task.vignette || parsed[i].task.options != items[i].task.options ||
                parsed[i].task.answer != items[i].task.answer;
    }
    expect(diff == 0, std::to_string(diff) + " records changed by the round trip");
}

void no_leak() {
    BenchConfig c;
    c.strata = StrataSpec::from_json({{"2", 20}, {"3", 15}, {"4", 5}});
    c.seed = 3;
    const auto taxonomy = Taxonomy::load(test::data_dir() / "taxonomy.json");
    BenchMocks m;
    const auto items = build_bench(c, taxonomy, m.backends(), fixture(), categories_of(fixture()));
    expect(items.size() >= 100, "bench has " + std::to_string(items.size()) + " items");
    std::size_t leaks = 0;
    for (const auto& it : items) {
        const auto prompt = prompts::render_bench_prompt(it.task);
        for (const auto& premise : verbalize_path(*it.task.path, fixture())) {
            leaks += prompt.find(premise) != std::string::npos;
        }
        leaks += prompt.find(prompts::path_context(verbalize_path(*it.task.path, fixture()))) != std::string::npos;
    }
    expect(leaks == 0, std::to_string(leaks) + " leaked premises");
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<void()>> criteria[] = {
        {"diversity sampling law f=(0,1,3)", diversity_law},
        {"path sampler soundness and uniform hop length", path_soundness},
        {"generate --total 50 --seed 7 is reproducible with a monotone funnel", end_to_end},
        {"two-grader agreement over all 9 decision pairs", two_factor},
        {"decontamination matches the pairwise oracle; 18 vs 17 token windows", decontamination},
        {"scaled bench strata give 33 items with exact cells; full spec totals 3675", bench_strata},
        {"majority vote oracle and R=2 refinement traces", voting_and_refinement},
        {"difficulty pass@1 and half-open bins", difficulty},
        {"SFT export think spans and 1000-item round trip", sft_export},
        {"no hop premise in evaluation prompts over a 120-item bench", no_leak},
    };
    int failed = 0, index = 0;
    for (const auto& [desc, fn] : criteria) {
        ++index;
        failures.clear();
        const auto start = std::chrono::steady_clock::now();
        try {
            fn();
        } catch (const std::exception& e) {
            failures.push_back(std::string("exception: ") + e.what());
        }
        const auto ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
        std::cout << (failures.empty() ? "[PASS] " : "[FAIL] ") << index << " " << desc << " (" << ms << " ms)\n";
        for (const auto& f : failures) std::cout << "       " << f << "\n";
        failed += !failures.empty();
    }
    std::cout << (10 - failed) << "/10 criteria passed\n";
    return failed == 0 ? 0 : 1;
}
