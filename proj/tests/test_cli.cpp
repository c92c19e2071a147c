#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "kgc/cli.hpp"
#include "kgc/error.hpp"
#include "kgc/io.hpp"
#include "support.hpp"

using namespace kgc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string graph_file() { return (test::data_dir() / "graph.tsv").string(); }
std::string categories_file() { return (test::data_dir() / "categories.json").string(); }
std::string taxonomy_file() { return (test::data_dir() / "taxonomy.json").string(); }

}  // namespace

TEST_CASE("apply_override") {
    json c = cli::default_config();
    cli::apply_override(c, "generate.total_samples", "12");
    CHECK(c["generate"]["total_samples"] == 12);
    cli::apply_override(c, "evaluate.label", "baseline run");
    CHECK(c["evaluate"]["label"] == "baseline run");
    cli::apply_override(c, "new.nested.key", "[1,2]");
    CHECK(c["new"]["nested"]["key"] == json::array({1, 2}));
    cli::apply_override(c, "backends.generator", R"({"kind":"mock","mock":{"constant":"x"}})");
    CHECK(c["backends"]["generator"]["mock"]["constant"] == "x");
    CHECK_THROWS_AS(cli::apply_override(c, "seed.inner", "1"), InvalidConfig);
    CHECK_THROWS_AS(cli::apply_override(c, "a..b", "1"), InvalidConfig);
}

TEST_CASE("module seeds are distinct per module") {
    CHECK(cli::module_seed(7, "generate") != cli::module_seed(7, "eval"));
    CHECK(cli::module_seed(7, "generate") != cli::module_seed(8, "generate"));
    CHECK(cli::module_seed(7, "generate") == cli::module_seed(7, "generate"));
}

TEST_CASE("help and parse errors") {
    CHECK(run_cli({"--help"}).code == 0);
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"frobnicate"}).code == 2);
    CHECK(run_cli({"generate", "--no-such-flag"}).code == 2);
}

TEST_CASE("generate --dry-run validates without writing") {
    const auto dir = test::scratch("cli-dry") / "out";
    auto r = run_cli({"generate", "--graph", graph_file(), "-o", dir.string(), "--dry-run"});
    CHECK(r.code == 0);
    CHECK(r.out.find("config ok") != std::string::npos);
    CHECK(r.out.find("80 nodes") != std::string::npos);
    CHECK_FALSE(fs::exists(dir));

    auto missing = run_cli({"generate", "-o", dir.string(), "--dry-run"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("graph.file") != std::string::npos);

    auto bad = run_cli({"generate", "--graph", graph_file(), "-o", dir.string(), "--total", "0", "--dry-run"});
    CHECK(bad.code == 2);

    auto same = run_cli({"generate", "--graph", graph_file(), "-o", dir.string(), "--dry-run", "--set",
                         "generate.graders=[\"grader-a\",\"grader-a\"]"});
    CHECK(same.code == 2);
}

TEST_CASE("generate is deterministic for a fixed seed") {
    const auto base = test::scratch("cli-gen");
    auto gen = [&](const std::string& name, const std::string& seed) {
        return run_cli({"--seed", seed, "generate", "--graph", graph_file(), "-o", (base / name).string(), "--total",
                        "15"});
    };
    REQUIRE(gen("a", "7").code == 0);
    REQUIRE(gen("b", "7").code == 0);
    REQUIRE(gen("c", "8").code == 0);
    const auto a = io::read_file(base / "a" / "dataset.jsonl");
    CHECK(a == io::read_file(base / "b" / "dataset.jsonl"));
    CHECK(a != io::read_file(base / "c" / "dataset.jsonl"));
    CHECK(io::read_jsonl(base / "a" / "dataset.jsonl").size() == 15);
    const auto manifest = io::read_json(base / "a" / "manifest.json");
    CHECK(manifest["command"] == "generate");
    CHECK(manifest["run_config_digest"].get<std::string>().size() == 64);
}

TEST_CASE("config precedence: file, then --set, then flags") {
    const auto base = test::scratch("cli-prec");
    io::atomic_write(base / "config.json",
                     json{{"graph", {{"file", graph_file()}}}, {"generate", {{"total_samples", 3}}}}.dump());
    const auto out = (base / "o").string();
    REQUIRE(run_cli({"-c", (base / "config.json").string(), "generate", "-o", out}).code == 0);
    CHECK(io::read_jsonl(base / "o" / "dataset.jsonl").size() == 3);
    fs::remove_all(out);
    REQUIRE(run_cli({"-c", (base / "config.json").string(), "--set", "generate.total_samples=4", "generate", "-o",
                     out})
                .code == 0);
    CHECK(io::read_jsonl(base / "o" / "dataset.jsonl").size() == 4);
    fs::remove_all(out);
    REQUIRE(run_cli({"-c", (base / "config.json").string(), "--set", "generate.total_samples=4", "generate", "-o",
                     out, "--total", "5"})
                .code == 0);
    CHECK(io::read_jsonl(base / "o" / "dataset.jsonl").size() == 5);
}

TEST_CASE("exit code 3: graders that never accept stall the run") {
    const auto dir = test::scratch("cli-stall") / "out";
    const std::string no = R"({"kind":"mock","mock":{"constant":"Correct: No"}})";
    auto r = run_cli({"--set", "backends.grader-a=" + no, "--set", "generate.attempt_cap=2", "generate", "--graph",
                      graph_file(), "-o", dir.string(), "--total", "5"});
    CHECK(r.code == 3);
    CHECK_FALSE(fs::exists(dir / "dataset.jsonl"));
}

TEST_CASE("exit code 4: http backend without credentials") {
    const auto dir = test::scratch("cli-auth") / "out";
    ::unsetenv("KGC_TEST_UNSET_KEY");
    const std::string http =
        R"({"kind":"http-chat","endpoint":"http://127.0.0.1:9/v1/chat/completions","auth_env":"KGC_TEST_UNSET_KEY"})";
    auto r = run_cli({"--set", "backends.generator=" + http, "generate", "--graph", graph_file(), "-o", dir.string(),
                      "--total", "2"});
    CHECK(r.code == 4);
    CHECK(r.err.find("KGC_TEST_UNSET_KEY") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "dataset.jsonl"));
}

TEST_CASE("build-bench rejects one-hop strata") {
    const auto base = test::scratch("cli-strata");
    auto r = run_cli({"build-bench", "--graph", graph_file(), "--categories", categories_file(), "--taxonomy",
                      taxonomy_file(), "--strata", R"({"1":2})", "-o", (base / "bench.jsonl").string()});
    CHECK(r.code == 2);
    CHECK_FALSE(fs::exists(base / "bench.jsonl"));
}

TEST_CASE("command chain round-trips its files") {
    const auto base = test::scratch("cli-chain");
    const auto bench = (base / "bench.jsonl").string();

    auto bb = run_cli({"--seed", "3", "build-bench", "--graph", graph_file(), "--categories", categories_file(),
                       "--taxonomy", taxonomy_file(), "--strata", R"({"2":2,"3":1})", "-o", bench});
    REQUIRE_MESSAGE(bb.code == 0, bb.err);
    CHECK(io::read_jsonl(bench).size() == 9);
    const auto bm = io::read_json(bench + ".manifest.json");
    CHECK(bm["item_count"] == 9);
    CHECK(bm["per_cell"]["Cardiology"]["2"] == 2);

    // Classification through the backend, then served from the cache.
    const auto cache = (base / "cache.jsonl").string();
    auto classify = [&] {
        return run_cli({"build-bench", "--graph", graph_file(), "--taxonomy", taxonomy_file(), "--cache", cache,
                        "--strata", R"({"2":1})", "-o", (base / "b2.jsonl").string()});
    };
    auto first = classify();
    REQUIRE_MESSAGE(first.code == 0, first.err);
    CHECK(io::read_json(base / "b2.jsonl.manifest.json")["classifier_calls"] == 80);
    REQUIRE(classify().code == 0);
    CHECK(io::read_json(base / "b2.jsonl.manifest.json")["classifier_calls"] == 0);
    CHECK(io::read_json(base / "b2.jsonl.manifest.json")["classifier_cache_hits"] == 80);

    const auto report = (base / "report.json").string();
    const auto summary = (base / "summary.csv").string();
    auto ev = run_cli({"--seed", "3", "evaluate", "--bench", bench, "-o", report, "--summary", summary, "-k", "3",
                       "-r", "2", "--label", "mock"});
    REQUIRE_MESSAGE(ev.code == 0, ev.err);
    const auto rj = io::read_json(report);
    CHECK(rj["records"].size() == 9);
    CHECK(rj["records"][0]["streams"].size() == 3);
    CHECK(rj["run_config_digest"].is_string());
    CHECK(io::read_file(summary).find("mock,3,2,") != std::string::npos);

    const auto csv = (base / "alignment.csv").string();
    const auto recs = (base / "alignment.jsonl").string();
    auto al = run_cli({"align", "--bench", bench, "--results", report, "-o", csv, "--records", recs, "--graph",
                       graph_file()});
    REQUIRE_MESSAGE(al.code == 0, al.err);
    CHECK(io::read_file(csv).rfind("hop-length,mean-recall,accuracy,n\n", 0) == 0);
    CHECK(io::read_jsonl(recs).size() == 9);

    const auto data_dir = base / "gen";
    REQUIRE(run_cli({"generate", "--graph", graph_file(), "-o", data_dir.string(), "--total", "20"}).code == 0);
    const auto kept = (base / "kept.jsonl").string();
    const auto removed = (base / "removed.jsonl").string();
    auto dc = run_cli({"decontaminate", "--dataset", (data_dir / "dataset.jsonl").string(), "--bench", bench, "-o",
                       kept, "--report", removed});
    REQUIRE_MESSAGE(dc.code == 0, dc.err);
    const auto dm = io::read_json(kept + ".manifest.json");
    CHECK(dm["retained"].get<std::size_t>() + dm["removed"].get<std::size_t>() == 20);
    CHECK(io::read_jsonl(kept).size() == dm["retained"].get<std::size_t>());
    CHECK(io::read_jsonl(removed).size() == dm["removed"].get<std::size_t>());

    const auto sft = (base / "sft.jsonl").string();
    auto ex = run_cli({"export-sft", "--dataset", (data_dir / "dataset.jsonl").string(), "-o", sft});
    REQUIRE_MESSAGE(ex.code == 0, ex.err);
    const auto rows = io::read_jsonl(sft);
    REQUIRE(rows.size() == 21);
    CHECK(rows[0]["type"] == "header");
    CHECK(rows[0]["count"] == 20);
    CHECK(rows[1]["messages"].size() == 2);
}

TEST_CASE("evaluate with K = 1, R = 0 agrees with one-sample difficulty") {
    const auto base = test::scratch("cli-consistency");
    const auto bench = (base / "bench.jsonl").string();
    REQUIRE(run_cli({"build-bench", "--graph", graph_file(), "--categories", categories_file(), "--taxonomy",
                     taxonomy_file(), "--strata", R"({"2":3})", "-o", bench})
                .code == 0);
    // A subject that answers at random, so correctness varies by item.
    const std::string subject = R"({"kind":"mock","mock":{"sequence":[
        "</think> Final Answer: A","</think> Final Answer: B","</think> Final Answer: C"]}})";
    auto ev = run_cli({"--seed", "11", "--set", "backends.subject=" + subject, "evaluate", "--bench", bench, "-o",
                       (base / "r.json").string(), "-k", "1", "-r", "0"});
    REQUIRE_MESSAGE(ev.code == 0, ev.err);
    auto df = run_cli({"--seed", "11", "--set", "backends.subject=" + subject, "difficulty", "--bench", bench, "-o",
                       (base / "d.jsonl").string(), "--samples", "1"});
    REQUIRE_MESSAGE(df.code == 0, df.err);
    const auto report = io::read_json(base / "r.json");
    const auto diff = io::read_jsonl(base / "d.jsonl");
    REQUIRE(diff.size() == report["records"].size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        CHECK(diff[i]["id"] == report["records"][i]["id"]);
        CHECK(report["records"][i]["correct"].get<bool>() == (diff[i]["successes"] == 1));
        CHECK(diff[i]["bin"] == (diff[i]["successes"] == 1 ? 1 : 5));
    }
}

TEST_CASE("graph-stats") {
    auto r = run_cli({"graph-stats", "--graph", (test::data_dir() / "three.tsv").string()});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["edges"] == 3);
    CHECK(j["nodes"] == 3);

    const auto base = test::scratch("cli-stats");
    auto f = run_cli({"graph-stats", "--graph", graph_file(), "-o", (base / "s.json").string()});
    REQUIRE(f.code == 0);
    CHECK(io::read_json(base / "s.json")["nodes"] == 80);

    CHECK(run_cli({"graph-stats", "--graph", (base / "missing.tsv").string()}).code == 2);
}
