#include <doctest.h>

#include <sstream>

#include "kgc/error.hpp"
#include "kgc/graph.hpp"
#include "support.hpp"

using namespace kgc;
using kgc::test::graph_from;

namespace {
const char* kThree = "A\tAlpha\tr1\tB\tBeta\nB\tBeta\tr1\tC\tGamma\nA\tAlpha\tr2\tC\tGamma\n";
}

TEST_CASE("empty stream gives an empty graph") {
    auto g = graph_from("");
    CHECK(g.entity_count() == 0);
    CHECK(g.triple_count() == 0);
    CHECK(g.empty());
}

TEST_CASE("three records: adjacency by hand count") {
    auto g = graph_from(kThree);
    CHECK(g.entity_count() == 3);
    CHECK(g.triple_count() == 3);
    CHECK(g.neighbors("A").size() == 2);
    CHECK(g.neighbors("B").size() == 1);
    CHECK(g.neighbors("C").empty());
    const std::vector<Edge> expected{{"r1", "B"}, {"r2", "C"}};
    CHECK(std::vector<Edge>(g.neighbors("A").begin(), g.neighbors("A").end()) == expected);
    CHECK_THROWS_AS(g.neighbors("Z"), UnknownNode);
}

TEST_CASE("excluded relations are dropped") {
    auto text = std::string(kThree) + "A\tAlpha\tbelongs to the category of\tD\tDelta\n";
    std::istringstream in(text);
    auto g = load_graph(in, {"belongs to the category of"});
    CHECK(g.triple_count() == 3);
    for (const auto& t : g.triples()) CHECK(t.relation != "belongs to the category of");
}

TEST_CASE("comments, blanks, duplicates and self-loops") {
    auto g = graph_from("# header\n\nA\tAlpha\tr\tB\tBeta\nA\tAlpha\tr\tB\tBeta\nA\tAlpha\tr\tA\tAlpha\n");
    CHECK(g.triple_count() == 1);
    CHECK(g.neighbors("A").size() == 1);
}

TEST_CASE("parallel edges are distinct pairs") {
    auto g = graph_from("A\tAlpha\tr1\tB\tBeta\nA\tAlpha\tr2\tB\tBeta\n");
    CHECK(g.neighbors("A").size() == 2);
}

TEST_CASE("malformed records report line numbers") {
    try {
        graph_from("A\tAlpha\tr\tB\tBeta\nA\tAlpha\tr\tB\n");
        FAIL("expected MalformedRecord");
    } catch (const MalformedRecord& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
    CHECK_THROWS_AS(graph_from("A\t\tr\tB\tBeta\n"), MalformedRecord);
    CHECK_THROWS_AS(graph_from("A\tAlpha\tr\tB\tBeta\nA\tOther\tr\tC\tGamma\n"), ConflictingName);
}

TEST_CASE("load is canonical regardless of record order") {
    auto a = graph_from(kThree);
    auto b = graph_from("A\tAlpha\tr2\tC\tGamma\nB\tBeta\tr1\tC\tGamma\nA\tAlpha\tr1\tB\tBeta\n");
    CHECK(a == b);
}

TEST_CASE("out-index entries sum to the triple count") {
    auto g = kgc::test::random_graph(200, 4, 11);
    std::size_t sum = 0;
    for (std::size_t i = 0; i < g.entity_count(); ++i) sum += g.neighbors_at(i).size();
    CHECK(sum == g.triple_count());
}

TEST_CASE("verbalize_path") {
    auto g = graph_from("D1\tAspirin\tmay-treat\tD2\tMyocardial Infarction\n");
    KgPath p({{"D1", "may-treat", "D2"}});
    const auto v = verbalize_path(p, g);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == "Aspirin --may-treat--> Myocardial Infarction");
    CHECK(verbalize_path(p.with_names(g)) == v);

    auto g3 = graph_from("A\tAlpha\tr\tB\tBeta\nB\tBeta\tr\tC\tGamma\nC\tGamma\tr\tD\tDelta\n");
    KgPath p3({{"A", "r", "B"}, {"B", "r", "C"}, {"C", "r", "D"}});
    CHECK(verbalize_path(p3, g3).size() == 3);

    KgPath dangling({{"A", "r", "Q"}});
    CHECK_THROWS_AS(verbalize_path(dangling, g3), DanglingEntity);
}

TEST_CASE("KgPath invariants") {
    CHECK_THROWS_AS(KgPath(std::vector<Triple>{}), InvalidConfig);
    CHECK_THROWS_AS(KgPath({{"A", "r", "B"}, {"C", "r", "D"}}), InvalidConfig);
    CHECK_THROWS_AS(KgPath({{"A", "r", "B"}, {"B", "r", "A"}}), InvalidConfig);
    KgPath ok({{"A", "r", "B"}, {"B", "s", "C"}});
    CHECK(ok.length() == 2);
    CHECK(ok.source() == "A");
    CHECK(ok.target() == "C");
    CHECK(ok.entity_ids() == std::vector<EntityId>{"A", "B", "C"});
}

TEST_CASE("category map attaches labels") {
    auto g = load_graph_file(kgc::test::data_dir() / "graph.tsv", {}, kgc::test::data_dir() / "categories.json");
    std::size_t labelled = 0;
    for (const auto& e : g.entities()) labelled += e.categories.empty() ? 0 : 1;
    CHECK(labelled == g.entity_count());
}

TEST_CASE("graph stats on the three-triple fixture") {
    auto g = load_graph_file(kgc::test::data_dir() / "three.tsv");
    auto s = compute_stats(g, 100, 1);
    CHECK(s.nodes == 3);
    CHECK(s.edges == 3);
    CHECK(s.sinks == 1);
    CHECK(s.relation_counts.at("causes") == 2);
    CHECK(s.degree_histogram.at(2) == 3);
}
