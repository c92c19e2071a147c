#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <map>
#include <set>

#include "kgc/error.hpp"
#include "kgc/sampler.hpp"
#include "support.hpp"

using namespace kgc;
using kgc::test::graph_from;

namespace {

/// Upper-tail p-value of Pearson's statistic for observed counts vs expected probabilities.
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

}  // namespace

TEST_CASE("uniform source when all counts are zero") {
    auto g = graph_from("A\ta\tr\tB\tb\nC\tc\tr\tD\td\n");
    FrequencyTable f;
    Rng rng(3);
    std::map<EntityId, double> counts;
    for (int i = 0; i < 40000; ++i) counts[sample_source(f, g, rng)] += 1;
    std::vector<double> obs;
    for (auto& [k, v] : counts) obs.push_back(v);
    REQUIRE(obs.size() == 4);
    CHECK(chi_square_p(obs, {0.25, 0.25, 0.25, 0.25}) > 0.001);
}

TEST_CASE("weighted source: f = (0, 1, 3)") {
    auto g = graph_from("A\ta\tr\tB\tb\nB\tb\tr\tC\tc\n");
    FrequencyTable f(1.0);
    f.increment("B", 1);
    f.increment("C", 3);
    Rng rng(5);
    std::map<EntityId, double> counts{{"A", 0}, {"B", 0}, {"C", 0}};
    for (int i = 0; i < 100000; ++i) counts[sample_source(f, g, rng)] += 1;
    CHECK(chi_square_p({counts["A"], counts["B"], counts["C"]}, {4.0 / 7, 2.0 / 7, 1.0 / 7}) > 0.001);
}

TEST_CASE("single node and empty graph") {
    auto g = graph_from("A\ta\tr\tB\tb\n");
    FrequencyTable f;
    f.increment("A", 1000000);
    Rng rng(1);
    // B is the only node with weight near 1; A still has positive mass.
    std::set<EntityId> seen;
    for (int i = 0; i < 100; ++i) seen.insert(sample_source(f, g, rng));
    CHECK(seen.contains("B"));
    CHECK_THROWS_AS(sample_source(f, KnowledgeGraph{}, rng), EmptyGraph);
}

TEST_CASE("epsilon must be positive") {
    CHECK_THROWS_AS(FrequencyTable(0.0), InvalidConfig);
    CHECK_THROWS_AS(FrequencyTable(-1.0), InvalidConfig);
}

TEST_CASE("sample_length") {
    Rng rng(9);
    for (int i = 0; i < 100; ++i) CHECK(sample_length(1, rng) == 1);
    CHECK_THROWS_AS(sample_length(0, rng), InvalidConfig);
    std::vector<double> c(3, 0);
    for (int i = 0; i < 30000; ++i) c[sample_length(3, rng) - 1] += 1;
    for (double x : c) CHECK(std::abs(x - 10000) < 3 * std::sqrt(30000 * (1.0 / 3) * (2.0 / 3)));
}

TEST_CASE("line graph gives the unique path") {
    auto g = graph_from("A\ta\tr\tB\tb\nB\tb\tr\tC\tc\n");
    Rng rng(2);
    auto s = sample_path(g, "A", 2, rng);
    REQUIRE(std::holds_alternative<KgPath>(s));
    const auto& p = std::get<KgPath>(s);
    CHECK(p.triples() == std::vector<Triple>{{"A", "r", "B"}, {"B", "r", "C"}});
    CHECK(p.has_names());
}

TEST_CASE("sink source gives DeadEnd at depth 0") {
    auto g = graph_from("A\ta\tr\tB\tb\n");
    Rng rng(2);
    auto s = sample_path(g, "B", 1, rng);
    REQUIRE(std::holds_alternative<DeadEnd>(s));
    CHECK(std::get<DeadEnd>(s).depth == 0);
    // A -> B -> (nothing unvisited)
    auto g2 = graph_from("A\ta\tr\tB\tb\nB\tb\tr\tA\ta\n");
    auto s2 = sample_path(g2, "A", 2, rng);
    REQUIRE(std::holds_alternative<DeadEnd>(s2));
    CHECK(std::get<DeadEnd>(s2).depth == 1);
}

TEST_CASE("star graph neighbor choice is uniform") {
    std::string tsv;
    for (int i = 0; i < 5; ++i) tsv += "A\ta\tr\tN" + std::to_string(i) + "\tn" + std::to_string(i) + "\n";
    auto g = graph_from(tsv);
    Rng rng(77);
    std::map<EntityId, double> counts;
    for (int i = 0; i < 50000; ++i) counts[std::get<KgPath>(sample_path(g, "A", 1, rng)).target()] += 1;
    REQUIRE(counts.size() == 5);
    const double sigma = std::sqrt(50000 * 0.2 * 0.8);
    for (auto& [k, v] : counts) CHECK(std::abs(v - 10000) < 3 * sigma);
}

TEST_CASE("update_frequencies counts") {
    FrequencyTable f;
    KgPath p({{"A", "r", "B"}, {"B", "r", "C"}});
    update_frequencies(f, p);
    CHECK(f.count("A") == 1);
    CHECK(f.count("B") == 1);
    CHECK(f.count("C") == 1);
    CHECK(f.count("D") == 0);
    update_frequencies(f, p);
    CHECK(f.count("B") == 2);

    FrequencyTable h;
    update_frequencies(h, KgPath({{"A", "r", "B"}}));
    update_frequencies(h, KgPath({{"B", "r", "C"}}));
    CHECK(h.count("B") == 2);
    CHECK(h.count("A") == 1);
    CHECK(h.count("C") == 1);
}

TEST_CASE("frequency table JSON round trip") {
    FrequencyTable f(1.0);
    f.increment("X", 4);
    f.increment("Y", 1);
    auto back = FrequencyTable::from_json(f.to_json());
    CHECK(back.counts() == f.counts());
}

TEST_CASE("fixed seed reproduces the sequence") {
    auto g = kgc::test::random_graph(100, 3, 4);
    auto run = [&] {
        Rng rng(123);
        FrequencyTable f;
        std::vector<std::string> out;
        for (int i = 0; i < 200; ++i) {
            auto src = sample_source(f, g, rng);
            int len = sample_length(3, rng);
            auto s = sample_path(g, src, len, rng);
            out.push_back(src + "/" + std::to_string(len) + "/" +
                          (std::holds_alternative<KgPath>(s) ? std::get<KgPath>(s).target() : "dead"));
        }
        return out;
    };
    CHECK(run() == run());
}

TEST_CASE("rng state round trip") {
    Rng a(42);
    for (int i = 0; i < 10; ++i) a.next();
    Rng b(0);
    b.restore(a.state());
    CHECK(a.next() == b.next());
    CHECK_THROWS_AS(b.restore("garbage"), InvalidConfig);
}
