#include <doctest.h>

#include <random>

#include "kgc/error.hpp"
#include "kgc/prompts.hpp"
#include "kgc/trace.hpp"
#include "support.hpp"

using namespace kgc;

namespace {

KnowledgeGraph graph() { return test::graph_from("A\tAlpha\tcauses\tB\tBeta\nB\tBeta\tcauses\tC\tGamma\n"); }

QaTask task() {
    QaTask t;
    t.vignette = "A patient presents.";
    t.options = {{'A', "Gamma"}, {'B', "Delta"}, {'C', "Epsilon"}, {'D', "Zeta"}};
    t.answer = 'A';
    t.path = KgPath({{"A", "causes", "B"}, {"B", "causes", "C"}});
    return t;
}

MockBackend constant(const std::string& name, const std::string& text) {
    MockSpec s;
    s.constant = text;
    return MockBackend(name, s);
}

}  // namespace

TEST_CASE("distill_trace returns the scripted text") {
    auto g = graph();
    auto t = task();
    auto m = constant("tracer", "Alpha causes Beta which causes Gamma.");
    auto tr = distill_trace(m, t, *t.path, g);
    CHECK(tr.text == "Alpha causes Beta which causes Gamma.");
    CHECK(tr.token_count == 6);
    CHECK(tr.model_name == "tracer");
    CHECK(distill_trace(m, t, *t.path, g).text == tr.text);

    auto empty = constant("tracer", "   \n");
    CHECK_THROWS_AS(distill_trace(empty, t, *t.path, g), EmptyTrace);
    auto marker = constant("tracer", "<think>oops</think>");
    CHECK_THROWS_AS(distill_trace(marker, t, *t.path, g), FormatViolation);
}

TEST_CASE("parse_verdict") {
    CHECK(parse_verdict("Correct: Yes") == Decision::Yes);
    CHECK(parse_verdict("correct:   no") == Decision::No);
    CHECK(parse_verdict("The answer is fine.") == Decision::Unparseable);
    CHECK(parse_verdict("**Correct:** [Yes]") == Decision::Yes);
    CHECK(parse_verdict("Correct: \"No\"") == Decision::No);
    CHECK(parse_verdict("Correct: No. Later: Correct: Yes") == Decision::No);
    CHECK(parse_verdict("Correct: maybe") == Decision::Unparseable);
    CHECK(parse_verdict("") == Decision::Unparseable);
}

TEST_CASE("parse_verdict is total over random input") {
    std::mt19937_64 gen(3);
    const std::string alphabet = "Correct: YesNo[]*\"' \n\t\x01\xff\xc3\xa9";
    for (int i = 0; i < 20000; ++i) {
        std::string s;
        const auto len = gen() % 40;
        for (std::size_t k = 0; k < len; ++k) s += alphabet[gen() % alphabet.size()];
        CHECK_NOTHROW(parse_verdict(s));
    }
}

TEST_CASE("two-factor acceptance over all combinations") {
    const Decision all[] = {Decision::Yes, Decision::No, Decision::Unparseable};
    const std::string text[] = {"Correct: Yes", "Correct: No", "I cannot tell"};
    auto g = graph();
    auto t = task();
    ReasoningTrace tr{"Alpha causes Beta which causes Gamma.", "tracer", 6};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            CHECK(two_factor_accept(all[i], all[j]) == (i == 0 && j == 0));
            auto g1 = constant("g1", text[i]);
            auto g2 = constant("g2", text[j]);
            Backend* graders[] = {&g1, &g2};
            auto item = correctness_filter(t, tr, *t.path, g, graders);
            REQUIRE(item.verdicts.size() == 2);
            CHECK(item.verdicts[0].decision == all[i]);
            CHECK(item.verdicts[1].decision == all[j]);
            CHECK(item.verdicts[0].grader_name == "g1");
            CHECK(item.verdicts[1].raw == text[j]);
            CHECK(item.accepted == (i == 0 && j == 0));
            // Both graders are always consulted.
            CHECK(g1.calls() == 1);
            CHECK(g2.calls() == 1);
        }
    }
}

TEST_CASE("correctness_filter needs exactly two graders") {
    auto g = graph();
    auto t = task();
    ReasoningTrace tr{"x", "tracer", 1};
    auto g1 = constant("g1", "Correct: Yes");
    Backend* one[] = {&g1};
    CHECK_THROWS_AS(correctness_filter(t, tr, *t.path, g, one), InvalidConfig);
}

TEST_CASE("decision string round trip") {
    for (auto d : {Decision::Yes, Decision::No, Decision::Unparseable}) CHECK(decision_from_string(to_string(d)) == d);
}
