#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kgc/graph.hpp"
#include "kgc/llm.hpp"

namespace kgc::test {

inline std::filesystem::path data_dir() { return KGC_TEST_DATA; }

inline KnowledgeGraph graph_from(const std::string& tsv) {
    std::istringstream in(tsv);
    return load_graph(in);
}

/// Random directed graph with `nodes` entities "E<i>" (names "entity <i>")
/// and about `out_degree` out-edges per node over a few relations.
inline KnowledgeGraph random_graph(std::size_t nodes, std::size_t out_degree, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    static const char* rels[] = {"causes", "treats", "associated with"};
    std::ostringstream tsv;
    for (std::size_t i = 0; i < nodes; ++i) {
        for (std::size_t k = 0; k < out_degree; ++k) {
            const std::size_t j = gen() % nodes;
            if (j == i) continue;
            tsv << "E" << i << "\tentity " << i << "\t" << rels[gen() % 3] << "\tE" << j << "\tentity " << j << "\n";
        }
    }
    return graph_from(tsv.str());
}

inline GenerationResult text_result(std::string text) {
    GenerationResult r;
    r.text = std::move(text);
    r.completion_tokens = 1;
    r.stopped_on = StopReason::End;
    return r;
}

/// Per-test scratch directory, emptied on creation.
inline std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("kgc-test-" + std::to_string(::getpid()) + "-" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace kgc::test
