#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "kgc/graph.hpp"
#include "kgc/qa.hpp"
#include "kgc/trace.hpp"

namespace kgc {

/// Canonical identity of a whole path: "head|relation|tail" per hop, hops
/// joined by ';' (with '\\', '|' and ';' escaped inside components).
std::string path_key(const KgPath& path);

/// Text a task is compared on: vignette followed by the option texts.
std::string overlap_text(const QaTask& task);

struct Hash128 {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;
    bool operator==(const Hash128&) const = default;
};

struct Hash128Hasher {
    std::size_t operator()(const Hash128& h) const noexcept { return static_cast<std::size_t>(h.hi ^ (h.lo * 31)); }
};

/// Set of hashed n-token windows of a protected corpus. Windows are stored as
/// 128-bit hashes; tests cross-check lookups against exhaustive comparison.
class NgramIndex {
public:
    static constexpr const char* kTokenizerId = "nfc-lower-punct-symbol-ws/v1";

    explicit NgramIndex(std::size_t n = 18);

    std::size_t n() const { return n_; }
    std::size_t size() const { return grams_.size(); }

    void add_text(const std::string& text);
    void add_tokens(std::span<const std::string> tokens);
    bool contains_window(std::span<const std::string> window) const;

    static Hash128 hash_window(std::span<const std::string> window);

private:
    std::size_t n_;
    std::unordered_set<Hash128, Hash128Hasher> grams_;
};

bool path_contaminated(const KgPath& candidate, const std::unordered_set<std::string>& protected_keys);

/// True iff some window of n consecutive candidate tokens is in the index.
bool text_contaminated(const std::string& candidate_text, const NgramIndex& index);

/// Protected side of decontamination, built once from the benchmark.
struct ProtectedSet {
    std::unordered_set<std::string> path_keys;
    NgramIndex index;

    explicit ProtectedSet(std::size_t n = 18) : index(n) {}
    static ProtectedSet from_tasks(std::span<const QaTask> bench, std::size_t n = 18);
    void add(const QaTask& task);
    bool empty() const { return path_keys.empty() && index.size() == 0; }
};

enum class ContaminationReason { None, Path, Ngram, Both };

std::string to_string(ContaminationReason r);

ContaminationReason check_contamination(const QaTask& task, const ProtectedSet& bench);

struct Removal {
    std::string item_id;
    ContaminationReason reason;
};

struct DecontamResult {
    std::vector<CurriculumItem> retained;
    std::vector<Removal> removed;
};

/// Drops every item whose path equals a bench path or whose overlap text
/// shares an n-token window with a bench item.
DecontamResult decontaminate(std::vector<CurriculumItem> items, const ProtectedSet& bench);

}  // namespace kgc
