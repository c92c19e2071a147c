#include "kgc/decontam.hpp"

#include "kgc/error.hpp"

#include "kgc/hash.hpp"
#include "kgc/text.hpp"

namespace kgc {

namespace {

void append_escaped(std::string& out, const std::string& s) {
    for (char c : s) {
        if (c == '\\' || c == '|' || c == ';') out.push_back('\\');
        out.push_back(c);
    }
}

}  // namespace

std::string path_key(const KgPath& path) {
    std::string key;
    for (std::size_t i = 0; i < path.length(); ++i) {
        const auto& t = path.triples()[i];
        if (i) key.push_back(';');
        append_escaped(key, t.head);
        key.push_back('|');
        append_escaped(key, t.relation);
        key.push_back('|');
        append_escaped(key, t.tail);
    }
    return key;
}

std::string overlap_text(const QaTask& task) {
    std::string s = task.vignette;
    for (const auto& o : task.options) s += "\n" + o.text;
    return s;
}

NgramIndex::NgramIndex(std::size_t n) : n_(n) {
    if (n == 0) throw InvalidConfig("n-gram size must be >= 1");
}

Hash128 NgramIndex::hash_window(std::span<const std::string> window) {
    // Two independent 64-bit lanes: FNV-1a over the joined bytes, and a
    // splitmix chain over per-token FNV values with a different basis.
    std::uint64_t a = 0xcbf29ce484222325ULL;
    std::uint64_t b = 0x84222325cbf29ce4ULL;
    for (const auto& tok : window) {
        a = fnv1a64(tok, a);
        a = fnv1a64("\x1f", a);
        b = splitmix64(b ^ fnv1a64(tok, 0x9ae16a3b2f90404fULL));
    }
    return Hash128{a, b};
}

void NgramIndex::add_text(const std::string& text) {
    const auto tokens = text::tokenize(text);
    add_tokens(tokens);
}

void NgramIndex::add_tokens(std::span<const std::string> tokens) {
    if (tokens.size() < n_) return;
    for (std::size_t i = 0; i + n_ <= tokens.size(); ++i) grams_.insert(hash_window(tokens.subspan(i, n_)));
}

bool NgramIndex::contains_window(std::span<const std::string> window) const {
    return window.size() == n_ && grams_.contains(hash_window(window));
}

bool path_contaminated(const KgPath& candidate, const std::unordered_set<std::string>& protected_keys) {
    return protected_keys.contains(path_key(candidate));
}

bool text_contaminated(const std::string& candidate_text, const NgramIndex& index) {
    if (index.size() == 0) return false;
    const auto tokens = text::tokenize(candidate_text);
    const std::span<const std::string> all(tokens);
    for (std::size_t i = 0; i + index.n() <= tokens.size(); ++i) {
        if (index.contains_window(all.subspan(i, index.n()))) return true;
    }
    return false;
}

ProtectedSet ProtectedSet::from_tasks(std::span<const QaTask> bench, std::size_t n) {
    ProtectedSet p(n);
    for (const auto& t : bench) p.add(t);
    return p;
}

void ProtectedSet::add(const QaTask& task) {
    if (task.path) path_keys.insert(path_key(*task.path));
    index.add_text(overlap_text(task));
}

std::string to_string(ContaminationReason r) {
    switch (r) {
        case ContaminationReason::None: return "none";
        case ContaminationReason::Path: return "path";
        case ContaminationReason::Ngram: return "ngram";
        case ContaminationReason::Both: return "both";
    }
    return "none";
}

ContaminationReason check_contamination(const QaTask& task, const ProtectedSet& bench) {
    const bool by_path = task.path && path_contaminated(*task.path, bench.path_keys);
    const bool by_text = text_contaminated(overlap_text(task), bench.index);
    if (by_path && by_text) return ContaminationReason::Both;
    if (by_path) return ContaminationReason::Path;
    if (by_text) return ContaminationReason::Ngram;
    return ContaminationReason::None;
}

DecontamResult decontaminate(std::vector<CurriculumItem> items, const ProtectedSet& bench) {
    DecontamResult out;
    for (auto& item : items) {
        const auto reason = check_contamination(item.task, bench);
        if (reason == ContaminationReason::None) {
            out.retained.push_back(std::move(item));
        } else {
            out.removed.push_back(Removal{item.id, reason});
        }
    }
    return out;
}

}  // namespace kgc
