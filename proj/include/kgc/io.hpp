#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace kgc::io {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path);

json read_json(const std::filesystem::path& path);

/// Parses one JSON value per non-empty line.
std::vector<json> read_jsonl(const std::filesystem::path& path);

/// Writes `content` to a sibling temp file and renames it over `path`, so a
/// reader never sees a half-written file.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// Streamed variant of atomic_write: lines go to `<path>.tmp.<pid>` and only
/// `commit()` moves them into place. An uncommitted writer removes its temp
/// file on destruction.
class AtomicWriter {
public:
    explicit AtomicWriter(std::filesystem::path path);
    ~AtomicWriter();
    AtomicWriter(const AtomicWriter&) = delete;
    AtomicWriter& operator=(const AtomicWriter&) = delete;

    std::ofstream& stream() { return out_; }
    void write_line(const json& value);
    void commit();

private:
    std::filesystem::path path_;
    std::filesystem::path tmp_;
    std::ofstream out_;
    bool committed_ = false;
};

/// Serialized form used for every JSONL record we write: compact, keys in
/// the order nlohmann::json stores them (sorted), UTF-8 passed through.
std::string dump_line(const json& value);

}  // namespace kgc::io
