#include "kgc/io.hpp"

#include <unistd.h>

#include <sstream>

#include "kgc/error.hpp"

namespace kgc::io {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw InvalidConfig("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

std::vector<json> read_jsonl(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw InvalidConfig(path.string() + ":" + std::to_string(lineno) + ": invalid JSON line: " + e.what());
        }
    }
    return out;
}

namespace {
fs::path temp_sibling(const fs::path& path) {
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    return tmp;
}
}  // namespace

void atomic_write(const fs::path& path, const std::string& content) {
    AtomicWriter w(path);
    w.stream() << content;
    w.commit();
}

AtomicWriter::AtomicWriter(fs::path path) : path_(std::move(path)), tmp_(temp_sibling(path_)) {
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot write '" + tmp_.string() + "'");
}

AtomicWriter::~AtomicWriter() {
    if (!committed_) {
        out_.close();
        std::error_code ec;
        fs::remove(tmp_, ec);
    }
}

void AtomicWriter::write_line(const json& value) { out_ << dump_line(value) << '\n'; }

void AtomicWriter::commit() {
    out_.flush();
    if (!out_) throw IoError("write to '" + tmp_.string() + "' failed");
    out_.close();
    fs::rename(tmp_, path_);
    committed_ = true;
}

std::string dump_line(const json& value) {
    return value.dump(-1, ' ', false, json::error_handler_t::replace);
}

}  // namespace kgc::io
