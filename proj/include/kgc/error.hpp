#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgc {

/// Base of every error raised by the library. `exit_code()` maps onto the CLI
/// convention (2 config, 3 stall/unfillable, 4 backend failure).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const { return 2; }
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// ---- kg-core ----

class MalformedRecord : public Error {
public:
    MalformedRecord(std::size_t line, const std::string& what)
        : Error("malformed record at line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class ConflictingName : public Error {
public:
    ConflictingName(const std::string& id, const std::string& a, const std::string& b)
        : Error("entity '" + id + "' has conflicting names '" + a + "' and '" + b + "'") {}
};

class UnknownNode : public Error {
public:
    explicit UnknownNode(const std::string& id) : Error("unknown node '" + id + "'") {}
};

class DanglingEntity : public Error {
public:
    explicit DanglingEntity(const std::string& id)
        : Error("path references entity '" + id + "' that is not in the graph") {}
};

class EmptyGraph : public Error {
public:
    EmptyGraph() : Error("graph has no entities") {}
};

// ---- llm-gateway ----

class BackendError : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 4; }
};

class BackendUnavailable : public BackendError {
public:
    using BackendError::BackendError;
};

class AuthMissing : public BackendError {
public:
    explicit AuthMissing(const std::string& env)
        : BackendError("environment variable '" + env + "' holding the API key is not set") {}
};

class ResponseMalformed : public BackendError {
public:
    using BackendError::BackendError;
};

// ---- task-generator / trace-distiller ----

class FormatViolation : public Error {
public:
    explicit FormatViolation(std::string element)
        : Error("format violation: " + element), element_(std::move(element)) {}
    const std::string& element() const { return element_; }

private:
    std::string element_;
};

class EmptyTrace : public Error {
public:
    EmptyTrace() : Error("trace generation returned an empty completion") {}
};

// ---- pipeline / bench ----

class ProgressStall : public Error {
public:
    using Error::Error;
    int exit_code() const override { return 3; }
};

class StrataUnfillable : public Error {
public:
    StrataUnfillable(const std::string& category, int hops, std::size_t eligible, const std::string& detail)
        : Error("cannot fill cell (category '" + category + "', " + std::to_string(hops) + " hops): " + detail +
                "; eligible source nodes: " + std::to_string(eligible)),
          category_(category), hops_(hops), eligible_(eligible) {}
    int exit_code() const override { return 3; }
    const std::string& category() const { return category_; }
    int hops() const { return hops_; }
    std::size_t eligible() const { return eligible_; }

private:
    std::string category_;
    int hops_;
    std::size_t eligible_;
};

}  // namespace kgc
