#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include <json.hpp>

namespace kgc {

struct GenerationRequest {
    std::string prompt;
    /// Text the assistant turn already holds; generation continues from it.
    /// Used by iterative refinement.
    std::string assistant_prefix;
    double temperature = 0.7;
    int max_new_tokens = 4096;
    std::vector<std::string> stop_sequences;
    std::optional<std::uint64_t> seed;

    void validate() const;
};

enum class StopReason { StopSequence, Length, End };

std::string to_string(StopReason r);

struct GenerationResult {
    std::string text;
    int prompt_tokens = 0;
    int completion_tokens = 0;
    StopReason stopped_on = StopReason::End;
    /// false when the counts are whitespace estimates
    bool usage_reported = false;
    int retries = 0;
};

struct RetryPolicy {
    int max_retries = 3;
    int base_backoff_ms = 500;
};

/// Response sources of the offline backend, consulted in this order:
/// scripted (keyed by SHA-256 of the prompt), sequence (cyclic, in call
/// order), constant, then the template-aware synthesizer.
struct MockSpec {
    std::map<std::string, std::string> scripted;
    std::vector<std::string> sequence;
    std::optional<std::string> constant;
    bool synthesize = true;
};

struct BackendDescriptor {
    enum class Kind { HttpChat, Mock };

    Kind kind = Kind::Mock;
    std::string endpoint;
    std::string model_name = "mock";
    std::string auth_env;
    RetryPolicy retry;
    int max_concurrency = 8;
    int timeout_s = 120;
    MockSpec mock;

    void validate() const;
    static BackendDescriptor from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual GenerationResult generate(const GenerationRequest& request) = 0;
    virtual const std::string& model_name() const = 0;
    /// Whether token counts come from the service rather than a whitespace estimate.
    virtual bool reports_usage() const { return false; }
};

using BackendPtr = std::shared_ptr<Backend>;

/// Deterministic offline backend. With a fixed spec and single-threaded use
/// the output is a pure function of the request (the `sequence` source is
/// the only call-order dependent one).
class MockBackend : public Backend {
public:
    explicit MockBackend(std::string model_name, MockSpec spec = {});

    GenerationResult generate(const GenerationRequest& request) override;
    const std::string& model_name() const override { return model_name_; }

    std::size_t calls() const { return calls_.load(); }

private:
    std::string model_name_;
    MockSpec spec_;
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> cursor_{0};
};

/// OpenAI-compatible chat-completion client: POST {model, messages,
/// temperature, max_tokens, stop, seed}; text from choices[0].message.content.
/// HTTP 429, 5xx and transport failures are retried with exponential backoff.
class HttpChatBackend : public Backend {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    explicit HttpChatBackend(BackendDescriptor descriptor);

    GenerationResult generate(const GenerationRequest& request) override;
    const std::string& model_name() const override { return descriptor_.model_name; }
    bool reports_usage() const override { return true; }

    void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

private:
    BackendDescriptor descriptor_;
    std::string scheme_host_port_;
    std::string path_;
    Sleeper sleeper_;
    std::counting_semaphore<1024> slots_;
};

/// Adapter around a callable; handy for composing backends and in tests.
class CallbackBackend : public Backend {
public:
    using Fn = std::function<GenerationResult(const GenerationRequest&)>;
    CallbackBackend(std::string model_name, Fn fn) : model_name_(std::move(model_name)), fn_(std::move(fn)) {}

    GenerationResult generate(const GenerationRequest& request) override {
        request.validate();
        return fn_(request);
    }
    const std::string& model_name() const override { return model_name_; }

private:
    std::string model_name_;
    Fn fn_;
};

BackendPtr make_backend(const BackendDescriptor& descriptor);

/// One-shot call through a freshly built backend.
GenerationResult generate(const BackendDescriptor& descriptor, const GenerationRequest& request);

/// Truncates `text` at the earliest stop sequence. Returns true if one was found.
bool apply_stop_sequences(std::string& text, const std::vector<std::string>& stops);

/// Response of the template-aware synthesizer for prompts rendered by this
/// library, or nullopt for unrecognized prompts.
std::optional<std::string> synthesize_mock_response(const GenerationRequest& request);

/// Fixed decoy options emitted by the synthesizer.
const std::vector<std::string>& mock_decoys();

}  // namespace kgc
