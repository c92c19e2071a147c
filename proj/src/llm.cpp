#include "kgc/llm.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cctype>
#include <cstdlib>
#include <regex>
#include <thread>

#include "kgc/error.hpp"
#include "kgc/hash.hpp"
#include "kgc/io.hpp"
#include "kgc/text.hpp"

namespace kgc {

using nlohmann::json;

void GenerationRequest::validate() const {
    if (prompt.empty()) throw InvalidConfig("generation prompt must not be empty");
    if (max_new_tokens < 1) throw InvalidConfig("max_new_tokens must be >= 1");
    if (temperature < 0.0) throw InvalidConfig("temperature must be >= 0");
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::StopSequence: return "stop-sequence";
        case StopReason::Length: return "length";
        case StopReason::End: return "end";
    }
    return "end";
}

bool apply_stop_sequences(std::string& text, const std::vector<std::string>& stops) {
    std::size_t cut = std::string::npos;
    for (const auto& s : stops) {
        if (s.empty()) continue;
        cut = std::min(cut, text.find(s));
    }
    if (cut == std::string::npos) return false;
    text.resize(cut);
    return true;
}

// ---------------------------------------------------------------------------
// descriptor

void BackendDescriptor::validate() const {
    if (model_name.empty()) throw InvalidConfig("backend model_name must not be empty");
    if (kind == Kind::HttpChat) {
        if (endpoint.empty()) throw InvalidConfig("http-chat backend '" + model_name + "' requires an endpoint");
        if (auth_env.empty()) throw InvalidConfig("http-chat backend '" + model_name + "' requires auth_env");
    }
    if (retry.max_retries < 0 || retry.base_backoff_ms < 0) throw InvalidConfig("retry policy must be non-negative");
    if (max_concurrency < 1 || max_concurrency > 1024) throw InvalidConfig("max_concurrency must be in [1, 1024]");
}

BackendDescriptor BackendDescriptor::from_json(const json& j) {
    BackendDescriptor d;
    const auto kind = j.value("kind", std::string("mock"));
    if (kind == "http-chat") {
        d.kind = Kind::HttpChat;
    } else if (kind == "mock") {
        d.kind = Kind::Mock;
    } else {
        throw InvalidConfig("unknown backend kind '" + kind + "'");
    }
    d.endpoint = j.value("endpoint", std::string{});
    d.model_name = j.value("model_name", d.model_name);
    d.auth_env = j.value("auth_env", std::string{});
    if (auto it = j.find("retry"); it != j.end()) {
        d.retry.max_retries = it->value("max_retries", d.retry.max_retries);
        d.retry.base_backoff_ms = it->value("base_backoff_ms", d.retry.base_backoff_ms);
    }
    d.max_concurrency = j.value("max_concurrency", d.max_concurrency);
    d.timeout_s = j.value("timeout_s", d.timeout_s);
    if (auto it = j.find("mock"); it != j.end()) {
        const json& m = *it;
        if (auto s = m.find("scripted_file"); s != m.end()) {
            for (auto& [k, v] : io::read_json(s->get<std::string>()).items()) d.mock.scripted[k] = v.get<std::string>();
        }
        if (auto s = m.find("scripted"); s != m.end()) {
            for (auto& [k, v] : s->items()) d.mock.scripted[k] = v.get<std::string>();
        }
        if (auto s = m.find("sequence"); s != m.end()) d.mock.sequence = s->get<std::vector<std::string>>();
        if (auto s = m.find("constant"); s != m.end() && !s->is_null()) d.mock.constant = s->get<std::string>();
        d.mock.synthesize = m.value("synthesize", true);
    }
    d.validate();
    return d;
}

json BackendDescriptor::to_json() const {
    json j;
    j["kind"] = kind == Kind::HttpChat ? "http-chat" : "mock";
    j["model_name"] = model_name;
    if (kind == Kind::HttpChat) {
        j["endpoint"] = endpoint;
        j["auth_env"] = auth_env;
        j["retry"] = {{"max_retries", retry.max_retries}, {"base_backoff_ms", retry.base_backoff_ms}};
        j["max_concurrency"] = max_concurrency;
        j["timeout_s"] = timeout_s;
    } else {
        json m;
        m["scripted"] = mock.scripted;
        m["sequence"] = mock.sequence;
        m["constant"] = mock.constant ? json(*mock.constant) : json(nullptr);
        m["synthesize"] = mock.synthesize;
        j["mock"] = std::move(m);
    }
    return j;
}

// ---------------------------------------------------------------------------
// mock

MockBackend::MockBackend(std::string model_name, MockSpec spec)
    : model_name_(std::move(model_name)), spec_(std::move(spec)) {}

GenerationResult MockBackend::generate(const GenerationRequest& request) {
    request.validate();
    ++calls_;

    std::optional<std::string> text;
    if (!spec_.scripted.empty()) {
        if (auto it = spec_.scripted.find(sha256_hex(request.prompt)); it != spec_.scripted.end()) text = it->second;
    }
    if (!text && !spec_.sequence.empty()) text = spec_.sequence[cursor_++ % spec_.sequence.size()];
    if (!text && spec_.constant) text = spec_.constant;
    if (!text && spec_.synthesize) text = synthesize_mock_response(request);
    if (!text) throw ResponseMalformed("mock backend '" + model_name_ + "' has no response for this prompt");

    GenerationResult r;
    r.prompt_tokens = static_cast<int>(text::whitespace_tokens(request.prompt) +
                                       text::whitespace_tokens(request.assistant_prefix));
    r.stopped_on = StopReason::End;
    if (apply_stop_sequences(*text, request.stop_sequences)) r.stopped_on = StopReason::StopSequence;

    // Enforce the token budget on whitespace tokens.
    std::size_t tokens = 0;
    bool in_tok = false;
    for (std::size_t i = 0; i < text->size(); ++i) {
        const bool ws = std::isspace(static_cast<unsigned char>((*text)[i])) != 0;
        if (!ws && !in_tok && ++tokens > static_cast<std::size_t>(request.max_new_tokens)) {
            text->resize(i);
            r.stopped_on = StopReason::Length;
            --tokens;
            break;
        }
        in_tok = !ws;
    }
    r.completion_tokens = static_cast<int>(tokens);
    r.text = std::move(*text);
    r.usage_reported = false;
    return r;
}

// ---------------------------------------------------------------------------
// http-chat

HttpChatBackend::HttpChatBackend(BackendDescriptor descriptor)
    : descriptor_(std::move(descriptor)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
      slots_(descriptor_.max_concurrency) {
    descriptor_.validate();
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(descriptor_.endpoint, m, kUrl)) {
        throw InvalidConfig("endpoint '" + descriptor_.endpoint + "' is not an http(s) URL");
    }
    scheme_host_port_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/v1/chat/completions";
}

namespace {

bool transient_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

struct SlotGuard {
    std::counting_semaphore<1024>& s;
    explicit SlotGuard(std::counting_semaphore<1024>& sem) : s(sem) { s.acquire(); }
    ~SlotGuard() { s.release(); }
};

}  // namespace

GenerationResult HttpChatBackend::generate(const GenerationRequest& request) {
    request.validate();
    const char* key = std::getenv(descriptor_.auth_env.c_str());
    if (key == nullptr || *key == '\0') throw AuthMissing(descriptor_.auth_env);

    json body;
    body["model"] = descriptor_.model_name;
    body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});
    if (!request.assistant_prefix.empty()) {
        body["messages"].push_back({{"role", "assistant"}, {"content", request.assistant_prefix}});
    }
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_new_tokens;
    if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;
    if (request.seed) body["seed"] = *request.seed;
    const std::string payload = body.dump();

    SlotGuard slot(slots_);
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(std::chrono::seconds(descriptor_.timeout_s));
    client.set_read_timeout(std::chrono::seconds(descriptor_.timeout_s));
    client.set_write_timeout(std::chrono::seconds(descriptor_.timeout_s));
    const httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

    std::string last_error;
    for (int attempt = 0;; ++attempt) {
        auto res = client.Post(path_, headers, payload, "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            GenerationResult r;
            r.retries = attempt;
            json j;
            try {
                j = json::parse(res->body);
                const json& choice = j.at("choices").at(0);
                r.text = choice.at("message").at("content").get<std::string>();
                const auto finish = choice.value("finish_reason", std::string("stop"));
                if (finish == "length") {
                    r.stopped_on = StopReason::Length;
                } else if (choice.contains("stop_reason") && choice["stop_reason"].is_string()) {
                    r.stopped_on = StopReason::StopSequence;
                } else {
                    r.stopped_on = StopReason::End;
                }
            } catch (const json::exception& e) {
                throw ResponseMalformed("unexpected chat-completion response: " + std::string(e.what()));
            }
            // Some servers ignore `stop`; enforce it locally too.
            if (apply_stop_sequences(r.text, request.stop_sequences)) r.stopped_on = StopReason::StopSequence;
            if (auto u = j.find("usage"); u != j.end() && u->is_object() && u->contains("completion_tokens")) {
                r.prompt_tokens = u->value("prompt_tokens", 0);
                r.completion_tokens = u->value("completion_tokens", 0);
                r.usage_reported = true;
            } else {
                r.prompt_tokens = static_cast<int>(text::whitespace_tokens(request.prompt));
                r.completion_tokens = static_cast<int>(text::whitespace_tokens(r.text));
            }
            return r;
        }

        bool retryable;
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            retryable = true;
        } else {
            last_error = "HTTP " + std::to_string(res->status);
            retryable = transient_status(res->status);
        }
        if (!retryable) {
            throw BackendUnavailable(descriptor_.model_name + ": non-retryable failure (" + last_error + ")");
        }
        if (attempt >= descriptor_.retry.max_retries) {
            throw BackendUnavailable(descriptor_.model_name + ": retries exhausted after " +
                                     std::to_string(attempt + 1) + " attempt(s) (" + last_error + ")");
        }
        const auto delay = std::chrono::milliseconds(static_cast<long long>(descriptor_.retry.base_backoff_ms)
                                                     << std::min(attempt, 20));
        spdlog::debug("{}: {} - retrying in {} ms", descriptor_.model_name, last_error, delay.count());
        sleeper_(delay);
    }
}

// ---------------------------------------------------------------------------

BackendPtr make_backend(const BackendDescriptor& descriptor) {
    descriptor.validate();
    if (descriptor.kind == BackendDescriptor::Kind::HttpChat) return std::make_shared<HttpChatBackend>(descriptor);
    return std::make_shared<MockBackend>(descriptor.model_name, descriptor.mock);
}

GenerationResult generate(const BackendDescriptor& descriptor, const GenerationRequest& request) {
    return make_backend(descriptor)->generate(request);
}

}  // namespace kgc
