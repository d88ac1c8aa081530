#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace refine_loop {

enum class MessageRole { system, user };

struct ChatMessage {
    MessageRole role = MessageRole::user;
    std::string content;
};

/// Mock and log addressing only; never serialized onto the wire and never
/// part of request digests.
struct CallRoute {
    std::string stage_id;
    std::string role;  // generate | verify | refine
};

struct CompletionRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    long max_tokens = 8192;
    bool wants_structured_output = false;
    CallRoute route;
};

enum class FinishReason { stop, length, other };

const char* to_string(FinishReason reason);

struct CompletionResponse {
    std::string text;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    FinishReason finish_reason = FinishReason::stop;
};

enum class ProviderMode { live, record, replay, mock };

const char* to_string(ProviderMode mode);
std::optional<ProviderMode> provider_mode_from_string(const std::string& token);

struct ProviderConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string model_name = "gpt-4.1";
    std::string api_key_env = "LLM_API_KEY";
    long timeout_seconds = 120;
    int max_retries = 3;
    long retry_base_ms = 500;
    long retry_cap_ms = 30000;
    ProviderMode mode = ProviderMode::mock;
    std::optional<std::filesystem::path> cassette_path;
    std::optional<std::filesystem::path> script_path;
    double temperature = 0.0;
    long max_tokens = 8192;
};

/// Digest of the wire-visible request fields only (model, messages,
/// temperature, max_tokens); timestamps and routing never participate, so
/// identical prompts always map to the same cassette key.
std::string request_digest(const CompletionRequest& request);

/// Exponential backoff with bounded jitter: doubling base delays, a jitter
/// factor in [1, 1.25), clamped to cap_ms. Nondecreasing in attempt for any
/// jitter sequence.
long compute_backoff_ms(int attempt, long base_ms, long cap_ms, double jitter01);

/// FIFO-scripted responses keyed by (stage_id, role).
class MockScript {
public:
    MockScript() = default;

    static MockScript from_file(const std::filesystem::path& path);

    void add(const std::string& stage_id, const std::string& role, std::string response_text);

    /// Next scripted response for the route. Throws ProviderError naming the
    /// key when the route was never scripted or its queue is exhausted.
    std::string next(const CallRoute& route);

    bool empty() const { return entries_.empty(); }

private:
    std::map<std::string, std::deque<std::string>> entries_;
};

class Transport;

/// Provider handle over one of four transports: live HTTP, scripted mock,
/// cassette replay, or a recording wrapper (live or mock underneath, per
/// config). Retries transient failures with exponential backoff.
class Provider {
public:
    explicit Provider(ProviderConfig config);
    Provider(ProviderConfig config, MockScript script);
    ~Provider();

    Provider(Provider&&) noexcept;
    Provider& operator=(Provider&&) noexcept;

    CompletionResponse complete(const CompletionRequest& request);

    const ProviderConfig& config() const { return config_; }

    /// Completed provider calls made through this handle.
    long call_count() const { return call_count_; }

private:
    void initialize(std::optional<MockScript> script);

    ProviderConfig config_;
    std::unique_ptr<Transport> transport_;
    bool recording_ = false;
    long call_count_ = 0;
};

/// Convenience for tests and single-stage runs: a mock provider scripted from
/// (stage_id, role, response) triples.
Provider script_mock(std::vector<std::tuple<std::string, std::string, std::string>> entries,
                     ProviderConfig config = {});

}  // namespace refine_loop
