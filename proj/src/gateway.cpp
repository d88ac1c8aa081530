#include "refine_loop/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <random>
#include <thread>

#include "httplib.h"
#include <json.hpp>

#include "refine_loop/digest.hpp"
#include "refine_loop/errors.hpp"
#include "refine_loop/util.hpp"

namespace refine_loop {

using nlohmann::json;

const char* to_string(FinishReason reason) {
    switch (reason) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::other: return "other";
    }
    return "other";
}

namespace {

FinishReason finish_reason_from_string(const std::string& token) {
    if (token == "stop") return FinishReason::stop;
    if (token == "length") return FinishReason::length;
    return FinishReason::other;
}

const char* to_string(MessageRole role) {
    return role == MessageRole::system ? "system" : "user";
}

json wire_request_json(const CompletionRequest& request) {
    json messages = json::array();
    for (const auto& message : request.messages) {
        messages.push_back({{"role", to_string(message.role)}, {"content", message.content}});
    }
    return json{{"model", request.model},
                {"messages", std::move(messages)},
                {"temperature", request.temperature},
                {"max_tokens", request.max_tokens}};
}

json response_json(const CompletionResponse& response) {
    return json{{"text", response.text},
                {"prompt_tokens", response.prompt_tokens},
                {"completion_tokens", response.completion_tokens},
                {"finish_reason", to_string(response.finish_reason)}};
}

CompletionResponse response_from_json(const json& value) {
    CompletionResponse response;
    response.text = value.at("text").get<std::string>();
    response.prompt_tokens = value.value("prompt_tokens", 0L);
    response.completion_tokens = value.value("completion_tokens", 0L);
    response.finish_reason = finish_reason_from_string(value.value("finish_reason", "stop"));
    return response;
}

long rough_token_count(std::size_t chars) {
    return static_cast<long>((chars + 3) / 4);
}

}  // namespace

const char* to_string(ProviderMode mode) {
    switch (mode) {
        case ProviderMode::live: return "live";
        case ProviderMode::record: return "record";
        case ProviderMode::replay: return "replay";
        case ProviderMode::mock: return "mock";
    }
    return "mock";
}

std::optional<ProviderMode> provider_mode_from_string(const std::string& token) {
    if (token == "live") return ProviderMode::live;
    if (token == "record") return ProviderMode::record;
    if (token == "replay") return ProviderMode::replay;
    if (token == "mock") return ProviderMode::mock;
    return std::nullopt;
}

std::string request_digest(const CompletionRequest& request) {
    return sha256_hex(wire_request_json(request).dump());
}

long compute_backoff_ms(int attempt, long base_ms, long cap_ms, double jitter01) {
    if (attempt < 0) attempt = 0;
    if (base_ms < 0) base_ms = 0;
    double jitter = std::clamp(jitter01, 0.0, 1.0);
    double delay = static_cast<double>(base_ms) * std::pow(2.0, static_cast<double>(attempt));
    delay *= 1.0 + 0.25 * jitter;
    delay = std::min(delay, static_cast<double>(cap_ms));
    return static_cast<long>(delay);
}

MockScript MockScript::from_file(const std::filesystem::path& path) {
    std::string content;
    if (!util::read_file(path, content)) {
        throw ProviderError("mock script not found: " + path.string(), false);
    }
    json doc;
    try {
        doc = json::parse(content);
    } catch (const json::exception& error) {
        throw ProviderError("mock script is not valid JSON: " + std::string(error.what()), false);
    }
    if (!doc.is_object()) {
        throw ProviderError("mock script must be an object of \"stage:role\" keys", false);
    }
    MockScript script;
    for (const auto& [key, value] : doc.items()) {
        auto colon = key.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == key.size()) {
            throw ProviderError("mock script key is not \"stage:role\": " + key, false);
        }
        auto stage_id = key.substr(0, colon);
        auto role = key.substr(colon + 1);
        if (value.is_string()) {
            script.add(stage_id, role, value.get<std::string>());
        } else if (value.is_array()) {
            for (const auto& item : value) {
                if (!item.is_string()) {
                    throw ProviderError("mock script responses must be strings: " + key, false);
                }
                script.add(stage_id, role, item.get<std::string>());
            }
        } else {
            throw ProviderError("mock script value must be a string or list: " + key, false);
        }
    }
    return script;
}

void MockScript::add(const std::string& stage_id, const std::string& role,
                     std::string response_text) {
    entries_[stage_id + ":" + role].push_back(std::move(response_text));
}

std::string MockScript::next(const CallRoute& route) {
    auto key = route.stage_id + ":" + route.role;
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw ProviderError("unscripted mock call: " + key, false);
    }
    if (it->second.empty()) {
        throw ProviderError("mock script exhausted for " + key, false);
    }
    auto text = std::move(it->second.front());
    it->second.pop_front();
    return text;
}

class Transport {
public:
    virtual ~Transport() = default;
    virtual CompletionResponse send(const CompletionRequest& request) = 0;
};

namespace {

class ScriptTransport : public Transport {
public:
    explicit ScriptTransport(MockScript script) : script_(std::move(script)) {}

    CompletionResponse send(const CompletionRequest& request) override {
        CompletionResponse response;
        response.text = script_.next(request.route);
        std::size_t prompt_chars = 0;
        for (const auto& message : request.messages) prompt_chars += message.content.size();
        response.prompt_tokens = rough_token_count(prompt_chars);
        response.completion_tokens = rough_token_count(response.text.size());
        response.finish_reason = FinishReason::stop;
        return response;
    }

private:
    MockScript script_;
};

class ReplayTransport : public Transport {
public:
    explicit ReplayTransport(const std::filesystem::path& cassette_path) {
        std::string content;
        if (!util::read_file(cassette_path, content)) {
            throw ProviderError("cassette not found: " + cassette_path.string(), false);
        }
        std::size_t line_number = 0;
        std::size_t start = 0;
        while (start <= content.size()) {
            auto end = content.find('\n', start);
            auto line = content.substr(
                start, end == std::string::npos ? std::string::npos : end - start);
            ++line_number;
            start = end == std::string::npos ? content.size() + 1 : end + 1;
            if (util::trim(line).empty()) continue;
            json entry;
            try {
                entry = json::parse(line);
            } catch (const json::exception&) {
                throw ProviderError("corrupted cassette at line " + std::to_string(line_number) +
                                        ": " + cassette_path.string(),
                                    false);
            }
            auto digest = entry.at("digest").get<std::string>();
            if (responses_.count(digest)) {
                std::cerr << "warning: duplicate cassette entry for digest " << digest
                          << "; keeping the first\n";
                continue;
            }
            responses_.emplace(digest, response_from_json(entry.at("response")));
        }
    }

    CompletionResponse send(const CompletionRequest& request) override {
        auto digest = request_digest(request);
        auto it = responses_.find(digest);
        if (it == responses_.end()) {
            throw ProviderError("cassette miss: " + digest, false);
        }
        return it->second;
    }

private:
    std::map<std::string, CompletionResponse> responses_;
};

class HttpTransport : public Transport {
public:
    HttpTransport(std::string base_url, std::string api_key, long timeout_seconds)
        : api_key_(std::move(api_key)) {
        auto scheme_end = base_url.find("://");
        auto path_start = scheme_end == std::string::npos
                              ? base_url.find('/')
                              : base_url.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            origin_ = base_url;
        } else {
            origin_ = base_url.substr(0, path_start);
            path_prefix_ = base_url.substr(path_start);
        }
        while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
        timeout_seconds_ = timeout_seconds;
    }

    CompletionResponse send(const CompletionRequest& request) override {
        httplib::Client client(origin_);
        client.set_connection_timeout(timeout_seconds_, 0);
        client.set_read_timeout(timeout_seconds_, 0);
        client.set_write_timeout(timeout_seconds_, 0);
        httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
        auto body = wire_request_json(request).dump();
        auto result =
            client.Post(path_prefix_ + "/chat/completions", headers, body, "application/json");
        if (!result) {
            throw ProviderError("provider connection failed: " + httplib::to_string(result.error()),
                                true);
        }
        if (result->status == 401 || result->status == 403) {
            throw ProviderError("provider rejected credentials (HTTP " +
                                    std::to_string(result->status) + ")",
                                false);
        }
        if (result->status == 408 || result->status == 429 || result->status >= 500) {
            throw ProviderError("provider transient failure (HTTP " +
                                    std::to_string(result->status) + ")",
                                true);
        }
        if (result->status != 200) {
            throw ProviderError("provider returned HTTP " + std::to_string(result->status) + ": " +
                                    result->body.substr(0, 200),
                                false);
        }
        return parse_body(result->body);
    }

private:
    static CompletionResponse parse_body(const std::string& body) {
        json doc;
        try {
            doc = json::parse(body);
        } catch (const json::exception&) {
            throw ProviderError("provider response is not valid JSON", false);
        }
        try {
            const auto& choice = doc.at("choices").at(0);
            CompletionResponse response;
            response.text = choice.at("message").at("content").get<std::string>();
            response.finish_reason =
                finish_reason_from_string(choice.value("finish_reason", "stop"));
            if (doc.contains("usage")) {
                response.prompt_tokens = doc["usage"].value("prompt_tokens", 0L);
                response.completion_tokens = doc["usage"].value("completion_tokens", 0L);
            }
            return response;
        } catch (const json::exception&) {
            throw ProviderError("provider response missing choices[0].message.content", false);
        }
    }

    std::string origin_;
    std::string path_prefix_;
    std::string api_key_;
    long timeout_seconds_ = 120;
};

std::string require_api_key(const ProviderConfig& config) {
    auto key = util::read_env(config.api_key_env);
    if (!key || key->empty()) {
        throw ProviderError("missing API key: set " + config.api_key_env, false);
    }
    return *key;
}

}  // namespace

Provider::Provider(ProviderConfig config) : config_(std::move(config)) {
    std::optional<MockScript> script;
    if (config_.script_path) {
        script = MockScript::from_file(*config_.script_path);
    }
    initialize(std::move(script));
}

Provider::Provider(ProviderConfig config, MockScript script) : config_(std::move(config)) {
    initialize(std::move(script));
}

Provider::~Provider() = default;
Provider::Provider(Provider&&) noexcept = default;
Provider& Provider::operator=(Provider&&) noexcept = default;

void Provider::initialize(std::optional<MockScript> script) {
    switch (config_.mode) {
        case ProviderMode::replay:
            if (!config_.cassette_path) {
                throw ValidationError("replay mode requires a cassette path");
            }
            transport_ = std::make_unique<ReplayTransport>(*config_.cassette_path);
            break;
        case ProviderMode::mock:
            if (!script) {
                throw ValidationError("mock mode requires a script");
            }
            transport_ = std::make_unique<ScriptTransport>(std::move(*script));
            recording_ = config_.cassette_path.has_value();
            break;
        case ProviderMode::record:
            if (!config_.cassette_path) {
                throw ValidationError("record mode requires a cassette path");
            }
            recording_ = true;
            if (script) {
                transport_ = std::make_unique<ScriptTransport>(std::move(*script));
            } else {
                transport_ = std::make_unique<HttpTransport>(
                    config_.base_url, require_api_key(config_), config_.timeout_seconds);
            }
            break;
        case ProviderMode::live:
            transport_ = std::make_unique<HttpTransport>(
                config_.base_url, require_api_key(config_), config_.timeout_seconds);
            break;
    }
}

CompletionResponse Provider::complete(const CompletionRequest& request) {
    static thread_local std::mt19937 rng{std::random_device{}()};
    std::uniform_real_distribution<double> jitter(0.0, 1.0);

    CompletionResponse response;
    int attempt = 0;
    while (true) {
        try {
            response = transport_->send(request);
            break;
        } catch (const ProviderError& error) {
            if (!error.retryable() || attempt >= config_.max_retries) throw;
            auto delay_ms =
                compute_backoff_ms(attempt, config_.retry_base_ms, config_.retry_cap_ms,
                                   jitter(rng));
            if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            ++attempt;
        }
    }

    ++call_count_;
    if (recording_ && config_.cassette_path) {
        json entry{{"digest", request_digest(request)},
                   {"request", wire_request_json(request)},
                   {"response", response_json(response)},
                   {"recorded_at", util::utc_timestamp()}};
        util::append_line(*config_.cassette_path, entry.dump());
    }
    return response;
}

Provider script_mock(std::vector<std::tuple<std::string, std::string, std::string>> entries,
                     ProviderConfig config) {
    MockScript script;
    for (auto& [stage_id, role, text] : entries) {
        script.add(stage_id, role, std::move(text));
    }
    config.mode = ProviderMode::mock;
    return Provider(std::move(config), std::move(script));
}

}  // namespace refine_loop
