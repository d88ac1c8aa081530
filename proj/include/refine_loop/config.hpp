#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "refine_loop/gateway.hpp"
#include "refine_loop/orchestrator.hpp"

namespace refine_loop {

using TomlValue = std::variant<std::string, long, double, bool>;

/// Minimal TOML subset: comments, [table] headers, and string / integer /
/// float / boolean values. Keys flatten to "table.key". Arrays, dates, and
/// multi-line strings are not supported.
std::map<std::string, TomlValue> parse_toml_subset(const std::string& text);

/// Effective settings after precedence resolution:
/// flags > environment > refine-loop.toml > defaults.
struct CliConfig {
    std::filesystem::path workspace = ".";
    RunScope scope = RunScope::full;
    ProviderMode mode = ProviderMode::mock;
    std::optional<std::filesystem::path> cassette;
    std::optional<std::filesystem::path> script;
    std::string model = "gpt-4.1";
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key_env = "LLM_API_KEY";
    long budget = 0;  // prompt token budget, 0 = unlimited
    int max_iterations = 1;
    bool generate_missing = false;
    bool fresh = false;
    double temperature = 0.0;
    long max_tokens = 8192;
    int max_retries = 3;
    long timeout_seconds = 120;
};

/// Overlays refine-loop.toml onto config. Unknown keys are rejected so typos
/// fail loudly. Missing file is a no-op.
void apply_config_file(CliConfig& config, const std::filesystem::path& path);

/// REFINE_LOOP_MODEL / _BASE_URL / _MODE / _BUDGET / _CASSETTE overrides.
void apply_env_overrides(CliConfig& config);

RunScope scope_from_string(const std::string& token);

ProviderConfig provider_config_from(const CliConfig& config);

/// Template refine-loop.toml written by `init`.
std::string default_config_toml();

}  // namespace refine_loop
