#include "refine_loop/config.hpp"

#include <cctype>

#include "refine_loop/errors.hpp"
#include "refine_loop/util.hpp"

namespace refine_loop {

namespace {

[[noreturn]] void fail_at(std::size_t line_number, const std::string& message) {
    throw ValidationError("refine-loop.toml line " + std::to_string(line_number) + ": " +
                          message);
}

bool valid_key(const std::string& key) {
    if (key.empty()) return false;
    for (char c : key) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') {
            return false;
        }
    }
    return true;
}

std::string parse_quoted(const std::string& raw, std::size_t line_number) {
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
        char c = raw[i];
        if (c == '"') fail_at(line_number, "unexpected quote inside string");
        if (c == '\\') {
            if (i + 2 >= raw.size()) fail_at(line_number, "dangling escape");
            char next = raw[++i];
            switch (next) {
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                default: fail_at(line_number, std::string("unsupported escape \\") + next);
            }
        } else {
            out.push_back(c);
        }
    }
    return out;
}

TomlValue parse_value(const std::string& raw, std::size_t line_number) {
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
        return parse_quoted(raw, line_number);
    }
    if (raw == "true") return true;
    if (raw == "false") return false;
    bool looks_float = raw.find('.') != std::string::npos ||
                       raw.find('e') != std::string::npos ||
                       raw.find('E') != std::string::npos;
    try {
        std::size_t consumed = 0;
        if (looks_float) {
            double value = std::stod(raw, &consumed);
            if (consumed == raw.size()) return value;
        } else {
            long value = std::stol(raw, &consumed);
            if (consumed == raw.size()) return value;
        }
    } catch (const std::exception&) {
    }
    fail_at(line_number, "unparseable value: " + raw);
}

/// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
        if (c == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

}  // namespace

std::map<std::string, TomlValue> parse_toml_subset(const std::string& text) {
    std::map<std::string, TomlValue> values;
    std::string table;
    std::size_t line_number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        auto raw_line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        pos = end == std::string::npos ? text.size() + 1 : end + 1;
        ++line_number;

        auto line = util::trim(strip_comment(raw_line));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail_at(line_number, "unterminated table header");
            table = util::trim(line.substr(1, line.size() - 2));
            if (!valid_key(table)) fail_at(line_number, "invalid table name: " + table);
            continue;
        }

        auto eq = line.find('=');
        if (eq == std::string::npos) fail_at(line_number, "expected key = value");
        auto key = util::trim(line.substr(0, eq));
        auto value = util::trim(line.substr(eq + 1));
        if (!valid_key(key)) fail_at(line_number, "invalid key: " + key);
        if (value.empty()) fail_at(line_number, "missing value for key: " + key);

        auto full_key = table.empty() ? key : table + "." + key;
        if (values.count(full_key)) fail_at(line_number, "duplicate key: " + full_key);
        values.emplace(full_key, parse_value(value, line_number));
    }
    return values;
}

RunScope scope_from_string(const std::string& token) {
    if (token == "plan") return RunScope::planning_only;
    if (token == "code") return RunScope::coding_only;
    if (token == "all") return RunScope::full;
    throw ValidationError("invalid scope: " + token + " (expected plan, code, or all)");
}

namespace {

ProviderMode mode_from_string_or_throw(const std::string& token) {
    auto mode = provider_mode_from_string(token);
    if (!mode) {
        throw ValidationError("invalid mode: " + token +
                              " (expected live, record, replay, or mock)");
    }
    return *mode;
}

template <typename T>
T get_as(const TomlValue& value, const std::string& key, const char* expected) {
    if (const T* typed = std::get_if<T>(&value)) return *typed;
    throw ValidationError("config key " + key + " must be " + expected);
}

long get_integer(const TomlValue& value, const std::string& key) {
    return get_as<long>(value, key, "an integer");
}

std::string get_string(const TomlValue& value, const std::string& key) {
    return get_as<std::string>(value, key, "a string");
}

bool get_bool(const TomlValue& value, const std::string& key) {
    return get_as<bool>(value, key, "a boolean");
}

double get_number(const TomlValue& value, const std::string& key) {
    if (const double* typed = std::get_if<double>(&value)) return *typed;
    if (const long* typed = std::get_if<long>(&value)) return static_cast<double>(*typed);
    throw ValidationError("config key " + key + " must be a number");
}

}  // namespace

void apply_config_file(CliConfig& config, const std::filesystem::path& path) {
    std::string text;
    if (!util::read_file(path, text)) return;

    for (const auto& [key, value] : parse_toml_subset(text)) {
        if (key == "provider.mode") {
            config.mode = mode_from_string_or_throw(get_string(value, key));
        } else if (key == "provider.model") {
            config.model = get_string(value, key);
        } else if (key == "provider.base_url") {
            config.base_url = get_string(value, key);
        } else if (key == "provider.api_key_env") {
            config.api_key_env = get_string(value, key);
        } else if (key == "provider.cassette") {
            config.cassette = get_string(value, key);
        } else if (key == "provider.script") {
            config.script = get_string(value, key);
        } else if (key == "provider.max_retries") {
            config.max_retries = static_cast<int>(get_integer(value, key));
        } else if (key == "provider.timeout_seconds") {
            config.timeout_seconds = get_integer(value, key);
        } else if (key == "provider.temperature") {
            config.temperature = get_number(value, key);
        } else if (key == "provider.max_tokens") {
            config.max_tokens = get_integer(value, key);
        } else if (key == "run.scope") {
            config.scope = scope_from_string(get_string(value, key));
        } else if (key == "run.budget") {
            config.budget = get_integer(value, key);
        } else if (key == "run.max_iterations") {
            config.max_iterations = static_cast<int>(get_integer(value, key));
        } else if (key == "run.generate_missing") {
            config.generate_missing = get_bool(value, key);
        } else {
            throw ValidationError("unknown config key: " + key);
        }
    }
}

void apply_env_overrides(CliConfig& config) {
    if (auto model = util::read_env("REFINE_LOOP_MODEL")) config.model = *model;
    if (auto base_url = util::read_env("REFINE_LOOP_BASE_URL")) config.base_url = *base_url;
    if (auto mode = util::read_env("REFINE_LOOP_MODE")) {
        config.mode = mode_from_string_or_throw(*mode);
    }
    if (auto budget = util::read_env("REFINE_LOOP_BUDGET")) {
        try {
            std::size_t consumed = 0;
            config.budget = std::stol(*budget, &consumed);
            if (consumed != budget->size()) throw std::invalid_argument(*budget);
        } catch (const std::exception&) {
            throw ValidationError("REFINE_LOOP_BUDGET is not an integer: " + *budget);
        }
    }
    if (auto cassette = util::read_env("REFINE_LOOP_CASSETTE")) config.cassette = *cassette;
}

ProviderConfig provider_config_from(const CliConfig& config) {
    ProviderConfig provider;
    provider.base_url = config.base_url;
    provider.model_name = config.model;
    provider.api_key_env = config.api_key_env;
    provider.timeout_seconds = config.timeout_seconds;
    provider.max_retries = config.max_retries;
    provider.mode = config.mode;
    provider.cassette_path = config.cassette;
    provider.script_path = config.script;
    provider.temperature = config.temperature;
    provider.max_tokens = config.max_tokens;
    return provider;
}

std::string default_config_toml() {
    return R"(# refine-loop settings; command-line flags and REFINE_LOOP_* environment
# variables override everything here.

[provider]
mode = "mock"
model = "gpt-4.1"
base_url = "https://api.openai.com/v1"
api_key_env = "LLM_API_KEY"
max_retries = 3
timeout_seconds = 120

[run]
scope = "all"
budget = 0
max_iterations = 1
generate_missing = false
)";
}

}  // namespace refine_loop
