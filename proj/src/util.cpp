#include "refine_loop/util.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "refine_loop/errors.hpp"

namespace refine_loop::util {

namespace fs = std::filesystem;

std::string trim(std::string_view text) {
    size_t begin = 0;
    size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

std::string strip_outer_blank_lines(std::string_view text) {
    size_t begin = 0;
    size_t end = text.size();
    // Drop leading blank lines.
    size_t cursor = 0;
    size_t line_start = 0;
    while (cursor <= text.size()) {
        if (cursor == text.size() || text[cursor] == '\n') {
            std::string_view line = text.substr(line_start, cursor - line_start);
            bool blank = std::all_of(line.begin(), line.end(), [](char c) {
                return std::isspace(static_cast<unsigned char>(c));
            });
            if (!blank) break;
            if (cursor == text.size()) {
                begin = text.size();
                break;
            }
            line_start = cursor + 1;
            begin = line_start;
        }
        ++cursor;
    }
    // Drop trailing whitespace down to the last non-blank line's end.
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

bool read_file(const fs::path& path, std::string& out) {
    std::ifstream stream(path, std::ios::binary);
    if (!stream) return false;
    std::ostringstream buffer;
    buffer << stream.rdbuf();
    out = buffer.str();
    return true;
}

std::string read_file_or_throw(const fs::path& path, const std::string& label) {
    std::string content;
    if (!read_file(path, content)) {
        throw ValidationError(label + " not found: " + path.string());
    }
    return content;
}

void atomic_write_file(const fs::path& path, std::string_view content) {
    fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream stream(tmp, std::ios::binary | std::ios::trunc);
        if (!stream) throw std::runtime_error("cannot write " + tmp.string());
        stream.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!stream) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

void append_line(const fs::path& path, std::string_view line) {
    fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    std::ofstream stream(path, std::ios::binary | std::ios::app);
    if (!stream) throw std::runtime_error("cannot append to " + path.string());
    stream.write(line.data(), static_cast<std::streamsize>(line.size()));
    stream.put('\n');
}

std::optional<std::string> read_env(const std::string& name) {
    const char* value = std::getenv(name.c_str());
    if (!value) return std::nullopt;
    return std::string(value);
}

std::string utc_timestamp() {
    using namespace std::chrono;
    auto now = system_clock::now();
    std::time_t tt = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string random_run_id() {
    static const char* hex = "0123456789abcdef";
    std::random_device rd;
    std::mt19937_64 rng(rd());
    std::uniform_int_distribution<int> dist(0, 15);
    std::string suffix;
    for (int i = 0; i < 8; ++i) suffix.push_back(hex[dist(rng)]);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::system_clock::now().time_since_epoch())
                  .count();
    return "run-" + std::to_string(ms) + "-" + suffix;
}

}  // namespace refine_loop::util
