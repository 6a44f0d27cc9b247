#include "prefalign/util.hpp"

#include "prefalign/errors.hpp"

#include <atomic>
#include <cctype>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

namespace prefalign {

std::vector<std::string> split_whitespace(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) out.emplace_back(text.substr(start, i - start));
    }
    return out;
}

std::size_t count_whitespace_tokens(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (char c : text) {
        bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!ws && !in_token) ++count;
        in_token = !ws;
    }
    return count;
}

std::vector<std::string> retrieval_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc) || uc >= 0x80) {
            cur.push_back(static_cast<char>(std::tolower(uc)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t state) {
    constexpr std::uint64_t prime = 0x100000001b3ull;
    for (unsigned char c : data) {
        state ^= c;
        state *= prime;
    }
    return state;
}

std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

std::uint64_t split_seed(std::uint64_t root, std::string_view subsystem) {
    std::uint64_t state = fnv1a64(subsystem);
    for (int i = 0; i < 8; ++i) {
        char byte = static_cast<char>((root >> (8 * i)) & 0xff);
        state = fnv1a64(std::string_view(&byte, 1), state);
    }
    return state;
}

std::uint64_t split_seed(std::uint64_t root, std::string_view subsystem,
                         std::uint64_t index) {
    std::uint64_t state = split_seed(root, subsystem);
    for (int i = 0; i < 8; ++i) {
        char byte = static_cast<char>((index >> (8 * i)) & 0xff);
        state = fnv1a64(std::string_view(&byte, 1), state);
    }
    return state;
}

double uniform01(std::uint64_t raw) {
    return static_cast<double>(raw >> 11) * 0x1.0p-53;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("short write: " + path);
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

namespace {
std::atomic<LogLevel> g_log_level{LogLevel::info};
std::mutex g_log_mutex;
}  // namespace

void set_log_level(LogLevel level) { g_log_level.store(level); }

void set_log_level(const std::string& name) {
    if (name == "error") set_log_level(LogLevel::error);
    else if (name == "warn") set_log_level(LogLevel::warn);
    else if (name == "info") set_log_level(LogLevel::info);
    else if (name == "debug") set_log_level(LogLevel::debug);
    else throw ConfigError("unknown log level: " + name);
}

LogLevel log_level() { return g_log_level.load(); }

void log_warn(const std::string& message) {
    if (log_level() >= LogLevel::warn) {
        std::lock_guard lock(g_log_mutex);
        std::cerr << "[prefalign] warning: " << message << "\n";
    }
}

void log_info(const std::string& message) {
    if (log_level() >= LogLevel::info) {
        std::lock_guard lock(g_log_mutex);
        std::cerr << "[prefalign] " << message << "\n";
    }
}

}  // namespace prefalign
