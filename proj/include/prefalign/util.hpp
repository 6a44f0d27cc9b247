#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace prefalign {

// Whitespace tokenizer shared by the toy LM and length filtering.
std::vector<std::string> split_whitespace(std::string_view text);

std::size_t count_whitespace_tokens(std::string_view text);

// Retrieval tokenizer: lowercased, split on whitespace and punctuation.
// Independent of any LM tokenizer; BM25 works on surface words.
std::vector<std::string> retrieval_tokens(std::string_view text);

// FNV-1a 64-bit. Stable across platforms; used for cache keys, pool
// content hashes and seed derivation. Not cryptographic.
std::uint64_t fnv1a64(std::string_view data,
                      std::uint64_t state = 0xcbf29ce484222325ull);

std::string to_hex(std::uint64_t v);

// Derives a subsystem seed from the root seed so a change in one
// subsystem never perturbs draws in another.
std::uint64_t split_seed(std::uint64_t root, std::string_view subsystem);
std::uint64_t split_seed(std::uint64_t root, std::string_view subsystem,
                         std::uint64_t index);

// Deterministic uniform double in [0,1) from one raw 64-bit draw.
// Avoids std::uniform_real_distribution, whose output is
// implementation-defined.
double uniform01(std::uint64_t raw);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
std::vector<std::string> read_lines(const std::string& path);

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

void set_log_level(LogLevel level);
void set_log_level(const std::string& name);  // ConfigError on unknown name
LogLevel log_level();
void log_warn(const std::string& message);
void log_info(const std::string& message);

}  // namespace prefalign
