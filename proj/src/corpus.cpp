#include "prefalign/corpus.hpp"

#include "prefalign/errors.hpp"
#include "prefalign/util.hpp"

#include <json.hpp>

#include <sstream>

namespace prefalign {

using nlohmann::json;

std::string to_string(RecordSource source) {
    return source == RecordSource::original ? "original" : "teacher";
}

RecordSource record_source_from_string(const std::string& name) {
    if (name == "original") return RecordSource::original;
    if (name == "teacher") return RecordSource::teacher;
    throw DataError("unknown record source: " + name);
}

void LengthFilter::validate() const {
    if (max_prompt_tokens == 0 || max_response_tokens == 0)
        throw ConfigError("length filter maxima must be positive");
}

LengthFilter LengthFilter::hh_rlhf() { return LengthFilter{320, 128, "whitespace"}; }

LengthFilter LengthFilter::synthetic_gpt() { return LengthFilter{128, 200, "whitespace"}; }

namespace {

std::string require_string_field(const json& obj, const char* key, std::size_t line_no,
                                 const std::string& origin) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw DataError(origin + " line " + std::to_string(line_no) +
                        ": missing required field \"" + key + "\"");
    if (!it->is_string())
        throw DataError(origin + " line " + std::to_string(line_no) + ": field \"" + key +
                        "\" must be a string");
    return it->get<std::string>();
}

}  // namespace

std::vector<PreferenceRecord> parse_preference_records(const std::string& jsonl,
                                                       const std::string& origin) {
    std::vector<PreferenceRecord> records;
    std::istringstream in(jsonl);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object())
            throw DataError(origin + " line " + std::to_string(line_no) +
                            ": malformed JSON object");

        PreferenceRecord rec;
        rec.prompt = require_string_field(obj, "prompt", line_no, origin);
        rec.chosen = require_string_field(obj, "chosen", line_no, origin);
        rec.rejected = require_string_field(obj, "rejected", line_no, origin);
        if (rec.prompt.empty())
            throw DataError(origin + " line " + std::to_string(line_no) +
                            ": field \"prompt\" must be non-empty");
        if (auto it = obj.find("id"); it != obj.end()) {
            if (it->is_string()) rec.id = it->get<std::string>();
            else if (it->is_number_integer()) rec.id = std::to_string(it->get<long long>());
            else
                throw DataError(origin + " line " + std::to_string(line_no) +
                                ": field \"id\" must be a string or integer");
        } else {
            rec.id = std::to_string(line_no);
        }
        if (auto it = obj.find("source"); it != obj.end()) {
            if (!it->is_string())
                throw DataError(origin + " line " + std::to_string(line_no) +
                                ": field \"source\" must be a string");
            try {
                rec.source = record_source_from_string(it->get<std::string>());
            } catch (const DataError&) {
                throw DataError(origin + " line " + std::to_string(line_no) +
                                ": field \"source\" must be \"original\" or \"teacher\"");
            }
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<PreferenceRecord> load_preference_records(const std::string& path) {
    return parse_preference_records(read_file(path), path);
}

std::string to_jsonl(const std::vector<PreferenceRecord>& records) {
    std::string out;
    for (const auto& rec : records) {
        json obj;
        obj["prompt"] = rec.prompt;
        obj["chosen"] = rec.chosen;
        obj["rejected"] = rec.rejected;
        obj["id"] = rec.id;
        obj["source"] = to_string(rec.source);
        out += obj.dump();
        out += '\n';
    }
    return out;
}

void save_preference_records(const std::string& path,
                             const std::vector<PreferenceRecord>& records) {
    write_file(path, to_jsonl(records));
}

std::vector<PreferenceRecord> filter_by_length(const std::vector<PreferenceRecord>& records,
                                               const LengthFilter& filter,
                                               const TokenCounter& count_tokens) {
    filter.validate();
    std::vector<PreferenceRecord> kept;
    kept.reserve(records.size());
    for (const auto& rec : records) {
        if (count_tokens(rec.prompt) <= filter.max_prompt_tokens &&
            count_tokens(rec.chosen) <= filter.max_response_tokens &&
            count_tokens(rec.rejected) <= filter.max_response_tokens)
            kept.push_back(rec);
    }
    return kept;
}

std::vector<PreferenceRecord> filter_by_length(const std::vector<PreferenceRecord>& records,
                                               const LengthFilter& filter) {
    return filter_by_length(records, filter,
                            [](std::string_view text) { return count_whitespace_tokens(text); });
}

std::uint64_t content_hash(const std::vector<PreferenceRecord>& records) {
    return fnv1a64(to_jsonl(records));
}

}  // namespace prefalign
