#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace prefalign {

enum class RecordSource { original, teacher };

std::string to_string(RecordSource source);
RecordSource record_source_from_string(const std::string& name);

// One prompt with a chosen and a rejected response; the unit of both
// corpora and demonstration pools.
struct PreferenceRecord {
    std::string prompt;
    std::string chosen;
    std::string rejected;
    std::string id;
    RecordSource source = RecordSource::original;

    bool operator==(const PreferenceRecord&) const = default;
};

// Token budgets for corpus filtering. Both maxima are inclusive.
struct LengthFilter {
    std::size_t max_prompt_tokens = 320;
    std::size_t max_response_tokens = 128;
    std::string tokenizer_id = "whitespace";

    void validate() const;

    static LengthFilter hh_rlhf();        // 320 / 128
    static LengthFilter synthetic_gpt();  // 128 / 200
};

using TokenCounter = std::function<std::size_t(std::string_view)>;

// JSONL loading: one object per line with keys prompt/chosen/rejected and
// optional id/source. Ids default to the 1-based line number. Errors name
// the offending line (and field, when one is missing).
std::vector<PreferenceRecord> parse_preference_records(const std::string& jsonl,
                                                       const std::string& origin);
std::vector<PreferenceRecord> load_preference_records(const std::string& path);

std::string to_jsonl(const std::vector<PreferenceRecord>& records);
void save_preference_records(const std::string& path,
                             const std::vector<PreferenceRecord>& records);

// Keeps exactly the records whose prompt and both responses fit the
// budgets; preserves order. The counter hook lets callers plug a
// backend-specific tokenizer; the default counts whitespace tokens.
std::vector<PreferenceRecord> filter_by_length(const std::vector<PreferenceRecord>& records,
                                               const LengthFilter& filter,
                                               const TokenCounter& count_tokens);
std::vector<PreferenceRecord> filter_by_length(const std::vector<PreferenceRecord>& records,
                                               const LengthFilter& filter);

// Stable content hash of a record list (used to key index sidecars).
std::uint64_t content_hash(const std::vector<PreferenceRecord>& records);

}  // namespace prefalign
