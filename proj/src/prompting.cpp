#include "prefalign/prompting.hpp"

#include "prefalign/errors.hpp"

#include <algorithm>

namespace prefalign {

namespace {

const std::vector<std::string> kPositiveWords = {"polite", "harmless", "helpful", "honest"};
const std::vector<std::string> kNegativeWords = {"offensive", "harmful", "helpless",
                                                 "misleading"};

void require_style(const std::vector<std::string>& vocabulary, const std::string& word,
                   const char* which) {
    if (std::find(vocabulary.begin(), vocabulary.end(), word) == vocabulary.end())
        throw ConfigError(std::string("style word \"") + word + "\" not in the " + which +
                          " template vocabulary");
}

std::string header_line(const std::string& style_word) {
    return "#You are asked to generate a response for each given dialogue context. The last "
           "response is generated by you, which should be as **" +
           style_word + "** as possible:";
}

// The positive template fixes the article "a", the negative "an",
// independent of the chosen word.
std::string trigger_line(const std::string& style_word, bool negative) {
    return std::string("###Generate ") + (negative ? "an" : "a") + " **" + style_word +
           "** response:";
}

std::string render(const std::vector<Demonstration>& demos, const std::string& x,
                   const std::string& style_word, bool negative) {
    require_style(negative ? kNegativeWords : kPositiveWords, style_word,
                  negative ? "negative" : "positive");
    std::string out = header_line(style_word);
    for (const auto& demo : demos) {
        const auto& response = negative ? demo.negative_response : demo.positive_response;
        if (!response)
            throw DataError("demonstration \"" + demo.id + "\" has no " +
                            (negative ? "negative" : "positive") + " response");
        out += "\n\n##\n\n" + demo.context + "\n\n" + trigger_line(style_word, negative) +
               " " + *response;
    }
    out += "\n\n##\n\n" + x + "\n\n" + trigger_line(style_word, negative);
    return out;
}

}  // namespace

Demonstration demonstration_from(const PreferenceRecord& record) {
    return Demonstration{record.prompt, record.chosen, record.rejected, record.id};
}

const std::vector<std::string>& positive_style_words() { return kPositiveWords; }

const std::vector<std::string>& negative_style_words() { return kNegativeWords; }

std::string negative_style_for(const std::string& positive_word) {
    for (std::size_t i = 0; i < kPositiveWords.size(); ++i)
        if (kPositiveWords[i] == positive_word) return kNegativeWords[i];
    throw ConfigError("style word \"" + positive_word +
                      "\" not in the positive template vocabulary");
}

std::string render_positive_context(const std::vector<Demonstration>& demos,
                                    const std::string& x, const std::string& style_word) {
    return render(demos, x, style_word, false);
}

std::string render_negative_context(const std::vector<Demonstration>& demos,
                                    const std::string& x, const std::string& style_word) {
    return render(demos, x, style_word, true);
}

std::string render_zero_shot(const std::string& x) {
    // Bare scaffold: block structure and an undecorated trigger, no
    // instruction header. The trigger keeps the token immediately before
    // the completion identical across all rendered contexts.
    return "##\n\n" + x + "\n\n###Generate a response:";
}

std::string render_zero_shot_with_header(const std::string& x, const std::string& style_word) {
    return render_positive_context({}, x, style_word);
}

PromptBundle assemble_bundle(const std::vector<Demonstration>& demos, const std::string& x,
                             const BundleOptions& opts) {
    PromptBundle bundle;
    bundle.expert_context = render_positive_context(demos, x, opts.style_word);
    if (opts.need_negative) {
        const std::string neg_word =
            opts.negative_style_word ? *opts.negative_style_word
                                     : negative_style_for(opts.style_word);
        bundle.negative_context = render_negative_context(demos, x, neg_word);
    }
    bundle.zero_shot_context = opts.zero_shot_header
                                   ? render_zero_shot_with_header(x, opts.style_word)
                                   : render_zero_shot(x);
    for (const auto& demo : demos) bundle.demo_ids.push_back(demo.id);
    return bundle;
}

}  // namespace prefalign
