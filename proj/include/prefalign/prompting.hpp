#pragma once

/**
 * Assembles the ICL contexts the scorers compare: the expert context
 * (instruction header + positive demonstration blocks + test block), the
 * negative context (same layout with the adversarial wording and the
 * rejected responses) and the zero-shot reference context (test block
 * under the bare scaffold, no instruction header, undecorated trigger).
 *
 * The rendered layouts are frozen by golden files under templates/; any
 * template change requires regenerating the goldens deliberately.
 */

#include "prefalign/corpus.hpp"

#include <optional>
#include <string>
#include <vector>

namespace prefalign {

struct Demonstration {
    std::string context;
    std::optional<std::string> positive_response;
    std::optional<std::string> negative_response;
    std::string id;
};

Demonstration demonstration_from(const PreferenceRecord& record);

// Style vocabularies fixed by the templates; the i-th negative word is
// the counterpart of the i-th positive word.
const std::vector<std::string>& positive_style_words();
const std::vector<std::string>& negative_style_words();
std::string negative_style_for(const std::string& positive_word);

std::string render_positive_context(const std::vector<Demonstration>& demos,
                                    const std::string& x, const std::string& style_word);
std::string render_negative_context(const std::vector<Demonstration>& demos,
                                    const std::string& x, const std::string& style_word);
std::string render_zero_shot(const std::string& x);
// Ablation variant: the reference keeps the instruction scaffold.
std::string render_zero_shot_with_header(const std::string& x, const std::string& style_word);

// The contexts one candidate is scored under.
struct PromptBundle {
    std::string expert_context;
    std::optional<std::string> negative_context;
    std::string zero_shot_context;
    std::vector<std::string> demo_ids;
};

struct BundleOptions {
    std::string style_word = "polite";
    // Defaults to the positional counterpart of style_word.
    std::optional<std::string> negative_style_word;
    bool zero_shot_header = false;
    bool need_negative = false;
};

PromptBundle assemble_bundle(const std::vector<Demonstration>& demos, const std::string& x,
                             const BundleOptions& opts);

}  // namespace prefalign
