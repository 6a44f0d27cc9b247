#include "prefalign/prompting.hpp"

#include "prefalign/corpus.hpp"
#include "prefalign/errors.hpp"
#include "prefalign/util.hpp"

#include <doctest.h>

#include <string>

using namespace prefalign;

namespace {

const std::string kSourceDir = PREFALIGN_SOURCE_DIR;

std::vector<Demonstration> fixture_demos() {
    auto records = load_preference_records(kSourceDir + "/templates/fixtures/demos.jsonl");
    std::vector<Demonstration> demos;
    for (const auto& rec : records) demos.push_back(demonstration_from(rec));
    return demos;
}

std::string fixture_query() {
    return read_file(kSourceDir + "/templates/fixtures/query.txt");
}

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

void replace_all(std::string& text, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
}

}  // namespace

TEST_CASE("positive render matches the golden file byte for byte") {
    auto rendered = render_positive_context(fixture_demos(), fixture_query(), "polite");
    auto golden = read_file(kSourceDir + "/templates/positive_2demo.txt");
    CHECK(rendered == golden);
}

TEST_CASE("negative render matches the golden file byte for byte") {
    auto rendered = render_negative_context(fixture_demos(), fixture_query(), "offensive");
    auto golden = read_file(kSourceDir + "/templates/negative_2demo.txt");
    CHECK(rendered == golden);
}

TEST_CASE("zero demonstrations renders header plus test block") {
    auto rendered = render_positive_context({}, "Human: hi\nAssistant:", "polite");
    CHECK(rendered.rfind("#You are asked", 0) == 0);
    CHECK(count_occurrences(rendered, "\n\n##\n\n") == 1);
    CHECK(rendered.find("Human: hi\nAssistant:") != std::string::npos);
    // Trigger line closes the prompt with no response text.
    CHECK(rendered.rfind("###Generate a **polite** response:") ==
          rendered.size() - std::string("###Generate a **polite** response:").size());
}

TEST_CASE("demo order is significant") {
    auto demos = fixture_demos();
    auto forward = render_positive_context(demos, fixture_query(), "polite");
    std::swap(demos[0], demos[1]);
    auto reversed = render_positive_context(demos, fixture_query(), "polite");
    CHECK(forward != reversed);
}

TEST_CASE("positive and negative renders differ only in style words and responses") {
    auto demos = fixture_demos();
    auto x = fixture_query();
    auto positive = render_positive_context(demos, x, "polite");
    auto negative = render_negative_context(demos, x, "offensive");

    std::string transformed = positive;
    replace_all(transformed, "**polite**", "**offensive**");
    replace_all(transformed, "Generate a **offensive**", "Generate an **offensive**");
    for (const auto& demo : demos)
        replace_all(transformed, *demo.positive_response, *demo.negative_response);
    CHECK(transformed == negative);
}

TEST_CASE("missing response fields name the demo") {
    Demonstration demo{"ctx", std::nullopt, std::string("neg"), "demo-7"};
    try {
        render_positive_context({demo}, "x", "polite");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("demo-7") != std::string::npos);
    }
    CHECK_THROWS_AS(
        render_negative_context({Demonstration{"ctx", std::string("pos"), std::nullopt, "d"}},
                                "x", "offensive"),
        DataError);
}

TEST_CASE("zero-shot scaffold is deterministic and header-free") {
    const std::string x = "Human: hi\nAssistant:";
    auto a = render_zero_shot(x);
    auto b = render_zero_shot(x);
    CHECK(a == b);
    CHECK(a.find("#You are asked") == std::string::npos);
    CHECK(a.find("**") == std::string::npos);
    CHECK(a == "##\n\n" + x + "\n\n###Generate a response:");
    CHECK(render_zero_shot("other") != a);
}

TEST_CASE("zero-shot is the headerless positive scaffold modulo the trigger decoration") {
    const std::string x = "Human: hi\nAssistant:";
    auto with_header = render_positive_context({}, x, "polite");
    auto header_end = with_header.find("\n\n");
    REQUIRE(header_end != std::string::npos);
    std::string stripped = with_header.substr(header_end + 2);
    replace_all(stripped, "a **polite** response:", "a response:");
    CHECK(stripped == render_zero_shot(x));
}

TEST_CASE("style vocabulary is enforced and paired") {
    CHECK_THROWS_AS(render_positive_context({}, "x", "rude"), ConfigError);
    CHECK_THROWS_AS(render_negative_context({}, "x", "polite"), ConfigError);
    CHECK(negative_style_for("polite") == "offensive");
    CHECK(negative_style_for("harmless") == "harmful");
    CHECK(negative_style_for("helpful") == "helpless");
    CHECK(negative_style_for("honest") == "misleading");
}

TEST_CASE("bundle invariants") {
    auto demos = fixture_demos();
    auto x = fixture_query();
    BundleOptions opts;
    opts.style_word = "polite";
    opts.need_negative = true;
    auto bundle = assemble_bundle(demos, x, opts);

    CHECK(bundle.demo_ids == std::vector<std::string>{"demo-1", "demo-2"});
    // Rendered text order matches demo_ids order.
    CHECK(bundle.expert_context.find(demos[0].context) <
          bundle.expert_context.find(demos[1].context));
    // Each positive response exactly once, the test prompt exactly once.
    for (const auto& demo : demos)
        CHECK(count_occurrences(bundle.expert_context, *demo.positive_response) == 1);
    CHECK(count_occurrences(bundle.expert_context, x) == 1);
    // Zero-shot context carries no demonstration blocks.
    for (const auto& demo : demos)
        CHECK(bundle.zero_shot_context.find(demo.context) == std::string::npos);
    REQUIRE(bundle.negative_context.has_value());
    CHECK(bundle.negative_context->find("**offensive**") != std::string::npos);

    // Ablation flag: the reference keeps the instruction scaffold.
    opts.zero_shot_header = true;
    auto ablated = assemble_bundle(demos, x, opts);
    CHECK(ablated.zero_shot_context == render_positive_context({}, x, "polite"));
}
