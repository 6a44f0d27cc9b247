#include "prefalign/util.hpp"

#include <doctest.h>

using namespace prefalign;

TEST_CASE("whitespace tokenizer") {
    CHECK(split_whitespace("  a b\tc\nd  ") == std::vector<std::string>{"a", "b", "c", "d"});
    CHECK(split_whitespace("").empty());
    CHECK(count_whitespace_tokens(" one  two ") == 2);
}

TEST_CASE("retrieval tokenizer lowercases and splits on punctuation") {
    CHECK(retrieval_tokens("Hello, World! it's-me") ==
          std::vector<std::string>{"hello", "world", "it", "s", "me"});
    CHECK(retrieval_tokens("a1B2") == std::vector<std::string>{"a1b2"});
}

TEST_CASE("fnv hash is stable and separates inputs") {
    CHECK(fnv1a64("abc") == fnv1a64("abc"));
    CHECK(fnv1a64("abc") != fnv1a64("abd"));
    CHECK(to_hex(fnv1a64("abc")).size() == 16);
}

TEST_CASE("seed splitting isolates subsystems") {
    auto root = 42ull;
    CHECK(split_seed(root, "generation") != split_seed(root, "retrieval"));
    CHECK(split_seed(root, "generation", 0) != split_seed(root, "generation", 1));
    CHECK(split_seed(root, "generation", 3) == split_seed(root, "generation", 3));
    CHECK(split_seed(1, "generation") != split_seed(2, "generation"));
}

TEST_CASE("uniform01 maps raw draws into [0,1)") {
    CHECK(uniform01(0) == 0.0);
    CHECK(uniform01(~0ull) < 1.0);
    CHECK(uniform01(~0ull) > 0.999999);
}
