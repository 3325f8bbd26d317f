#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include "dqe/unicode.hpp"

#include "nfc_vectors.inc"

using namespace dqe;

TEST_CASE("nfc matches reference vectors") {
    for (const auto& c : kNfcCases) {
        CAPTURE(c.input);
        CHECK(nfc(c.input) == c.expected);
    }
}

TEST_CASE("nfc is idempotent on the vectors") {
    for (const auto& c : kNfcCases) {
        std::string once = nfc(c.input);
        CHECK(nfc(once) == once);
    }
}

TEST_CASE("nfc leaves malformed utf-8 untouched") {
    std::string bad = "abc\xff\xfe";
    CHECK(nfc(bad) == bad);
    std::string truncated = "caf\xc3";
    CHECK(nfc(truncated) == truncated);
}

TEST_CASE("trim strips unicode whitespace") {
    CHECK(trim_whitespace("  hello  ") == "hello");
    CHECK(trim_whitespace("\t\r\nx\n") == "x");
    CHECK(trim_whitespace("\xc2\xa0padded\xc2\xa0") == "padded");  // NBSP
    CHECK(trim_whitespace("\xe3\x80\x80wide\xe3\x80\x80") == "wide");  // ideographic space
    CHECK(trim_whitespace("inner  space") == "inner  space");
    CHECK(trim_whitespace("") == "");
    CHECK(trim_whitespace(" \t ") == "");
}

TEST_CASE("is_blank") {
    CHECK(is_blank(""));
    CHECK(is_blank("   \t\n"));
    CHECK(is_blank("\xc2\xa0"));
    CHECK_FALSE(is_blank(" x "));
}
