#pragma once

#include <cstddef>

namespace dqe::unicode_tables {

struct DecompEntry {
    char32_t cp;
    unsigned offset;
    unsigned length;
};

struct CccEntry {
    char32_t cp;
    unsigned char ccc;
};

struct CompEntry {
    char32_t first;
    char32_t second;
    char32_t composite;
};

extern const DecompEntry kDecompIndex[];
extern const std::size_t kDecompIndex_count;
extern const char32_t kDecompPool[];
extern const std::size_t kDecompPool_count;
extern const CccEntry kCombiningClass[];
extern const std::size_t kCombiningClass_count;
extern const CompEntry kCompositionPairs[];
extern const std::size_t kCompositionPairs_count;

}  // namespace dqe::unicode_tables
