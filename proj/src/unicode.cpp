#include "dqe/unicode.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

#include "unicode_tables.hpp"

namespace dqe {
namespace {

using unicode_tables::CccEntry;
using unicode_tables::CompEntry;
using unicode_tables::DecompEntry;

constexpr char32_t kHangulSBase = 0xAC00;
constexpr char32_t kHangulLBase = 0x1100;
constexpr char32_t kHangulVBase = 0x1161;
constexpr char32_t kHangulTBase = 0x11A7;
constexpr int kHangulLCount = 19;
constexpr int kHangulVCount = 21;
constexpr int kHangulTCount = 28;
constexpr int kHangulNCount = kHangulVCount * kHangulTCount;
constexpr int kHangulSCount = kHangulLCount * kHangulNCount;

int combining_class(char32_t cp) {
    const CccEntry* first = unicode_tables::kCombiningClass;
    const CccEntry* last = first + unicode_tables::kCombiningClass_count;
    auto it = std::lower_bound(first, last, cp, [](const CccEntry& e, char32_t c) {
        return e.cp < c;
    });
    if (it != last && it->cp == cp) return it->ccc;
    return 0;
}

const DecompEntry* find_decomposition(char32_t cp) {
    const DecompEntry* first = unicode_tables::kDecompIndex;
    const DecompEntry* last = first + unicode_tables::kDecompIndex_count;
    auto it = std::lower_bound(first, last, cp, [](const DecompEntry& e, char32_t c) {
        return e.cp < c;
    });
    if (it != last && it->cp == cp) return it;
    return nullptr;
}

// Pairwise canonical composition; 0 means the pair does not compose.
char32_t compose_pair(char32_t a, char32_t b) {
    // Hangul L+V and LV+T are algorithmic.
    if (a >= kHangulLBase && a < kHangulLBase + kHangulLCount &&
        b >= kHangulVBase && b < kHangulVBase + kHangulVCount) {
        int l = static_cast<int>(a - kHangulLBase);
        int v = static_cast<int>(b - kHangulVBase);
        return kHangulSBase + static_cast<char32_t>((l * kHangulVCount + v) * kHangulTCount);
    }
    if (a >= kHangulSBase && a < kHangulSBase + kHangulSCount &&
        (a - kHangulSBase) % kHangulTCount == 0 &&
        b > kHangulTBase && b < kHangulTBase + kHangulTCount) {
        return a + (b - kHangulTBase);
    }
    const CompEntry* first = unicode_tables::kCompositionPairs;
    const CompEntry* last = first + unicode_tables::kCompositionPairs_count;
    auto it = std::lower_bound(first, last, a, [](const CompEntry& e, char32_t c) {
        return e.first < c;
    });
    for (; it != last && it->first == a; ++it) {
        if (it->second == b) return it->composite;
    }
    return 0;
}

bool decode_utf8(std::string_view s, std::vector<char32_t>& out) {
    out.clear();
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        char32_t cp;
        std::size_t len;
        if (c < 0x80) {
            cp = c;
            len = 1;
        } else if ((c & 0xE0) == 0xC0) {
            cp = c & 0x1F;
            len = 2;
        } else if ((c & 0xF0) == 0xE0) {
            cp = c & 0x0F;
            len = 3;
        } else if ((c & 0xF8) == 0xF0) {
            cp = c & 0x07;
            len = 4;
        } else {
            return false;
        }
        if (i + len > s.size()) return false;
        for (std::size_t k = 1; k < len; ++k) {
            unsigned char cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // reject overlong forms, surrogates, out of range
        if (len == 2 && cp < 0x80) return false;
        if (len == 3 && cp < 0x800) return false;
        if (len == 4 && cp < 0x10000) return false;
        if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
        out.push_back(cp);
        i += len;
    }
    return true;
}

void encode_utf8(const std::vector<char32_t>& cps, std::string& out) {
    out.clear();
    for (char32_t cp : cps) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }
}

void decompose(const std::vector<char32_t>& in, std::vector<char32_t>& out) {
    out.clear();
    out.reserve(in.size() + in.size() / 2);
    for (char32_t cp : in) {
        if (cp >= kHangulSBase && cp < kHangulSBase + kHangulSCount) {
            int s = static_cast<int>(cp - kHangulSBase);
            out.push_back(kHangulLBase + static_cast<char32_t>(s / kHangulNCount));
            out.push_back(kHangulVBase + static_cast<char32_t>((s % kHangulNCount) / kHangulTCount));
            int t = s % kHangulTCount;
            if (t != 0) out.push_back(kHangulTBase + static_cast<char32_t>(t));
            continue;
        }
        if (const DecompEntry* e = find_decomposition(cp)) {
            // Table stores full canonical decompositions; no recursion needed.
            for (unsigned k = 0; k < e->length; ++k) {
                out.push_back(unicode_tables::kDecompPool[e->offset + k]);
            }
        } else {
            out.push_back(cp);
        }
    }
}

void canonical_order(std::vector<char32_t>& cps) {
    std::size_t i = 0;
    while (i < cps.size()) {
        if (combining_class(cps[i]) == 0) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < cps.size() && combining_class(cps[j]) != 0) ++j;
        std::stable_sort(cps.begin() + static_cast<std::ptrdiff_t>(i),
                         cps.begin() + static_cast<std::ptrdiff_t>(j),
                         [](char32_t a, char32_t b) {
                             return combining_class(a) < combining_class(b);
                         });
        i = j;
    }
}

// Canonical composition pass over a decomposed, canonically ordered sequence.
void compose(std::vector<char32_t>& cps) {
    if (cps.empty()) return;
    std::size_t starter_pos = 0;
    char32_t starter = cps[0];
    int last_class = combining_class(starter) == 0 ? 0 : 256;
    std::size_t write = 1;
    for (std::size_t read = 1; read < cps.size(); ++read) {
        char32_t ch = cps[read];
        int ch_class = combining_class(ch);
        char32_t composite = compose_pair(starter, ch);
        if (composite != 0 && (last_class < ch_class || last_class == 0)) {
            cps[starter_pos] = composite;
            starter = composite;
        } else {
            if (ch_class == 0) {
                starter_pos = write;
                starter = ch;
            }
            last_class = ch_class;
            cps[write++] = ch;
        }
    }
    cps.resize(write);
}

bool is_ws(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

}  // namespace

std::string nfc(std::string_view text) {
    std::vector<char32_t> cps;
    if (!decode_utf8(text, cps)) return std::string(text);
    std::vector<char32_t> decomposed;
    decompose(cps, decomposed);
    canonical_order(decomposed);
    compose(decomposed);
    std::string out;
    encode_utf8(decomposed, out);
    return out;
}

std::string trim_whitespace(std::string_view text) {
    std::vector<char32_t> cps;
    if (!decode_utf8(text, cps)) {
        // fall back to ASCII trim on malformed input
        std::size_t b = text.find_first_not_of(" \t\r\n\f\v");
        if (b == std::string_view::npos) return std::string();
        std::size_t e = text.find_last_not_of(" \t\r\n\f\v");
        return std::string(text.substr(b, e - b + 1));
    }
    std::size_t b = 0;
    std::size_t e = cps.size();
    while (b < e && is_ws(cps[b])) ++b;
    while (e > b && is_ws(cps[e - 1])) --e;
    std::vector<char32_t> kept(cps.begin() + static_cast<std::ptrdiff_t>(b),
                               cps.begin() + static_cast<std::ptrdiff_t>(e));
    std::string out;
    encode_utf8(kept, out);
    return out;
}

bool is_blank(std::string_view text) {
    return trim_whitespace(text).empty();
}

}  // namespace dqe
