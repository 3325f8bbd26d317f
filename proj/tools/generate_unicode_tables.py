#!/usr/bin/env python3
"""Regenerates src/unicode_tables.cpp from Python's unicodedata.

The tables drive the NFC normalizer in src/unicode.cpp: full canonical
decompositions (NFD), nonzero canonical combining classes, and primary
composition pairs. Hangul syllables (U+AC00..U+D7A3) are handled
algorithmically at runtime and are excluded here.

Usage: python3 tools/generate_unicode_tables.py > src/unicode_tables.cpp
"""

import sys
import unicodedata

HANGUL_FIRST = 0xAC00
HANGUL_LAST = 0xD7A3


def main() -> None:
    decomp_index = []   # (cp, offset, len) into the decomposition pool
    decomp_pool = []
    ccc_entries = []    # (cp, ccc) for ccc != 0
    comp_pairs = []     # (first, second, composite)

    for cp in range(0x110000):
        if 0xD800 <= cp <= 0xDFFF:
            continue
        ch = chr(cp)

        ccc = unicodedata.combining(ch)
        if ccc != 0:
            ccc_entries.append((cp, ccc))

        if HANGUL_FIRST <= cp <= HANGUL_LAST:
            continue

        nfd = unicodedata.normalize("NFD", ch)
        if nfd != ch:
            cps = [ord(c) for c in nfd]
            decomp_index.append((cp, len(decomp_pool), len(cps)))
            decomp_pool.extend(cps)
            # Primary composite: a two-point canonical decomposition that
            # NFC recombines (this filters out composition exclusions).
            if len(cps) == 2 and unicodedata.combining(nfd[0]) == 0:
                if unicodedata.normalize("NFC", nfd) == ch:
                    comp_pairs.append((cps[0], cps[1], cp))

    comp_pairs.sort()

    out = sys.stdout
    out.write("// Generated by tools/generate_unicode_tables.py — do not edit.\n")
    out.write("// Unicode data version: %s\n\n" % unicodedata.unidata_version)
    out.write("#include \"unicode_tables.hpp\"\n\n")
    out.write("namespace dqe::unicode_tables {\n\n")

    def emit(name, ctype, rows, fmt):
        out.write("const %s %s[] = {\n" % (ctype, name))
        for i in range(0, len(rows), 8):
            out.write("    " + " ".join(fmt(r) for r in rows[i:i + 8]) + "\n")
        out.write("};\n")
        out.write("const std::size_t %s_count = %d;\n\n" % (name, len(rows)))

    emit("kDecompIndex", "DecompEntry", decomp_index,
         lambda r: "{0x%X,%d,%d}," % r)
    emit("kDecompPool", "char32_t", decomp_pool, lambda r: "0x%X," % r)
    emit("kCombiningClass", "CccEntry", ccc_entries,
         lambda r: "{0x%X,%d}," % r)
    emit("kCompositionPairs", "CompEntry", comp_pairs,
         lambda r: "{0x%X,0x%X,0x%X}," % r)

    out.write("}  // namespace dqe::unicode_tables\n")


if __name__ == "__main__":
    main()
