#!/usr/bin/env python3
"""Regenerates include/hybridqa/detail/unicode_tables.hpp from unicodedata."""
import sys
import unicodedata


def ranges(pred):
    out, start, prev = [], None, None
    for cp in range(0x110000):
        if 0xD800 <= cp <= 0xDFFF:
            ok = False
        else:
            ok = pred(chr(cp))
        if ok:
            if start is None:
                start = cp
            prev = cp
        elif start is not None:
            out.append((start, prev))
            start = None
    if start is not None:
        out.append((start, prev))
    return out


def emit_ranges(name, rs):
    lines = [f"inline constexpr CodeRange {name}[] = {{"]
    for a, b in rs:
        lines.append(f"    {{0x{a:04X}, 0x{b:04X}}},")
    lines.append("};")
    return "\n".join(lines)


def main():
    cat = unicodedata.category
    punct = ranges(lambda c: cat(c).startswith("P"))
    symbol = ranges(lambda c: cat(c).startswith("S"))
    space = ranges(lambda c: cat(c).startswith("Z") or c in "\t\n\v\f\r\x1c\x1d\x1e\x1f\x85")
    control = ranges(lambda c: cat(c) in ("Cc", "Cf", "Cn", "Co", "Cs") and not c.isspace())
    lower = []
    for cp in range(0x110000):
        if 0xD800 <= cp <= 0xDFFF:
            continue
        c = chr(cp)
        low = c.lower()
        if len(low) == 1 and low != c:
            lower.append((cp, ord(low)))
    out = [
        "// Generated by scripts/gen_unicode_tables.py (Unicode " + unicodedata.unidata_version + "). Do not edit.",
        "#pragma once",
        "",
        "#include <cstdint>",
        "",
        "namespace hybridqa::detail {",
        "",
        "struct CodeRange {",
        "    char32_t first;",
        "    char32_t last;",
        "};",
        "",
        "struct CaseMapping {",
        "    char32_t upper;",
        "    char32_t lower;",
        "};",
        "",
        emit_ranges("kPunctuationRanges", punct),
        "",
        emit_ranges("kSymbolRanges", symbol),
        "",
        emit_ranges("kSpaceRanges", space),
        "",
        emit_ranges("kControlRanges", control),
        "",
        "inline constexpr CaseMapping kLowercaseMap[] = {",
    ]
    out += [f"    {{0x{a:04X}, 0x{b:04X}}}," for a, b in lower]
    out += ["};", "", "}  // namespace hybridqa::detail", ""]
    sys.stdout.write("\n".join(out))


if __name__ == "__main__":
    main()
