#include "redforge/tokenizer.hpp"

namespace redforge {

char32_t decode_utf8(std::string_view text, std::size_t& pos) {
    const auto lead = static_cast<unsigned char>(text[pos]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
        ++pos;
        return lead;
    } else if ((lead & 0xE0) == 0xC0) {
        len = 2;
        cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
        len = 3;
        cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
        len = 4;
        cp = lead & 0x07;
    } else {
        ++pos;
        return 0xFFFD;
    }
    if (pos + len > text.size()) {
        ++pos;
        return 0xFFFD;
    }
    for (std::size_t i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(text[pos + i]);
        if ((b & 0xC0) != 0x80) {
            ++pos;
            return 0xFFFD;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    pos += len;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
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

std::vector<char32_t> to_codepoints(std::string_view text) {
    std::vector<char32_t> cps;
    cps.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) cps.push_back(decode_utf8(text, pos));
    return cps;
}

bool is_cjk(char32_t cp) {
    return (cp >= 0x3001 && cp <= 0x303F)      // CJK symbols and punctuation
           || (cp >= 0x3040 && cp <= 0x30FF)   // kana
           || (cp >= 0x3400 && cp <= 0x4DBF)   // ext A
           || (cp >= 0x4E00 && cp <= 0x9FFF)   // unified ideographs
           || (cp >= 0xAC00 && cp <= 0xD7AF)   // hangul syllables
           || (cp >= 0xF900 && cp <= 0xFAFF)   // compatibility ideographs
           || (cp >= 0xFF01 && cp <= 0xFFEF)   // fullwidth forms
           || (cp >= 0x20000 && cp <= 0x2FA1F);
}

bool is_space(char32_t cp) {
    switch (cp) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
        case 0x85: case 0xA0: case 0x2028: case 0x2029: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

std::vector<TokenSpan> token_spans(std::string_view text) {
    std::vector<TokenSpan> spans;
    std::size_t pos = 0;
    bool in_run = false;  // inside a non-CJK run
    std::size_t run_begin = 0;
    while (pos < text.size()) {
        const std::size_t start = pos;
        const char32_t cp = decode_utf8(text, pos);
        if (is_space(cp)) {
            if (in_run) spans.push_back({run_begin, start});
            in_run = false;
        } else if (is_cjk(cp)) {
            if (in_run) spans.push_back({run_begin, start});
            in_run = false;
            spans.push_back({start, pos});
        } else if (!in_run) {
            in_run = true;
            run_begin = start;
        }
    }
    if (in_run) spans.push_back({run_begin, text.size()});
    return spans;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& s : token_spans(text)) out.emplace_back(text.substr(s.begin, s.end - s.begin));
    return out;
}

std::size_t count_tokens(std::string_view text) {
    std::size_t n = 0;
    std::size_t pos = 0;
    bool in_run = false;
    while (pos < text.size()) {
        const char32_t cp = decode_utf8(text, pos);
        if (is_space(cp)) {
            in_run = false;
        } else if (is_cjk(cp)) {
            in_run = false;
            ++n;
        } else if (!in_run) {
            in_run = true;
            ++n;
        }
    }
    return n;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    bool pending_space = false;
    while (pos < text.size()) {
        const std::size_t start = pos;
        const char32_t cp = decode_utf8(text, pos);
        if (is_space(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.append(text.substr(start, pos - start));
    }
    return out;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    std::size_t start = std::string_view::npos;
    while (pos < text.size()) {
        const std::size_t at = pos;
        if (is_space(decode_utf8(text, pos))) {
            if (start != std::string_view::npos) out.emplace_back(text.substr(start, at - start));
            start = std::string_view::npos;
        } else if (start == std::string_view::npos) {
            start = at;
        }
    }
    if (start != std::string_view::npos) out.emplace_back(text.substr(start));
    return out;
}

}  // namespace redforge
