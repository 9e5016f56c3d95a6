#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace redforge {

/// Decodes one UTF-8 codepoint starting at `pos`, advancing `pos`.
/// Malformed bytes decode as U+FFFD and consume a single byte.
char32_t decode_utf8(std::string_view text, std::size_t& pos);

void append_utf8(std::string& out, char32_t cp);

std::vector<char32_t> to_codepoints(std::string_view text);

bool is_cjk(char32_t cp);
bool is_space(char32_t cp);

/// Byte span of a single token inside the source text.
struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Word/CJK tokenization. Whitespace separates chunks; inside a chunk every
/// CJK codepoint is its own token and each maximal non-CJK run is one token.
std::vector<TokenSpan> token_spans(std::string_view text);

std::vector<std::string> tokenize(std::string_view text);

std::size_t count_tokens(std::string_view text);

/// Whitespace-separated chunks, no CJK splitting.
std::vector<std::string> split_words(std::string_view text);

/// Trims and collapses internal whitespace runs to a single ASCII space.
std::string normalize_whitespace(std::string_view text);

}  // namespace redforge
