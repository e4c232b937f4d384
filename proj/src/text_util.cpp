#include "revieweval/text_util.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>

namespace revieweval::text {

namespace {
bool is_space(char c) noexcept {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}
}  // namespace

std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> nonempty_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find('\n', start);
        if (end == std::string_view::npos) end = s.size();
        auto line = trim(s.substr(start, end - start));
        if (!line.empty()) lines.emplace_back(line);
        start = end + 1;
    }
    return lines;
}

std::string_view strip_list_marker(std::string_view line) noexcept {
    line = trim(line);
    if (line.empty()) return line;
    // bullets
    for (std::string_view bullet : {"- ", "* ", "\xE2\x80\xA2 "}) {
        if (line.substr(0, bullet.size()) == bullet) return trim(line.substr(bullet.size()));
    }
    // "(a)" / "(1)"
    std::size_t i = 0;
    bool paren_open = false;
    if (line[i] == '(') {
        paren_open = true;
        ++i;
    }
    std::size_t digits = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) {
        ++i;
        ++digits;
    }
    if (digits == 0 && i < line.size() && std::isalpha(static_cast<unsigned char>(line[i])) &&
        i + 1 < line.size() && (line[i + 1] == ')' || line[i + 1] == '.') &&
        (i + 2 >= line.size() || is_space(line[i + 2]))) {
        ++i;  // single-letter enumerator
        digits = 1;
    }
    if (digits == 0 || i >= line.size()) return line;
    if (line[i] == ')' || (!paren_open && line[i] == '.')) {
        ++i;
        if (i == line.size() || is_space(line[i])) return trim(line.substr(i));
    }
    return line;
}

std::size_t count_words(std::string_view s) noexcept {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

std::string normalize_label(std::string_view s) {
    s = trim(s);
    auto strip = [](char c) {
        return c == '"' || c == '\'' || c == '*' || c == '`' || c == '.' || c == ',' || c == '!' ||
               c == ';' || c == ':' || is_space(c);
    };
    while (!s.empty() && strip(s.front())) s.remove_prefix(1);
    while (!s.empty() && strip(s.back())) s.remove_suffix(1);
    return to_lower(s);
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

}  // namespace revieweval::text
