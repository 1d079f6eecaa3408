#include "soprag/text.hpp"

#include <cctype>
#include <iostream>

namespace soprag::text {

namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_alnum(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

} // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_ws = false;
    for (char c : s) {
        if (is_space(c)) {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out.push_back(' ');
        in_ws = false;
        out.push_back(c);
    }
    return out;
}

std::string normalize_label(std::string_view s) {
    return collapse_whitespace(to_lower(trim(s)));
}

std::string strip_newlines(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return trim(collapse_whitespace(out));
}

std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t nl = s.find('\n', pos);
        if (nl == std::string_view::npos) {
            if (pos < s.size()) lines.emplace_back(s.substr(pos));
            break;
        }
        std::string_view line = s.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        pos = nl + 1;
    }
    return lines;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t j = i;
        while (j < s.size() && !is_space(s[j])) ++j;
        if (j > i) {
            std::string_view tok = s.substr(i, j - i);
            while (!tok.empty() && !is_alnum(tok.front())) tok.remove_prefix(1);
            while (!tok.empty() && !is_alnum(tok.back())) tok.remove_suffix(1);
            if (!tok.empty()) tokens.emplace_back(tok);
        }
        i = j;
    }
    return tokens;
}

std::vector<std::string> tokenize_lexical(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : s) {
        if (is_alnum(c)) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

bool is_trivial_label(std::string_view label) {
    std::string t = trim(label);
    if (t.size() <= 1) return true;
    bool has_digit = false;
    for (char c : t) {
        if (std::isdigit(static_cast<unsigned char>(c)) != 0) {
            has_digit = true;
        } else if (c != '.' && c != ',' && c != '-' && c != '+') {
            return false;
        }
    }
    return has_digit;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

void warn(const std::string& message) {
    std::cerr << "[soprag] warning: " << message << "\n";
}

} // namespace soprag::text
