#ifndef FUZZDIAG_TEXTIO_HPP
#define FUZZDIAG_TEXTIO_HPP

// Token-level helpers shared by the line-oriented file formats.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fuzzdiag/errors.hpp"

namespace fuzzdiag::text {

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw Error("cannot format number");
    return std::string(buf, end);
}

inline double parse_double(std::string_view tok, std::size_t line) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (!tok.empty() && tok.front() == '+') ++first;
    auto [end, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || end != last || tok.empty())
        throw ParseError(line, "expected a number, got '" + std::string(tok) + "'");
    return v;
}

inline std::uint64_t parse_uint(std::string_view tok, std::size_t line) {
    std::uint64_t v = 0;
    auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || end != tok.data() + tok.size() || tok.empty())
        throw ParseError(line, "expected a non-negative integer, got '" + std::string(tok) + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

/// Tokens of a line with any `#` comment removed.
inline std::vector<std::string_view> tokens(std::string_view line) {
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    return split(line);
}

}  // namespace fuzzdiag::text

#endif  // FUZZDIAG_TEXTIO_HPP
