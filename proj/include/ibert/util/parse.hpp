#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ibert::util {

inline std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

inline std::uint64_t parse_u64(std::string_view s, std::string_view what) {
    s = trim(s);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw std::invalid_argument(std::string(what) + ": expected a non-negative integer, got '" +
                                    std::string(s) + "'");
    return v;
}

inline std::size_t parse_size(std::string_view s, std::string_view what) {
    return static_cast<std::size_t>(parse_u64(s, what));
}

inline double parse_double(std::string_view s, std::string_view what) {
    s = trim(s);
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw std::invalid_argument(std::string(what) + ": expected a number, got '" + std::string(s) + "'");
    return v;
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

// "lo..hi" or a single value "n".
struct Range {
    std::size_t lo = 0;
    std::size_t hi = 0;
};

inline Range parse_range(std::string_view s, std::string_view what) {
    s = trim(s);
    const auto dots = s.find("..");
    if (dots == std::string_view::npos) {
        const auto v = parse_size(s, what);
        return {v, v};
    }
    Range r{parse_size(s.substr(0, dots), what), parse_size(s.substr(dots + 2), what)};
    if (r.lo > r.hi) throw std::invalid_argument(std::string(what) + ": empty range '" + std::string(s) + "'");
    return r;
}

}  // namespace ibert::util
