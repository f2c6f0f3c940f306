#pragma once

#include <charconv>
#include <string>

namespace uwbmap {

// Shortest text that parses back to the same double.
inline std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

// Fixed-point text for human-readable tables.
inline std::string format_fixed(double value, int precision) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, precision);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace uwbmap
