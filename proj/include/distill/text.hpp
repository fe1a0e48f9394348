#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <vector>

namespace distill {

// Shortest round-trip decimal representation. Used for every number we write
// to CSV/JSON-adjacent text so that repeated runs emit byte-identical files.
inline std::string fmt_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline std::string fmt_int(long long x) {
    char buf[24];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.push_back(sep);
        out += parts[i];
    }
    return out;
}

}  // namespace distill
