#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace semicirc {

// All engine errors carry a stable code string (used by the CLI to pick exit codes)
// plus a human-readable message.
struct Error : std::runtime_error {
    std::string code;
    Error(std::string c, const std::string& msg)
        : std::runtime_error(c + ": " + msg), code(std::move(c)) {}
};

[[noreturn]] inline void fail(const std::string& code, const std::string& msg) {
    throw Error(code, msg);
}

// Hash combiner for small tuples/vectors of integers.
inline size_t hash_mix(size_t h, size_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

struct VecHash {
    template <class T>
    size_t operator()(const std::vector<T>& v) const {
        size_t h = v.size();
        for (const auto& x : v) h = hash_mix(h, std::hash<T>{}(x));
        return h;
    }
};

} // namespace semicirc
