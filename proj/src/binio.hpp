#pragma once

// Little-endian binary primitives shared by the tensor and model containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace ctt::binio {

template <class T>
T byteswap_if_needed(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
        return v;
    }
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
    v = byteswap_if_needed(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    v = byteswap_if_needed(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void put_f64(std::ostream& os, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, sizeof v);
    put_u64(os, v);
}

inline void put_bytes(std::ostream& os, const std::string& s) {
    put_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void check(std::istream& is) {
    if (!is) throw std::runtime_error("truncated or unreadable binary container");
}

inline std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    check(is);
    return byteswap_if_needed(v);
}

inline std::uint64_t get_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    check(is);
    return byteswap_if_needed(v);
}

inline double get_f64(std::istream& is) {
    std::uint64_t v = get_u64(is);
    double d;
    std::memcpy(&d, &v, sizeof d);
    return d;
}

inline std::string get_bytes(std::istream& is, std::uint64_t max_len = 1 << 20) {
    auto n = get_u64(is);
    if (n > max_len) throw std::runtime_error("string field too long in binary container");
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    check(is);
    return s;
}

inline void expect_magic(std::istream& is, const char (&magic)[5]) {
    char buf[4];
    is.read(buf, 4);
    check(is);
    if (std::memcmp(buf, magic, 4) != 0) throw std::runtime_error(std::string("bad magic, expected ") + magic);
}

}  // namespace ctt::binio
