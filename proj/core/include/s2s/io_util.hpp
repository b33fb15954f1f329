#pragma once

#include "s2s/error.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace s2s {

// Little-endian primitives for the S2S* binary containers. x86 is
// little-endian already; the byte-level composition keeps the files
// portable anyway.

inline void write_bytes(std::ostream& os, const void* data, std::size_t n) {
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!os) throw IoError("write failed");
}

inline void read_bytes(std::istream& is, void* data, std::size_t n) {
    is.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) throw IoError("unexpected end of file");
}

template <typename T>
void write_le(std::ostream& os, T value) {
    static_assert(std::is_arithmetic_v<T>);
    std::array<unsigned char, sizeof(T)> raw;
    std::memcpy(raw.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(raw.begin(), raw.end());
    }
    write_bytes(os, raw.data(), raw.size());
}

template <typename T>
T read_le(std::istream& is) {
    static_assert(std::is_arithmetic_v<T>);
    std::array<unsigned char, sizeof(T)> raw;
    read_bytes(is, raw.data(), raw.size());
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(raw.begin(), raw.end());
    }
    T value;
    std::memcpy(&value, raw.data(), sizeof(T));
    return value;
}

template <typename T>
void write_le_array(std::ostream& os, const T* values, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        write_bytes(os, values, n * sizeof(T));
    } else {
        for (std::size_t i = 0; i < n; ++i) write_le(os, values[i]);
    }
}

template <typename T>
void read_le_array(std::istream& is, T* values, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        read_bytes(is, values, n * sizeof(T));
    } else {
        for (std::size_t i = 0; i < n; ++i) values[i] = read_le<T>(is);
    }
}

/// 8-byte magic, NUL-padded on the right.
inline void write_magic(std::ostream& os, const char* magic) {
    std::array<char, 8> buf{};
    std::size_t len = std::strlen(magic);
    if (len > 8) throw IoError("magic longer than 8 bytes");
    std::memcpy(buf.data(), magic, len);
    write_bytes(os, buf.data(), buf.size());
}

inline void expect_magic(std::istream& is, const char* magic) {
    std::array<char, 8> want{};
    std::memcpy(want.data(), magic, std::strlen(magic));
    std::array<char, 8> got{};
    read_bytes(is, got.data(), got.size());
    if (got != want) throw IoError(std::string("bad magic, expected ") + magic);
}

inline std::ofstream open_output(const std::string& path, std::ios::openmode mode = std::ios::binary) {
    std::ofstream os(path, mode);
    if (!os) throw IoError("cannot open for writing: " + path);
    return os;
}

inline std::ifstream open_input(const std::string& path, std::ios::openmode mode = std::ios::binary) {
    std::ifstream is(path, mode);
    if (!is) throw IoError("cannot open for reading: " + path);
    return is;
}

/// FNV-1a over a byte range; used for provenance hashes in manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64_file(const std::string& path) {
    auto is = open_input(path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (is) {
        is.read(buf, sizeof(buf));
        h = fnv1a64(buf, static_cast<std::size_t>(is.gcount()), h);
    }
    return h;
}

} // namespace s2s
