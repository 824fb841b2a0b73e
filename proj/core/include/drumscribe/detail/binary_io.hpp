#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "drumscribe/errors.hpp"

// Little-endian stream helpers shared by the WAV, spectrogram, and
// checkpoint readers/writers.

namespace drumscribe::detail {

static_assert(std::endian::native == std::endian::little,
              "file codecs assume a little-endian host");

inline void write_bytes(std::ostream& out, const void* p, size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void write_u16(std::ostream& out, uint16_t v) { write_bytes(out, &v, 2); }
inline void write_u32(std::ostream& out, uint32_t v) { write_bytes(out, &v, 4); }
inline void write_f32(std::ostream& out, float v) { write_bytes(out, &v, 4); }

inline void read_bytes(std::istream& in, void* p, size_t n, const char* what) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
        throw FormatError(std::string("unexpected end of file while reading ") + what);
}

inline uint16_t read_u16(std::istream& in, const char* what) {
    uint16_t v;
    read_bytes(in, &v, 2, what);
    return v;
}

inline uint32_t read_u32(std::istream& in, const char* what) {
    uint32_t v;
    read_bytes(in, &v, 4, what);
    return v;
}

inline int16_t read_i16(std::istream& in, const char* what) {
    return static_cast<int16_t>(read_u16(in, what));
}

inline float read_f32(std::istream& in, const char* what) {
    uint32_t bits = read_u32(in, what);
    return std::bit_cast<float>(bits);
}

}  // namespace drumscribe::detail
