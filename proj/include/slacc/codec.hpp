#pragma once

#include "slacc/compress.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace slacc::codec {

/// Framed SLC1 bytes. Canonical: decoding and re-encoding reproduces the
/// blob byte for byte.
struct CompressedBlob {
    std::vector<std::uint8_t> bytes;

    std::size_t size() const { return bytes.size(); }
    bool operator==(const CompressedBlob&) const = default;
};

/// Header length for a given channel/group count. The wire layout is:
/// magic "SLC1" | version u8 | direction u8 | round u32 | B,C,H,W u32 |
/// g u16 | group id u16 x C | per group (bits u8, x_min f32, x_max f32) |
/// per channel MSB-first bit-packed codes, each channel padded to a byte.
/// All integers little-endian.
std::size_t header_size(std::size_t channels, std::size_t groups);

/// Serializes q. Codes are packed at each channel's group bit width.
CompressedBlob encode(const cgc::QuantizedSmashed& q);

/// Parses a blob; throws FormatError carrying the byte offset on bad
/// magic/version, inconsistent fields, truncation, trailing bytes, or
/// non-zero padding bits.
cgc::QuantizedSmashed decode(std::span<const std::uint8_t> blob);

inline cgc::QuantizedSmashed decode(const CompressedBlob& blob) {
    return decode(std::span<const std::uint8_t>(blob.bytes));
}

} // namespace slacc::codec
