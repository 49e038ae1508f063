#include "slacc/codec.hpp"

#include "slacc/errors.hpp"
#include "slacc/parallel.hpp"

#include <cmath>
#include <cstring>
#include <limits>

namespace slacc::codec {

namespace {

constexpr char kMagic[4] = {'S', 'L', 'C', '1'};
constexpr std::uint8_t kVersion = 1;

// Bits needed on the wire for one channel, padded to a byte boundary.
std::size_t channel_bytes(std::size_t n, int bits) {
    return (n * static_cast<std::size_t>(bits) + 7) / 8;
}

struct Writer {
    std::vector<std::uint8_t>& out;

    void u8(std::uint8_t v) { out.push_back(v); }
    void u16(std::uint16_t v) {
        out.push_back(static_cast<std::uint8_t>(v));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
};

struct Reader {
    std::span<const std::uint8_t> in;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) {
        if (pos + n > in.size())
            throw FormatError(pos, std::string("truncated while reading ") + what);
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return in[pos++];
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        const std::uint16_t v =
            static_cast<std::uint16_t>(in[pos]) | static_cast<std::uint16_t>(in[pos + 1]) << 8;
        pos += 2;
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    float f32(const char* what) {
        const std::uint32_t bits = u32(what);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
};

} // namespace

std::size_t header_size(std::size_t channels, std::size_t groups) {
    return 4 + 1 + 1 + 4 + 4 * 4 + 2 + 2 * channels + 9 * groups;
}

namespace {

/// Encode-side contract checks; decode re-validates independently from the
/// bytes, so garbage never round-trips silently from either side.
void validate_for_encode(const cgc::QuantizedSmashed& q) {
    if (q.shape.b == 0 || q.shape.c == 0 || q.shape.h == 0 || q.shape.w == 0)
        throw std::invalid_argument("quantized shape has a zero dimension");
    const std::size_t C = q.shape.c;
    const std::size_t n = q.shape.elements_per_channel();
    if (q.plan.groups.empty() || q.plan.groups.size() > 0xFFFF)
        throw std::invalid_argument("group count must be in [1, 65535]");
    if (q.plan.group_of_channel.size() != C || q.codes.size() != C)
        throw std::invalid_argument("plan/code vectors do not match channel count");
    for (const auto& gp : q.plan.groups) {
        if (gp.bits < 1 || gp.bits > 32)
            throw std::invalid_argument("bit width must be in [1,32]");
        if (!std::isfinite(gp.x_min) || !std::isfinite(gp.x_max) || !(gp.x_min <= gp.x_max))
            throw std::invalid_argument("invalid quantization range");
    }
    for (std::size_t c = 0; c < C; ++c) {
        if (q.plan.group_of_channel[c] >= q.plan.groups.size())
            throw std::invalid_argument("group id out of range");
        if (q.codes[c].size() != n)
            throw std::invalid_argument("code vector has wrong length");
        const int bits = q.plan.groups[q.plan.group_of_channel[c]].bits;
        const std::uint64_t limit = std::uint64_t{1} << bits;
        for (std::uint32_t code : q.codes[c])
            if (code >= limit) throw std::invalid_argument("code exceeds bit width");
    }
}

} // namespace

CompressedBlob encode(const cgc::QuantizedSmashed& q) {
    validate_for_encode(q);
    const std::size_t C = q.shape.c;
    const std::size_t n = q.shape.elements_per_channel();
    CompressedBlob blob;
    std::size_t total = header_size(C, q.plan.groups.size());
    std::vector<std::size_t> chan_offset(C + 1, 0);
    for (std::size_t c = 0; c < C; ++c)
        chan_offset[c + 1] = chan_offset[c] + channel_bytes(n, q.channel_bits(c));
    blob.bytes.reserve(total + chan_offset[C]);

    Writer w{blob.bytes};
    blob.bytes.insert(blob.bytes.end(), kMagic, kMagic + 4);
    w.u8(kVersion);
    w.u8(static_cast<std::uint8_t>(q.direction));
    w.u32(q.round);
    w.u32(q.shape.b);
    w.u32(q.shape.c);
    w.u32(q.shape.h);
    w.u32(q.shape.w);
    w.u16(static_cast<std::uint16_t>(q.plan.groups.size()));
    for (std::uint16_t gid : q.plan.group_of_channel) w.u16(gid);
    for (const auto& gp : q.plan.groups) {
        w.u8(gp.bits);
        w.f32(gp.x_min);
        w.f32(gp.x_max);
    }

    const std::size_t payload_at = blob.bytes.size();
    blob.bytes.resize(payload_at + chan_offset[C], 0);
    parallel_for(0, C, [&](std::size_t c) {
        const int bits = q.channel_bits(c);
        std::uint8_t* dst = blob.bytes.data() + payload_at + chan_offset[c];
        std::uint64_t acc = 0;
        int filled = 0;
        std::size_t at = 0;
        for (std::uint32_t code : q.codes[c]) {
            acc = (acc << bits) | code; // MSB-first within the channel
            filled += bits;
            while (filled >= 8) {
                dst[at++] = static_cast<std::uint8_t>(acc >> (filled - 8));
                filled -= 8;
            }
        }
        if (filled > 0) dst[at++] = static_cast<std::uint8_t>(acc << (8 - filled));
    });
    return blob;
}

cgc::QuantizedSmashed decode(std::span<const std::uint8_t> blob) {
    Reader r{blob};
    r.need(4, "magic");
    if (std::memcmp(blob.data(), kMagic, 4) != 0) throw FormatError(0, "bad SLC1 magic");
    r.pos = 4;
    const std::size_t version_at = r.pos;
    const std::uint8_t version = r.u8("version");
    if (version != kVersion) throw FormatError(version_at, "unsupported version");
    const std::size_t dir_at = r.pos;
    const std::uint8_t dir = r.u8("direction");
    if (dir > 1) throw FormatError(dir_at, "invalid direction");

    cgc::QuantizedSmashed q;
    q.direction = static_cast<Direction>(dir);
    q.round = r.u32("round");
    const std::size_t dims_at = r.pos;
    q.shape.b = r.u32("batch dim");
    q.shape.c = r.u32("channel dim");
    q.shape.h = r.u32("height dim");
    q.shape.w = r.u32("width dim");
    if (q.shape.b == 0 || q.shape.c == 0 || q.shape.h == 0 || q.shape.w == 0)
        throw FormatError(dims_at, "zero dimension");
    // Stepwise bound so the element-count product cannot wrap a u64.
    const std::uint64_t cap = (std::uint64_t{1} << 40) / q.shape.c;
    const std::uint64_t bh = static_cast<std::uint64_t>(q.shape.b) * q.shape.h;
    if (bh > cap || q.shape.w > cap / bh)
        throw FormatError(dims_at, "tensor too large");
    const std::uint64_t n64 = bh * q.shape.w;
    const std::size_t C = q.shape.c;
    const std::size_t n = static_cast<std::size_t>(n64);

    const std::size_t g_at = r.pos;
    const std::uint16_t g = r.u16("group count");
    if (g == 0) throw FormatError(g_at, "zero group count");

    // Each channel id costs two header bytes; refuse before allocating the table.
    if ((blob.size() - r.pos) / 2 < C) throw FormatError(blob.size(), "truncated header");
    q.plan.group_of_channel.resize(C);
    for (std::size_t c = 0; c < C; ++c) {
        const std::size_t at = r.pos;
        q.plan.group_of_channel[c] = r.u16("group id");
        if (q.plan.group_of_channel[c] >= g) throw FormatError(at, "group id out of range");
    }
    q.plan.groups.resize(g);
    std::vector<bool> referenced(g, false);
    for (std::size_t c = 0; c < C; ++c) referenced[q.plan.group_of_channel[c]] = true;
    for (std::size_t j = 0; j < g; ++j) {
        if (!referenced[j]) throw FormatError(g_at, "empty group in plan");
        const std::size_t at = r.pos;
        auto& gp = q.plan.groups[j];
        gp.bits = r.u8("group bits");
        if (gp.bits < 1 || gp.bits > 32) throw FormatError(at, "bit width out of range");
        gp.x_min = r.f32("group x_min");
        gp.x_max = r.f32("group x_max");
        if (!std::isfinite(gp.x_min) || !std::isfinite(gp.x_max) || !(gp.x_min <= gp.x_max))
            throw FormatError(at + 1, "invalid quantization range");
    }

    // Payload length must match the header exactly.
    std::size_t expect = 0;
    for (std::size_t c = 0; c < C; ++c)
        expect += channel_bytes(n, q.plan.groups[q.plan.group_of_channel[c]].bits);
    if (blob.size() - r.pos < expect)
        throw FormatError(blob.size(), "truncated payload");
    if (blob.size() - r.pos > expect)
        throw FormatError(r.pos + expect, "trailing bytes after payload");

    q.codes.assign(C, {});
    std::vector<std::size_t> chan_offset(C + 1, 0);
    for (std::size_t c = 0; c < C; ++c)
        chan_offset[c + 1] =
            chan_offset[c] + channel_bytes(n, q.plan.groups[q.plan.group_of_channel[c]].bits);
    const std::size_t payload_at = r.pos;

    // Per-channel byte alignment allows parallel unpacking.
    std::vector<std::size_t> bad_pad(C, std::numeric_limits<std::size_t>::max());
    parallel_for(0, C, [&](std::size_t c) {
        const int bits = q.plan.groups[q.plan.group_of_channel[c]].bits;
        const std::uint8_t* src = blob.data() + payload_at + chan_offset[c];
        const std::size_t nbytes = channel_bytes(n, bits);
        auto& codes = q.codes[c];
        codes.resize(n);
        std::uint64_t acc = 0;
        int avail = 0;
        std::size_t at = 0;
        const std::uint64_t mask = bits == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
        for (std::size_t i = 0; i < n; ++i) {
            while (avail < bits) {
                acc = (acc << 8) | src[at++];
                avail += 8;
            }
            codes[i] = static_cast<std::uint32_t>((acc >> (avail - bits)) & mask);
            avail -= bits;
        }
        // Canonical form: padding bits are zero.
        if (avail > 0 && (acc & ((std::uint64_t{1} << avail) - 1)) != 0)
            bad_pad[c] = payload_at + chan_offset[c] + nbytes - 1;
    });
    for (std::size_t c = 0; c < C; ++c)
        if (bad_pad[c] != std::numeric_limits<std::size_t>::max())
            throw FormatError(bad_pad[c], "non-zero padding bits");
    return q;
}

} // namespace slacc::codec
