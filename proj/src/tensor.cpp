#include "slacc/tensor.hpp"

#include "slacc/errors.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace slacc {

namespace {

std::size_t checked_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d != 0 && n > std::numeric_limits<std::size_t>::max() / d)
            throw std::invalid_argument("tensor shape overflows size_t");
        n *= d;
    }
    return n;
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_product(shape_), 0.0) {}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> data) {
    if (checked_product(shape) != data.size())
        throw std::invalid_argument("tensor data length does not match shape product");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    t.require_finite("tensor data");
    return t;
}

bool Tensor::all_finite() const noexcept {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::require_finite(const char* what) const {
    if (!all_finite()) throw std::invalid_argument(std::string(what) + " contains NaN or Inf");
}

const char* to_string(Direction d) {
    return d == Direction::Activations ? "activations" : "gradients";
}

SmashedData::SmashedData(Tensor t, std::uint32_t r, Direction dir)
    : tensor(std::move(t)), round(r), direction(dir) {
    if (tensor.rank() != 4) throw std::invalid_argument("smashed data must have shape [B,C,H,W]");
    if (tensor.dim(0) == 0 || tensor.dim(1) == 0 || tensor.dim(2) == 0 || tensor.dim(3) == 0)
        throw std::invalid_argument("smashed data dimensions must all be >= 1");
    tensor.require_finite("smashed data");
}

std::vector<double> SmashedData::channel_view(std::size_t c) const {
    const std::size_t B = batch(), C = channels(), H = height(), W = width();
    if (c >= C) throw std::out_of_range("channel index out of range");
    std::vector<double> out;
    out.reserve(B * H * W);
    const std::span<const double> d = tensor.data();
    const std::size_t plane = H * W;
    for (std::size_t b = 0; b < B; ++b) {
        const double* src = d.data() + (b * C + c) * plane;
        out.insert(out.end(), src, src + plane);
    }
    return out;
}

void SmashedData::set_channel(std::size_t c, std::span<const double> values) {
    const std::size_t B = batch(), C = channels(), H = height(), W = width();
    if (c >= C) throw std::out_of_range("channel index out of range");
    if (values.size() != B * H * W)
        throw std::invalid_argument("channel payload has wrong length");
    const std::size_t plane = H * W;
    std::span<double> d = tensor.data();
    for (std::size_t b = 0; b < B; ++b)
        std::memcpy(d.data() + (b * C + c) * plane, values.data() + b * plane,
                    plane * sizeof(double));
}

namespace {

void put_u32_le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

struct StreamReader {
    std::istream& in;
    std::size_t offset = 0;

    void read(void* dst, std::size_t n, const char* what) {
        in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw FormatError(offset, std::string("truncated while reading ") + what);
        offset += n;
    }
    std::uint8_t u8(const char* what) {
        std::uint8_t v;
        read(&v, 1, what);
        return v;
    }
    std::uint32_t u32_le(const char* what) {
        unsigned char b[4];
        read(b, 4, what);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }
};

} // namespace

void write_slt1(std::ostream& out, const Tensor& t) {
    if (t.rank() > 255) throw std::invalid_argument("tensor rank exceeds SLT1 limit");
    out.write("SLT1", 4);
    const std::uint8_t rank = static_cast<std::uint8_t>(t.rank());
    out.write(reinterpret_cast<const char*>(&rank), 1);
    for (std::size_t d : t.shape()) {
        if (d > std::numeric_limits<std::uint32_t>::max())
            throw std::invalid_argument("dimension exceeds u32");
        put_u32_le(out, static_cast<std::uint32_t>(d));
    }
    for (double v : t.data()) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32_le(out, bits);
    }
}

void write_slt1_file(const std::string& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_slt1(out, t);
    if (!out) throw std::runtime_error("short write to " + path);
}

Tensor read_slt1(std::istream& in) {
    StreamReader r{in};
    char magic[4];
    r.read(magic, 4, "magic");
    if (std::memcmp(magic, "SLT1", 4) != 0) throw FormatError(0, "bad SLT1 magic");
    const std::uint8_t rank = r.u8("rank");
    std::vector<std::size_t> shape(rank);
    std::size_t total = 1;
    for (auto& d : shape) {
        const std::size_t at = r.offset;
        d = r.u32_le("dimension");
        if (d == 0) throw FormatError(at, "zero dimension");
        if (total > std::numeric_limits<std::size_t>::max() / d)
            throw FormatError(at, "shape product overflows");
        total *= d;
    }
    std::vector<double> data(total);
    for (std::size_t i = 0; i < total; ++i) {
        const std::size_t at = r.offset;
        const std::uint32_t bits = r.u32_le("payload");
        float f;
        std::memcpy(&f, &bits, 4);
        if (!std::isfinite(f)) throw FormatError(at, "non-finite payload value");
        data[i] = static_cast<double>(f);
    }
    // Reject trailing bytes so dumps stay canonical.
    char extra;
    in.read(&extra, 1);
    if (in.gcount() != 0) throw FormatError(r.offset, "trailing bytes after payload");
    return Tensor::from(std::move(shape), std::move(data));
}

Tensor read_slt1_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_slt1(in);
}

} // namespace slacc
