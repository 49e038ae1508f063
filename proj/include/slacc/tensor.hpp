#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace slacc {

/// Dense row-major tensor of 64-bit floats. Immutable by convention once
/// handed to other modules; mutation happens through the builder-style
/// accessors before sharing.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<std::size_t> shape);

    /// Adopts data; throws std::invalid_argument if product(shape) != data
    /// size or any element is non-finite.
    static Tensor from(std::vector<std::size_t> shape, std::vector<double> data);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    /// True when every element is finite.
    bool all_finite() const noexcept;

    /// Throws std::invalid_argument naming `what` if any element is NaN/Inf.
    void require_finite(const char* what) const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

enum class Direction : std::uint8_t { Activations = 0, Gradients = 1 };

const char* to_string(Direction d);

/// A [B, C, H, W] activation or activation-gradient batch tagged with the
/// training round it belongs to.
struct SmashedData {
    Tensor tensor;
    std::uint32_t round = 0;
    Direction direction = Direction::Activations;

    SmashedData() = default;
    SmashedData(Tensor t, std::uint32_t round, Direction dir);

    std::size_t batch() const { return tensor.dim(0); }
    std::size_t channels() const { return tensor.dim(1); }
    std::size_t height() const { return tensor.dim(2); }
    std::size_t width() const { return tensor.dim(3); }

    /// Elements per channel: N = B*H*W, identical for every channel.
    std::size_t elements_per_channel() const { return batch() * height() * width(); }

    /// The N elements of channel c in batch-major then row-major spatial
    /// order, the ordering the codec packs on the wire.
    std::vector<double> channel_view(std::size_t c) const;

    /// Writes channel c from `values` using the channel_view ordering.
    void set_channel(std::size_t c, std::span<const double> values);
};

/// "SLT1" tensor dump: magic, u8 rank, rank x u32 little-endian dims, f32
/// little-endian payload. Lossy for f64 tensors by design; it is a CLI
/// exchange format, not a checkpoint of exact doubles.
void write_slt1(std::ostream& out, const Tensor& t);
void write_slt1_file(const std::string& path, const Tensor& t);
Tensor read_slt1(std::istream& in);          // throws FormatError
Tensor read_slt1_file(const std::string& path);

} // namespace slacc
