#pragma once

#include "slacc/entropy.hpp"
#include "slacc/tensor.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace slacc::cgc {

/// Channel -> group assignment from 1-D k-means on the entropy scores.
/// Groups are labeled in ascending centroid order and are never empty.
struct ChannelGrouping {
    std::vector<std::uint16_t> assignment; // size C, values in [0, g)
    std::vector<double> centroids;          // size g, ascending
    std::uint16_t g = 0;
};

/// Exact 1-D k-means: optimal clusters in one dimension are contiguous runs
/// of the sorted values, so the global minimum of the within-cluster
/// sum-of-squares objective is found by dynamic programming over interval
/// partitions. Deterministic; the seed parameter is accepted for interface
/// symmetry with the samplers but unused.
ChannelGrouping group_channels(std::span<const double> entropies, std::size_t g,
                               std::uint64_t seed = 0);

/// Within-cluster sum of squares for an assignment (the grouping objective).
double grouping_objective(std::span<const double> entropies,
                          std::span<const std::uint16_t> assignment, std::size_t g);

/// Mean entropy per group.
std::vector<double> group_mean_entropy(const ChannelGrouping& grouping,
                                       std::span<const double> entropies);

/// floor(h_group) clamped to [b_min, b_max].
int allocate_bits(double h_group, int b_min, int b_max);

/// Linear quantization to b-bit codes over [x_min, x_max]; rounding is
/// half-away-from-zero. Values must lie inside the range.
std::vector<std::uint32_t> quantize(std::span<const double> values, int bits, double x_min,
                                    double x_max);

/// Inverse map onto the quantization lattice; a degenerate range yields
/// x_min everywhere.
std::vector<double> dequantize(std::span<const std::uint32_t> codes, int bits, double x_min,
                               double x_max);

/// Per-group wire parameters. Ranges are f32: they are computed in f64 and
/// widened outward to the enclosing float interval so that quantization,
/// the wire format, and decode all see identical bounds.
struct GroupParams {
    std::uint8_t bits = 0;
    float x_min = 0.0f;
    float x_max = 0.0f;

    bool operator==(const GroupParams&) const = default;
};

struct Shape4 {
    std::uint32_t b = 0, c = 0, h = 0, w = 0;
    bool operator==(const Shape4&) const = default;
    std::size_t elements_per_channel() const {
        return static_cast<std::size_t>(b) * h * w;
    }
    std::size_t total() const { return elements_per_channel() * c; }
};

/// Everything the wire carries besides the codes themselves.
struct WirePlan {
    std::vector<std::uint16_t> group_of_channel; // size C
    std::vector<GroupParams> groups;              // size g

    bool operator==(const WirePlan&) const = default;
};

/// Quantized smashed data: per-channel integer codes plus the plan needed
/// to reconstruct. Equality is field-for-field over the wire content.
struct QuantizedSmashed {
    Shape4 shape;
    std::uint32_t round = 0;
    Direction direction = Direction::Activations;
    WirePlan plan;
    std::vector<std::vector<std::uint32_t>> codes; // [C][N]

    bool operator==(const QuantizedSmashed&) const = default;

    int channel_bits(std::size_t c) const { return plan.groups[plan.group_of_channel[c]].bits; }

    /// Payload accounting identity: sum over channels of N * b_group(c).
    std::uint64_t payload_bits() const;
};

/// Full grouping diagnostics produced alongside a compression.
struct CompressionPlan {
    ChannelGrouping grouping;
    std::vector<double> group_entropy;            // size g
    std::vector<int> bits;                         // size g
    std::vector<std::pair<float, float>> ranges;   // size g
};

/// Builds the grouping, per-group bit widths, and ranges for `s` under the
/// given importance scores. g is clamped to C when C < g.
CompressionPlan plan_compression(const SmashedData& s, const acii::ImportanceVector& scores,
                                 std::size_t g, int b_min, int b_max);

/// The CGC pipeline: group by entropy, allocate bits per group, quantize
/// each channel with its group's range.
QuantizedSmashed compress(const SmashedData& s, const acii::ImportanceVector& scores,
                          std::size_t g, int b_min, int b_max, std::uint64_t seed = 0);

/// Same, returning the grouping diagnostics too.
QuantizedSmashed compress_with_plan(const SmashedData& s, const acii::ImportanceVector& scores,
                                    std::size_t g, int b_min, int b_max, CompressionPlan* plan_out,
                                    std::uint64_t seed = 0);

/// Reconstructs dequantized smashed data with the original shape and tags.
SmashedData decompress(const QuantizedSmashed& q);

/// Fixed-bit baseline: one group holding every channel, global min/max.
QuantizedSmashed baseline_uniform(const SmashedData& s, int bits);

/// Magnitude top-k sparsification with a random complement sample.
/// Non-retained elements reconstruct as zero; values are carried as f32.
struct SparseSmashed {
    Shape4 shape;
    std::uint32_t round = 0;
    Direction direction = Direction::Activations;
    std::vector<std::uint64_t> indices; // ascending flat indices
    std::vector<float> values;

    SmashedData to_dense() const;

    /// Simulated wire size: 32-byte header + 8 bytes per retained element.
    std::uint64_t wire_bytes() const { return 32 + 8 * static_cast<std::uint64_t>(indices.size()); }
};

SparseSmashed baseline_topk(const SmashedData& s, double keep_fraction, double rand_fraction,
                            std::uint64_t seed);

} // namespace slacc::cgc
