#pragma once

#include "slacc/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace slacc::data {

/// Images scaled to [0,1] plus integer class labels.
struct Dataset {
    Tensor images; // [M, C_in, H, W]
    std::vector<int> labels;
    int num_classes = 0;

    std::size_t size() const { return labels.size(); }

    /// One sample's image as a [1, C_in, H, W] tensor.
    Tensor sample(std::size_t i) const;

    /// Batch tensor [indices.size(), C_in, H, W] plus matching labels.
    std::pair<Tensor, std::vector<int>> batch(const std::vector<std::size_t>& indices) const;
};

/// Per-device index lists. Disjoint, each non-empty, union within [0, M).
struct Partition {
    std::vector<std::vector<std::size_t>> device_indices;

    std::size_t devices() const { return device_indices.size(); }
    std::size_t total() const;
};

/// Big-endian IDX pair: images (magic 0x00000803, u8 pixels mapped to
/// pixel/255) and labels (magic 0x00000801). Counts must agree.
/// Throws FormatError carrying the byte offset of the problem.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

/// Class-conditional Gaussian blobs around fixed per-class templates on a
/// 28x28 canvas, clamped to [0,1]. Samples are ordered class-major.
Dataset synth_blobs(int num_classes, std::size_t per_class, double noise_sigma,
                    std::uint64_t seed);

/// Seeded shuffle, then near-equal contiguous shards (sizes differ by <= 1;
/// the first M mod devices shards take the extra sample).
Partition partition_iid(std::size_t total, std::size_t num_devices, std::uint64_t seed);

/// Per class: device proportions ~ Dirichlet(beta * 1), samples assigned by
/// largest-remainder rounding, so every index lands somewhere. Devices left
/// empty are repaired by taking one sample from the currently largest shard.
Partition partition_dirichlet(const std::vector<int>& labels, std::size_t num_devices,
                              double beta, std::uint64_t seed);

/// The first `count` samples after a seeded shuffle (count is clamped to the
/// dataset size).
Dataset take_subset(const Dataset& full, std::size_t count, std::uint64_t seed);

} // namespace slacc::data
