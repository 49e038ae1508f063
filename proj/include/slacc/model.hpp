#pragma once

#include "slacc/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace slacc::model {

/// 3x3 stride-1 same-padding convolution.
struct Conv2d {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t ksize = 3;
    Tensor weight; // [out, in, k, k]
    Tensor bias;   // [out]
};

struct Dense {
    std::size_t in_features = 0;
    std::size_t out_features = 0;
    Tensor weight; // [out, in]
    Tensor bias;   // [out]
};

/// Parameter gradients, aligned index-for-index with parameters().
using Grads = std::vector<Tensor>;

/// Client-side sub-model: a stack of conv+ReLU stages whose output is the
/// smashed data that crosses the network.
struct ClientModel {
    std::vector<Conv2d> convs;

    /// He-uniform weights (limit sqrt(6/fan_in)), zero biases, one RNG
    /// substream per layer so init is order-independent and seed-replayable.
    static ClientModel init(std::uint64_t seed, std::size_t in_channels = 1,
                            std::size_t width = 8, std::size_t stages = 3);

    std::size_t out_channels() const { return convs.empty() ? 0 : convs.back().out_channels; }

    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::vector<std::string> parameter_names() const;

    /// batch [B, C_in, H, W] -> activations [B, width, H, W], tagged with
    /// direction Activations and the given round.
    SmashedData forward(const Tensor& batch, std::uint32_t round = 0) const;

    /// Parameter gradients given the upstream gradient at the cut layer.
    /// Recomputes intermediates from `batch`; grad_smashed.direction must be
    /// Gradients and its shape must match forward(batch).
    Grads backward(const Tensor& batch, const SmashedData& grad_smashed) const;
};

/// Server-side sub-model: 2x2 average pool, flatten, dense+ReLU, dense,
/// softmax cross-entropy head.
struct ServerModel {
    std::size_t pool = 2;
    std::size_t in_channels = 0, in_h = 0, in_w = 0;
    Dense hidden;
    Dense output;

    static ServerModel init(std::uint64_t seed, std::size_t in_channels = 8,
                            std::size_t in_h = 28, std::size_t in_w = 28,
                            std::size_t hidden_units = 128, std::size_t classes = 10);

    std::size_t classes() const { return output.out_features; }

    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::vector<std::string> parameter_names() const;

    /// Logits [B, classes]; s.direction must be Activations.
    Tensor logits(const SmashedData& s) const;

    /// Argmax class per sample (lowest index wins ties).
    std::vector<int> predict(const SmashedData& s) const;

    struct ForwardBackward {
        double loss = 0.0;
        SmashedData grad_smashed; // direction Gradients, same shape as input
        Grads grads;
    };

    /// Mean softmax cross-entropy over the batch, the gradient w.r.t. the
    /// smashed input, and parameter gradients. Labels must lie in
    /// [0, classes); s.direction must be Activations.
    ForwardBackward forward_backward(const SmashedData& s, std::span<const int> labels) const;
};

/// p <- p - lr * g elementwise for every aligned pair.
void sgd_step(const std::vector<Tensor*>& params, const Grads& grads, double lr);

/// Uniform parameter average across replicas, written back into each one.
void average_parameters(const std::vector<ClientModel*>& replicas);

/// Checkpoint: one SLT1 dump per parameter plus a JSON manifest recording
/// names, shapes, seed, and round. SLT1 stores f32, so reload is not
/// bit-exact in f64; checkpoints are for inspection, not resume-exactness.
void save_checkpoint(const std::string& dir, const ClientModel& client,
                     const ServerModel& server, std::uint64_t seed, std::uint32_t round);

struct Checkpoint {
    ClientModel client;
    ServerModel server;
    std::uint64_t seed = 0;
    std::uint32_t round = 0;
};

Checkpoint load_checkpoint(const std::string& dir);

} // namespace slacc::model
