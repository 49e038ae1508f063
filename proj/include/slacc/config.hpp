#pragma once

#include "slacc/entropy.hpp"
#include "slacc/netsim.hpp"

#include <cstdint>
#include <string>

namespace slacc::harness {

enum class CompressorKind : std::uint8_t { SlAcc, Uniform, TopK, None };
const char* to_string(CompressorKind k);

struct CompressorConfig {
    CompressorKind kind = CompressorKind::SlAcc;
    int uniform_bits = 8;        // kind == Uniform
    double keep_fraction = 0.25; // kind == TopK
    double rand_fraction = 0.0;  // kind == TopK
};

enum class PartitionKind : std::uint8_t { Iid, Dirichlet };
const char* to_string(PartitionKind k);

struct PartitionConfig {
    PartitionKind kind = PartitionKind::Iid;
    double beta = 0.5; // kind == Dirichlet
};

enum class DatasetKind : std::uint8_t { Mnist, Synth };

struct DatasetConfig {
    DatasetKind kind = DatasetKind::Mnist;
    // Mnist
    std::string train_images, train_labels, test_images, test_labels;
    std::size_t train_limit = 0; // 0 = all
    std::size_t test_limit = 0;
    // Synth
    int classes = 4;
    std::size_t per_class = 100;
    std::size_t test_per_class = 25;
    double noise_sigma = 0.15;
};

enum class ServerUpdateMode : std::uint8_t { Sequential, Parallel };
const char* to_string(ServerUpdateMode m);

struct ModelConfig {
    std::size_t width = 8;   // smashed channel count
    std::size_t stages = 3;  // conv+ReLU stages on the client
    std::size_t hidden = 128;
};

struct TrainConfig {
    std::uint64_t seed = 1;
    std::size_t devices = 5;
    std::uint32_t rounds = 60;
    std::size_t batch_size = 128;
    double lr = 0.05;

    std::size_t groups = 4;
    int b_min = 2;
    int b_max = 8;
    std::size_t history_window = 5;
    acii::LogBase log_base = acii::LogBase::E;
    bool constant_channel_zero = false;

    PartitionConfig partition;
    CompressorConfig compressor;
    DatasetConfig dataset;
    ModelConfig model;

    bool aggregate_clients = true;
    ServerUpdateMode server_update = ServerUpdateMode::Sequential;

    netsim::RoundTiming timing = netsim::RoundTiming::Parallel;
    netsim::LinkModel link;
    double compute_seconds_per_round = 0.0;
    double target_accuracy = 0.85;

    unsigned threads = 0; // 0 = logical cores

    acii::EntropyConfig entropy_config() const {
        return {log_base, constant_channel_zero};
    }

    /// Throws ConfigError on any out-of-range or inconsistent field.
    void validate() const;
};

/// Parses and validates a JSON config string. Unknown keys are rejected so
/// typos fail loudly. Throws ConfigError.
TrainConfig parse_config(const std::string& json_text);

TrainConfig load_config_file(const std::string& path);

/// The config as canonical JSON (round-trips through parse_config).
std::string config_to_json(const TrainConfig& cfg);

} // namespace slacc::harness
