#pragma once

#include "slacc/compress.hpp"
#include "slacc/config.hpp"
#include "slacc/data.hpp"
#include "slacc/entropy.hpp"
#include "slacc/model.hpp"
#include "slacc/netsim.hpp"
#include "slacc/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace slacc::harness {

/// Circular mini-batch iterator over a shard. The shard is reshuffled at
/// construction and again each time a full pass completes, so every epoch
/// sees a fresh order while staying seed-deterministic.
class BatchIterator {
public:
    BatchIterator() = default;
    BatchIterator(std::vector<std::size_t> shard, std::size_t batch_size, std::uint64_t seed);

    std::vector<std::size_t> next();

    const std::vector<std::size_t>& shard() const { return order_; }

private:
    std::vector<std::size_t> order_;
    std::size_t batch_size_ = 1;
    std::size_t cursor_ = 0;
    SplitMix64 rng_{0};
};

/// One edge device: its shard, its client-model replica, and one entropy
/// history per direction.
struct Device {
    std::uint32_t id = 0;
    BatchIterator batches;
    model::ClientModel client;
    acii::EntropyState act_state;
    acii::EntropyState grad_state;
};

/// Per-device accounting for one round. Wire bytes are the encoded blob
/// lengths the ledger sees; payload bits are the analytic sum over groups of
/// m_j * N * b_j (header-free), the quantity the compression-ratio guarantee
/// is stated over.
struct DeviceReport {
    std::uint32_t device = 0;
    double loss = 0.0;
    std::uint64_t uplink_bytes = 0;
    std::uint64_t downlink_bytes = 0;
    std::uint64_t uplink_payload_bits = 0;
    std::uint64_t downlink_payload_bits = 0;
    std::vector<int> act_group_bits;
    std::vector<int> act_group_sizes;
    std::vector<int> grad_group_bits;
    std::vector<int> grad_group_sizes;
};

struct RoundReport {
    std::uint32_t round = 0;
    double test_accuracy = 0.0;
    double sim_comm_seconds = 0.0;       // this round, configured timing model
    double cumulative_sim_seconds = 0.0; // comm + per-round compute cost
    double wall_seconds = 0.0; // measurement only; never serialized, so runs
                               // with identical seeds emit identical reports
    std::vector<DeviceReport> devices;
};

/// reports.jsonl line for one round (wall_seconds deliberately omitted).
std::string report_to_json(const RoundReport& r);

/// Per-channel entropy trace row streamed by inspect-entropy (device 0,
/// activations direction).
struct EntropyLogRow {
    std::uint32_t round = 0;
    std::uint32_t channel = 0;
    acii::ChannelTrace trace{};
};

using EntropyLogger = std::function<void(const EntropyLogRow&)>;

struct TrainResult {
    std::vector<RoundReport> reports;
    std::vector<netsim::LedgerEntry> ledger;
    std::uint64_t total_bytes = 0;
    model::ServerModel server;
    std::vector<model::ClientModel> clients;

    std::vector<netsim::AccuracyPoint> trajectory() const;
    double final_accuracy() const { return reports.empty() ? 0.0 : reports.back().test_accuracy; }
};

/// Top-1 accuracy of client+server on `test`, computed uncompressed.
double evaluate(const model::ClientModel& client, const model::ServerModel& server,
                const data::Dataset& test, std::size_t batch_size = 256);

/// Drives the four-stage round loop over a fixed dataset split. All RNG use
/// is derived from the config seed via fixed salts, so a Trainer is a pure
/// function of its config.
class Trainer {
public:
    explicit Trainer(const TrainConfig& cfg);

    /// Runs the next round (stages i-iv per device, then aggregation, then
    /// an uncompressed evaluation). Rounds are numbered from 0.
    RoundReport run_round(const EntropyLogger& logger = nullptr);

    /// Runs all remaining rounds.
    TrainResult run(const EntropyLogger& logger = nullptr);

    std::uint32_t rounds_done() const { return t_; }
    const TrainConfig& config() const { return cfg_; }
    const std::vector<Device>& devices() const { return devices_; }
    const model::ServerModel& server() const { return server_; }
    const netsim::CommLedger& ledger() const { return ledger_; }
    const data::Dataset& train_set() const { return train_; }
    const data::Dataset& test_set() const { return test_; }

    /// Seed-derivation helpers; tests replicating the schedule must agree
    /// with the trainer on these.
    static std::uint64_t client_init_seed(const TrainConfig& cfg);
    static std::uint64_t server_init_seed(const TrainConfig& cfg);
    static std::uint64_t partition_seed(const TrainConfig& cfg);
    static std::uint64_t subset_seed(const TrainConfig& cfg, bool test);
    static std::uint64_t batch_seed(const TrainConfig& cfg, std::uint32_t device);

private:
    TrainConfig cfg_;
    data::Dataset train_;
    data::Dataset test_;
    std::vector<Device> devices_;
    model::ServerModel server_;
    netsim::CommLedger ledger_;
    std::vector<RoundReport> reports_;
    std::uint32_t t_ = 0;

    friend struct TrainerPeek;
};

/// train(config): the whole experiment in one call.
TrainResult train(const TrainConfig& cfg, const EntropyLogger& logger = nullptr);

} // namespace slacc::harness
