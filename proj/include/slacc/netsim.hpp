#pragma once

#include "slacc/tensor.hpp"

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace slacc::netsim {

/// Point-to-point link: rates in bytes per second plus a fixed per-message
/// latency. Rates must be positive, latency non-negative.
struct LinkModel {
    double uplink_bytes_per_sec = 1e6;
    double downlink_bytes_per_sec = 1e6;
    double latency_sec = 0.0;

    void validate() const;

    /// latency + bytes/rate for the given direction (Activations go uplink,
    /// Gradients come downlink).
    double transfer_seconds(Direction dir, std::uint64_t bytes) const;
};

struct LedgerEntry {
    std::uint32_t round = 0;
    std::uint32_t device = 0;
    Direction direction = Direction::Activations;
    std::uint64_t bytes = 0;
    double sim_seconds = 0.0;
};

enum class RoundTiming : std::uint8_t {
    Sequential, // devices share the link: round time = sum over devices
    Parallel    // independent links: round time = max over devices
};

const char* to_string(RoundTiming t);

/// Append-only record of every transfer. Appends are serialized; reads copy
/// a snapshot. Entry order is the total order (round, device, direction).
class CommLedger {
public:
    /// Appends and returns the entry's simulated seconds.
    double record(std::uint32_t round, std::uint32_t device, Direction dir, std::uint64_t bytes,
                  const LinkModel& link);

    std::vector<LedgerEntry> snapshot() const;

    std::uint64_t total_bytes() const;

    /// Communication time of one round under the chosen timing model.
    double round_seconds(std::uint32_t round, RoundTiming timing) const;

    /// Cumulative communication time through the given round (inclusive),
    /// plus `compute_seconds_per_round` once per completed round.
    double cumulative_seconds(std::uint32_t through_round, RoundTiming timing,
                              double compute_seconds_per_round = 0.0) const;

    void write_csv(const std::string& path) const;

private:
    mutable std::mutex mu_;
    std::vector<LedgerEntry> entries_;
};

/// CSV rendering: round,device,direction,bytes,sim_seconds.
std::string ledger_csv(const std::vector<LedgerEntry>& entries);

/// One evaluated round in an accuracy trajectory.
struct AccuracyPoint {
    std::uint32_t round = 0;
    double accuracy = 0.0;
};

/// Cumulative simulated seconds at the first round whose accuracy reaches
/// `target`; nullopt when the trajectory never gets there.
std::optional<double> time_to_accuracy(const CommLedger& ledger,
                                       const std::vector<AccuracyPoint>& trajectory, double target,
                                       RoundTiming timing, double compute_seconds_per_round = 0.0);

} // namespace slacc::netsim
