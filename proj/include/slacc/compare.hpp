#pragma once

#include "slacc/harness.hpp"

#include <optional>
#include <string>
#include <vector>

namespace slacc::harness {

/// One compressor's run inside a comparison sweep.
struct CompareVariant {
    std::string name;
    TrainResult result;

    double final_accuracy() const { return result.final_accuracy(); }
    std::uint64_t total_bytes() const { return result.total_bytes; }

    /// Cumulative simulated seconds at the first round reaching `target`.
    std::optional<double> time_to_target(double target) const;
};

struct CompareResult {
    std::vector<CompareVariant> variants;

    const CompareVariant* find(const std::string& name) const;
};

/// Runs the base config under compressors {slacc, uniform-8, uniform-2,
/// topk, none} with identical seed, partition, batching, and init; only the
/// compressor differs.
CompareResult run_compare(const TrainConfig& base);

/// Combined per-round curve: compressor,round,accuracy,sim_comm_seconds,
/// cumulative_sim_seconds,cumulative_bytes.
std::string compare_to_csv(const CompareResult& result);

/// One line per variant: compressor,final_accuracy,total_bytes,
/// time_to_target (empty when the target was never reached).
std::string compare_summary_csv(const CompareResult& result, double target);

} // namespace slacc::harness
