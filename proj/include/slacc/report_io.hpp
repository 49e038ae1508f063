#pragma once

#include "slacc/harness.hpp"
#include "slacc/netsim.hpp"

#include <string>
#include <vector>

namespace slacc::harness {

/// One JSON object per line, in round order.
std::string reports_to_jsonl(const std::vector<RoundReport>& reports);

/// round,test_accuracy,mean_loss,uplink_bytes,downlink_bytes,
/// sim_comm_seconds,cumulative_sim_seconds
std::string summary_to_csv(const std::vector<RoundReport>& reports);

/// round,device,direction,bytes,sim_seconds
std::string ledger_to_csv(const std::vector<netsim::LedgerEntry>& entries);

/// Writes content to path via a temp file plus rename, so readers never see
/// a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

} // namespace slacc::harness
