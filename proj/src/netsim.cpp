#include "slacc/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

namespace slacc::netsim {

void LinkModel::validate() const {
    if (!(uplink_bytes_per_sec > 0.0) || !(downlink_bytes_per_sec > 0.0))
        throw std::invalid_argument("link rates must be positive");
    if (!(latency_sec >= 0.0)) throw std::invalid_argument("latency must be non-negative");
}

double LinkModel::transfer_seconds(Direction dir, std::uint64_t bytes) const {
    validate();
    const double rate =
        dir == Direction::Activations ? uplink_bytes_per_sec : downlink_bytes_per_sec;
    return latency_sec + static_cast<double>(bytes) / rate;
}

const char* to_string(RoundTiming t) {
    return t == RoundTiming::Sequential ? "sequential" : "parallel";
}

double CommLedger::record(std::uint32_t round, std::uint32_t device, Direction dir,
                          std::uint64_t bytes, const LinkModel& link) {
    const double secs = link.transfer_seconds(dir, bytes);
    std::lock_guard<std::mutex> lock(mu_);
    entries_.push_back({round, device, dir, bytes, secs});
    // Keep the canonical (round, device, direction) total order regardless of
    // append interleaving.
    auto it = entries_.end() - 1;
    while (it != entries_.begin()) {
        auto prev = it - 1;
        const auto key = [](const LedgerEntry& e) {
            return std::tuple(e.round, e.device, static_cast<std::uint8_t>(e.direction));
        };
        if (key(*prev) <= key(*it)) break;
        std::iter_swap(prev, it);
        it = prev;
    }
    return secs;
}

std::vector<LedgerEntry> CommLedger::snapshot() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_;
}

std::uint64_t CommLedger::total_bytes() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::uint64_t total = 0;
    for (const auto& e : entries_) total += e.bytes;
    return total;
}

double CommLedger::round_seconds(std::uint32_t round, RoundTiming timing) const {
    std::lock_guard<std::mutex> lock(mu_);
    if (timing == RoundTiming::Sequential) {
        double sum = 0.0;
        for (const auto& e : entries_)
            if (e.round == round) sum += e.sim_seconds;
        return sum;
    }
    // Parallel: per-device transfers are still sequential (a device cannot
    // upload and download at once), devices overlap.
    std::map<std::uint32_t, double> per_device;
    for (const auto& e : entries_)
        if (e.round == round) per_device[e.device] += e.sim_seconds;
    double mx = 0.0;
    for (const auto& [dev, secs] : per_device) mx = std::max(mx, secs);
    return mx;
}

double CommLedger::cumulative_seconds(std::uint32_t through_round, RoundTiming timing,
                                      double compute_seconds_per_round) const {
    double total = 0.0;
    for (std::uint32_t r = 0; r <= through_round; ++r)
        total += round_seconds(r, timing) + compute_seconds_per_round;
    return total;
}

std::string ledger_csv(const std::vector<LedgerEntry>& entries) {
    std::string out = "round,device,direction,bytes,sim_seconds\n";
    char buf[128];
    for (const auto& e : entries) {
        std::snprintf(buf, sizeof buf, "%u,%u,%s,%llu,%.9f\n", e.round, e.device,
                      to_string(e.direction), static_cast<unsigned long long>(e.bytes),
                      e.sim_seconds);
        out += buf;
    }
    return out;
}

void CommLedger::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << ledger_csv(snapshot());
}

std::optional<double> time_to_accuracy(const CommLedger& ledger,
                                       const std::vector<AccuracyPoint>& trajectory, double target,
                                       RoundTiming timing, double compute_seconds_per_round) {
    for (const auto& pt : trajectory)
        if (pt.accuracy >= target)
            return ledger.cumulative_seconds(pt.round, timing, compute_seconds_per_round);
    return std::nullopt;
}

} // namespace slacc::netsim
