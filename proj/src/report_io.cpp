#include "slacc/report_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace slacc::harness {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string reports_to_jsonl(const std::vector<RoundReport>& reports) {
    std::string out;
    for (const auto& r : reports) {
        out += report_to_json(r);
        out += '\n';
    }
    return out;
}

std::string summary_to_csv(const std::vector<RoundReport>& reports) {
    std::ostringstream out;
    out << "round,test_accuracy,mean_loss,uplink_bytes,downlink_bytes,sim_comm_seconds,"
           "cumulative_sim_seconds\n";
    for (const auto& r : reports) {
        double loss = 0.0;
        std::uint64_t up = 0, down = 0;
        for (const auto& d : r.devices) {
            loss += d.loss;
            up += d.uplink_bytes;
            down += d.downlink_bytes;
        }
        if (!r.devices.empty()) loss /= static_cast<double>(r.devices.size());
        out << r.round << ',' << fmt(r.test_accuracy) << ',' << fmt(loss) << ',' << up << ','
            << down << ',' << fmt(r.sim_comm_seconds) << ',' << fmt(r.cumulative_sim_seconds)
            << '\n';
    }
    return out.str();
}

std::string ledger_to_csv(const std::vector<netsim::LedgerEntry>& entries) {
    return netsim::ledger_csv(entries);
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

} // namespace slacc::harness
