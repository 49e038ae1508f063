#include "slacc/compare.hpp"

#include <cstdio>
#include <sstream>

namespace slacc::harness {

std::optional<double> CompareVariant::time_to_target(double target) const {
    for (const auto& r : result.reports)
        if (r.test_accuracy >= target) return r.cumulative_sim_seconds;
    return std::nullopt;
}

const CompareVariant* CompareResult::find(const std::string& name) const {
    for (const auto& v : variants)
        if (v.name == name) return &v;
    return nullptr;
}

CompareResult run_compare(const TrainConfig& base) {
    struct Entry {
        const char* name;
        CompressorConfig compressor;
    };
    CompressorConfig slacc_c = base.compressor;
    slacc_c.kind = CompressorKind::SlAcc;
    CompressorConfig uni8;
    uni8.kind = CompressorKind::Uniform;
    uni8.uniform_bits = 8;
    CompressorConfig uni2;
    uni2.kind = CompressorKind::Uniform;
    uni2.uniform_bits = 2;
    CompressorConfig topk = base.compressor;
    topk.kind = CompressorKind::TopK;
    CompressorConfig none;
    none.kind = CompressorKind::None;

    const Entry entries[] = {{"slacc", slacc_c},
                             {"uniform8", uni8},
                             {"uniform2", uni2},
                             {"topk", topk},
                             {"none", none}};

    CompareResult out;
    for (const Entry& e : entries) {
        TrainConfig cfg = base;
        cfg.compressor = e.compressor;
        out.variants.push_back({e.name, train(cfg)});
    }
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string compare_to_csv(const CompareResult& result) {
    std::ostringstream out;
    out << "compressor,round,accuracy,sim_comm_seconds,cumulative_sim_seconds,cumulative_bytes\n";
    for (const auto& v : result.variants) {
        std::uint64_t bytes = 0;
        std::size_t at = 0;
        for (const auto& r : v.result.reports) {
            while (at < v.result.ledger.size() && v.result.ledger[at].round <= r.round)
                bytes += v.result.ledger[at++].bytes;
            out << v.name << ',' << r.round << ',' << fmt(r.test_accuracy) << ','
                << fmt(r.sim_comm_seconds) << ',' << fmt(r.cumulative_sim_seconds) << ',' << bytes
                << '\n';
        }
    }
    return out.str();
}

std::string compare_summary_csv(const CompareResult& result, double target) {
    std::ostringstream out;
    out << "compressor,final_accuracy,total_bytes,time_to_target\n";
    for (const auto& v : result.variants) {
        out << v.name << ',' << fmt(v.final_accuracy()) << ',' << v.total_bytes() << ',';
        if (const auto t = v.time_to_target(target)) out << fmt(*t);
        out << '\n';
    }
    return out.str();
}

} // namespace slacc::harness
