#include "slacc/codec.hpp"
#include "slacc/compare.hpp"
#include "slacc/config.hpp"
#include "slacc/errors.hpp"
#include "slacc/harness.hpp"
#include "slacc/report_io.hpp"
#include "slacc/rng.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;
using namespace slacc;

struct Overrides {
    std::optional<std::uint32_t> rounds;
    std::optional<std::size_t> devices;
    std::optional<std::size_t> groups;
    std::optional<int> b_min, b_max;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> partition;
    std::optional<double> beta;
    std::optional<std::string> compressor;
    std::optional<int> bits;
    std::optional<double> keep;
    std::optional<double> lr;
    std::optional<std::size_t> batch;
    std::optional<unsigned> threads;
    std::optional<double> target;
};

void add_override_flags(CLI::App& cmd, Overrides& ov) {
    cmd.add_option("--rounds", ov.rounds, "Override rounds T");
    cmd.add_option("--devices", ov.devices, "Override device count");
    cmd.add_option("--g", ov.groups, "Override group count g");
    cmd.add_option("--bmin", ov.b_min, "Override minimum bit width");
    cmd.add_option("--bmax", ov.b_max, "Override maximum bit width");
    cmd.add_option("--seed", ov.seed, "Override RNG seed");
    cmd.add_option("--partition", ov.partition, "Override partition kind (iid|dirichlet)");
    cmd.add_option("--beta", ov.beta, "Override Dirichlet beta");
    cmd.add_option("--compressor", ov.compressor,
                   "Override compressor (slacc|uniform|topk|none)");
    cmd.add_option("--bits", ov.bits, "Override uniform compressor bit width");
    cmd.add_option("--keep", ov.keep, "Override top-k keep fraction");
    cmd.add_option("--lr", ov.lr, "Override learning rate");
    cmd.add_option("--batch", ov.batch, "Override batch size");
    cmd.add_option("--threads", ov.threads, "Worker thread count (0 = logical cores)");
    cmd.add_option("--target", ov.target, "Override target accuracy");
}

harness::TrainConfig load_with_overrides(const std::string& config_path, const Overrides& ov) {
    harness::TrainConfig cfg = harness::load_config_file(config_path);
    if (ov.rounds) cfg.rounds = *ov.rounds;
    if (ov.devices) cfg.devices = *ov.devices;
    if (ov.groups) cfg.groups = *ov.groups;
    if (ov.b_min) cfg.b_min = *ov.b_min;
    if (ov.b_max) cfg.b_max = *ov.b_max;
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.partition) {
        if (*ov.partition == "iid") cfg.partition.kind = harness::PartitionKind::Iid;
        else if (*ov.partition == "dirichlet")
            cfg.partition.kind = harness::PartitionKind::Dirichlet;
        else throw ConfigError("--partition must be iid or dirichlet");
    }
    if (ov.beta) cfg.partition.beta = *ov.beta;
    if (ov.compressor) {
        if (*ov.compressor == "slacc") cfg.compressor.kind = harness::CompressorKind::SlAcc;
        else if (*ov.compressor == "uniform")
            cfg.compressor.kind = harness::CompressorKind::Uniform;
        else if (*ov.compressor == "topk") cfg.compressor.kind = harness::CompressorKind::TopK;
        else if (*ov.compressor == "none") cfg.compressor.kind = harness::CompressorKind::None;
        else throw ConfigError("--compressor must be slacc, uniform, topk, or none");
    }
    if (ov.bits) cfg.compressor.uniform_bits = *ov.bits;
    if (ov.keep) cfg.compressor.keep_fraction = *ov.keep;
    if (ov.lr) cfg.lr = *ov.lr;
    if (ov.batch) cfg.batch_size = *ov.batch;
    if (ov.threads) cfg.threads = *ov.threads;
    if (ov.target) cfg.target_accuracy = *ov.target;
    cfg.validate();
    return cfg;
}

void write_run_outputs(const harness::TrainResult& result, const std::string& out_dir) {
    harness::write_file_atomic((fs::path(out_dir) / "reports.jsonl").string(),
                               harness::reports_to_jsonl(result.reports));
    harness::write_file_atomic((fs::path(out_dir) / "summary.csv").string(),
                               harness::summary_to_csv(result.reports));
    harness::write_file_atomic((fs::path(out_dir) / "ledger.csv").string(),
                               harness::ledger_to_csv(result.ledger));
}

nlohmann::json run_summary(const harness::TrainResult& result, double target) {
    std::optional<double> tta;
    for (const auto& r : result.reports)
        if (r.test_accuracy >= target) {
            tta = r.cumulative_sim_seconds;
            break;
        }
    nlohmann::json j;
    j["final_accuracy"] = result.final_accuracy();
    j["total_bytes"] = result.total_bytes;
    j["target_accuracy"] = target;
    if (tta) j["time_to_target"] = *tta;
    else j["time_to_target"] = nullptr;
    return j;
}

int cmd_train(const std::string& config_path, const Overrides& ov, const std::string& out_dir) {
    const harness::TrainConfig cfg = load_with_overrides(config_path, ov);
    const harness::TrainResult result = harness::train(cfg);
    write_run_outputs(result, out_dir);
    std::cout << run_summary(result, cfg.target_accuracy).dump() << "\n";
    return 0;
}

int cmd_inspect_entropy(const std::string& config_path, const Overrides& ov,
                        const std::string& out_dir) {
    const harness::TrainConfig cfg = load_with_overrides(config_path, ov);
    if (cfg.compressor.kind != harness::CompressorKind::SlAcc)
        throw ConfigError("inspect-entropy requires the slacc compressor");

    std::ostringstream csv;
    csv << "round,channel,h_inst,h_hist,alpha,h_blend\n";
    char buf[160];
    const auto logger = [&](const harness::EntropyLogRow& row) {
        std::snprintf(buf, sizeof buf, "%u,%u,%.17g,%.17g,%.17g,%.17g\n", row.round, row.channel,
                      row.trace.h_inst, row.trace.h_hist, row.trace.alpha, row.trace.h_blend);
        csv << buf;
    };
    const harness::TrainResult result = harness::train(cfg, logger);
    harness::write_file_atomic((fs::path(out_dir) / "entropy.csv").string(), csv.str());
    write_run_outputs(result, out_dir);
    std::cout << run_summary(result, cfg.target_accuracy).dump() << "\n";
    return 0;
}

int cmd_compare(const std::string& config_path, const Overrides& ov, const std::string& out_dir) {
    const harness::TrainConfig cfg = load_with_overrides(config_path, ov);
    const harness::CompareResult result = harness::run_compare(cfg);
    harness::write_file_atomic((fs::path(out_dir) / "compare.csv").string(),
                               harness::compare_to_csv(result));
    harness::write_file_atomic((fs::path(out_dir) / "compare_summary.csv").string(),
                               harness::compare_summary_csv(result, cfg.target_accuracy));

    nlohmann::json j;
    j["target_accuracy"] = cfg.target_accuracy;
    j["variants"] = nlohmann::json::array();
    for (const auto& v : result.variants) {
        nlohmann::json vj;
        vj["name"] = v.name;
        vj["final_accuracy"] = v.final_accuracy();
        vj["total_bytes"] = v.total_bytes();
        const auto t = v.time_to_target(cfg.target_accuracy);
        if (t) vj["time_to_target"] = *t;
        else vj["time_to_target"] = nullptr;
        j["variants"].push_back(vj);
    }
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_compress_bench(const std::string& tensor_path, std::size_t g, int b_min, int b_max,
                       const std::string& compressor, int bits, double keep,
                       const std::string& log_base) {
    const Tensor t = read_slt1_file(tensor_path);
    if (t.rank() != 4) throw ConfigError("compress-bench needs a rank-4 [B,C,H,W] tensor");
    const SmashedData s(t, 0, Direction::Activations);
    const std::uint64_t raw_bytes = 4 * static_cast<std::uint64_t>(t.size());

    acii::EntropyConfig ecfg;
    if (log_base == "e") ecfg.base = acii::LogBase::E;
    else if (log_base == "2") ecfg.base = acii::LogBase::Two;
    else throw ConfigError("--log-base must be e or 2");

    std::uint64_t compressed_bytes = 0;
    std::vector<int> per_group_bits;
    SmashedData reconstructed;

    if (compressor == "slacc") {
        acii::EntropyState state(s.channels(), 1);
        const acii::ImportanceVector scores = acii::score_channels(s, state, 0, 1, ecfg);
        cgc::CompressionPlan plan;
        const cgc::QuantizedSmashed q =
            cgc::compress_with_plan(s, scores, g, b_min, b_max, &plan);
        compressed_bytes = codec::encode(q).size();
        per_group_bits = plan.bits;
        reconstructed = cgc::decompress(q);
    } else if (compressor == "uniform") {
        const cgc::QuantizedSmashed q = cgc::baseline_uniform(s, bits);
        compressed_bytes = codec::encode(q).size();
        per_group_bits = {bits};
        reconstructed = cgc::decompress(q);
    } else if (compressor == "topk") {
        const cgc::SparseSmashed sp = cgc::baseline_topk(s, keep, 0.0, 0);
        compressed_bytes = sp.wire_bytes();
        reconstructed = sp.to_dense();
    } else {
        throw ConfigError("--compressor must be slacc, uniform, or topk");
    }

    double max_abs = 0.0, mse = 0.0;
    std::span<const double> a = s.tensor.data();
    std::span<const double> b = reconstructed.tensor.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double err = a[i] - b[i];
        max_abs = std::max(max_abs, std::abs(err));
        mse += err * err;
    }
    mse /= static_cast<double>(a.size());

    nlohmann::json j;
    j["raw_bytes"] = raw_bytes;
    j["compressed_bytes"] = compressed_bytes;
    j["ratio"] = static_cast<double>(compressed_bytes) / static_cast<double>(raw_bytes);
    j["max_abs_err"] = max_abs;
    j["mse"] = mse;
    j["per_group_bits"] = per_group_bits;
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_gen_tensor(const std::string& out_path, const std::vector<std::size_t>& shape,
                   std::uint64_t seed, const std::string& dist) {
    if (shape.size() != 4) throw ConfigError("--shape needs four dims B C H W");
    Tensor t(shape);
    SplitMix64 rng(mix_seed(seed, 0x67656eULL));
    if (dist == "uniform") {
        for (double& v : t.data()) v = rng.next_double();
    } else if (dist == "gaussian") {
        for (double& v : t.data()) v = rng.next_gaussian();
    } else if (dist == "mix") {
        // Per-channel scale so channels differ in spread (and so in entropy).
        const std::size_t plane = shape[2] * shape[3];
        for (std::size_t b = 0; b < shape[0]; ++b)
            for (std::size_t c = 0; c < shape[1]; ++c) {
                const double scale = 0.1 + static_cast<double>(c);
                double* p = t.data().data() + (b * shape[1] + c) * plane;
                for (std::size_t i = 0; i < plane; ++i)
                    p[i] = scale * rng.next_gaussian() + (c % 2 ? rng.next_double() : 0.0);
            }
    } else {
        throw ConfigError("--dist must be uniform, gaussian, or mix");
    }
    write_slt1_file(out_path, t);
    std::cout << "{\"written\":\"" << out_path << "\",\"elements\":" << t.size() << "}\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Split-learning compression simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    Overrides ov;

    CLI::App* c_train = app.add_subcommand("train", "Run a training experiment");
    c_train->add_option("--config", config_path, "JSON config path")->required();
    c_train->add_option("--out", out_dir, "Output directory");
    add_override_flags(*c_train, ov);

    CLI::App* c_inspect =
        app.add_subcommand("inspect-entropy", "Train while streaming per-channel entropy traces");
    c_inspect->add_option("--config", config_path, "JSON config path")->required();
    c_inspect->add_option("--out", out_dir, "Output directory");
    add_override_flags(*c_inspect, ov);

    CLI::App* c_compare =
        app.add_subcommand("compare", "Run the same experiment under every compressor");
    c_compare->add_option("--config", config_path, "JSON config path")->required();
    c_compare->add_option("--out", out_dir, "Output directory");
    add_override_flags(*c_compare, ov);

    std::string tensor_path, bench_compressor = "slacc", bench_log_base = "e";
    std::size_t bench_g = 4;
    int bench_bmin = 2, bench_bmax = 8, bench_bits = 8;
    double bench_keep = 0.25;
    CLI::App* c_bench = app.add_subcommand("compress-bench", "Compress one SLT1 tensor dump");
    c_bench->add_option("tensor", tensor_path, "SLT1 tensor file")->required();
    c_bench->add_option("--g", bench_g, "Group count");
    c_bench->add_option("--bmin", bench_bmin, "Minimum bit width");
    c_bench->add_option("--bmax", bench_bmax, "Maximum bit width");
    c_bench->add_option("--compressor", bench_compressor, "slacc|uniform|topk");
    c_bench->add_option("--bits", bench_bits, "Uniform bit width");
    c_bench->add_option("--keep", bench_keep, "Top-k keep fraction");
    c_bench->add_option("--log-base", bench_log_base, "Entropy log base (e|2)");

    std::string gen_out = "tensor.slt1", gen_dist = "mix";
    std::vector<std::size_t> gen_shape{2, 8, 28, 28};
    std::uint64_t gen_seed = 1;
    CLI::App* c_gen = app.add_subcommand("gen-tensor", "Write a random SLT1 tensor");
    c_gen->add_option("--out", gen_out, "Output path");
    c_gen->add_option("--shape", gen_shape, "Dims B C H W")->expected(4);
    c_gen->add_option("--seed", gen_seed, "RNG seed");
    c_gen->add_option("--dist", gen_dist, "uniform|gaussian|mix");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_train->parsed()) return cmd_train(config_path, ov, out_dir);
        if (c_inspect->parsed()) return cmd_inspect_entropy(config_path, ov, out_dir);
        if (c_compare->parsed()) return cmd_compare(config_path, ov, out_dir);
        if (c_bench->parsed())
            return cmd_compress_bench(tensor_path, bench_g, bench_bmin, bench_bmax,
                                      bench_compressor, bench_bits, bench_keep, bench_log_base);
        if (c_gen->parsed()) return cmd_gen_tensor(gen_out, gen_shape, gen_seed, gen_dist);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
