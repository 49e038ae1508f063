#include "slacc/harness.hpp"

#include "slacc/codec.hpp"
#include "slacc/errors.hpp"
#include "slacc/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

namespace slacc::harness {

BatchIterator::BatchIterator(std::vector<std::size_t> shard, std::size_t batch_size,
                             std::uint64_t seed)
    : order_(std::move(shard)), batch_size_(batch_size), rng_(seed) {
    if (order_.empty()) throw std::invalid_argument("device shard must be non-empty");
    if (batch_size_ == 0) throw std::invalid_argument("batch size must be >= 1");
    rng_.shuffle(std::span<std::size_t>(order_));
}

std::vector<std::size_t> BatchIterator::next() {
    std::vector<std::size_t> out;
    out.reserve(batch_size_);
    while (out.size() < batch_size_) {
        if (cursor_ == order_.size()) {
            rng_.shuffle(std::span<std::size_t>(order_));
            cursor_ = 0;
        }
        out.push_back(order_[cursor_++]);
    }
    return out;
}

std::string report_to_json(const RoundReport& r) {
    nlohmann::json j;
    j["round"] = r.round;
    j["test_accuracy"] = r.test_accuracy;
    j["sim_comm_seconds"] = r.sim_comm_seconds;
    j["cumulative_sim_seconds"] = r.cumulative_sim_seconds;
    j["devices"] = nlohmann::json::array();
    for (const auto& d : r.devices) {
        j["devices"].push_back({{"device", d.device},
                                {"loss", d.loss},
                                {"uplink_bytes", d.uplink_bytes},
                                {"downlink_bytes", d.downlink_bytes},
                                {"uplink_payload_bits", d.uplink_payload_bits},
                                {"downlink_payload_bits", d.downlink_payload_bits},
                                {"act_group_bits", d.act_group_bits},
                                {"act_group_sizes", d.act_group_sizes},
                                {"grad_group_bits", d.grad_group_bits},
                                {"grad_group_sizes", d.grad_group_sizes}});
    }
    return j.dump();
}

std::vector<netsim::AccuracyPoint> TrainResult::trajectory() const {
    std::vector<netsim::AccuracyPoint> pts;
    pts.reserve(reports.size());
    for (const auto& r : reports) pts.push_back({r.round, r.test_accuracy});
    return pts;
}

double evaluate(const model::ClientModel& client, const model::ServerModel& server,
                const data::Dataset& test, std::size_t batch_size) {
    if (test.size() == 0) throw std::invalid_argument("empty test set");
    std::size_t correct = 0;
    for (std::size_t at = 0; at < test.size(); at += batch_size) {
        const std::size_t take = std::min(batch_size, test.size() - at);
        std::vector<std::size_t> idx(take);
        for (std::size_t i = 0; i < take; ++i) idx[i] = at + i;
        auto [x, y] = test.batch(idx);
        const SmashedData act = client.forward(x);
        const std::vector<int> pred = server.predict(act);
        for (std::size_t i = 0; i < take; ++i)
            if (pred[i] == y[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::uint64_t Trainer::client_init_seed(const TrainConfig& cfg) { return mix_seed(cfg.seed, 0x10); }
std::uint64_t Trainer::server_init_seed(const TrainConfig& cfg) { return mix_seed(cfg.seed, 0x11); }
std::uint64_t Trainer::partition_seed(const TrainConfig& cfg) { return mix_seed(cfg.seed, 0x12); }
std::uint64_t Trainer::subset_seed(const TrainConfig& cfg, bool test) {
    return mix_seed(cfg.seed, test ? 0x14 : 0x13);
}
std::uint64_t Trainer::batch_seed(const TrainConfig& cfg, std::uint32_t device) {
    return mix_seed(cfg.seed, 0x100 + device);
}

namespace {

data::Dataset load_train_set(const TrainConfig& cfg) {
    if (cfg.dataset.kind == DatasetKind::Mnist) {
        data::Dataset full =
            data::load_mnist_idx(cfg.dataset.train_images, cfg.dataset.train_labels);
        if (cfg.dataset.train_limit > 0 && cfg.dataset.train_limit < full.size())
            return data::take_subset(full, cfg.dataset.train_limit, Trainer::subset_seed(cfg, false));
        return full;
    }
    return data::synth_blobs(cfg.dataset.classes, cfg.dataset.per_class, cfg.dataset.noise_sigma,
                             mix_seed(cfg.seed, 0x20));
}

data::Dataset load_test_set(const TrainConfig& cfg) {
    if (cfg.dataset.kind == DatasetKind::Mnist) {
        data::Dataset full = data::load_mnist_idx(cfg.dataset.test_images, cfg.dataset.test_labels);
        if (cfg.dataset.test_limit > 0 && cfg.dataset.test_limit < full.size())
            return data::take_subset(full, cfg.dataset.test_limit, Trainer::subset_seed(cfg, true));
        return full;
    }
    return data::synth_blobs(cfg.dataset.classes, cfg.dataset.test_per_class,
                             cfg.dataset.noise_sigma, mix_seed(cfg.seed, 0x21));
}

/// Everything one direction of one device transfer produces.
struct Transport {
    SmashedData reconstructed;
    std::uint64_t wire_bytes = 0;
    std::uint64_t payload_bits = 0;
    std::vector<int> group_bits;
    std::vector<int> group_sizes;
};

std::uint64_t topk_seed(const TrainConfig& cfg, std::uint32_t t, std::uint32_t device,
                        Direction dir) {
    const std::uint64_t step = (static_cast<std::uint64_t>(t) * cfg.devices + device) * 2 +
                               static_cast<std::uint64_t>(dir);
    return mix_seed(cfg.seed, 0x80000000ULL + step);
}

Transport transport_message(const TrainConfig& cfg, const SmashedData& s,
                            acii::EntropyState& state, std::uint32_t t, std::uint32_t device,
                            std::vector<acii::ChannelTrace>* trace) {
    Transport out;
    switch (cfg.compressor.kind) {
    case CompressorKind::SlAcc: {
        const acii::ImportanceVector scores =
            acii::score_channels(s, state, t, cfg.rounds, cfg.entropy_config(), trace);
        cgc::CompressionPlan plan;
        const cgc::QuantizedSmashed q =
            cgc::compress_with_plan(s, scores, cfg.groups, cfg.b_min, cfg.b_max, &plan);
        const codec::CompressedBlob blob = codec::encode(q);
        out.wire_bytes = blob.size();
        out.payload_bits = q.payload_bits();
        out.group_bits = plan.bits;
        out.group_sizes.assign(plan.grouping.g, 0);
        for (std::uint16_t gid : plan.grouping.assignment) ++out.group_sizes[gid];
        // The server really does go through the wire bytes.
        out.reconstructed = cgc::decompress(codec::decode(blob));
        break;
    }
    case CompressorKind::Uniform: {
        const cgc::QuantizedSmashed q = cgc::baseline_uniform(s, cfg.compressor.uniform_bits);
        const codec::CompressedBlob blob = codec::encode(q);
        out.wire_bytes = blob.size();
        out.payload_bits = q.payload_bits();
        out.group_bits = {cfg.compressor.uniform_bits};
        out.group_sizes = {static_cast<int>(s.channels())};
        out.reconstructed = cgc::decompress(codec::decode(blob));
        break;
    }
    case CompressorKind::TopK: {
        const cgc::SparseSmashed sp =
            cgc::baseline_topk(s, cfg.compressor.keep_fraction, cfg.compressor.rand_fraction,
                               topk_seed(cfg, t, device, s.direction));
        out.wire_bytes = sp.wire_bytes();
        out.payload_bits = 64 * static_cast<std::uint64_t>(sp.indices.size());
        out.reconstructed = sp.to_dense();
        break;
    }
    case CompressorKind::None: {
        const std::uint64_t total = s.tensor.size();
        // Accounted as the f32 tensor dump this tool would otherwise send:
        // 4-byte magic, rank byte, four u32 dims, f32 payload.
        out.wire_bytes = 21 + 4 * total;
        out.payload_bits = 32 * total;
        out.reconstructed = s;
        break;
    }
    }
    return out;
}

} // namespace

Trainer::Trainer(const TrainConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    set_thread_count(cfg_.threads);

    train_ = load_train_set(cfg_);
    test_ = load_test_set(cfg_);
    if (train_.images.dim(2) % 2 != 0 || train_.images.dim(3) % 2 != 0)
        throw ConfigError("image height and width must be even for the 2x2 pool");

    const data::Partition part =
        cfg_.partition.kind == PartitionKind::Iid
            ? data::partition_iid(train_.size(), cfg_.devices, partition_seed(cfg_))
            : data::partition_dirichlet(train_.labels, cfg_.devices, cfg_.partition.beta,
                                        partition_seed(cfg_));

    const model::ClientModel proto = model::ClientModel::init(
        client_init_seed(cfg_), train_.images.dim(1), cfg_.model.width, cfg_.model.stages);
    server_ = model::ServerModel::init(server_init_seed(cfg_), cfg_.model.width,
                                       train_.images.dim(2), train_.images.dim(3),
                                       cfg_.model.hidden,
                                       static_cast<std::size_t>(train_.num_classes));

    devices_.reserve(cfg_.devices);
    for (std::size_t d = 0; d < cfg_.devices; ++d) {
        Device dev;
        dev.id = static_cast<std::uint32_t>(d);
        dev.batches = BatchIterator(part.device_indices[d], cfg_.batch_size,
                                    batch_seed(cfg_, dev.id));
        dev.client = proto;
        dev.act_state = acii::EntropyState(cfg_.model.width, cfg_.history_window);
        dev.grad_state = acii::EntropyState(cfg_.model.width, cfg_.history_window);
        devices_.push_back(std::move(dev));
    }
}

RoundReport Trainer::run_round(const EntropyLogger& logger) {
    if (t_ >= cfg_.rounds) throw StateError("all configured rounds already ran");
    const auto t_start = std::chrono::steady_clock::now();

    RoundReport report;
    report.round = t_;

    std::vector<model::Grads> server_grad_acc;
    for (Device& dev : devices_) {
        auto [x, y] = train_.batch(dev.batches.next());

        // Stage i: client forward to the cut layer.
        const SmashedData act = dev.client.forward(x, t_);

        // Stage ii+iii uplink: score, compress, cross the wire.
        std::vector<acii::ChannelTrace> trace;
        std::vector<acii::ChannelTrace>* trace_ptr =
            (logger && dev.id == 0 && cfg_.compressor.kind == CompressorKind::SlAcc) ? &trace
                                                                                     : nullptr;
        Transport up;
        try {
            up = transport_message(cfg_, act, dev.act_state, t_, dev.id, trace_ptr);
        } catch (const FormatError& e) {
            throw FormatError(e.offset(), "uplink codec failure at round " + std::to_string(t_) +
                                              " device " + std::to_string(dev.id) + ": " +
                                              e.what());
        }
        if (trace_ptr)
            for (std::size_t c = 0; c < trace.size(); ++c)
                logger({t_, static_cast<std::uint32_t>(c), trace[c]});
        ledger_.record(t_, dev.id, Direction::Activations, up.wire_bytes, cfg_.link);

        // Stage iii: server forward/backward on the reconstruction.
        model::ServerModel::ForwardBackward fb =
            server_.forward_backward(up.reconstructed, std::span<const int>(y));
        if (cfg_.server_update == ServerUpdateMode::Sequential) {
            model::sgd_step(server_.parameters(), fb.grads, cfg_.lr);
        } else {
            server_grad_acc.push_back(std::move(fb.grads));
        }

        // Stage iii downlink: gradients come back through the same pipe.
        Transport down;
        try {
            down = transport_message(cfg_, fb.grad_smashed, dev.grad_state, t_, dev.id, nullptr);
        } catch (const FormatError& e) {
            throw FormatError(e.offset(), "downlink codec failure at round " + std::to_string(t_) +
                                              " device " + std::to_string(dev.id) + ": " +
                                              e.what());
        }
        ledger_.record(t_, dev.id, Direction::Gradients, down.wire_bytes, cfg_.link);

        // Stage iv: client backward and update.
        const model::Grads cg = dev.client.backward(x, down.reconstructed);
        model::sgd_step(dev.client.parameters(), cg, cfg_.lr);

        DeviceReport dr;
        dr.device = dev.id;
        dr.loss = fb.loss;
        dr.uplink_bytes = up.wire_bytes;
        dr.downlink_bytes = down.wire_bytes;
        dr.uplink_payload_bits = up.payload_bits;
        dr.downlink_payload_bits = down.payload_bits;
        dr.act_group_bits = std::move(up.group_bits);
        dr.act_group_sizes = std::move(up.group_sizes);
        dr.grad_group_bits = std::move(down.group_bits);
        dr.grad_group_sizes = std::move(down.group_sizes);
        report.devices.push_back(std::move(dr));
    }

    if (cfg_.server_update == ServerUpdateMode::Parallel) {
        // One update from the device-mean gradient.
        model::Grads mean = std::move(server_grad_acc.front());
        for (std::size_t i = 1; i < server_grad_acc.size(); ++i)
            for (std::size_t p = 0; p < mean.size(); ++p) {
                std::span<double> acc = mean[p].data();
                std::span<const double> add = server_grad_acc[i][p].data();
                for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += add[k];
            }
        const double inv = 1.0 / static_cast<double>(server_grad_acc.size());
        for (auto& g : mean)
            for (double& v : g.data()) v *= inv;
        model::sgd_step(server_.parameters(), mean, cfg_.lr);
    }

    if (cfg_.aggregate_clients && devices_.size() > 1) {
        std::vector<model::ClientModel*> replicas;
        for (Device& dev : devices_) replicas.push_back(&dev.client);
        model::average_parameters(replicas);
    }

    report.test_accuracy = evaluate(devices_.front().client, server_, test_);
    report.sim_comm_seconds = ledger_.round_seconds(t_, cfg_.timing);
    report.cumulative_sim_seconds =
        ledger_.cumulative_seconds(t_, cfg_.timing, cfg_.compute_seconds_per_round);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    reports_.push_back(report);
    ++t_;
    return report;
}

TrainResult Trainer::run(const EntropyLogger& logger) {
    while (t_ < cfg_.rounds) run_round(logger);
    TrainResult result;
    result.reports = reports_;
    result.ledger = ledger_.snapshot();
    result.total_bytes = ledger_.total_bytes();
    result.server = server_;
    result.clients.reserve(devices_.size());
    for (const Device& dev : devices_) result.clients.push_back(dev.client);
    return result;
}

TrainResult train(const TrainConfig& cfg, const EntropyLogger& logger) {
    Trainer trainer(cfg);
    return trainer.run(logger);
}

} // namespace slacc::harness
