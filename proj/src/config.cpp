#include "slacc/config.hpp"

#include "slacc/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace slacc::harness {

using nlohmann::json;

const char* to_string(CompressorKind k) {
    switch (k) {
    case CompressorKind::SlAcc: return "slacc";
    case CompressorKind::Uniform: return "uniform";
    case CompressorKind::TopK: return "topk";
    case CompressorKind::None: return "none";
    }
    return "?";
}

const char* to_string(PartitionKind k) {
    return k == PartitionKind::Iid ? "iid" : "dirichlet";
}

const char* to_string(ServerUpdateMode m) {
    return m == ServerUpdateMode::Sequential ? "sequential" : "parallel";
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (!known.count(key)) fail("unknown key \"" + key + "\" in " + where);
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        fail(std::string("bad value for \"") + key + "\"");
    }
}

} // namespace

void TrainConfig::validate() const {
    if (devices == 0) fail("devices must be >= 1");
    if (rounds == 0) fail("rounds must be >= 1");
    if (batch_size == 0) fail("batch_size must be >= 1");
    if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr must be positive and finite");
    if (groups == 0) fail("groups must be >= 1");
    if (b_min < 1 || b_min > b_max || b_max > 32) fail("need 1 <= b_min <= b_max <= 32");
    if (history_window == 0) fail("history_window must be >= 1");

    if (partition.kind == PartitionKind::Dirichlet && !(partition.beta > 0.0))
        fail("dirichlet beta must be positive");

    switch (compressor.kind) {
    case CompressorKind::Uniform:
        if (compressor.uniform_bits < 1 || compressor.uniform_bits > 32)
            fail("uniform bits must lie in [1, 32]");
        break;
    case CompressorKind::TopK:
        if (!(compressor.keep_fraction > 0.0) || compressor.keep_fraction > 1.0)
            fail("topk keep_fraction must lie in (0, 1]");
        if (compressor.rand_fraction < 0.0 || compressor.rand_fraction >= 1.0)
            fail("topk rand_fraction must lie in [0, 1)");
        break;
    default: break;
    }

    if (dataset.kind == DatasetKind::Mnist) {
        if (dataset.train_images.empty() || dataset.train_labels.empty() ||
            dataset.test_images.empty() || dataset.test_labels.empty())
            fail("mnist dataset needs train/test image and label paths");
    } else {
        if (dataset.classes < 2) fail("synth dataset needs at least two classes");
        if (dataset.per_class == 0 || dataset.test_per_class == 0)
            fail("synth dataset needs per_class and test_per_class >= 1");
        if (dataset.noise_sigma < 0.0) fail("noise_sigma must be non-negative");
    }

    if (model.width == 0 || model.stages == 0 || model.hidden == 0)
        fail("model width, stages, and hidden must be >= 1");

    try {
        link.validate();
    } catch (const std::exception& e) {
        fail(e.what());
    }
    if (compute_seconds_per_round < 0.0) fail("compute_seconds_per_round must be >= 0");
    if (!(target_accuracy > 0.0) || target_accuracy > 1.0)
        fail("target_accuracy must lie in (0, 1]");
}

namespace {

PartitionConfig parse_partition(const json& j) {
    if (!j.is_object()) fail("partition must be an object");
    reject_unknown(j, {"kind", "beta"}, "partition");
    PartitionConfig p;
    const std::string kind = get_or<std::string>(j, "kind", "iid");
    if (kind == "iid") p.kind = PartitionKind::Iid;
    else if (kind == "dirichlet") p.kind = PartitionKind::Dirichlet;
    else fail("partition.kind must be \"iid\" or \"dirichlet\"");
    p.beta = get_or<double>(j, "beta", 0.5);
    return p;
}

CompressorConfig parse_compressor(const json& j) {
    if (!j.is_object()) fail("compressor must be an object");
    reject_unknown(j, {"kind", "bits", "keep_fraction", "rand_fraction"}, "compressor");
    CompressorConfig c;
    const std::string kind = get_or<std::string>(j, "kind", "slacc");
    if (kind == "slacc") c.kind = CompressorKind::SlAcc;
    else if (kind == "uniform") c.kind = CompressorKind::Uniform;
    else if (kind == "topk") c.kind = CompressorKind::TopK;
    else if (kind == "none") c.kind = CompressorKind::None;
    else fail("compressor.kind must be slacc, uniform, topk, or none");
    c.uniform_bits = get_or<int>(j, "bits", 8);
    c.keep_fraction = get_or<double>(j, "keep_fraction", 0.25);
    c.rand_fraction = get_or<double>(j, "rand_fraction", 0.0);
    return c;
}

DatasetConfig parse_dataset(const json& j) {
    if (!j.is_object()) fail("dataset must be an object");
    reject_unknown(j,
                   {"kind", "train_images", "train_labels", "test_images", "test_labels",
                    "train_limit", "test_limit", "classes", "per_class", "test_per_class",
                    "noise_sigma"},
                   "dataset");
    DatasetConfig d;
    const std::string kind = get_or<std::string>(j, "kind", "mnist");
    if (kind == "mnist") d.kind = DatasetKind::Mnist;
    else if (kind == "synth") d.kind = DatasetKind::Synth;
    else fail("dataset.kind must be \"mnist\" or \"synth\"");
    d.train_images = get_or<std::string>(j, "train_images", "");
    d.train_labels = get_or<std::string>(j, "train_labels", "");
    d.test_images = get_or<std::string>(j, "test_images", "");
    d.test_labels = get_or<std::string>(j, "test_labels", "");
    d.train_limit = get_or<std::size_t>(j, "train_limit", 0);
    d.test_limit = get_or<std::size_t>(j, "test_limit", 0);
    d.classes = get_or<int>(j, "classes", 4);
    d.per_class = get_or<std::size_t>(j, "per_class", 100);
    d.test_per_class = get_or<std::size_t>(j, "test_per_class", 25);
    d.noise_sigma = get_or<double>(j, "noise_sigma", 0.15);
    return d;
}

netsim::LinkModel parse_link(const json& j) {
    if (!j.is_object()) fail("link must be an object");
    reject_unknown(j, {"uplink_bytes_per_sec", "downlink_bytes_per_sec", "latency_sec"}, "link");
    netsim::LinkModel link;
    link.uplink_bytes_per_sec = get_or<double>(j, "uplink_bytes_per_sec", 1e6);
    link.downlink_bytes_per_sec = get_or<double>(j, "downlink_bytes_per_sec", 1e6);
    link.latency_sec = get_or<double>(j, "latency_sec", 0.0);
    return link;
}

ModelConfig parse_model(const json& j) {
    if (!j.is_object()) fail("model must be an object");
    reject_unknown(j, {"width", "stages", "hidden"}, "model");
    ModelConfig m;
    m.width = get_or<std::size_t>(j, "width", 8);
    m.stages = get_or<std::size_t>(j, "stages", 3);
    m.hidden = get_or<std::size_t>(j, "hidden", 128);
    return m;
}

} // namespace

TrainConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) fail("config root must be a JSON object");
    reject_unknown(j,
                   {"seed", "devices", "rounds", "batch_size", "lr", "groups", "b_min", "b_max",
                    "history_window", "log_base", "constant_channel_zero", "partition",
                    "compressor", "dataset", "model", "aggregate_clients", "server_update",
                    "timing", "link", "compute_seconds_per_round", "target_accuracy", "threads"},
                   "config");

    TrainConfig cfg;
    cfg.seed = get_or<std::uint64_t>(j, "seed", 1);
    cfg.devices = get_or<std::size_t>(j, "devices", 5);
    cfg.rounds = get_or<std::uint32_t>(j, "rounds", 60);
    cfg.batch_size = get_or<std::size_t>(j, "batch_size", 128);
    cfg.lr = get_or<double>(j, "lr", 0.05);
    cfg.groups = get_or<std::size_t>(j, "groups", 4);
    cfg.b_min = get_or<int>(j, "b_min", 2);
    cfg.b_max = get_or<int>(j, "b_max", 8);
    cfg.history_window = get_or<std::size_t>(j, "history_window", 5);

    const std::string base = get_or<std::string>(j, "log_base", "e");
    if (base == "e" || base == "ln" || base == "nat") cfg.log_base = acii::LogBase::E;
    else if (base == "2" || base == "two" || base == "bits") cfg.log_base = acii::LogBase::Two;
    else fail("log_base must be \"e\" or \"2\"");
    cfg.constant_channel_zero = get_or<bool>(j, "constant_channel_zero", false);

    if (j.contains("partition")) cfg.partition = parse_partition(j.at("partition"));
    if (j.contains("compressor")) cfg.compressor = parse_compressor(j.at("compressor"));
    if (j.contains("dataset")) cfg.dataset = parse_dataset(j.at("dataset"));
    if (j.contains("model")) cfg.model = parse_model(j.at("model"));
    if (j.contains("link")) cfg.link = parse_link(j.at("link"));

    cfg.aggregate_clients = get_or<bool>(j, "aggregate_clients", true);

    const std::string update = get_or<std::string>(j, "server_update", "sequential");
    if (update == "sequential") cfg.server_update = ServerUpdateMode::Sequential;
    else if (update == "parallel") cfg.server_update = ServerUpdateMode::Parallel;
    else fail("server_update must be \"sequential\" or \"parallel\"");

    const std::string timing = get_or<std::string>(j, "timing", "parallel");
    if (timing == "sequential") cfg.timing = netsim::RoundTiming::Sequential;
    else if (timing == "parallel") cfg.timing = netsim::RoundTiming::Parallel;
    else fail("timing must be \"sequential\" or \"parallel\"");

    cfg.compute_seconds_per_round = get_or<double>(j, "compute_seconds_per_round", 0.0);
    cfg.target_accuracy = get_or<double>(j, "target_accuracy", 0.85);
    cfg.threads = get_or<unsigned>(j, "threads", 0);

    cfg.validate();
    return cfg;
}

TrainConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_to_json(const TrainConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["devices"] = cfg.devices;
    j["rounds"] = cfg.rounds;
    j["batch_size"] = cfg.batch_size;
    j["lr"] = cfg.lr;
    j["groups"] = cfg.groups;
    j["b_min"] = cfg.b_min;
    j["b_max"] = cfg.b_max;
    j["history_window"] = cfg.history_window;
    j["log_base"] = cfg.log_base == acii::LogBase::E ? "e" : "2";
    j["constant_channel_zero"] = cfg.constant_channel_zero;
    j["partition"] = {{"kind", to_string(cfg.partition.kind)}, {"beta", cfg.partition.beta}};
    j["compressor"] = {{"kind", to_string(cfg.compressor.kind)},
                       {"bits", cfg.compressor.uniform_bits},
                       {"keep_fraction", cfg.compressor.keep_fraction},
                       {"rand_fraction", cfg.compressor.rand_fraction}};
    if (cfg.dataset.kind == DatasetKind::Mnist) {
        j["dataset"] = {{"kind", "mnist"},
                        {"train_images", cfg.dataset.train_images},
                        {"train_labels", cfg.dataset.train_labels},
                        {"test_images", cfg.dataset.test_images},
                        {"test_labels", cfg.dataset.test_labels},
                        {"train_limit", cfg.dataset.train_limit},
                        {"test_limit", cfg.dataset.test_limit}};
    } else {
        j["dataset"] = {{"kind", "synth"},
                        {"classes", cfg.dataset.classes},
                        {"per_class", cfg.dataset.per_class},
                        {"test_per_class", cfg.dataset.test_per_class},
                        {"noise_sigma", cfg.dataset.noise_sigma}};
    }
    j["model"] = {{"width", cfg.model.width},
                  {"stages", cfg.model.stages},
                  {"hidden", cfg.model.hidden}};
    j["aggregate_clients"] = cfg.aggregate_clients;
    j["server_update"] = to_string(cfg.server_update);
    j["timing"] = to_string(cfg.timing);
    j["link"] = {{"uplink_bytes_per_sec", cfg.link.uplink_bytes_per_sec},
                 {"downlink_bytes_per_sec", cfg.link.downlink_bytes_per_sec},
                 {"latency_sec", cfg.link.latency_sec}};
    j["compute_seconds_per_round"] = cfg.compute_seconds_per_round;
    j["target_accuracy"] = cfg.target_accuracy;
    j["threads"] = cfg.threads;
    return j.dump(2);
}

} // namespace slacc::harness
