#include "doctest.h"

#include "slacc/codec.hpp"
#include "slacc/compare.hpp"
#include "slacc/compress.hpp"
#include "slacc/config.hpp"
#include "slacc/errors.hpp"
#include "slacc/harness.hpp"
#include "slacc/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

using namespace slacc;
using namespace slacc::harness;

namespace {

TrainConfig synth_config() {
    TrainConfig cfg;
    cfg.seed = 3;
    cfg.devices = 2;
    cfg.rounds = 3;
    cfg.batch_size = 8;
    cfg.lr = 0.1;
    cfg.groups = 2;
    cfg.dataset.kind = DatasetKind::Synth;
    cfg.dataset.classes = 3;
    cfg.dataset.per_class = 20;
    cfg.dataset.test_per_class = 5;
    cfg.dataset.noise_sigma = 0.1;
    cfg.model.width = 4;
    cfg.model.stages = 2;
    cfg.model.hidden = 16;
    return cfg;
}

std::uint64_t sum_report_bytes(const TrainResult& r, bool uplink) {
    std::uint64_t total = 0;
    for (const auto& round : r.reports)
        for (const auto& d : round.devices) total += uplink ? d.uplink_bytes : d.downlink_bytes;
    return total;
}

} // namespace

TEST_CASE("batch iterator covers the shard each epoch") {
    BatchIterator it({10, 11, 12, 13, 14, 15}, 2, 99);
    std::multiset<std::size_t> seen;
    for (int b = 0; b < 3; ++b) {
        const std::vector<std::size_t> batch = it.next();
        REQUIRE(batch.size() == 2);
        seen.insert(batch.begin(), batch.end());
    }
    CHECK(seen == std::multiset<std::size_t>{10, 11, 12, 13, 14, 15});

    // Second epoch covers again (order may differ thanks to the reshuffle).
    seen.clear();
    for (int b = 0; b < 3; ++b) {
        const auto batch = it.next();
        seen.insert(batch.begin(), batch.end());
    }
    CHECK(seen == std::multiset<std::size_t>{10, 11, 12, 13, 14, 15});
}

TEST_CASE("batch iterator wraps when batch exceeds the shard") {
    BatchIterator it({5, 6, 7}, 5, 1);
    const auto batch = it.next();
    REQUIRE(batch.size() == 5);
    for (std::size_t v : batch) {
        CHECK(v >= 5);
        CHECK(v <= 7);
    }
    // All three shard members appear at least once.
    const std::set<std::size_t> uniq(batch.begin(), batch.end());
    CHECK(uniq.size() == 3);

    CHECK_THROWS_AS(BatchIterator({}, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(BatchIterator({1}, 0, 1), std::invalid_argument);
}

TEST_CASE("batch iterator replays exactly per seed") {
    BatchIterator a({1, 2, 3, 4, 5, 6, 7, 8}, 3, 42);
    BatchIterator b({1, 2, 3, 4, 5, 6, 7, 8}, 3, 42);
    for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("evaluate scores a fresh model near chance") {
    const data::Dataset test = data::synth_blobs(4, 25, 0.2, 11);
    const auto client = model::ClientModel::init(1, 1, 4, 2);
    const auto server = model::ServerModel::init(2, 4, 28, 28, 16, 4);
    const double acc = evaluate(client, server, test);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    CHECK(std::abs(acc - 0.25) < 0.2);

    // Chunked evaluation equals one-shot evaluation.
    CHECK(evaluate(client, server, test, 7) == doctest::Approx(acc).epsilon(1e-15));
}

TEST_CASE("evaluate is invariant to test-set ordering") {
    const data::Dataset test = data::synth_blobs(3, 10, 0.2, 13);
    const auto client = model::ClientModel::init(5, 1, 4, 1);
    const auto server = model::ServerModel::init(6, 4, 28, 28, 8, 3);

    // Reverse the dataset rows.
    std::vector<std::size_t> rev(test.size());
    for (std::size_t i = 0; i < rev.size(); ++i) rev[i] = test.size() - 1 - i;
    auto [images, labels] = test.batch(rev);
    data::Dataset reversed;
    reversed.images = std::move(images);
    reversed.labels = std::move(labels);
    reversed.num_classes = test.num_classes;

    CHECK(evaluate(client, server, test) == evaluate(client, server, reversed));
}

TEST_CASE("trainer runs rounds and accounts bytes consistently") {
    const TrainConfig cfg = synth_config();
    Trainer tr(cfg);
    const TrainResult res = tr.run();
    REQUIRE(res.reports.size() == 3);
    CHECK(res.clients.size() == 2);

    std::uint64_t ledger_total = 0;
    for (const auto& e : res.ledger) ledger_total += e.bytes;
    CHECK(ledger_total == res.total_bytes);
    CHECK(res.total_bytes ==
          sum_report_bytes(res, true) + sum_report_bytes(res, false));

    // Two entries per device per round: one uplink, one downlink.
    CHECK(res.ledger.size() == 3 * 2 * 2);
    for (const auto& rep : res.reports) {
        CHECK(rep.devices.size() == 2);
        for (const auto& d : rep.devices) {
            CHECK(d.uplink_bytes > 0);
            CHECK(d.downlink_bytes > 0);
            CHECK(std::isfinite(d.loss));
        }
        CHECK(rep.test_accuracy >= 0.0);
        CHECK(rep.test_accuracy <= 1.0);
        CHECK(rep.cumulative_sim_seconds >= rep.sim_comm_seconds);
    }

    // Round indices are sequential from zero.
    for (std::size_t i = 0; i < res.reports.size(); ++i)
        CHECK(res.reports[i].round == i);

    CHECK_THROWS_AS(tr.run_round(), StateError);
}

TEST_CASE("slacc payload per message respects the analytic identity") {
    TrainConfig cfg = synth_config();
    cfg.rounds = 2;
    const TrainResult res = train(cfg);
    const std::size_t N = 8 * 28 * 28; // batch * H * W
    for (const auto& rep : res.reports) {
        for (const auto& d : rep.devices) {
            REQUIRE(d.act_group_bits.size() == d.act_group_sizes.size());
            std::uint64_t expected = 0;
            int channels = 0;
            for (std::size_t j = 0; j < d.act_group_bits.size(); ++j) {
                expected += static_cast<std::uint64_t>(d.act_group_sizes[j]) * N *
                            static_cast<std::uint64_t>(d.act_group_bits[j]);
                channels += d.act_group_sizes[j];
            }
            CHECK(channels == 4); // model.width
            CHECK(d.uplink_payload_bits == expected);

            // Wire bytes = header + padded payload; per-channel padding adds
            // less than one byte per channel.
            const std::uint64_t payload_bytes = (d.uplink_payload_bits + 7) / 8;
            CHECK(d.uplink_bytes >= payload_bytes);
            CHECK(d.uplink_bytes <=
                  payload_bytes + codec::header_size(4, d.act_group_bits.size()) + 4);
        }
    }
}

TEST_CASE("identical configs produce byte-identical artifacts") {
    const TrainConfig cfg = synth_config();
    const TrainResult a = train(cfg);
    const TrainResult b = train(cfg);
    CHECK(reports_to_jsonl(a.reports) == reports_to_jsonl(b.reports));
    CHECK(ledger_to_csv(a.ledger) == ledger_to_csv(b.ledger));
    CHECK(summary_to_csv(a.reports) == summary_to_csv(b.reports));

    // Final weights agree bit for bit.
    const auto pa = a.server.parameters();
    const auto pb = b.server.parameters();
    for (std::size_t p = 0; p < pa.size(); ++p)
        for (std::size_t i = 0; i < pa[p]->size(); ++i)
            CHECK((*pa[p])[i] == (*pb[p])[i]);
}

TEST_CASE("thread count does not change the results") {
    TrainConfig cfg = synth_config();
    cfg.threads = 1;
    const TrainResult a = train(cfg);
    cfg.threads = 3;
    const TrainResult b = train(cfg);
    CHECK(reports_to_jsonl(a.reports) == reports_to_jsonl(b.reports));
    CHECK(ledger_to_csv(a.ledger) == ledger_to_csv(b.ledger));
}

TEST_CASE("wall seconds never leak into serialized reports") {
    RoundReport r;
    r.round = 1;
    r.wall_seconds = 123.456;
    const std::string js = report_to_json(r);
    CHECK(js.find("wall") == std::string::npos);
    CHECK(js.find("123.456") == std::string::npos);
}

TEST_CASE("slacc with one group at fixed 8 bits equals the uniform baseline") {
    TrainConfig cfg = synth_config();
    cfg.groups = 1;
    cfg.b_min = 8;
    cfg.b_max = 8;
    const TrainResult slacc_run = train(cfg);

    TrainConfig uni = synth_config();
    uni.compressor.kind = CompressorKind::Uniform;
    uni.compressor.uniform_bits = 8;
    const TrainResult uniform_run = train(uni);

    // Same quantization decisions, so the byte ledgers agree entry by entry.
    REQUIRE(slacc_run.ledger.size() == uniform_run.ledger.size());
    for (std::size_t i = 0; i < slacc_run.ledger.size(); ++i) {
        CHECK(slacc_run.ledger[i].bytes == uniform_run.ledger[i].bytes);
        CHECK(slacc_run.ledger[i].round == uniform_run.ledger[i].round);
    }
    CHECK(reports_to_jsonl(slacc_run.reports) == reports_to_jsonl(uniform_run.reports));
}

TEST_CASE("disabling compression reproduces the uncompressed pipeline exactly") {
    TrainConfig cfg = synth_config();
    cfg.compressor.kind = CompressorKind::None;
    const TrainResult a = train(cfg);
    const TrainResult b = train(cfg);
    CHECK(reports_to_jsonl(a.reports) == reports_to_jsonl(b.reports));

    // Accounting model: f32 dump of the tensor plus the small header.
    const std::size_t elements = 8 * 4 * 28 * 28;
    for (const auto& rep : a.reports)
        for (const auto& d : rep.devices) {
            CHECK(d.uplink_bytes == 21 + 4 * elements);
            CHECK(d.uplink_payload_bits == 32ull * elements);
        }
}

TEST_CASE("uniform compressor bytes scale with the configured width") {
    TrainConfig cfg = synth_config();
    cfg.compressor.kind = CompressorKind::Uniform;
    cfg.compressor.uniform_bits = 8;
    const TrainResult eight = train(cfg);
    cfg.compressor.uniform_bits = 2;
    const TrainResult two = train(cfg);

    // Payload shrinks 4x; wire bytes shrink slightly less (fixed header).
    const std::uint64_t p8 = eight.reports[0].devices[0].uplink_payload_bits;
    const std::uint64_t p2 = two.reports[0].devices[0].uplink_payload_bits;
    CHECK(p8 == 4 * p2);
    CHECK(two.total_bytes < eight.total_bytes);
}

TEST_CASE("per-round uplink bytes equal devices times the blob size") {
    TrainConfig cfg = synth_config();
    cfg.devices = 2;
    cfg.compressor.kind = CompressorKind::Uniform; // fixed-width, same blob size per device
    const TrainResult res = train(cfg);
    for (const auto& rep : res.reports) {
        std::uint64_t round_uplink = 0;
        for (const auto& e : res.ledger)
            if (e.round == rep.round && e.direction == Direction::Activations)
                round_uplink += e.bytes;
        CHECK(round_uplink == 2 * rep.devices[0].uplink_bytes);
    }
}

TEST_CASE("entropy logger streams device-0 activation traces") {
    TrainConfig cfg = synth_config();
    cfg.rounds = 4;
    std::vector<EntropyLogRow> rows;
    train(cfg, [&](const EntropyLogRow& row) { rows.push_back(row); });

    REQUIRE(rows.size() == 4u * 4u); // rounds x channels
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        CHECK(r.round == i / 4);
        CHECK(r.channel == i % 4);
        CHECK(r.trace.alpha == doctest::Approx(static_cast<double>(r.round) / 4.0));
        const double blend =
            (1.0 - r.trace.alpha) * r.trace.h_inst + r.trace.alpha * r.trace.h_hist;
        CHECK(r.trace.h_blend == doctest::Approx(blend).epsilon(1e-12));
    }
}

TEST_CASE("aggregation keeps client replicas identical; disabling lets them drift") {
    TrainConfig cfg = synth_config();
    const TrainResult with_agg = train(cfg);
    const auto& c0 = with_agg.clients[0].convs[0].weight;
    const auto& c1 = with_agg.clients[1].convs[0].weight;
    for (std::size_t i = 0; i < c0.size(); ++i) CHECK(c0[i] == c1[i]);

    cfg.aggregate_clients = false;
    const TrainResult solo = train(cfg);
    bool differs = false;
    const auto& d0 = solo.clients[0].convs[0].weight;
    const auto& d1 = solo.clients[1].convs[0].weight;
    for (std::size_t i = 0; i < d0.size() && !differs; ++i) differs = d0[i] != d1[i];
    CHECK(differs);
}

TEST_CASE("sequential and parallel server updates both train but differ") {
    TrainConfig cfg = synth_config();
    cfg.server_update = ServerUpdateMode::Sequential;
    const TrainResult seq = train(cfg);
    cfg.server_update = ServerUpdateMode::Parallel;
    const TrainResult par = train(cfg);
    CHECK(reports_to_jsonl(seq.reports) != reports_to_jsonl(par.reports));
}

TEST_CASE("timing model changes simulated seconds, not bytes") {
    TrainConfig cfg = synth_config();
    cfg.timing = netsim::RoundTiming::Parallel;
    const TrainResult par = train(cfg);
    cfg.timing = netsim::RoundTiming::Sequential;
    const TrainResult seq = train(cfg);
    CHECK(par.total_bytes == seq.total_bytes);
    CHECK(seq.reports[0].sim_comm_seconds >
          par.reports[0].sim_comm_seconds * (1.0 + 1e-9));
}

TEST_CASE("trajectory exposes one accuracy point per round") {
    const TrainResult res = train(synth_config());
    const auto traj = res.trajectory();
    REQUIRE(traj.size() == res.reports.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        CHECK(traj[i].round == res.reports[i].round);
        CHECK(traj[i].accuracy == res.reports[i].test_accuracy);
    }
}

TEST_CASE("run_compare sweeps the fixed compressor set on one seed") {
    TrainConfig cfg = synth_config();
    cfg.rounds = 2;
    const CompareResult cmp = run_compare(cfg);
    REQUIRE(cmp.variants.size() == 5);
    CHECK(cmp.find("slacc") != nullptr);
    CHECK(cmp.find("uniform8") != nullptr);
    CHECK(cmp.find("uniform2") != nullptr);
    CHECK(cmp.find("topk") != nullptr);
    CHECK(cmp.find("none") != nullptr);
    CHECK(cmp.find("bogus") == nullptr);

    // Uncompressed moves the most bytes; uniform-2 moves fewer than uniform-8.
    CHECK(cmp.find("none")->total_bytes() > cmp.find("uniform8")->total_bytes());
    CHECK(cmp.find("uniform2")->total_bytes() < cmp.find("uniform8")->total_bytes());

    const std::string csv = compare_to_csv(cmp);
    CHECK(csv.rfind("compressor,round,accuracy,sim_comm_seconds,cumulative_sim_seconds,"
                    "cumulative_bytes\n",
                    0) == 0);
    // 5 variants x 2 rounds + header.
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);

    const std::string summary = compare_summary_csv(cmp, 0.99);
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 6);
}

TEST_CASE("config validation failures surface before training starts") {
    TrainConfig cfg = synth_config();
    cfg.batch_size = 0;
    CHECK_THROWS_AS(Trainer{cfg}, ConfigError);

    TrainConfig odd = synth_config();
    odd.devices = 200; // more devices than samples
    CHECK_THROWS_AS(Trainer{odd}, std::invalid_argument);
}
