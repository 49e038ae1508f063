#include "doctest.h"

#include "slacc/entropy.hpp"
#include "slacc/errors.hpp"
#include "slacc/rng.hpp"
#include "slacc/tensor.hpp"

#include "support/reference_entropy.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace slacc;
using namespace slacc::acii;

namespace {

// Frozen expected values, computed independently at extended precision.
constexpr double kSoftmax01Lo = 0.26894142136999512075;
constexpr double kSoftmax01Hi = 0.73105857863000487925;
constexpr double kEntropy01 = 0.5822031088882179548;      // H(softmax(normalize([0,1])))
constexpr double kLn4 = 1.3862943611198906188;
constexpr double kEntropyRamp = 1.0023219844441706008;    // H for channel [-1, 0, 3]

} // namespace

TEST_CASE("normalize_channel maps min to 0 and max to 1") {
    const std::vector<double> v = {2.0, 4.0, 6.0};
    const std::vector<double> n = normalize_channel(v);
    CHECK(n == std::vector<double>{0.0, 0.5, 1.0});

    const std::vector<double> ramp = normalize_channel(std::vector<double>{-1.0, 0.0, 3.0});
    CHECK(ramp == std::vector<double>{0.0, 0.25, 1.0});
}

TEST_CASE("normalize_channel sends constant channels to zeros") {
    const std::vector<double> n = normalize_channel(std::vector<double>{5.0, 5.0, 5.0});
    CHECK(n == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(normalize_channel(std::vector<double>{7.25}) == std::vector<double>{0.0});
}

TEST_CASE("normalize_channel rejects empty input") {
    CHECK_THROWS_AS(normalize_channel(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("softmax of equal scores is uniform") {
    const std::vector<double> p = softmax_distribution(std::vector<double>{0.0, 0.0});
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(softmax_distribution(std::vector<double>{3.5}) == std::vector<double>{1.0});
}

TEST_CASE("softmax of [0,1] matches the frozen values") {
    const std::vector<double> p = softmax_distribution(std::vector<double>{0.0, 1.0});
    CHECK(std::abs(p[0] - kSoftmax01Lo) < 1e-15);
    CHECK(std::abs(p[1] - kSoftmax01Hi) < 1e-15);
}

TEST_CASE("softmax sums to one and survives huge offsets") {
    SplitMix64 g(77);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(17);
        for (double& x : v) x = g.uniform(-3.0, 3.0) + 1e8; // shared huge offset
        const std::vector<double> p = softmax_distribution(v);
        double sum = 0.0;
        for (double x : p) {
            CHECK(x >= 0.0);
            sum += x;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("instantaneous entropy of frozen channels") {
    CHECK(instantaneous_entropy(std::vector<double>{42.0}) == 0.0);
    CHECK(std::abs(instantaneous_entropy(std::vector<double>{5.0, 5.0, 5.0, 5.0}) - kLn4) <
          1e-12);
    CHECK(std::abs(instantaneous_entropy(std::vector<double>{0.0, 1.0}) - kEntropy01) < 1e-12);
    CHECK(std::abs(instantaneous_entropy(std::vector<double>{-1.0, 0.0, 3.0}) - kEntropyRamp) <
          1e-12);
}

TEST_CASE("constant_channel_zero flips the degenerate rule") {
    EntropyConfig cfg;
    cfg.constant_channel_zero = true;
    CHECK(instantaneous_entropy(std::vector<double>{5.0, 5.0, 5.0, 5.0}, cfg) == 0.0);
    // Non-constant channels are unaffected.
    CHECK(std::abs(instantaneous_entropy(std::vector<double>{0.0, 1.0}, cfg) - kEntropy01) <
          1e-12);
}

TEST_CASE("base-2 entropy is the nats value over ln 2") {
    EntropyConfig bits;
    bits.base = LogBase::Two;
    const std::vector<double> v = {-1.0, 0.0, 3.0};
    const double nats = instantaneous_entropy(v);
    const double b = instantaneous_entropy(v, bits);
    CHECK(std::abs(b - nats / std::log(2.0)) < 1e-12);
}

TEST_CASE("entropy stays within [0, log N] and tracks the reference") {
    SplitMix64 g(1001);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + g.next_below(300);
        std::vector<double> v(n);
        const double scale = std::exp(g.uniform(-6.0, 6.0));
        for (double& x : v) x = g.uniform(-1.0, 1.0) * scale;
        const double h = instantaneous_entropy(v);
        CHECK(h >= 0.0);
        CHECK(h <= std::log(static_cast<double>(n)) + 1e-12);
        const long double ref = slacc::testing::reference_entropy_nats(v);
        CHECK(std::abs(h - static_cast<double>(ref)) < 1e-11);
    }
}

TEST_CASE("entropy is invariant under affine rescaling of the channel") {
    SplitMix64 g(2002);
    std::vector<double> v(64);
    for (double& x : v) x = g.uniform(-2.0, 2.0);
    const double base = instantaneous_entropy(v);

    // Power-of-two scaling is exact in floating point, so the score must be
    // bit-identical.
    std::vector<double> scaled = v;
    for (double& x : scaled) x *= 0.25;
    CHECK(instantaneous_entropy(scaled) == base);

    std::vector<double> affine = v;
    for (double& x : affine) x = 3.7 * x - 11.0;
    CHECK(std::abs(instantaneous_entropy(affine) - base) < 1e-12);
}

TEST_CASE("alpha schedule is t over T with strict domain checks") {
    CHECK(alpha_schedule(0, 60) == 0.0);
    CHECK(alpha_schedule(30, 60) == 0.5);
    CHECK(alpha_schedule(60, 60) == 1.0);
    CHECK_THROWS_AS(alpha_schedule(1, 0), std::invalid_argument);
    CHECK_THROWS_AS(alpha_schedule(61, 60), std::invalid_argument);
}

TEST_CASE("blend_entropy interpolates linearly") {
    CHECK(blend_entropy(2.0, 4.0, 0.0) == 2.0);
    CHECK(blend_entropy(2.0, 4.0, 1.0) == 4.0);
    CHECK(blend_entropy(2.0, 4.0, 0.25) == 2.5);
    CHECK_THROWS_AS(blend_entropy(1.0, 1.0, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(blend_entropy(1.0, 1.0, 1.1), std::invalid_argument);
}

TEST_CASE("entropy state keeps exactly the last k entries") {
    EntropyState st(1, 3);
    CHECK(st.historical(0) == 0.0);
    st.push(0, 1.0);
    CHECK(st.historical(0) == 1.0);
    st.push(0, 2.0);
    st.push(0, 3.0);
    CHECK(st.historical(0) == doctest::Approx(2.0).epsilon(1e-15));
    st.push(0, 10.0); // evicts the 1.0
    CHECK(st.buffer(0).size() == 3);
    CHECK(st.buffer(0).front() == 2.0);
    CHECK(st.historical(0) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("score_channels blends history under the t/T schedule") {
    // Two channels, one distinctive value pattern each; window 3.
    EntropyState st(2, 3);
    EntropyConfig cfg;
    const std::size_t T = 4;

    auto make = [](double a, double b, double c, double d) {
        return Tensor::from({1, 2, 1, 2}, {a, b, c, d});
    };

    // Round 0: alpha = 0, so the score is the instantaneous entropy.
    SmashedData s0(make(0.0, 1.0, -1.0, 3.0), 0, Direction::Activations);
    std::vector<ChannelTrace> trace;
    const ImportanceVector v0 = score_channels(s0, st, 0, T, cfg, &trace);
    const double h00 = instantaneous_entropy(std::vector<double>{0.0, 1.0});
    const double h01 = instantaneous_entropy(std::vector<double>{-1.0, 3.0});
    CHECK(v0.scores[0] == doctest::Approx(h00).epsilon(1e-15));
    CHECK(v0.scores[1] == doctest::Approx(h01).epsilon(1e-15));
    REQUIRE(trace.size() == 2);
    CHECK(trace[0].alpha == 0.0);
    CHECK(trace[0].h_hist == 0.0);
    CHECK(trace[0].h_blend == v0.scores[0]);

    // Round 1: alpha = 1/4, history holds exactly the round-0 entropies.
    SmashedData s1(make(0.0, 2.0, 0.0, 0.0), 1, Direction::Activations);
    const ImportanceVector v1 = score_channels(s1, st, 1, T, cfg);
    const double h10 = instantaneous_entropy(std::vector<double>{0.0, 2.0});
    const double expected0 = blend_entropy(h10, h00, 0.25);
    CHECK(v1.scores[0] == doctest::Approx(expected0).epsilon(1e-14));

    // After two rounds each buffer holds two entries.
    CHECK(st.buffer(0).size() == 2);
    CHECK(st.buffer(1).size() == 2);
}

TEST_CASE("score_channels rejects a mismatched state") {
    EntropyState st(3, 5);
    SmashedData s(Tensor({1, 2, 2, 2}), 0, Direction::Activations);
    CHECK_THROWS_AS(score_channels(s, st, 0, 10), StateError);
}

TEST_CASE("history window property holds over many rounds") {
    const std::size_t window = 5;
    EntropyState st(1, window);
    SplitMix64 g(31);
    std::vector<double> pushed;
    for (int r = 0; r < 23; ++r) {
        const double h = g.uniform(0.0, 3.0);
        pushed.push_back(h);
        st.push(0, h);
        CHECK(st.buffer(0).size() == std::min<std::size_t>(window, pushed.size()));
        double mean = 0.0;
        const std::size_t k = std::min<std::size_t>(window, pushed.size());
        for (std::size_t i = pushed.size() - k; i < pushed.size(); ++i) mean += pushed[i];
        mean /= static_cast<double>(k);
        CHECK(st.historical(0) == doctest::Approx(mean).epsilon(1e-12));
    }
}
