#include "slacc/entropy.hpp"

#include "slacc/errors.hpp"
#include "slacc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slacc::acii {

namespace {
constexpr double kLn2 = 0.6931471805599453094172321214581766;
}

const char* to_string(LogBase b) { return b == LogBase::E ? "e" : "2"; }

std::vector<double> normalize_channel(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("normalize_channel: empty input");
    const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
    const double mn = *mn_it, mx = *mx_it;
    std::vector<double> out(values.size());
    if (mx == mn) return out; // constant channel: all zeros
    const double inv = 1.0 / (mx - mn);
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mn) * inv;
    return out;
}

std::vector<double> softmax_distribution(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("softmax_distribution: empty input");
    const double mx = *std::max_element(values.begin(), values.end());
    std::vector<double> out(values.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = std::exp(values[i] - mx);
        sum += out[i];
    }
    const double inv = 1.0 / sum;
    for (auto& p : out) p *= inv;
    return out;
}

double instantaneous_entropy(std::span<const double> channel, const EntropyConfig& cfg) {
    const std::vector<double> v = normalize_channel(channel);
    if (cfg.constant_channel_zero) {
        const auto [mn, mx] = std::minmax_element(channel.begin(), channel.end());
        if (*mn == *mx) return 0.0;
    }
    const std::vector<double> p = softmax_distribution(v);
    double h = 0.0;
    for (double pi : p)
        if (pi > 0.0) h -= pi * std::log(pi);
    // Clamp to the mathematical range so rounding in the sum can never push
    // the score past the [0, log N] bound.
    const double hmax = std::log(static_cast<double>(channel.size()));
    h = std::clamp(h, 0.0, hmax);
    return cfg.base == LogBase::Two ? h / kLn2 : h;
}

double alpha_schedule(std::uint64_t t, std::uint64_t total_rounds) {
    if (total_rounds == 0) throw std::invalid_argument("alpha_schedule: total rounds must be >= 1");
    if (t > total_rounds) throw std::invalid_argument("alpha_schedule: round index exceeds total");
    return static_cast<double>(t) / static_cast<double>(total_rounds);
}

double blend_entropy(double h_now, double h_hist, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("blend_entropy: alpha outside [0,1]");
    return (1.0 - alpha) * h_now + alpha * h_hist;
}

EntropyState::EntropyState(std::size_t channels, std::size_t window)
    : window_(window), history_(channels) {
    if (window == 0) throw std::invalid_argument("entropy history window must be >= 1");
}

double EntropyState::historical(std::size_t c) const {
    const auto& buf = buffer(c);
    if (buf.empty()) return 0.0;
    double sum = 0.0;
    for (double h : buf) sum += h;
    return sum / static_cast<double>(buf.size());
}

void EntropyState::push(std::size_t c, double h) {
    if (c >= history_.size()) throw std::out_of_range("entropy state channel out of range");
    auto& buf = history_[c];
    buf.push_back(h);
    while (buf.size() > window_) buf.pop_front();
}

const std::deque<double>& EntropyState::buffer(std::size_t c) const {
    if (c >= history_.size()) throw std::out_of_range("entropy state channel out of range");
    return history_[c];
}

ImportanceVector score_channels(const SmashedData& s, EntropyState& state, std::uint64_t t,
                                std::uint64_t total_rounds, const EntropyConfig& cfg,
                                std::vector<ChannelTrace>* trace) {
    const std::size_t C = s.channels();
    if (state.channels() != C)
        throw StateError("entropy state has " + std::to_string(state.channels()) +
                         " channels, smashed data has " + std::to_string(C));
    const double alpha = alpha_schedule(t, total_rounds);

    std::vector<double> h_inst(C);
    parallel_for(0, C, [&](std::size_t c) {
        h_inst[c] = instantaneous_entropy(s.channel_view(c), cfg);
    });

    ImportanceVector out;
    out.round = s.round;
    out.scores.resize(C);
    if (trace) trace->resize(C);
    for (std::size_t c = 0; c < C; ++c) {
        const double h_hist = state.historical(c);
        out.scores[c] = blend_entropy(h_inst[c], h_hist, alpha);
        if (trace) (*trace)[c] = ChannelTrace{h_inst[c], h_hist, alpha, out.scores[c]};
        state.push(c, h_inst[c]);
    }
    state.set_last_scores(out.scores);
    return out;
}

} // namespace slacc::acii
