#pragma once

#include "slacc/tensor.hpp"

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

namespace slacc::acii {

enum class LogBase : std::uint8_t { E = 0, Two = 1 };

const char* to_string(LogBase b);

/// Knobs for channel scoring. `constant_channel_zero` switches the
/// degenerate constant-channel rule from "maximal entropy" (the faithful
/// reading of normalize-then-softmax) to "zero entropy".
struct EntropyConfig {
    LogBase base = LogBase::E;
    bool constant_channel_zero = false;
};

/// Min-max normalization onto [0,1]; a constant channel maps to all zeros.
/// Empty input throws std::invalid_argument.
std::vector<double> normalize_channel(std::span<const double> values);

/// Stable softmax (max subtraction). The result sums to 1 within 1e-12.
std::vector<double> softmax_distribution(std::span<const double> values);

/// Shannon entropy of softmax(normalize(channel)), clamped to the
/// theoretical range [0, log N]. Returned in the configured log base.
double instantaneous_entropy(std::span<const double> channel, const EntropyConfig& cfg = {});

/// t/T schedule weighting history against the current round.
double alpha_schedule(std::uint64_t t, std::uint64_t total_rounds);

/// (1 - alpha) * h_now + alpha * h_hist.
double blend_entropy(double h_now, double h_hist, double alpha);

/// Bounded per-channel history of instantaneous entropies. Single writer;
/// each device owns one state per direction.
class EntropyState {
public:
    EntropyState() = default;
    EntropyState(std::size_t channels, std::size_t window);

    std::size_t channels() const { return history_.size(); }
    std::size_t window() const { return window_; }

    /// Mean of the stored entries for channel c; 0 when empty (cold start,
    /// where the blend weight is 0 anyway).
    double historical(std::size_t c) const;

    /// Appends an instantaneous entropy, evicting the oldest past `window`.
    void push(std::size_t c, double h);

    const std::deque<double>& buffer(std::size_t c) const;
    const std::vector<double>& last_scores() const { return last_scores_; }
    void set_last_scores(std::vector<double> s) { last_scores_ = std::move(s); }

private:
    std::size_t window_ = 5;
    std::vector<std::deque<double>> history_;
    std::vector<double> last_scores_;
};

/// Blended per-channel importance for one round.
struct ImportanceVector {
    std::vector<double> scores; // one per channel, in the configured base
    std::uint32_t round = 0;
};

/// Per-channel intermediate values, exported by the inspect-entropy stream.
struct ChannelTrace {
    double h_inst;
    double h_hist;
    double alpha;
    double h_blend;
};

/// Scores all channels of `s`: instantaneous entropy per channel, blended
/// with the history under the t/T schedule, then the instantaneous values
/// are pushed into the history. Throws StateError when the state was sized
/// for a different channel count.
ImportanceVector score_channels(const SmashedData& s, EntropyState& state, std::uint64_t t,
                                std::uint64_t total_rounds, const EntropyConfig& cfg = {},
                                std::vector<ChannelTrace>* trace = nullptr);

} // namespace slacc::acii
