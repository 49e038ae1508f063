#include "slacc/compress.hpp"

#include "slacc/errors.hpp"
#include "slacc/parallel.hpp"
#include "slacc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace slacc::cgc {

namespace {

void require_finite_span(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + " contains NaN or Inf");
}

// Enclosing f32 interval around a f64 value, rounded outward in the given
// direction so the float range always contains the double range.
float widen_down(double x) {
    float f = static_cast<float>(x);
    if (static_cast<double>(f) > x) f = std::nextafterf(f, -std::numeric_limits<float>::infinity());
    return f;
}
float widen_up(double x) {
    float f = static_cast<float>(x);
    if (static_cast<double>(f) < x) f = std::nextafterf(f, std::numeric_limits<float>::infinity());
    return f;
}

} // namespace

ChannelGrouping group_channels(std::span<const double> entropies, std::size_t g,
                               std::uint64_t /*seed*/) {
    const std::size_t C = entropies.size();
    if (g == 0) throw std::invalid_argument("group count must be >= 1");
    if (g > C) throw std::invalid_argument("group count exceeds channel count");
    require_finite_span(entropies, "entropies");

    // Sort channel indices by entropy (index breaks ties for determinism).
    std::vector<std::size_t> order(C);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (entropies[a] != entropies[b]) return entropies[a] < entropies[b];
        return a < b;
    });

    // Prefix sums over the sorted values for O(1) interval costs.
    std::vector<double> sorted(C), pre(C + 1, 0.0), pre2(C + 1, 0.0);
    for (std::size_t i = 0; i < C; ++i) sorted[i] = entropies[order[i]];
    for (std::size_t i = 0; i < C; ++i) {
        pre[i + 1] = pre[i] + sorted[i];
        pre2[i + 1] = pre2[i] + sorted[i] * sorted[i];
    }
    auto interval_cost = [&](std::size_t lo, std::size_t hi) { // [lo, hi)
        const double n = static_cast<double>(hi - lo);
        const double s = pre[hi] - pre[lo];
        const double s2 = pre2[hi] - pre2[lo];
        return std::max(0.0, s2 - s * s / n);
    };

    // dp[j][i]: best cost splitting the first i sorted values into j groups.
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dp(g + 1, std::vector<double>(C + 1, kInf));
    std::vector<std::vector<std::size_t>> cut(g + 1, std::vector<std::size_t>(C + 1, 0));
    dp[0][0] = 0.0;
    for (std::size_t j = 1; j <= g; ++j) {
        for (std::size_t i = j; i + (g - j) <= C; ++i) {
            for (std::size_t m = j - 1; m < i; ++m) {
                if (dp[j - 1][m] == kInf) continue;
                const double cost = dp[j - 1][m] + interval_cost(m, i);
                if (cost < dp[j][i]) {
                    dp[j][i] = cost;
                    cut[j][i] = m;
                }
            }
        }
    }

    // Recover interval boundaries; intervals in sorted order are already in
    // ascending-centroid order.
    std::vector<std::size_t> bounds(g + 1);
    bounds[g] = C;
    for (std::size_t j = g; j > 0; --j) bounds[j - 1] = cut[j][bounds[j]];

    ChannelGrouping out;
    out.g = static_cast<std::uint16_t>(g);
    out.assignment.resize(C);
    out.centroids.resize(g);
    for (std::size_t j = 0; j < g; ++j) {
        const std::size_t lo = bounds[j], hi = bounds[j + 1];
        out.centroids[j] = (pre[hi] - pre[lo]) / static_cast<double>(hi - lo);
        for (std::size_t i = lo; i < hi; ++i)
            out.assignment[order[i]] = static_cast<std::uint16_t>(j);
    }
    return out;
}

double grouping_objective(std::span<const double> entropies,
                          std::span<const std::uint16_t> assignment, std::size_t g) {
    if (entropies.size() != assignment.size())
        throw std::invalid_argument("assignment length mismatch");
    std::vector<double> sum(g, 0.0);
    std::vector<std::size_t> count(g, 0);
    for (std::size_t i = 0; i < entropies.size(); ++i) {
        if (assignment[i] >= g) throw std::invalid_argument("group id out of range");
        sum[assignment[i]] += entropies[i];
        ++count[assignment[i]];
    }
    double obj = 0.0;
    for (std::size_t i = 0; i < entropies.size(); ++i) {
        const double mu = sum[assignment[i]] / static_cast<double>(count[assignment[i]]);
        const double d = entropies[i] - mu;
        obj += d * d;
    }
    return obj;
}

std::vector<double> group_mean_entropy(const ChannelGrouping& grouping,
                                       std::span<const double> entropies) {
    if (grouping.assignment.size() != entropies.size())
        throw std::invalid_argument("grouping does not match entropy vector length");
    std::vector<double> sum(grouping.g, 0.0);
    std::vector<std::size_t> count(grouping.g, 0);
    for (std::size_t c = 0; c < entropies.size(); ++c) {
        const std::uint16_t j = grouping.assignment[c];
        if (j >= grouping.g) throw std::invalid_argument("group id out of range");
        sum[j] += entropies[c];
        ++count[j];
    }
    std::vector<double> mean(grouping.g);
    for (std::size_t j = 0; j < grouping.g; ++j) {
        if (count[j] == 0) throw std::invalid_argument("empty group in grouping");
        mean[j] = sum[j] / static_cast<double>(count[j]);
    }
    return mean;
}

int allocate_bits(double h_group, int b_min, int b_max) {
    if (b_min < 1 || b_min > b_max || b_max > 32)
        throw std::invalid_argument("bit bounds must satisfy 1 <= b_min <= b_max <= 32");
    if (!std::isfinite(h_group)) throw std::invalid_argument("group entropy must be finite");
    const double f = std::floor(h_group);
    int b = f <= static_cast<double>(b_min)   ? b_min
            : f >= static_cast<double>(b_max) ? b_max
                                              : static_cast<int>(f);
    return b;
}

std::vector<std::uint32_t> quantize(std::span<const double> values, int bits, double x_min,
                                    double x_max) {
    if (bits < 1 || bits > 32) throw std::invalid_argument("bit width must be in [1,32]");
    if (!(x_min <= x_max)) throw std::invalid_argument("quantization range is inverted");
    std::vector<std::uint32_t> codes(values.size(), 0);
    if (x_min == x_max) {
        for (double v : values)
            if (v != x_min) throw std::invalid_argument("value outside quantization range");
        return codes;
    }
    const double levels = std::ldexp(1.0, bits) - 1.0; // 2^b - 1
    const double inv_span = 1.0 / (x_max - x_min);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (!(v >= x_min && v <= x_max))
            throw std::invalid_argument("value outside quantization range");
        // std::round is round-half-away-from-zero.
        double r = std::round((v - x_min) * inv_span * levels);
        if (r < 0.0) r = 0.0;
        if (r > levels) r = levels;
        codes[i] = static_cast<std::uint32_t>(r);
    }
    return codes;
}

std::vector<double> dequantize(std::span<const std::uint32_t> codes, int bits, double x_min,
                               double x_max) {
    if (bits < 1 || bits > 32) throw std::invalid_argument("bit width must be in [1,32]");
    if (!(x_min <= x_max)) throw std::invalid_argument("quantization range is inverted");
    const double levels = std::ldexp(1.0, bits) - 1.0;
    std::vector<double> out(codes.size());
    const double span = x_max - x_min;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (static_cast<double>(codes[i]) > levels)
            throw std::invalid_argument("code exceeds bit width");
        out[i] = span == 0.0 ? x_min : x_min + static_cast<double>(codes[i]) / levels * span;
    }
    return out;
}

std::uint64_t QuantizedSmashed::payload_bits() const {
    const std::uint64_t n = shape.elements_per_channel();
    std::uint64_t bits = 0;
    for (std::size_t c = 0; c < codes.size(); ++c)
        bits += n * static_cast<std::uint64_t>(channel_bits(c));
    return bits;
}

namespace {

Shape4 shape_of(const SmashedData& s) {
    return Shape4{static_cast<std::uint32_t>(s.batch()), static_cast<std::uint32_t>(s.channels()),
                  static_cast<std::uint32_t>(s.height()), static_cast<std::uint32_t>(s.width())};
}

} // namespace

CompressionPlan plan_compression(const SmashedData& s, const acii::ImportanceVector& scores,
                                 std::size_t g, int b_min, int b_max) {
    const std::size_t C = s.channels();
    if (scores.scores.size() != C)
        throw std::invalid_argument("importance vector length does not match channel count");
    const std::size_t g_eff = std::min(g, C); // default group count clamps to C
    CompressionPlan plan;
    plan.grouping = group_channels(scores.scores, g_eff);
    plan.group_entropy = group_mean_entropy(plan.grouping, scores.scores);
    plan.bits.resize(g_eff);
    plan.ranges.resize(g_eff);

    std::vector<double> lo(g_eff, std::numeric_limits<double>::infinity());
    std::vector<double> hi(g_eff, -std::numeric_limits<double>::infinity());
    for (std::size_t c = 0; c < C; ++c) {
        const std::uint16_t j = plan.grouping.assignment[c];
        for (double v : s.channel_view(c)) {
            lo[j] = std::min(lo[j], v);
            hi[j] = std::max(hi[j], v);
        }
    }
    for (std::size_t j = 0; j < g_eff; ++j) {
        plan.bits[j] = allocate_bits(plan.group_entropy[j], b_min, b_max);
        plan.ranges[j] = {widen_down(lo[j]), widen_up(hi[j])};
    }
    return plan;
}

QuantizedSmashed compress_with_plan(const SmashedData& s, const acii::ImportanceVector& scores,
                                    std::size_t g, int b_min, int b_max, CompressionPlan* plan_out,
                                    std::uint64_t /*seed*/) {
    CompressionPlan plan = plan_compression(s, scores, g, b_min, b_max);
    const std::size_t C = s.channels();

    QuantizedSmashed q;
    q.shape = shape_of(s);
    q.round = s.round;
    q.direction = s.direction;
    q.plan.group_of_channel = plan.grouping.assignment;
    q.plan.groups.resize(plan.bits.size());
    for (std::size_t j = 0; j < plan.bits.size(); ++j)
        q.plan.groups[j] = GroupParams{static_cast<std::uint8_t>(plan.bits[j]),
                                       plan.ranges[j].first, plan.ranges[j].second};
    q.codes.resize(C);
    parallel_for(0, C, [&](std::size_t c) {
        const GroupParams& p = q.plan.groups[q.plan.group_of_channel[c]];
        q.codes[c] = quantize(s.channel_view(c), p.bits, static_cast<double>(p.x_min),
                              static_cast<double>(p.x_max));
    });
    if (plan_out) *plan_out = std::move(plan);
    return q;
}

QuantizedSmashed compress(const SmashedData& s, const acii::ImportanceVector& scores,
                          std::size_t g, int b_min, int b_max, std::uint64_t seed) {
    return compress_with_plan(s, scores, g, b_min, b_max, nullptr, seed);
}

SmashedData decompress(const QuantizedSmashed& q) {
    const std::size_t C = q.shape.c;
    if (q.codes.size() != C || q.plan.group_of_channel.size() != C)
        throw FormatError(0, "quantized data plan does not match shape");
    const std::size_t n = q.shape.elements_per_channel();
    Tensor t(std::vector<std::size_t>{q.shape.b, q.shape.c, q.shape.h, q.shape.w});
    SmashedData out(std::move(t), q.round, q.direction);
    std::vector<std::vector<double>> channels(C);
    parallel_for(0, C, [&](std::size_t c) {
        const std::uint16_t j = q.plan.group_of_channel[c];
        if (j >= q.plan.groups.size()) throw FormatError(0, "group id out of range");
        if (q.codes[c].size() != n) throw FormatError(0, "code vector has wrong length");
        const GroupParams& p = q.plan.groups[j];
        channels[c] = dequantize(q.codes[c], p.bits, static_cast<double>(p.x_min),
                                 static_cast<double>(p.x_max));
    });
    for (std::size_t c = 0; c < C; ++c) out.set_channel(c, channels[c]);
    return out;
}

QuantizedSmashed baseline_uniform(const SmashedData& s, int bits) {
    if (bits < 1 || bits > 32) throw std::invalid_argument("bit width must be in [1,32]");
    const std::size_t C = s.channels();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : s.tensor.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    QuantizedSmashed q;
    q.shape = shape_of(s);
    q.round = s.round;
    q.direction = s.direction;
    q.plan.group_of_channel.assign(C, 0);
    q.plan.groups = {GroupParams{static_cast<std::uint8_t>(bits), widen_down(lo), widen_up(hi)}};
    q.codes.resize(C);
    const GroupParams p = q.plan.groups[0];
    parallel_for(0, C, [&](std::size_t c) {
        q.codes[c] = quantize(s.channel_view(c), p.bits, static_cast<double>(p.x_min),
                              static_cast<double>(p.x_max));
    });
    return q;
}

SmashedData SparseSmashed::to_dense() const {
    Tensor t(std::vector<std::size_t>{shape.b, shape.c, shape.h, shape.w});
    auto d = t.data();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= d.size()) throw FormatError(0, "sparse index out of range");
        d[indices[i]] = static_cast<double>(values[i]);
    }
    return SmashedData(std::move(t), round, direction);
}

SparseSmashed baseline_topk(const SmashedData& s, double keep_fraction, double rand_fraction,
                            std::uint64_t seed) {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw std::invalid_argument("keep fraction must be in (0,1]");
    if (!(rand_fraction >= 0.0 && rand_fraction < 1.0))
        throw std::invalid_argument("random fraction must be in [0,1)");
    if (keep_fraction + rand_fraction > 1.0)
        throw std::invalid_argument("keep + random fraction must not exceed 1");

    const std::span<const double> data = s.tensor.data();
    const std::size_t total = data.size();
    const std::size_t keep =
        std::min(total, static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(total))));
    std::size_t extra =
        static_cast<std::size_t>(std::ceil(rand_fraction * static_cast<double>(total)));

    // Top-k by |x|, ties broken toward the lower flat index.
    std::vector<std::uint64_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0);
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                     [&](std::uint64_t a, std::uint64_t b) {
                         const double ma = std::fabs(data[a]), mb = std::fabs(data[b]);
                         if (ma != mb) return ma > mb;
                         return a < b;
                     });
    std::vector<std::uint64_t> kept(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep));

    // Uniform sample of the complement, without replacement.
    std::vector<std::uint64_t> rest(idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end());
    std::sort(rest.begin(), rest.end()); // nth_element order is unspecified; fix it
    extra = std::min(extra, rest.size());
    if (extra > 0) {
        SplitMix64 rng(seed);
        for (std::size_t i = 0; i < extra; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.next_below(rest.size() - i));
            std::swap(rest[i], rest[j]);
        }
        kept.insert(kept.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(extra));
    }
    std::sort(kept.begin(), kept.end());

    SparseSmashed out;
    out.shape = shape_of(s);
    out.round = s.round;
    out.direction = s.direction;
    out.indices = std::move(kept);
    out.values.resize(out.indices.size());
    for (std::size_t i = 0; i < out.indices.size(); ++i)
        out.values[i] = static_cast<float>(data[out.indices[i]]);
    return out;
}

} // namespace slacc::cgc
