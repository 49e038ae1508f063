#pragma once

// Extended-precision entropy reference used to cross-check the production
// scorer. Everything runs in long double and the entropy comes out of the
// log-partition identity H = ln Z - E_p[z] instead of the -sum(p ln p) loop,
// so shared bugs with the production path are unlikely.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace slacc::testing {

inline long double reference_entropy_nats(std::span<const double> channel,
                                          bool constant_is_zero = false) {
    const std::size_t n = channel.size();
    if (n <= 1) return 0.0L;
    long double lo = channel[0], hi = channel[0];
    for (double v : channel) {
        lo = std::min(lo, static_cast<long double>(v));
        hi = std::max(hi, static_cast<long double>(v));
    }
    if (!(hi > lo)) return constant_is_zero ? 0.0L : std::log(static_cast<long double>(n));

    // Normalized scores land in [0, 1]; shift by the max (exactly 1) so the
    // exponentials stay in (0, 1].
    std::vector<long double> z(n);
    for (std::size_t i = 0; i < n; ++i)
        z[i] = (static_cast<long double>(channel[i]) - lo) / (hi - lo) - 1.0L;
    long double zsum = 0.0L, weighted = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const long double e = std::exp(z[i]);
        zsum += e;
        weighted += z[i] * e;
    }
    return std::log(zsum) - weighted / zsum;
}

inline long double reference_entropy_bits(std::span<const double> channel,
                                          bool constant_is_zero = false) {
    return reference_entropy_nats(channel, constant_is_zero) / std::log(2.0L);
}

} // namespace slacc::testing
