#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace slacc {

/// SplitMix64 generator. Small, fast, and bit-reproducible everywhere, which
/// is what the simulator needs: every stochastic choice (init, shuffles,
/// Dirichlet draws, top-k sampling) must replay exactly from a seed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        // Rejection sampling keeps the draw exactly uniform.
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Gamma(alpha, 1) via Marsaglia-Tsang; alpha < 1 handled with the
    /// standard boost Gamma(alpha) = Gamma(alpha+1) * U^(1/alpha).
    double next_gamma(double alpha) {
        if (alpha < 1.0) {
            double u = next_double();
            while (u <= 0.0) u = next_double();
            return next_gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = next_gaussian();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = next_double();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    /// Dirichlet(beta * 1) proportions over n bins.
    std::vector<double> next_dirichlet(std::size_t n, double beta) {
        std::vector<double> p(n);
        double sum = 0.0;
        for (auto& v : p) {
            v = next_gamma(beta);
            sum += v;
        }
        if (sum <= 0.0) {
            // All draws underflowed; fall back to uniform.
            for (auto& v : p) v = 1.0 / static_cast<double>(n);
            return p;
        }
        for (auto& v : p) v /= sum;
        return p;
    }

    /// In-place Fisher-Yates shuffle (own implementation: std::shuffle's
    /// draw sequence is not pinned by the standard).
    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Mixes a seed with a salt to derive independent substreams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1)));
    return g.next_u64();
}

} // namespace slacc
