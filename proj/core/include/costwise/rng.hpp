#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace costwise {

/// Seeded draws over std::mt19937_64. The engine's output sequence is fully
/// specified by the standard; the std distributions are not, so the few
/// draw shapes needed are hand-rolled for reproducible byte-identical runs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    /// Uniform in [0, 1), 53 bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Uniform index in [0, n); n must be positive.
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }

    /// Uniform integer in [lo, hi] inclusive.
    long integer(long lo, long hi) {
        return lo + static_cast<long>(index(static_cast<std::size_t>(hi - lo + 1)));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace costwise
