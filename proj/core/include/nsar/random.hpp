#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace nsar {

/// Deterministic sampling helpers. std::uniform_int_distribution and
/// std::shuffle are implementation-defined, so corpora built from the same
/// seed would differ across standard libraries; these do not.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform draw from [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    /// Uniform draw from [lo, hi] inclusive.
    std::uint64_t between(std::uint64_t lo, std::uint64_t hi);

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace nsar
