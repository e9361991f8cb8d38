#include "nsar/random.hpp"

#include "nsar/errors.hpp"

namespace nsar {

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw InvalidArgumentError("Rng::below: bound must be > 0");
    // Rejection sampling keeps the draw unbiased and engine-portable.
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit && limit != 0);
    return x % bound;
}

std::uint64_t Rng::between(std::uint64_t lo, std::uint64_t hi) {
    if (lo > hi) throw InvalidArgumentError("Rng::between: lo > hi");
    return lo + below(hi - lo + 1);
}

}  // namespace nsar
