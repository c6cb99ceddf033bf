#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace kmkc {

/// SplitMix64 generator.
///
/// The algorithm is fixed so that a seed yields the same stream on every
/// platform and in any reimplementation; `tests/data/rng_vectors.txt`
/// pins the first outputs for a few seeds.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : seed_(seed), state_(seed) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() noexcept;
    /// Uniform integer in [0, n), unbiased (multiply-shift with rejection). n > 0.
    std::uint64_t uniform_index(std::uint64_t n);
    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept;

    /// Independent child stream derived from the construction seed and
    /// `stream`; it does not depend on how many draws this generator made.
    [[nodiscard]] Rng fork(std::uint64_t stream) const noexcept;

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

/// The SplitMix64 output finalizer.
[[nodiscard]] std::uint64_t mix64(std::uint64_t z) noexcept;

/// q distinct indices from [0, n) via a partial Fisher-Yates shuffle.
/// Throws InvalidArgument when q > n.
[[nodiscard]] std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t q);

}  // namespace kmkc
