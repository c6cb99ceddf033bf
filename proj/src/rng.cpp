#include "kmkc/rng.hpp"

#include "kmkc/error.hpp"

#include <numeric>
#include <string>
#include <utility>

namespace kmkc {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t Rng::next_u64() noexcept {
    state_ += kGolden;
    return mix64(state_);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
    if (n == 0) {
        throw InvalidArgument("uniform_index: empty range");
    }
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            m = static_cast<unsigned __int128>(next_u64()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double Rng::uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

Rng Rng::fork(std::uint64_t stream) const noexcept { return Rng(mix64(seed_ ^ mix64(kGolden * (stream + 1)))); }

std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t q) {
    if (q > n) {
        throw InvalidArgument("sample_without_replacement: cannot draw " + std::to_string(q) + " distinct items from " +
                              std::to_string(n));
    }
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < q; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(q);
    return pool;
}

}  // namespace kmkc
