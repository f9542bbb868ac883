#include "instab/random.hpp"

#include "instab/common.hpp"

#include <algorithm>
#include <numeric>

namespace instab {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) : state_(mix(seed) ^ mix(stream + kGolden)) {}

std::uint64_t CounterRng::next() {
  state_ += kGolden;
  return mix(state_);
}

std::uint64_t CounterRng::below(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("CounterRng::below: bound must be positive");
  // Largest multiple of bound representable; values at or above it are rejected.
  const std::uint64_t limit = std::uint64_t(0) - (std::uint64_t(0) - bound) % bound;
  for (;;) {
    const std::uint64_t v = next();
    if (limit == 0 || v < limit) return v % bound;
  }
}

std::vector<std::size_t> bootstrap_indices(std::uint64_t seed, std::uint64_t iteration, std::size_t m) {
  CounterRng rng(seed, iteration);
  std::vector<std::size_t> out(m);
  for (auto& v : out) v = static_cast<std::size_t>(rng.below(m));
  return out;
}

std::vector<std::size_t> sample_without_replacement(std::uint64_t seed, std::uint64_t stream, std::size_t n,
                                                    std::size_t count) {
  if (count > n) throw InvalidArgument("sample_without_replacement: count exceeds population");
  CounterRng rng(seed, stream);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace instab
