#ifndef INSTAB_RANDOM_HPP
#define INSTAB_RANDOM_HPP

#include <cstdint>
#include <vector>

namespace instab {

// SplitMix64 stream keyed by (seed, stream). Each stream starts from
//   state = mix(seed) ^ mix(stream + 0x9E3779B97F4A7C15)
// where mix is the SplitMix64 finalizer, and then advances with the standard
// SplitMix64 step (add 0x9E3779B97F4A7C15, finalize). Streams are
// independent of one another, so iteration i of a resampling loop draws the
// same indices no matter which thread runs it or in which order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next();
  // Uniform in [0, bound), rejection-sampled to avoid modulo bias. bound > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

// m indices drawn uniformly with replacement from [0, m).
std::vector<std::size_t> bootstrap_indices(std::uint64_t seed, std::uint64_t iteration, std::size_t m);

// `count` distinct indices from [0, n), sorted ascending (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(std::uint64_t seed, std::uint64_t stream, std::size_t n,
                                                    std::size_t count);

}  // namespace instab

#endif  // INSTAB_RANDOM_HPP
