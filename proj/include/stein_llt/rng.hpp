#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace stein_llt {

// Random stream used by every sampler. Substreams are derived from one root
// seed with a splitmix64 counter split, so chunk i always sees the same
// numbers no matter how many workers process the chunks.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng substream(std::uint64_t root, std::uint64_t index);

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on {0, ..., n-1}; n > 0.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Number of failures before the first success, success probability p in (0, 1].
  std::uint64_t geometric(double p);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Worker count from STEIN_LLT_WORKERS, falling back to 1.
int default_workers();

// Runs body(chunk, rng) for chunk = 0..n_chunks-1 over `workers` threads. Each
// chunk gets Rng::substream(seed, chunk); callers reduce per-chunk results in
// chunk order, which keeps output independent of scheduling.
void for_each_chunk(std::size_t n_chunks, std::uint64_t seed, int workers,
                    const std::function<void(std::size_t, Rng&)>& body);

// Splits `total` items into chunks of at most `chunk_size`.
std::vector<std::size_t> chunk_sizes(std::size_t total, std::size_t chunk_size);

}  // namespace stein_llt
