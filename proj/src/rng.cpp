#include "stein_llt/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace stein_llt {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::substream(std::uint64_t root, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(root) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Lemire's nearly-divisionless bounded integer.
  unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(engine_()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t Rng::geometric(double p) {
  if (p >= 1.0) return 0;
  double u = uniform();
  while (u == 0.0) u = uniform();
  const double skips = std::floor(std::log(u) / std::log1p(-p));
  if (skips > 9.0e18) return UINT64_MAX;
  return static_cast<std::uint64_t>(skips);
}

int default_workers() {
  if (const char* env = std::getenv("STEIN_LLT_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return 1;
}

std::vector<std::size_t> chunk_sizes(std::size_t total, std::size_t chunk_size) {
  std::vector<std::size_t> out;
  if (chunk_size == 0) chunk_size = 1;
  while (total > 0) {
    const std::size_t take = std::min(total, chunk_size);
    out.push_back(take);
    total -= take;
  }
  return out;
}

void for_each_chunk(std::size_t n_chunks, std::uint64_t seed, int workers,
                    const std::function<void(std::size_t, Rng&)>& body) {
  if (workers <= 1 || n_chunks <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      Rng rng = Rng::substream(seed, c);
      body(c, rng);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        Rng rng = Rng::substream(seed, c);
        body(c, rng);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const int n_threads = static_cast<int>(std::min<std::size_t>(workers, n_chunks));
  std::vector<std::jthread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace stein_llt
