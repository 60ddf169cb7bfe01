#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <thread>
#include <vector>

namespace cbss {

/// Philox4x32-10 counter-based generator.
///
/// A stream is addressed by (seed, stream id); within a stream a 64-bit block
/// counter advances.  Two generators with distinct stream ids never share
/// blocks, so work units can be given their own stream independently of how
/// they are scheduled onto threads.
class Philox {
 public:
  using result_type = std::uint64_t;

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    if (buffered_ == 0) refill();
    return buffer_[--buffered_];
  }

  std::uint64_t seed() const noexcept {
    return (std::uint64_t{key_[1]} << 32) | key_[0];
  }
  std::uint64_t stream() const noexcept { return stream_; }

  /// Generator for a child stream; derived deterministically from this one's
  /// (seed, stream) and the child index.
  Philox split(std::uint64_t child) const noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

/// SplitMix64 finalizer; used to hash stream paths into stream ids.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Generator for task `index` of task group `group` under a root seed.
inline Philox substream(std::uint64_t seed, std::uint64_t group, std::uint64_t index) noexcept {
  return Philox(seed, mix64(mix64(group) ^ index));
}

// Variates.  All take the generator by reference and are stateless.

/// Uniform on the open interval (0, 1).
template <class Rng>
inline double uniform01(Rng& rng) noexcept {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

template <class Rng>
inline double exponential(Rng& rng, double rate = 1.0) noexcept {
  return -std::log(uniform01(rng)) / rate;
}

template <class Rng>
inline double standard_normal(Rng& rng) noexcept {
  const double r = std::sqrt(-2.0 * std::log(uniform01(rng)));
  return r * std::cos(2.0 * std::numbers::pi * uniform01(rng));
}

template <class Rng>
inline bool coin(Rng& rng) noexcept {
  return (rng() >> 63) != 0;
}

/// Runs `fn(begin, end)` over fixed blocks of [0, n) on `workers` threads and
/// returns the per-block results in block order.  Block boundaries depend
/// only on `n` and `block`, never on `workers`, so an order-preserving reduction
/// of the returned vector is bit-identical for any worker count.
template <class Fn>
auto parallel_blocks(std::int64_t n, std::int64_t block, int workers, Fn&& fn) {
  using Result = decltype(fn(std::int64_t{0}, std::int64_t{0}));
  block = std::max<std::int64_t>(block, 1);
  const std::int64_t blocks = (n + block - 1) / block;
  std::vector<Result> out(static_cast<std::size_t>(blocks));
  auto run = [&](std::int64_t first_block, std::int64_t stride) {
    for (std::int64_t b = first_block; b < blocks; b += stride) {
      const std::int64_t lo = b * block;
      out[static_cast<std::size_t>(b)] = fn(lo, std::min(n, lo + block));
    }
  };
  workers = std::max(1, workers);
  if (workers == 1 || blocks <= 1) {
    run(0, 1);
    return out;
  }
  std::vector<std::thread> pool;
  const int used = static_cast<int>(std::min<std::int64_t>(workers, blocks));
  pool.reserve(static_cast<std::size_t>(used));
  for (int w = 0; w < used; ++w) pool.emplace_back(run, w, used);
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace cbss
