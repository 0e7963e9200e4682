#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace coexsim {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based stream derivation: id = mix(mix(mix(master) ^ index) ^ fnv1a(tag)).
/// Identical (master, index, tag) triples give identical streams.
constexpr std::uint64_t stream_id(std::uint64_t master, std::uint64_t index,
                                  std::string_view tag) noexcept {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  return splitmix64(h ^ fnv1a(tag));
}

/// A reproducible random stream. All draws used by the library go through the
/// helpers below so results do not depend on the standard library's
/// distribution implementations (Poisson aside).
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t id) : id_(id), engine_(id) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  std::uint64_t id() const noexcept { return id_; }

  // [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // (0, 1), never returns an endpoint.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 12) + 0.5) * 0x1.0p-52;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Strictly positive for every finite rate.
  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

  // Unbiased integer in [0, n) (Lemire's multiply-shift with rejection).
  std::uint64_t index(std::uint64_t n) {
    if (n == 0) return 0;
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

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    std::poisson_distribution<std::uint64_t> dist(mean);
    return dist(engine_);
  }

 private:
  std::uint64_t id_;
  std::mt19937_64 engine_;
};

inline RngStream seed_stream(std::uint64_t master, std::uint64_t index, std::string_view tag) {
  return RngStream(stream_id(master, index, tag));
}

// Purpose tags. Graph, weight and dynamics randomness never share a stream.
namespace tag {
inline constexpr std::string_view graph = "graph";
inline constexpr std::string_view weights = "weights";
inline constexpr std::string_view dynamics = "dynamics";
inline constexpr std::string_view walk = "walk";
inline constexpr std::string_view init = "init";
inline constexpr std::string_view instance = "instance";
}  // namespace tag

}  // namespace coexsim
