#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace homesentry {

// splitmix64 generator. Everything stochastic in the project draws from this
// instead of <random> so that a given seed produces identical bytes on every
// platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  // Uniform integer in [0, n). n must be nonzero.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  // Exponential inter-arrival sample with the given rate (events per unit).
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  // Derive an independent stream seed, e.g. one per tree or per device.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    Rng r(seed ^ (0x632be59bd9b4e019ull + stream * 0x9e3779b97f4a7c15ull));
    return r.next();
  }

 private:
  std::uint64_t state_;
};

// FNV-1a, used to derive stable per-device RNG streams from names.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

// Fisher-Yates shuffle driven by Rng (std::shuffle is not portable bit-wise).
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

}  // namespace homesentry
