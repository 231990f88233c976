#include "orbitforge/rng.hpp"

#include <cmath>

#include "orbitforge/error.hpp"

namespace orbitforge {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

std::uint64_t splitmix_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  return mix64(state);
}

}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

DeterministicRng::DeterministicRng(std::uint64_t master_seed, std::uint64_t stream_id) {
  std::uint64_t sm = mix64(master_seed ^ mix64(stream_id));
  for (auto& word : s_) word = splitmix_next(sm);
}

std::uint64_t DeterministicRng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double DeterministicRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double DeterministicRng::uniform(double lo, double hi) {
  // Always consumes a draw so degenerate ranges keep stream positions aligned.
  const double u = uniform();
  return lo == hi ? lo : lo + (hi - lo) * u;
}

std::uint64_t DeterministicRng::bounded(std::uint64_t n) {
  if (n == 0) throw Error(ErrorKind::invalid_parameter, "bounded() needs n > 0");
  // Reject the top partial bucket so every residue is equally likely.
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % n;
}

double DeterministicRng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

}  // namespace orbitforge
