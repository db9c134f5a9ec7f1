#include "metaprice/rng.hpp"

#include <cmath>

namespace metaprice {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mul_hilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                     std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

PhiloxBlock philox4x32_10(const PhiloxBlock& counter,
                          const std::array<std::uint32_t, 2>& key) {
  PhiloxBlock c = counter;
  std::uint32_t k0 = key[0];
  std::uint32_t k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mul_hilo(kPhiloxM0, c[0], hi0, lo0);
    mul_hilo(kPhiloxM1, c[2], hi1, lo1);
    c = PhiloxBlock{hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return c;
}

std::uint64_t splitmix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

StreamRng::StreamRng(std::uint64_t key, std::uint32_t trial,
                     std::uint32_t epoch, std::uint32_t round)
    : key_{static_cast<std::uint32_t>(key),
           static_cast<std::uint32_t>(key >> 32)},
      base_{trial, epoch, round, 0} {}

void StreamRng::refill() {
  PhiloxBlock counter = base_;
  counter[3] = block_++;
  buffer_ = philox4x32_10(counter, key_);
  words_left_ = 4;
}

std::uint64_t StreamRng::next_u64() {
  if (words_left_ < 2) refill();
  const std::uint32_t lo = buffer_[4 - words_left_];
  const std::uint32_t hi = buffer_[5 - words_left_];
  words_left_ -= 2;
  return static_cast<std::uint64_t>(hi) << 32 | lo;
}

double StreamRng::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double StreamRng::next_uniform(double lo, double hi) {
  return lo + next_uniform() * (hi - lo);
}

double StreamRng::next_normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  // u1 lies in (0, 1] so the logarithm is finite.
  const double u1 =
      (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = next_uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 6.283185307179586476925286766559 * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_normal_ = true;
  return radius * std::cos(angle);
}

std::uint64_t StreamRng::next_below(std::uint64_t n) {
  // Multiply-shift mapping; bias is O(n / 2^64), far below any tolerance used
  // here, and the result is deterministic across platforms.
  const unsigned __int128 wide =
      static_cast<unsigned __int128>(next_u64()) * n;
  return static_cast<std::uint64_t>(wide >> 64);
}

StreamRng SeedPlan::stream(StreamPurpose purpose, std::uint32_t policy,
                           std::uint32_t trial, std::uint32_t epoch,
                           std::uint32_t round) const {
  std::uint64_t key = splitmix64(master_);
  key = splitmix64(key ^ static_cast<std::uint64_t>(purpose));
  key = splitmix64(key ^ (static_cast<std::uint64_t>(policy) << 32));
  return StreamRng(key, trial, epoch, round);
}

}  // namespace metaprice
