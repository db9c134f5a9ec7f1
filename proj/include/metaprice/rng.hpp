#pragma once

#include <array>
#include <cstdint>

namespace metaprice {

/// One 128-bit output block of the Philox4x32-10 counter-based generator.
using PhiloxBlock = std::array<std::uint32_t, 4>;

/// Philox4x32 with 10 rounds (Salmon et al. constants). Pure function of
/// (counter, key); the basis for all randomness in the simulator.
PhiloxBlock philox4x32_10(const PhiloxBlock& counter,
                          const std::array<std::uint32_t, 2>& key);

/// SplitMix64 finalizer; used to derive substream keys from the master seed.
std::uint64_t splitmix64(std::uint64_t x);

/// Substream labels. Environment purposes (theta/feature/noise) never depend
/// on the policy, so every policy in a paired run sees identical draws.
enum class StreamPurpose : std::uint32_t {
  kThetaDraw = 1,   // per (trial, epoch): the epoch's demand parameters
  kFeature = 2,     // per (trial, epoch, round): one feature vector
  kNoise = 3,       // per (trial, epoch, round): one demand noise draw
  kDecision = 4,    // per (policy, trial, epoch, round): policy sampling
  kPermutation = 5, // per (trial, epoch): within-epoch row permutation
  kValidation = 6,  // instance validation draws (lambda0 check)
  kEpochOrder = 7,  // seeded shuffle of replay epoch order
};

/// A deterministic stream addressed by (key, trial, epoch, round). Draws are
/// generated counter-mode, so streams can be created in any order, on any
/// thread, without affecting each other.
class StreamRng {
 public:
  StreamRng(std::uint64_t key, std::uint32_t trial, std::uint32_t epoch,
            std::uint32_t round);

  std::uint64_t next_u64();
  /// Uniform on [0, 1), 53-bit resolution.
  double next_uniform();
  /// Uniform on [lo, hi).
  double next_uniform(double lo, double hi);
  /// Standard normal via Box-Muller on the uniform stream.
  double next_normal();
  /// Uniform integer on [0, n), n >= 1.
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::array<std::uint32_t, 2> key_;
  PhiloxBlock base_;
  PhiloxBlock buffer_{};
  std::uint32_t block_ = 0;
  int words_left_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_normal_ = false;

  void refill();
};

/// Derives every labeled substream of one experiment from a single master
/// seed. Identical SeedPlan implies identical draws for identical labels,
/// regardless of thread count or evaluation order.
class SeedPlan {
 public:
  explicit SeedPlan(std::uint64_t master_seed) : master_(master_seed) {}

  std::uint64_t master() const { return master_; }

  /// policy is 0 for environment purposes (they must not vary by policy).
  StreamRng stream(StreamPurpose purpose, std::uint32_t policy,
                   std::uint32_t trial, std::uint32_t epoch,
                   std::uint32_t round) const;

 private:
  std::uint64_t master_;
};

}  // namespace metaprice
