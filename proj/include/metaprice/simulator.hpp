#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metaprice/core_model.hpp"
#include "metaprice/gaussian.hpp"
#include "metaprice/meta_learner.hpp"
#include "metaprice/policies.hpp"

namespace metaprice {

/// Candidate policies. The numeric values are part of the public API (C
/// layer and CSV output) and also label per-policy decision streams, so they
/// must stay stable.
enum class PolicyKind : int {
  kMetaOracle = 0,  // Thompson sampling with the true prior
  kMetaDp = 1,      // exploration epochs + estimated mean, widened known cov
  kMetaDpPp = 2,    // forced-price epochs + estimated mean and cov, widened
  kGreedy = 3,      // the matching meta policy with widening disabled
  kPriorFree = 4,   // prior-independent Thompson sampling every epoch
  kUcbOnly = 5,     // optimism every epoch
};

const char* policy_name(PolicyKind kind);
PolicyKind policy_from_name(const std::string& name);

enum class UcbMode { kPaper, kTheory };

/// Knobs shared by every policy in one run.
struct RunSettings {
  bool cov_known = true;  // false: prior covariance withheld from policies
  double rho = 1.0;
  UcbMode ucb_mode = UcbMode::kPaper;
  ScheduleOverrides overrides;
};

/// Environment draws actually consumed by one policy's run. Two policies
/// under one seed plan must produce bitwise-identical logs.
struct EnvironmentLog {
  std::vector<Vector> thetas;                        // per epoch
  std::vector<std::vector<FeatureVector>> features;  // [epoch][round-1]
  std::vector<std::vector<double>> noise;            // [epoch][round-1]
};

/// One round of one epoch, as executed.
struct RoundRecord {
  FeatureVector x;
  double price = 0.0;
  double demand = 0.0;            // realized (noisy)
  double expected_revenue = 0.0;  // price * expected demand at true theta
  double best_expected_revenue = 0.0;  // at the round's optimal price
};

struct EpochTrace {
  std::vector<RoundRecord> rounds;

  double total_expected_revenue() const;
  double total_best_expected_revenue() const;
};

/// What one epoch runs, fully resolved.
struct EpochPolicySpec {
  enum class Kind {
    kClairvoyant,    // plays the optimal price every round (test comparator)
    kTsBelief,       // round 1 parity price, then TS from `belief`
    kUcb,            // round 1 parity price, then optimism
    kPriorFreeTs,    // round 1 parity price, then prior-independent TS
    kForcedThenUcb,  // forced prices for `forced_rounds`, then optimism
  };
  Kind kind = Kind::kUcb;
  GaussianBelief belief;      // kTsBelief
  bool fold_round_one = false;  // kTsBelief: condition belief on round 1
  long long forced_rounds = 0;  // kForcedThenUcb
  double prior_free_v = 0.0;    // kPriorFreeTs
  // Optimism confidence settings (kUcb / kForcedThenUcb tail).
  UcbMode ucb_mode = UcbMode::kPaper;
  double ucb_r = 0.0;
  double ucb_x_max = 0.0;
  double ucb_delta = 0.0;
  double ucb_s_bound = 0.0;
};

/// Stream labels of one epoch run: environment streams ignore policy_id,
/// decision streams are keyed by it.
struct EpochStreamIds {
  std::uint32_t policy_id = 0;
  std::uint32_t trial = 0;
  std::uint32_t epoch = 0;
};

/// Executes one epoch: round 1 (parity price, or the policy's own rule for
/// clairvoyant/forced kinds), then rounds 2..T per the spec. Demand is
/// realized with the trial's noise stream; regret columns store expected
/// revenue at the true parameters. Appends one entry per epoch to env_log's
/// features/noise when given.
EpochTrace run_epoch(const EpochPolicySpec& spec, const EpochInstance& inst,
                     const SeedPlan& seeds, const EpochStreamIds& ids,
                     EnvironmentLog* env_log = nullptr);

/// One policy, one trial, all N epochs against environment streams shared by
/// every policy under the same seed plan.
struct PolicyRunResult {
  std::vector<double> epoch_expected_revenue;   // per epoch, length N
  std::vector<double> epoch_best_revenue;       // clairvoyant comparator
  std::optional<Schedule> schedule;             // meta policies only
  bool ridge_fallback_used = false;
  std::optional<Matrix> empirical_cov;  // unknown-cov pipeline, at freeze
  std::optional<Matrix> frozen_cov;     // empirical + correction
};

PolicyRunResult run_meta_policy_trial(PolicyKind kind,
                                      const MetaInstance& meta,
                                      const RunSettings& settings,
                                      const SeedPlan& seeds,
                                      std::uint32_t trial,
                                      EnvironmentLog* env_log = nullptr);

/// Per-epoch cumulative meta regret of one paired trial: the meta oracle and
/// the candidate run on identical environment streams, and the curve is the
/// cumulative sum of their per-epoch expected-revenue gaps.
std::vector<double> run_meta_paired(PolicyKind kind, const MetaInstance& meta,
                                    const RunSettings& settings,
                                    const SeedPlan& seeds,
                                    std::uint32_t trial);

/// Gap curve from two already-computed runs (oracle minus candidate).
std::vector<double> cumulative_regret(const PolicyRunResult& oracle_run,
                                      const PolicyRunResult& candidate_run);

/// Mean and standard error per epoch across trials.
struct MetaRegretCurve {
  std::vector<double> mean_cumulative;
  std::vector<double> stderr_cumulative;
  int trials = 0;
};

MetaRegretCurve aggregate_trials(
    const std::vector<std::vector<double>>& per_trial_cumulative);

}  // namespace metaprice
