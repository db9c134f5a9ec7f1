#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "metaprice/core_model.hpp"
#include "metaprice/gaussian.hpp"

namespace metaprice {

/// Cross-epoch learner state: the round-1 records feeding the prior-mean
/// estimate, the per-epoch parameter estimates feeding the covariance
/// estimate, and the frozen covariance once the estimation phase ends.
struct MetaState {
  int dim = 0;     // feature dimension d; designs have length 2d
  int epoch = 0;   // current epoch index i (1-based); 0 before the first
  double rho = 1.0;

  std::vector<DesignVector> init_designs;
  std::vector<double> init_demands;
  std::vector<Vector> epoch_thetas;  // per-epoch OLS estimates (unknown cov)

  bool cov_frozen = false;
  Matrix frozen_cov;  // empirical covariance + correction, set once

  // Incremental normal equations over init records; rebuilt from the stored
  // lists every 64 epochs to bound floating-point drift.
  Matrix init_gram;
  Vector init_moment;
  int last_recorded_epoch = 0;
  int records_since_refresh = 0;

  explicit MetaState(int d, double widening_rho = 1.0);
};

/// Number of prior-mean exploration epochs. With widening_rho == 1 this is
/// ceil max{2 log_{e/2}(2dNT)/c1, d^2, [c2 ln(2^d N^2 T)]^2}. With
/// widening_rho > 1 the trade-off variant divides c2 by rho and drops the
/// factor 2 on the first term. Returned as an integral-valued double because
/// the theoretical value can exceed any practical epoch count.
double compute_n0(const MetaInstance& meta, const DerivedConstants& k,
                  double widening_rho = 1.0);

/// Covariance-estimation schedule: N1 = ceil max{4 c4^2 (d + ln(NT)) sqrt(N),
/// N0} epochs, each spending N2 = ceil max{2 c4^2 d N^{1/4},
/// 2 log_{e/2}(2dN^2T)/c1} rounds (rounded up to even) on forced prices.
std::pair<double, double> compute_n1_n2(const MetaInstance& meta,
                                        const DerivedConstants& k,
                                        double widening_rho = 1.0);

/// Optional config-level replacements for the theoretical phase lengths,
/// for horizons where the theoretical values exceed the run itself.
struct ScheduleOverrides {
  std::optional<long long> exploration_epochs;      // replaces N0
  std::optional<long long> cov_exploration_epochs;  // replaces N1
  std::optional<long long> forced_rounds;           // replaces N2
};

/// Exploration-phase lengths actually used by a run, next to the
/// theoretical values they replace (reported side by side in manifests).
struct Schedule {
  double n0_theory = 0.0;
  double n1_theory = 0.0;
  double n2_theory = 0.0;
  long long n0 = 0;
  long long n1 = 0;
  long long n2 = 0;  // always even
};

/// Computes the theoretical lengths, applies overrides, and validates the
/// result. Throws ConfigError for degenerate constants or invalid overrides
/// (N1 < max(2, N0), N2 odd or < 2), and InfeasibleError("horizon too short
/// for forced exploration") when a run that needs the forced phase has
/// N2 + 1 > T.
Schedule resolve_schedule(const MetaInstance& meta, const DerivedConstants& k,
                          const ScheduleOverrides& overrides,
                          double widening_rho, bool requires_forced_phase);

/// Advances the state to the given epoch; epochs must arrive sequentially.
void begin_epoch(MetaState& state, int epoch_index);

/// Appends the round-1 design and demand of the current epoch. Exactly one
/// record per epoch; a second call for the same epoch is a logic error.
void record_epoch_initialization(MetaState& state, const DesignVector& m,
                                 double demand);

/// OLS prior-mean estimate over all recorded initialization pairs:
/// (X X^T)^{-1} X D. Throws DataError("prior mean unidentifiable yet") when
/// the Gram matrix is numerically singular (min eigenvalue <= 1e-10), unless
/// allow_ridge_fallback is set, in which case a 1e-8 ridge is added and
/// *used_fallback reports it.
Vector estimate_prior_mean(const MetaState& state,
                           bool allow_ridge_fallback = false,
                           bool* used_fallback = nullptr);

/// Belief with mean theta_hat and covariance eta_i * base_cov, where
/// eta_i = 1 + rho / sqrt(i). Requires i >= 1 and rho >= 1.
GaussianBelief widen_prior(const Vector& theta_hat, const Matrix& base_cov,
                           int epoch_index, double rho);

/// Per-epoch OLS estimate over forced-exploration rounds, no regularizer:
/// (sum m m^T)^{-1} (sum D m). Throws DataError on a singular Gram.
Vector estimate_epoch_theta(const std::vector<DesignVector>& designs,
                            const std::vector<double>& demands);

/// Records one epoch's parameter estimate for the covariance phase.
void record_epoch_theta(MetaState& state, const Vector& theta_tilde);

/// Sample covariance with Bessel's correction; needs at least two vectors.
Matrix empirical_covariance(const std::vector<Vector>& thetas);

/// Scalar coefficient of the covariance correction:
/// c3 d / N2 + 16 sqrt((lambda_bar + 2 c3 / ((N1-1) N2)) *
///                     (ln(9) d + ln(NT)) / N1).
double correction_coefficient(const DerivedConstants& k, double n1, double n2,
                              double lambda_bar, int dim, double n_epochs,
                              double horizon);

/// The correction coefficient times I_{2d}. Requires N1 >= 2, N2 >= 1.
Matrix correction_matrix(const DerivedConstants& k, double n1, double n2,
                         double lambda_bar, const MetaInstance& meta);

/// High-probability operator-norm bound on the covariance estimation error
/// at confidence delta = 1/(NT):
/// c3 d / N2 + 16 sqrt(lambda_bar + 2 c3/((N1-1)N2)) * max(r, sqrt(r)),
/// r = (ln(9) d + ln(NT)) / N1.
double covariance_error_bound(const DerivedConstants& k, double n1, double n2,
                              double lambda_bar, int dim, double n_epochs,
                              double horizon);

/// What one epoch runs: pure optimism, Thompson sampling from a belief, or a
/// forced price block followed by optimism.
enum class EpochPlanKind {
  kUcbExplore,     // round 1: parity rule; rounds 2..T: UCB
  kTsPrior,        // round 1: parity rule; rounds 2..T: TS from `belief`
  kForcedThenUcb,  // rounds 1..forced_rounds: forced prices; rest: UCB
};

struct EpochPlan {
  EpochPlanKind kind = EpochPlanKind::kUcbExplore;
  GaussianBelief belief;        // kTsPrior only
  long long forced_rounds = 0;  // kForcedThenUcb only
  bool used_ridge_fallback = false;
};

/// Price forced at round t of epoch i during covariance exploration:
/// p_min when (i even and t <= N2/2) or (i odd and t > N2/2), else p_max.
double forced_price(int epoch_index, int t, long long n2,
                    const PriceBounds& bounds);

/// Known-covariance meta policy. Call after recording the current epoch's
/// round-1 observation: the prior-mean estimate includes it. Epochs i < N0
/// explore with UCB; from i >= N0 on, Thompson sampling with mean
/// estimate_prior_mean and covariance eta_i * Sigma* (eta_i = 1 when
/// widening_enabled is false, the greedy ablation).
EpochPlan meta_dp_epoch_plan(MetaState& state, const MetaInstance& meta,
                             const Schedule& schedule, bool widening_enabled);

/// Unknown-covariance meta policy. Epochs i <= N1 run the forced block plus
/// UCB; the first plan request with i > N1 freezes empirical covariance +
/// correction; later epochs run Thompson sampling with covariance
/// eta_i * frozen (eta_i = 1 when widening_enabled is false). The correction
/// constant is evaluated at the theoretical phase lengths (it belongs to the
/// algorithm's initialization), while the empirical covariance comes from
/// the phases the run actually executed.
EpochPlan meta_dp_pp_epoch_plan(MetaState& state, const MetaInstance& meta,
                                const Schedule& schedule,
                                bool widening_enabled);

}  // namespace metaprice
