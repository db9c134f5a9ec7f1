#include "metaprice/meta_learner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace metaprice {

namespace {

// log base e/2, the base appearing in the exploration-length formulas.
double log_e_half(double z) { return std::log(z) / std::log(std::exp(1.0) / 2.0); }

// ln(2^d N^2 T) expanded to avoid overflowing the argument.
double log_pow2d_n2t(int d, double n, double t) {
  return d * std::log(2.0) + 2.0 * std::log(n) + std::log(t);
}

void require_usable_constants(const DerivedConstants& k) {
  if (k.degenerate || !(k.c1 > 0.0)) {
    throw ConfigError(
        "exploration schedule undefined: price interval is degenerate "
        "(c0 = 0 when p_min == p_max)");
  }
}

// Large theoretical lengths saturate well below the long long range so
// arithmetic on effective values can never overflow.
long long saturate_length(double value) {
  constexpr double kCap = 4.0e18;
  return static_cast<long long>(std::min(std::max(value, 1.0), kCap));
}

Matrix gram_of(const std::vector<DesignVector>& designs, int two_d) {
  Matrix gram = Matrix::Zero(two_d, two_d);
  for (const DesignVector& m : designs) gram.noalias() += m * m.transpose();
  return gram;
}

Vector moment_of(const std::vector<DesignVector>& designs,
                 const std::vector<double>& demands, int two_d) {
  Vector moment = Vector::Zero(two_d);
  for (std::size_t r = 0; r < designs.size(); ++r) {
    moment.noalias() += demands[r] * designs[r];
  }
  return moment;
}

// Solves gram * theta = moment, requiring min eigenvalue > 1e-10. The ridge
// fallback keeps tiny, numerically marginal runs going instead of aborting.
Vector solve_normal_equations(const Matrix& gram, const Vector& moment,
                              const char* singular_message,
                              bool allow_ridge_fallback, bool* used_fallback) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eigen(gram);
  const double min_eig = eigen.eigenvalues().minCoeff();
  if (used_fallback) *used_fallback = false;
  if (min_eig <= 1e-10) {
    if (!allow_ridge_fallback) throw DataError(singular_message);
    if (used_fallback) *used_fallback = true;
    const Matrix ridged =
        gram + 1e-8 * Matrix::Identity(gram.rows(), gram.cols());
    return ridged.ldlt().solve(moment);
  }
  return gram.ldlt().solve(moment);
}

}  // namespace

MetaState::MetaState(int d, double widening_rho)
    : dim(d),
      rho(widening_rho),
      init_gram(Matrix::Zero(2 * d, 2 * d)),
      init_moment(Vector::Zero(2 * d)) {
  if (d < 1) throw ConfigError("meta state: need d >= 1");
  if (!(widening_rho >= 1.0)) {
    throw ConfigError("meta state: widening rho must be >= 1");
  }
}

double compute_n0(const MetaInstance& meta, const DerivedConstants& k,
                  double widening_rho) {
  require_usable_constants(k);
  if (!(widening_rho >= 1.0)) {
    throw ConfigError("compute_n0: widening rho must be >= 1");
  }
  const double d = static_cast<double>(meta.dim);
  const double n = static_cast<double>(meta.n_epochs);
  const double t = static_cast<double>(meta.max_horizon());
  const double log_term = log_e_half(2.0 * d * n * t) / k.c1;
  const double ols_term =
      (k.c2 / widening_rho) * log_pow2d_n2t(meta.dim, n, t);
  const double first = widening_rho > 1.0 ? log_term : 2.0 * log_term;
  const double raw = std::max({first, d * d, ols_term * ols_term});
  return std::max(std::ceil(raw), 1.0);
}

std::pair<double, double> compute_n1_n2(const MetaInstance& meta,
                                        const DerivedConstants& k,
                                        double widening_rho) {
  require_usable_constants(k);
  const double d = static_cast<double>(meta.dim);
  const double n = static_cast<double>(meta.n_epochs);
  const double t = static_cast<double>(meta.max_horizon());
  const double n0 = compute_n0(meta, k, widening_rho);
  const double n1 = std::max(
      std::ceil(4.0 * k.c4 * k.c4 * (d + std::log(n * t)) * std::sqrt(n)),
      n0);
  const double n2_raw =
      std::max(2.0 * k.c4 * k.c4 * d * std::pow(n, 0.25),
               2.0 * log_e_half(2.0 * d * n * n * t) / k.c1);
  double n2 = std::ceil(n2_raw);
  if (std::fmod(n2, 2.0) != 0.0) n2 += 1.0;
  n2 = std::max(n2, 2.0);
  return {n1, n2};
}

Schedule resolve_schedule(const MetaInstance& meta, const DerivedConstants& k,
                          const ScheduleOverrides& overrides,
                          double widening_rho, bool requires_forced_phase) {
  Schedule s;
  s.n0_theory = compute_n0(meta, k, widening_rho);
  const auto [n1_theory, n2_theory] = compute_n1_n2(meta, k, widening_rho);
  s.n1_theory = n1_theory;
  s.n2_theory = n2_theory;

  s.n0 = overrides.exploration_epochs.value_or(saturate_length(s.n0_theory));
  s.n1 =
      overrides.cov_exploration_epochs.value_or(saturate_length(s.n1_theory));
  s.n2 = overrides.forced_rounds.value_or(saturate_length(s.n2_theory));

  if (s.n0 < 1) {
    throw ConfigError("schedule: exploration epoch count must be >= 1");
  }
  if (s.n1 < 2 || s.n1 < s.n0) {
    throw ConfigError(
        "schedule: covariance exploration epochs must be >= max(2, N0)");
  }
  if (s.n2 < 2 || s.n2 % 2 != 0) {
    throw ConfigError("schedule: forced round count must be even and >= 2");
  }
  if (requires_forced_phase &&
      s.n2 + 1 > static_cast<long long>(meta.min_horizon())) {
    throw InfeasibleError("horizon too short for forced exploration");
  }
  return s;
}

void begin_epoch(MetaState& state, int epoch_index) {
  if (epoch_index != state.epoch + 1) {
    throw std::logic_error("meta state: epochs must advance sequentially");
  }
  state.epoch = epoch_index;
}

void record_epoch_initialization(MetaState& state, const DesignVector& m,
                                 double demand) {
  if (state.epoch < 1) {
    throw std::logic_error("meta state: no epoch in progress");
  }
  if (state.last_recorded_epoch == state.epoch) {
    throw std::logic_error(
        "meta state: initialization already recorded for this epoch");
  }
  if (m.size() != 2 * state.dim) {
    throw ConfigError("meta state: design vector must have length 2d");
  }
  state.init_designs.push_back(m);
  state.init_demands.push_back(demand);
  state.last_recorded_epoch = state.epoch;
  state.init_gram.noalias() += m * m.transpose();
  state.init_moment.noalias() += demand * m;
  if (++state.records_since_refresh >= 64) {
    state.init_gram = gram_of(state.init_designs, 2 * state.dim);
    state.init_moment =
        moment_of(state.init_designs, state.init_demands, 2 * state.dim);
    state.records_since_refresh = 0;
  }
}

Vector estimate_prior_mean(const MetaState& state, bool allow_ridge_fallback,
                           bool* used_fallback) {
  if (state.init_designs.empty()) {
    throw DataError("prior mean unidentifiable yet");
  }
  return solve_normal_equations(state.init_gram, state.init_moment,
                                "prior mean unidentifiable yet",
                                allow_ridge_fallback, used_fallback);
}

GaussianBelief widen_prior(const Vector& theta_hat, const Matrix& base_cov,
                           int epoch_index, double rho) {
  if (epoch_index < 1) throw ConfigError("widen_prior: epoch index must be >= 1");
  if (!(rho >= 1.0)) throw ConfigError("widen_prior: rho must be >= 1");
  const double eta = 1.0 + rho / std::sqrt(static_cast<double>(epoch_index));
  return GaussianBelief(theta_hat, eta * base_cov);
}

Vector estimate_epoch_theta(const std::vector<DesignVector>& designs,
                            const std::vector<double>& demands) {
  if (designs.empty() || designs.size() != demands.size()) {
    throw DataError("epoch parameter estimate: empty or mismatched records");
  }
  const int two_d = static_cast<int>(designs.front().size());
  const Matrix gram = gram_of(designs, two_d);
  const Vector moment = moment_of(designs, demands, two_d);
  return solve_normal_equations(
      gram, moment, "epoch parameter estimate: singular design", false,
      nullptr);
}

void record_epoch_theta(MetaState& state, const Vector& theta_tilde) {
  if (theta_tilde.size() != 2 * state.dim) {
    throw ConfigError("meta state: epoch estimate must have length 2d");
  }
  state.epoch_thetas.push_back(theta_tilde);
}

Matrix empirical_covariance(const std::vector<Vector>& thetas) {
  if (thetas.size() < 2) {
    throw DataError("empirical covariance needs at least two epochs");
  }
  const Eigen::Index n = thetas.front().size();
  Vector mean = Vector::Zero(n);
  for (const Vector& v : thetas) mean += v;
  mean /= static_cast<double>(thetas.size());
  Matrix cov = Matrix::Zero(n, n);
  for (const Vector& v : thetas) {
    const Vector centered = v - mean;
    cov.noalias() += centered * centered.transpose();
  }
  cov /= static_cast<double>(thetas.size() - 1);
  return cov;
}

double correction_coefficient(const DerivedConstants& k, double n1, double n2,
                              double lambda_bar, int dim, double n_epochs,
                              double horizon) {
  if (!(n1 >= 2.0) || !(n2 >= 1.0)) {
    throw ConfigError("correction coefficient: need N1 >= 2 and N2 >= 1");
  }
  const double variance_load = lambda_bar + 2.0 * k.c3 / ((n1 - 1.0) * n2);
  const double rate =
      (std::log(9.0) * dim + std::log(n_epochs * horizon)) / n1;
  return k.c3 * dim / n2 + 16.0 * std::sqrt(variance_load * rate);
}

Matrix correction_matrix(const DerivedConstants& k, double n1, double n2,
                         double lambda_bar, const MetaInstance& meta) {
  const double coeff = correction_coefficient(
      k, n1, n2, lambda_bar, meta.dim, static_cast<double>(meta.n_epochs),
      static_cast<double>(meta.max_horizon()));
  return coeff * Matrix::Identity(2 * meta.dim, 2 * meta.dim);
}

double covariance_error_bound(const DerivedConstants& k, double n1, double n2,
                              double lambda_bar, int dim, double n_epochs,
                              double horizon) {
  if (!(n1 >= 2.0) || !(n2 >= 1.0)) {
    throw ConfigError("covariance error bound: need N1 >= 2 and N2 >= 1");
  }
  const double variance_load = lambda_bar + 2.0 * k.c3 / ((n1 - 1.0) * n2);
  const double r = (std::log(9.0) * dim + std::log(n_epochs * horizon)) / n1;
  return k.c3 * dim / n2 +
         16.0 * std::sqrt(variance_load) * std::max(r, std::sqrt(r));
}

double forced_price(int epoch_index, int t, long long n2,
                    const PriceBounds& bounds) {
  if (t < 1 || t > n2) {
    throw std::logic_error("forced price requested outside the forced block");
  }
  const bool even_epoch = epoch_index % 2 == 0;
  const bool first_half = t <= n2 / 2;
  const bool low = (even_epoch && first_half) || (!even_epoch && !first_half);
  return low ? bounds.p_min : bounds.p_max;
}

EpochPlan meta_dp_epoch_plan(MetaState& state, const MetaInstance& meta,
                             const Schedule& schedule, bool widening_enabled) {
  if (state.epoch < 1) {
    throw std::logic_error("meta policy: no epoch in progress");
  }
  EpochPlan plan;
  if (state.epoch < schedule.n0) {
    plan.kind = EpochPlanKind::kUcbExplore;
    return plan;
  }
  const Vector theta_hat =
      estimate_prior_mean(state, true, &plan.used_ridge_fallback);
  plan.kind = EpochPlanKind::kTsPrior;
  plan.belief = widening_enabled
                    ? widen_prior(theta_hat, meta.prior_cov, state.epoch,
                                  state.rho)
                    : GaussianBelief(theta_hat, meta.prior_cov);
  return plan;
}

EpochPlan meta_dp_pp_epoch_plan(MetaState& state, const MetaInstance& meta,
                                const Schedule& schedule,
                                bool widening_enabled) {
  if (state.epoch < 1) {
    throw std::logic_error("meta policy: no epoch in progress");
  }
  EpochPlan plan;
  if (state.epoch <= schedule.n1) {
    plan.kind = EpochPlanKind::kForcedThenUcb;
    plan.forced_rounds = schedule.n2;
    return plan;
  }
  if (!state.cov_frozen) {
    const Matrix empirical = empirical_covariance(state.epoch_thetas);
    // The correction is an initialization-time constant of the algorithm,
    // evaluated at the theoretical phase lengths. Shortening the phases a
    // run actually executes replaces how long they last, not the constant.
    const Matrix correction = correction_matrix(
        compute_derived_constants(meta), schedule.n1_theory,
        schedule.n2_theory, meta.lambda_bar, meta);
    state.frozen_cov = empirical + correction;
    state.cov_frozen = true;
  }
  const Vector theta_hat =
      estimate_prior_mean(state, true, &plan.used_ridge_fallback);
  plan.kind = EpochPlanKind::kTsPrior;
  plan.belief = widening_enabled
                    ? widen_prior(theta_hat, state.frozen_cov, state.epoch,
                                  state.rho)
                    : GaussianBelief(theta_hat, state.frozen_cov);
  return plan;
}

}  // namespace metaprice
