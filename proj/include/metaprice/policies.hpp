#pragma once

#include "metaprice/core_model.hpp"
#include "metaprice/gaussian.hpp"

namespace metaprice {

/// Round-1 initialization rule shared by every policy: the global epoch
/// index picks p_min when even, p_max when odd.
double init_rule_price(int epoch_index, const PriceBounds& bounds);

/// Thompson-sampling state for one epoch: conjugate Gaussian belief plus the
/// round counter. bounds/sigma are carried so the per-round ops are
/// self-contained.
struct TsEpochState {
  GaussianBelief belief;
  int t = 1;
  PriceBounds bounds;
  double sigma = 0.0;
};

/// Samples parameters from the belief and prices optimally against the
/// sample. Round 1 is handled by the initialization rule, not here.
double ts_choose_price(const TsEpochState& state, const FeatureVector& x,
                       StreamRng& rng);

/// Folds one observation into the belief and advances the round counter.
void ts_observe(TsEpochState& state, const FeatureVector& x, double price,
                double demand);

/// Ridge state for the optimism policy and the prior-independent sampler:
/// gram = identity + sum of m m^T, moment = sum of demand * m.
struct UcbEpochState {
  Matrix gram;
  Vector moment;
  int t = 1;
  double w = 1.0;  // confidence multiplier on the bonus term
  PriceBounds bounds;

  UcbEpochState(int two_d, PriceBounds b);
};

/// theta_ridge = gram^{-1} * moment; well-defined from zero data onward.
Vector ucb_estimate(const UcbEpochState& state);

/// Maximizes p*<alpha,x> + p^2*<beta,x> + w*||(x; p x)||_{V^{-1}} over the
/// price interval: 2048-point grid plus ternary refinement of each local
/// maximum, ties toward p_max.
double ucb_choose_price(const UcbEpochState& state, const FeatureVector& x);

/// Rank-one accumulation of one observation into gram and moment.
void ucb_observe(UcbEpochState& state, const FeatureVector& x, double price,
                 double demand);

/// One round of prior-independent linear Thompson sampling: draws theta from
/// N(theta_ridge, v^2 * gram^{-1}) and prices optimally against the draw.
/// The observation is folded afterwards with ucb_observe.
double prior_independent_ts_step(const UcbEpochState& state,
                                 const FeatureVector& x, double v,
                                 StreamRng& rng);

/// Oversampling scale for the prior-independent sampler:
/// v = R * sqrt(9 * 2d * ln(T / delta)).
double prior_free_scale(double R, int dim, int horizon, double delta);

/// Theoretically calibrated confidence width for round t, replacing the
/// paper-literal w = 1 when requested:
/// R * sqrt(2 * 2d * ln((1 + t * x_max^2 (1 + p_max^2)) / delta)) + S.
double ucb_theory_width(double R, int dim, int t, double x_max, double p_max,
                        double delta, double s_bound);

}  // namespace metaprice
