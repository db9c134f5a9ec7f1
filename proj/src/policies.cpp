#include "metaprice/policies.hpp"

#include <algorithm>
#include <cmath>

namespace metaprice {

double init_rule_price(int epoch_index, const PriceBounds& bounds) {
  return epoch_index % 2 == 0 ? bounds.p_min : bounds.p_max;
}

double ts_choose_price(const TsEpochState& state, const FeatureVector& x,
                       StreamRng& rng) {
  const Vector draw = state.belief.sample(rng);
  return optimal_price(DemandParams::from_stacked(draw), x, state.bounds)
      .price;
}

void ts_observe(TsEpochState& state, const FeatureVector& x, double price,
                double demand) {
  state.belief = posterior_update(state.belief, make_design_vector(x, price),
                                  demand, state.sigma);
  state.t += 1;
}

UcbEpochState::UcbEpochState(int two_d, PriceBounds b)
    : gram(Matrix::Identity(two_d, two_d)),
      moment(Vector::Zero(two_d)),
      bounds(b) {
  if (two_d < 2 || two_d % 2 != 0) {
    throw ConfigError("ridge state dimension must be 2d");
  }
}

Vector ucb_estimate(const UcbEpochState& state) {
  return state.gram.llt().solve(state.moment);
}

namespace {

// Ternary refinement of a local maximum bracketed in [lo, hi].
template <typename F>
double refine_maximum(const F& f, double lo, double hi) {
  while (hi - lo > 1e-9) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) < f(m2)) {
      lo = m1;
    } else {
      hi = m2;
    }
  }
  return 0.5 * (lo + hi);
}

// Maximizes f over [p_min, p_max] by a dense grid plus refinement of every
// grid-local maximum. f may have up to two local maxima (quadratic plus
// square root of a quadratic). Ties break toward the larger price.
template <typename F>
double grid_argmax(const F& f, const PriceBounds& bounds) {
  constexpr int kGrid = 2048;
  const double lo = bounds.p_min;
  const double hi = bounds.p_max;
  if (lo == hi) return hi;
  const double step = (hi - lo) / kGrid;
  std::array<double, kGrid + 1> values;
  for (int k = 0; k <= kGrid; ++k) values[k] = f(lo + step * k);
  double best_price = hi;
  double best_value = values[kGrid];
  const auto consider = [&](double p) {
    const double v = f(p);
    if (v > best_value || (v == best_value && p > best_price)) {
      best_value = v;
      best_price = p;
    }
  };
  for (int k = 0; k <= kGrid; ++k) {
    const bool left_ok = k == 0 || values[k] >= values[k - 1];
    const bool right_ok = k == kGrid || values[k] >= values[k + 1];
    if (left_ok && right_ok) {
      const double bracket_lo = lo + step * std::max(k - 1, 0);
      const double bracket_hi = lo + step * std::min(k + 1, kGrid);
      consider(refine_maximum(f, bracket_lo, bracket_hi));
      consider(lo + step * k);
    }
  }
  return best_price;
}

}  // namespace

double ucb_choose_price(const UcbEpochState& state, const FeatureVector& x) {
  const Eigen::Index d = x.size();
  if (2 * d != state.gram.rows()) {
    throw ConfigError("ucb price: feature dimension mismatch");
  }
  const Vector estimate = ucb_estimate(state);
  const double a = estimate.head(d).dot(x);
  const double b = estimate.tail(d).dot(x);

  // Bonus quadratic coefficients from the block partition of V^{-1}:
  // ||(x; p x)||^2 = x'Ax + 2p x'Bx + p^2 x'Cx, via two solves against V.
  const auto llt = state.gram.llt();
  Vector stacked = Vector::Zero(2 * d);
  stacked.head(d) = x;
  const Vector y_top = llt.solve(stacked);
  stacked.setZero();
  stacked.tail(d) = x;
  const Vector y_bottom = llt.solve(stacked);
  const double q0 = x.dot(y_top.head(d));
  const double q1 = 2.0 * x.dot(y_bottom.head(d));
  const double q2 = x.dot(y_bottom.tail(d));

  const double w = state.w;
  const auto objective = [&](double p) {
    const double quad = q0 + p * (q1 + p * q2);
    return p * (a + b * p) + w * std::sqrt(std::max(quad, 0.0));
  };
  return grid_argmax(objective, state.bounds);
}

void ucb_observe(UcbEpochState& state, const FeatureVector& x, double price,
                 double demand) {
  const DesignVector m = make_design_vector(x, price);
  state.gram.noalias() += m * m.transpose();
  state.moment.noalias() += demand * m;
  state.t += 1;
}

double prior_independent_ts_step(const UcbEpochState& state,
                                 const FeatureVector& x, double v,
                                 StreamRng& rng) {
  const Eigen::Index n = state.gram.rows();
  const Vector ridge = ucb_estimate(state);
  Vector z(n);
  for (Eigen::Index j = 0; j < n; ++j) z[j] = rng.next_normal();
  // theta = ridge + v * L^{-T} z has covariance v^2 * V^{-1}.
  const Matrix lower = state.gram.llt().matrixL();
  const Vector tilt =
      lower.transpose().triangularView<Eigen::Upper>().solve(z);
  const Vector draw = ridge + v * tilt;
  return optimal_price(DemandParams::from_stacked(draw), x, state.bounds)
      .price;
}

double prior_free_scale(double R, int dim, int horizon, double delta) {
  return R * std::sqrt(9.0 * 2.0 * dim *
                       std::log(static_cast<double>(horizon) / delta));
}

double ucb_theory_width(double R, int dim, int t, double x_max, double p_max,
                        double delta, double s_bound) {
  const double growth =
      (1.0 + t * x_max * x_max * (1.0 + p_max * p_max)) / delta;
  return R * std::sqrt(2.0 * 2.0 * dim * std::log(growth)) + s_bound;
}

}  // namespace metaprice
