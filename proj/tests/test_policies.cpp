#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "metaprice/errors.hpp"
#include "metaprice/policies.hpp"
#include "metaprice/rng.hpp"
#include "test_util.hpp"

using namespace metaprice;

namespace {

const PriceBounds kBounds{0.1, 1.0};
const FeatureVector kUnitX = Vector::Constant(1, 1.0);

Vector stacked2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

/// Objective the optimism policy maximizes, evaluated directly for the grid
/// oracle: p <alpha,x> + p^2 <beta,x> + w ||(x; p x)||_{V^{-1}}.
double ucb_objective(const UcbEpochState& state, const FeatureVector& x,
                     double p) {
  const Vector est = ucb_estimate(state);
  const Eigen::Index d = x.size();
  const double a = est.head(d).dot(x);
  const double b = est.tail(d).dot(x);
  const Vector m = make_design_vector(x, p);
  const Vector solved = state.gram.llt().solve(m);
  return p * (a + b * p) + state.w * std::sqrt(m.dot(solved));
}

}  // namespace

TEST_CASE("initialization rule alternates the price endpoints by parity") {
  CHECK(init_rule_price(2, kBounds) == kBounds.p_min);
  CHECK(init_rule_price(4, kBounds) == kBounds.p_min);
  CHECK(init_rule_price(1, kBounds) == kBounds.p_max);
  CHECK(init_rule_price(3, kBounds) == kBounds.p_max);

  int low = 0, high = 0;
  for (int epoch = 1; epoch <= 2 * 17; ++epoch) {
    const double p = init_rule_price(epoch, kBounds);
    if (p == kBounds.p_min) ++low;
    if (p == kBounds.p_max) ++high;
  }
  CHECK(low == 17);
  CHECK(high == 17);
}

TEST_CASE("a concentrated belief prices at its mean's optimum") {
  // point-mass-like belief at parameters with interior optimum 0.5
  TsEpochState state{GaussianBelief(stacked2(1.0, -1.0),
                                    1e-12 * Matrix::Identity(2, 2)),
                     2, kBounds, 1.0};
  StreamRng rng(12, 0, 0, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const double p = ts_choose_price(state, kUnitX, rng);
    CHECK(p == doctest::Approx(0.5).epsilon(1e-4));
  }
}

TEST_CASE("sampled prices follow the push-forward of the belief") {
  const GaussianBelief belief(stacked2(1.0, -1.0),
                              0.01 * Matrix::Identity(2, 2));
  TsEpochState state{belief, 2, kBounds, 1.0};

  const int n = 5000;
  std::vector<double> policy_prices(n), oracle_prices(n);
  StreamRng policy_rng(100, 0, 0, 0);
  StreamRng oracle_rng(200, 0, 0, 0);
  for (int i = 0; i < n; ++i) {
    policy_prices[static_cast<std::size_t>(i)] =
        ts_choose_price(state, kUnitX, policy_rng);
    const Vector draw = belief.sample(oracle_rng);
    oracle_prices[static_cast<std::size_t>(i)] =
        optimal_price(DemandParams::from_stacked(draw), kUnitX, kBounds)
            .price;
  }
  const double d = testutil::ks_two_sample(policy_prices, oracle_prices);
  CHECK(d < testutil::ks_two_sample_critical_1pct(n, n));
}

TEST_CASE("observing folds the design vector into the belief") {
  TsEpochState state{GaussianBelief(Vector::Zero(2), Matrix::Identity(2, 2)),
                     2, kBounds, 1.0};
  const GaussianBelief expected = posterior_update(
      state.belief, make_design_vector(kUnitX, 0.7), 0.9, 1.0);
  ts_observe(state, kUnitX, 0.7, 0.9);
  CHECK(state.t == 3);
  CHECK((state.belief.mean() - expected.mean()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((state.belief.cov() - expected.cov()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("exact demand observations identify the parameters") {
  // environment demands are exact; the belief carries a small noise scale, so
  // the posterior mean converges to the truth
  const Vector truth = stacked2(1.0, -1.0);
  TsEpochState state{GaussianBelief(Vector::Zero(2), Matrix::Identity(2, 2)),
                     2, kBounds, 1e-4};
  StreamRng rng(42, 0, 0, 0);
  for (int t = 0; t < 50; ++t) {
    const double price = rng.next_uniform(kBounds.p_min, kBounds.p_max);
    const double demand = truth.dot(make_design_vector(kUnitX, price));
    ts_observe(state, kUnitX, price, demand);
  }
  CHECK((state.belief.mean() - truth).norm() < 1e-6);
}

TEST_CASE("a full noiseless epoch settles on the optimal price") {
  const Vector truth = stacked2(1.0, -1.0);
  TsEpochState state{GaussianBelief(Vector::Zero(2), Matrix::Identity(2, 2)),
                     2, kBounds, 0.05};
  StreamRng rng(4242, 0, 0, 0);
  const double best = optimal_price(DemandParams::from_stacked(truth), kUnitX,
                                    kBounds)
                          .expected_revenue;
  double tail_regret = 0.0;
  const int horizon = 500;
  for (int t = 2; t <= horizon; ++t) {
    const double price = ts_choose_price(state, kUnitX, rng);
    const double expected = truth.dot(make_design_vector(kUnitX, price));
    if (t > horizon - 100) tail_regret += best - price * expected;
    ts_observe(state, kUnitX, price, expected);
  }
  CHECK(tail_regret / 100.0 <= 1e-3);
}

TEST_CASE("ridge estimate starts at zero and follows the normal equations") {
  UcbEpochState state(2, kBounds);
  CHECK(ucb_estimate(state).norm() == 0.0);

  // single observation with design e1: (I + e1 e1')^{-1} e1 = e1 / 2
  UcbEpochState one(2, kBounds);
  ucb_observe(one, kUnitX, 0.0, 1.0);  // design (1, 0)
  const Vector est = ucb_estimate(one);
  CHECK(est[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(est[1] == doctest::Approx(0.0));
  CHECK(one.t == 2);

  // 200 observations match a direct solve of the ridge system
  UcbEpochState many(4, kBounds);
  Matrix gram = Matrix::Identity(4, 4);
  Vector moment = Vector::Zero(4);
  StreamRng rng(7, 0, 0, 0);
  for (int i = 0; i < 200; ++i) {
    Vector x(2);
    x << rng.next_uniform(0.0, 1.0), rng.next_uniform(0.0, 1.0);
    const double p = rng.next_uniform(0.1, 1.0);
    const double demand = rng.next_uniform(-1.0, 1.0);
    ucb_observe(many, x, p, demand);
    const Vector m = make_design_vector(x, p);
    gram += m * m.transpose();
    moment += demand * m;
  }
  const Vector direct = gram.ldlt().solve(moment);
  CHECK((ucb_estimate(many) - direct).cwiseAbs().maxCoeff() < 1e-9);

  CHECK_THROWS_AS(UcbEpochState(3, kBounds), ConfigError);
  CHECK_THROWS_AS(UcbEpochState(0, kBounds), ConfigError);
}

TEST_CASE("optimism bonus with identity gram grows with the price") {
  // estimate zero, V = I: objective is sqrt(1 + p^2), maximized at p_max
  UcbEpochState state(2, kBounds);
  CHECK(ucb_choose_price(state, kUnitX) == doctest::Approx(1.0).epsilon(1e-6));

  // and the objective value at a sample price matches the closed form
  const double p = 0.6;
  CHECK(ucb_objective(state, kUnitX, p) ==
        doctest::Approx(std::sqrt(1.0 + p * p)).epsilon(1e-12));
}

TEST_CASE("zero confidence width reduces optimism to greedy pricing") {
  UcbEpochState state(2, kBounds);
  StreamRng rng(17, 0, 0, 0);
  // feed observations from a concave truth so the estimate has an interior
  // vertex
  const Vector truth = stacked2(1.0, -1.0);
  for (int i = 0; i < 40; ++i) {
    const double p = rng.next_uniform(0.1, 1.0);
    ucb_observe(state, kUnitX, p, truth.dot(make_design_vector(kUnitX, p)));
  }
  state.w = 0.0;
  const double chosen = ucb_choose_price(state, kUnitX);
  const double greedy =
      optimal_price(DemandParams::from_stacked(ucb_estimate(state)), kUnitX,
                    kBounds)
          .price;
  CHECK(chosen == doctest::Approx(greedy).epsilon(1e-6));
}

TEST_CASE("optimism maximizes its objective against a fine grid") {
  StreamRng rng(23, 0, 0, 0);
  for (int rep = 0; rep < 50; ++rep) {
    UcbEpochState state(2, kBounds);
    const int obs = static_cast<int>(rng.next_below(6));
    for (int i = 0; i < obs; ++i) {
      ucb_observe(state, kUnitX, rng.next_uniform(0.1, 1.0),
                  rng.next_uniform(-1.0, 1.0));
    }
    state.w = rng.next_uniform(0.0, 2.0);
    const double chosen = ucb_choose_price(state, kUnitX);
    REQUIRE(chosen >= kBounds.p_min);
    REQUIRE(chosen <= kBounds.p_max);
    const double achieved = ucb_objective(state, kUnitX, chosen);
    double grid_best = -1e300;
    for (int k = 0; k <= 100000; ++k) {
      grid_best = std::max(
          grid_best,
          ucb_objective(state, kUnitX,
                        kBounds.p_min +
                            (kBounds.p_max - kBounds.p_min) * k / 100000.0));
    }
    CHECK(achieved >= grid_best - 1e-6);
  }
}

TEST_CASE("zero oversampling scale reduces the sampler to ridge greedy") {
  UcbEpochState state(2, kBounds);
  StreamRng rng(29, 0, 0, 0);
  for (int i = 0; i < 10; ++i) {
    ucb_observe(state, kUnitX, rng.next_uniform(0.1, 1.0),
                rng.next_uniform(0.0, 1.0));
  }
  const double greedy =
      optimal_price(DemandParams::from_stacked(ucb_estimate(state)), kUnitX,
                    kBounds)
          .price;
  for (int rep = 0; rep < 20; ++rep) {
    CHECK(prior_independent_ts_step(state, kUnitX, 0.0, rng) == greedy);
  }
}

TEST_CASE("prior-independent draws follow their declared distribution") {
  UcbEpochState state(2, kBounds);
  StreamRng seed_rng(31, 0, 0, 0);
  const Vector truth = stacked2(1.0, -1.0);
  for (int i = 0; i < 30; ++i) {
    const double p = seed_rng.next_uniform(0.1, 1.0);
    ucb_observe(state, kUnitX, p,
                truth.dot(make_design_vector(kUnitX, p)) +
                    0.3 * seed_rng.next_normal());
  }
  const double v = 0.3;

  const int n = 5000;
  std::vector<double> policy_prices(n), oracle_prices(n);
  StreamRng policy_rng(77, 0, 0, 0);
  StreamRng oracle_rng(78, 0, 0, 0);
  const Vector ridge = ucb_estimate(state);
  const Matrix cov = v * v * state.gram.inverse();
  const GaussianBelief oracle(ridge, 0.5 * (cov + cov.transpose()));
  for (int i = 0; i < n; ++i) {
    policy_prices[static_cast<std::size_t>(i)] =
        prior_independent_ts_step(state, kUnitX, v, policy_rng);
    oracle_prices[static_cast<std::size_t>(i)] =
        optimal_price(DemandParams::from_stacked(oracle.sample(oracle_rng)),
                      kUnitX, kBounds)
            .price;
  }
  const double d = testutil::ks_two_sample(policy_prices, oracle_prices);
  CHECK(d < testutil::ks_two_sample_critical_1pct(n, n));
}

TEST_CASE("oversampling scale and confidence width formulas") {
  const double R = 1.01;
  CHECK(prior_free_scale(R, 5, 1000, 1e-3) ==
        doctest::Approx(R * std::sqrt(9.0 * 10.0 * std::log(1000.0 / 1e-3)))
            .epsilon(1e-15));
  CHECK(prior_free_scale(1.0, 1, 2, 2.0) ==
        doctest::Approx(std::sqrt(18.0 * std::log(1.0))).epsilon(1e-15));

  const double width = ucb_theory_width(R, 5, 7, 1.0, 1.0, 1e-3, 0.32);
  CHECK(width ==
        doctest::Approx(R * std::sqrt(20.0 * std::log((1.0 + 7.0 * 2.0) /
                                                      1e-3)) +
                        0.32)
            .epsilon(1e-15));
}

TEST_CASE("every policy prices inside the feasible interval") {
  StreamRng rng(2025, 0, 0, 0);
  int violations = 0;
  for (int rep = 0; rep < 300; ++rep) {
    const double p_min = rng.next_uniform(0.05, 1.0);
    const PriceBounds bounds{p_min, p_min + rng.next_uniform(0.01, 2.0)};
    Vector mean(2);
    mean << rng.next_uniform(-2.0, 2.0), rng.next_uniform(-2.0, 2.0);
    TsEpochState ts{GaussianBelief(mean, Matrix::Identity(2, 2)), 2, bounds,
                    1.0};
    const double tsp = ts_choose_price(ts, kUnitX, rng);
    if (!(tsp >= bounds.p_min && tsp <= bounds.p_max)) ++violations;

    UcbEpochState ucb(2, bounds);
    ucb_observe(ucb, kUnitX, bounds.p_min, rng.next_uniform(-1.0, 1.0));
    ucb.w = rng.next_uniform(0.0, 3.0);
    const double up = ucb_choose_price(ucb, kUnitX);
    if (!(up >= bounds.p_min && up <= bounds.p_max)) ++violations;

    const double pf =
        prior_independent_ts_step(ucb, kUnitX, rng.next_uniform(0.0, 5.0),
                                  rng);
    if (!(pf >= bounds.p_min && pf <= bounds.p_max)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("observations only grow the gram matrix spectrum") {
  UcbEpochState state(4, kBounds);
  StreamRng rng(55, 0, 0, 0);
  double prev_min_eig = 1.0;  // identity start
  for (int i = 0; i < 100; ++i) {
    Vector x(2);
    x << rng.next_uniform(0.0, 1.0), rng.next_uniform(0.0, 1.0);
    ucb_observe(state, x, rng.next_uniform(0.1, 1.0),
                rng.next_uniform(-1.0, 1.0));
    Eigen::SelfAdjointEigenSolver<Matrix> solver(state.gram);
    const double min_eig = solver.eigenvalues().minCoeff();
    REQUIRE(min_eig >= prev_min_eig - 1e-12);
    prev_min_eig = min_eig;
  }
}
