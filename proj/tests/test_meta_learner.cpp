#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "metaprice/errors.hpp"
#include "metaprice/meta_learner.hpp"
#include "metaprice/policies.hpp"
#include "metaprice/rng.hpp"
#include "test_util.hpp"

using namespace metaprice;

namespace {

/// Least-squares reference via SVD, an algorithm independent of the
/// normal-equation path used by the estimators.
Vector svd_least_squares(const std::vector<DesignVector>& designs,
                         const std::vector<double>& demands) {
  const Eigen::Index rows = static_cast<Eigen::Index>(designs.size());
  const Eigen::Index cols = designs.front().size();
  Matrix a(rows, cols);
  Vector b(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    a.row(i) = designs[static_cast<std::size_t>(i)].transpose();
    b[i] = demands[static_cast<std::size_t>(i)];
  }
  return a.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);
}

struct Fig1Tables {
  MetaInstance meta = testutil::synthetic_instance(1000, 1000, 5);
  DerivedConstants k = compute_derived_constants(meta);
};

struct Fig3Tables {
  MetaInstance meta = testutil::synthetic_instance(1000, 2000, 5);
  DerivedConstants k = compute_derived_constants(meta);
};

}  // namespace

TEST_CASE("theoretical exploration lengths match the frozen oracle") {
  // Frozen from tests/oracles/gen_schedule_constants.py (60-digit
  // arithmetic, evaluated independently of this code path).
  const Fig1Tables f1;
  CHECK(compute_n0(f1.meta, f1.k) ==
        doctest::Approx(35356433718622.0).epsilon(1e-12));
  const auto [n1_a, n2_a] = compute_n1_n2(f1.meta, f1.k);
  CHECK(n1_a == doctest::Approx(4057716096383214080.0).epsilon(1e-12));
  CHECK(n2_a == doctest::Approx(95875062275781320.0).epsilon(1e-12));

  const Fig3Tables f3;
  CHECK(compute_n0(f3.meta, f3.k) ==
        doctest::Approx(37411776509655.0).epsilon(1e-12));
  const auto [n1_b, n2_b] = compute_n1_n2(f3.meta, f3.k);
  CHECK(n1_b == doctest::Approx(4483939869145166049.0).epsilon(1e-12));
  CHECK(n2_b == doctest::Approx(102181529503790720.0).epsilon(1e-12));
}

TEST_CASE("widened burn-in variant shortens with the widening strength") {
  const Fig1Tables f1;
  // frozen oracle values for the rho-discounted trade-off variant
  CHECK(compute_n0(f1.meta, f1.k, 2.0) ==
        doctest::Approx(8839108429656.0).epsilon(1e-12));
  CHECK(compute_n0(f1.meta, f1.k, 64.0) ==
        doctest::Approx(8631941826.0).epsilon(1e-12));
  // monotone in rho, never below d^2
  CHECK(compute_n0(f1.meta, f1.k, 2.0) < compute_n0(f1.meta, f1.k));
  CHECK(compute_n0(f1.meta, f1.k, 64.0) < compute_n0(f1.meta, f1.k, 2.0));
  CHECK(compute_n0(f1.meta, f1.k, 1e9) >= 25.0);
  CHECK_THROWS_AS(compute_n0(f1.meta, f1.k, 0.5), ConfigError);
}

TEST_CASE("degenerate price interval refuses a schedule") {
  MetaInstance meta = testutil::synthetic_instance(100, 50, 2);
  meta.bounds = {1.0, 1.0};
  const DerivedConstants k = compute_derived_constants(meta);
  CHECK_THROWS_AS(compute_n0(meta, k), ConfigError);
  CHECK_THROWS_AS(compute_n1_n2(meta, k), ConfigError);
}

TEST_CASE("schedule resolution applies and validates overrides") {
  const MetaInstance meta = testutil::synthetic_instance(1000, 1000, 5);
  const DerivedConstants k = compute_derived_constants(meta);

  SUBCASE("run-sized overrides are taken verbatim") {
    ScheduleOverrides o;
    o.exploration_epochs = 25;
    o.cov_exploration_epochs = 64;
    o.forced_rounds = 12;
    const Schedule s = resolve_schedule(meta, k, o, 1.0, true);
    CHECK(s.n0 == 25);
    CHECK(s.n1 == 64);
    CHECK(s.n2 == 12);
    // theory values are reported alongside
    CHECK(s.n0_theory == doctest::Approx(35356433718622.0).epsilon(1e-12));
    CHECK(s.n1_theory ==
          doctest::Approx(4057716096383214080.0).epsilon(1e-12));
    CHECK(s.n2_theory == doctest::Approx(95875062275781320.0).epsilon(1e-12));
  }

  SUBCASE("defaults saturate the theoretical lengths") {
    const Schedule s = resolve_schedule(meta, k, {}, 1.0, false);
    CHECK(s.n0 == 35356433718622LL);
    CHECK(s.n1 >= 4000000000000000000LL);  // saturated near the cap
    CHECK(s.n2 % 2 == 0);
    CHECK(s.n2 >= 2);
  }

  SUBCASE("covariance phase must cover the burn-in") {
    ScheduleOverrides o;
    o.exploration_epochs = 25;
    o.cov_exploration_epochs = 10;
    o.forced_rounds = 12;
    CHECK_THROWS_AS(resolve_schedule(meta, k, o, 1.0, true), ConfigError);
  }

  SUBCASE("forced rounds must be even and at least two") {
    ScheduleOverrides o;
    o.exploration_epochs = 2;
    o.cov_exploration_epochs = 4;
    o.forced_rounds = 13;
    CHECK_THROWS_AS(resolve_schedule(meta, k, o, 1.0, true), ConfigError);
    o.forced_rounds = 0;
    CHECK_THROWS_AS(resolve_schedule(meta, k, o, 1.0, true), ConfigError);
  }

  SUBCASE("burn-in must have at least one epoch") {
    ScheduleOverrides o;
    o.exploration_epochs = 0;
    CHECK_THROWS_AS(resolve_schedule(meta, k, o, 1.0, false), ConfigError);
  }

  SUBCASE("forced phase must fit inside every horizon") {
    const MetaInstance small = testutil::synthetic_instance(100, 10, 2);
    const DerivedConstants ks = compute_derived_constants(small);
    ScheduleOverrides o;
    o.exploration_epochs = 2;
    o.cov_exploration_epochs = 4;
    o.forced_rounds = 10;  // needs 11 rounds, horizon has 10
    CHECK_THROWS_WITH_AS(resolve_schedule(small, ks, o, 1.0, true),
                         doctest::Contains("horizon too short"),
                         InfeasibleError);
    // the same lengths are fine without a forced phase
    CHECK_NOTHROW(resolve_schedule(small, ks, o, 1.0, false));
    // and with one more round of horizon they fit
    o.forced_rounds = 8;
    CHECK_NOTHROW(resolve_schedule(small, ks, o, 1.0, true));
  }
}

TEST_CASE("epochs advance sequentially and record once") {
  MetaState state(1);
  CHECK_THROWS_AS(begin_epoch(state, 2), std::logic_error);
  begin_epoch(state, 1);
  CHECK(state.epoch == 1);

  Vector m(2);
  m << 1.0, 0.1;
  CHECK_THROWS_AS(record_epoch_initialization(state, Vector::Zero(3), 0.0),
                  ConfigError);
  record_epoch_initialization(state, m, 0.5);
  CHECK_THROWS_AS(record_epoch_initialization(state, m, 0.5),
                  std::logic_error);
  CHECK_THROWS_AS(begin_epoch(state, 3), std::logic_error);
  begin_epoch(state, 2);
  CHECK_NOTHROW(record_epoch_initialization(state, 2.0 * m, 0.7));

  MetaState fresh(1);
  CHECK_THROWS_AS(record_epoch_initialization(fresh, m, 0.5),
                  std::logic_error);
  CHECK_THROWS_AS(MetaState(0), ConfigError);
  CHECK_THROWS_AS(MetaState(1, 0.0), ConfigError);
}

TEST_CASE("prior mean estimate recovers exact shared parameters") {
  const int d = 2;
  Vector truth(2 * d);
  truth << 0.1, 0.1, -0.1, -0.1;
  MetaState state(d);
  StreamRng rng(11, 0, 0, 0);
  const PriceBounds bounds{0.1, 1.0};
  for (int epoch = 1; epoch <= 8; ++epoch) {
    begin_epoch(state, epoch);
    Vector x(d);
    x << rng.next_uniform(0.1, 0.7), rng.next_uniform(0.1, 0.7);
    const double price = init_rule_price(epoch, bounds);
    const DesignVector m = make_design_vector(x, price);
    record_epoch_initialization(state, m, truth.dot(m));
  }
  const Vector estimate = estimate_prior_mean(state);
  CHECK((estimate - truth).norm() < 1e-9);
}

TEST_CASE("prior mean is unidentifiable from too little data") {
  MetaState state(1);
  CHECK_THROWS_WITH_AS(estimate_prior_mean(state),
                       doctest::Contains("unidentifiable"), DataError);

  begin_epoch(state, 1);
  Vector m(2);
  m << 0.5, 0.05;
  record_epoch_initialization(state, m, 0.3);
  // one rank-one observation cannot identify two parameters
  CHECK_THROWS_AS(estimate_prior_mean(state), DataError);

  // the ridge fallback instead returns a regularized solution and says so
  bool used_fallback = false;
  const Vector fallback = estimate_prior_mean(state, true, &used_fallback);
  CHECK(used_fallback);
  CHECK(fallback.size() == 2);
  CHECK(std::isfinite(fallback.norm()));
}

TEST_CASE("prior mean estimate matches an independent least-squares solve") {
  const int d = 2;
  MetaState state(d);
  StreamRng rng(13, 0, 0, 0);
  std::vector<DesignVector> designs;
  std::vector<double> demands;
  for (int epoch = 1; epoch <= 200; ++epoch) {
    begin_epoch(state, epoch);
    Vector x(d);
    x << rng.next_uniform(0.0, 0.7), rng.next_uniform(0.0, 0.7);
    const DesignVector m =
        make_design_vector(x, rng.next_uniform(0.1, 1.0));
    const double demand = rng.next_uniform(-1.0, 1.0);
    record_epoch_initialization(state, m, demand);
    designs.push_back(m);
    demands.push_back(demand);
  }
  const Vector reference = svd_least_squares(designs, demands);
  CHECK((estimate_prior_mean(state) - reference).cwiseAbs().maxCoeff() <
        1e-9);
}

TEST_CASE("prior widening scales the covariance by the epoch schedule") {
  StreamRng rng(17, 0, 0, 0);
  Matrix base(2, 2);
  base << 0.02, 0.005, 0.005, 0.01;
  Vector mean(2);
  mean << 0.1, -0.1;

  const GaussianBelief widened = widen_prior(mean, base, 4, 1.0);
  CHECK(widened.mean() == mean);
  CHECK((widened.cov() - 1.5 * base).cwiseAbs().maxCoeff() < 1e-15);

  // eta approaches one as the epoch index grows
  const GaussianBelief late = widen_prior(mean, base, 1000000, 1.0);
  CHECK(std::abs(late.cov()(0, 0) / base(0, 0) - 1.0) <= 1e-3 + 1e-12);

  // determinant identity det(eta * base) = eta^{2d} det(base)
  const double eta = 1.0 + 2.5 / std::sqrt(9.0);
  const GaussianBelief scaled = widen_prior(mean, base, 9, 2.5);
  CHECK(scaled.cov().determinant() ==
        doctest::Approx(std::pow(eta, 2) * base.determinant())
            .epsilon(1e-8));

  CHECK_THROWS_AS(widen_prior(mean, base, 0, 1.0), ConfigError);
  CHECK_THROWS_AS(widen_prior(mean, base, 4, 0.9), ConfigError);
}

TEST_CASE("epoch parameter estimate is exact on noiseless designs") {
  StreamRng rng(19, 0, 0, 0);
  const int d = 2;
  Vector truth(2 * d);
  truth << 0.3, -0.2, 0.15, -0.4;
  std::vector<DesignVector> designs;
  std::vector<double> demands;
  for (int t = 0; t < 2 * d + 3; ++t) {
    Vector x(d);
    x << rng.next_uniform(0.1, 0.7), rng.next_uniform(0.1, 0.7);
    designs.push_back(make_design_vector(x, rng.next_uniform(0.1, 1.0)));
    demands.push_back(truth.dot(designs.back()));
  }
  CHECK((estimate_epoch_theta(designs, demands) - truth).norm() < 1e-9);
}

TEST_CASE("epoch parameter estimate rejects deficient designs") {
  CHECK_THROWS_AS(estimate_epoch_theta({}, {}), DataError);

  // fewer observations than parameters
  std::vector<DesignVector> designs;
  std::vector<double> demands;
  Vector x(2);
  x << 0.5, 0.2;
  designs.push_back(make_design_vector(x, 0.5));
  demands.push_back(1.0);
  CHECK_THROWS_WITH_AS(estimate_epoch_theta(designs, demands),
                       doctest::Contains("singular"), DataError);

  // enough rows but a single price: rank at most d
  designs.clear();
  demands.clear();
  StreamRng rng(23, 0, 0, 0);
  for (int t = 0; t < 8; ++t) {
    Vector xv(2);
    xv << rng.next_uniform(0.1, 0.7), rng.next_uniform(0.1, 0.7);
    designs.push_back(make_design_vector(xv, 0.6));
    demands.push_back(rng.next_uniform(0.0, 1.0));
  }
  CHECK_THROWS_AS(estimate_epoch_theta(designs, demands), DataError);
}

TEST_CASE("epoch parameter estimate matches the SVD reference under noise") {
  StreamRng rng(29, 0, 0, 0);
  std::vector<DesignVector> designs;
  std::vector<double> demands;
  for (int t = 0; t < 40; ++t) {
    Vector x(2);
    x << rng.next_uniform(0.1, 0.7), rng.next_uniform(0.1, 0.7);
    designs.push_back(make_design_vector(x, rng.next_uniform(0.1, 1.0)));
    demands.push_back(rng.next_uniform(-1.0, 1.0));
  }
  const Vector reference = svd_least_squares(designs, demands);
  CHECK((estimate_epoch_theta(designs, demands) - reference)
            .cwiseAbs()
            .maxCoeff() < 1e-9);
}

TEST_CASE("empirical covariance uses the unbiased normalization") {
  std::vector<Vector> same(5, Vector::Constant(2, 0.7));
  CHECK(empirical_covariance(same).cwiseAbs().maxCoeff() == 0.0);

  std::vector<Vector> pair;
  Vector a(2), b(2);
  a << 1.0, 0.0;
  b << -1.0, 0.0;
  pair.push_back(a);
  pair.push_back(b);
  const Matrix cov = empirical_covariance(pair);
  CHECK(cov(0, 0) == doctest::Approx(2.0));
  CHECK(cov(0, 1) == doctest::Approx(0.0));
  CHECK(cov(1, 1) == doctest::Approx(0.0));

  CHECK_THROWS_AS(empirical_covariance({}), DataError);
  CHECK_THROWS_AS(empirical_covariance({a}), DataError);
}

TEST_CASE("empirical covariance concentrates on the sampling covariance") {
  Matrix truth(2, 2);
  truth << 0.02, 0.008, 0.008, 0.015;
  const GaussianBelief sampler(Vector::Zero(2), truth);
  StreamRng rng(31, 0, 0, 0);
  std::vector<Vector> draws;
  draws.reserve(10000);
  for (int i = 0; i < 10000; ++i) draws.push_back(sampler.sample(rng));
  const Matrix estimate = empirical_covariance(draws);
  CHECK((estimate - truth).norm() / truth.norm() < 0.05);
}

TEST_CASE("correction coefficient matches the frozen oracle") {
  const Fig3Tables f3;
  const auto coeff = [&](double n1, double n2) {
    return correction_coefficient(f3.k, n1, n2, f3.meta.lambda_bar,
                                  f3.meta.dim, 1000.0, 2000.0);
  };
  CHECK(coeff(1e8, 1e8) ==
        doctest::Approx(0.011464662809292468558).epsilon(1e-10));
  CHECK(coeff(10.0, 10.0) ==
        doctest::Approx(108326.04962315314074).epsilon(1e-10));
  CHECK(coeff(20.0, 10.0) ==
        doctest::Approx(107423.50446176210227).epsilon(1e-10));
  CHECK(coeff(10.0, 20.0) ==
        doctest::Approx(54527.160973357005784).epsilon(1e-10));

  // at the theoretical phase lengths the coefficient is negligible
  const auto [n1, n2] = compute_n1_n2(f3.meta, f3.k);
  CHECK(coeff(n1, n2) ==
        doctest::Approx(3.825615413272966985e-9).epsilon(1e-9));
  const Fig1Tables f1;
  const auto [m1, m2] = compute_n1_n2(f1.meta, f1.k);
  CHECK(correction_coefficient(f1.k, m1, m2, f1.meta.lambda_bar, f1.meta.dim,
                               1000.0, 1000.0) ==
        doctest::Approx(3.9664299132112003887e-9).epsilon(1e-9));

  // vanishes as both phases lengthen, and never increases in either
  CHECK(coeff(1e15, 1e15) < 1e-6);
  double prev = coeff(10.0, 10.0);
  for (double n1v : {20.0, 40.0, 80.0}) {
    const double c = coeff(n1v, 10.0);
    CHECK(c <= prev);
    prev = c;
  }
  prev = coeff(10.0, 10.0);
  for (double n2v : {20.0, 40.0, 80.0}) {
    const double c = coeff(10.0, n2v);
    CHECK(c <= prev);
    prev = c;
  }

  CHECK_THROWS_AS(coeff(1.0, 10.0), ConfigError);
  CHECK_THROWS_AS(coeff(10.0, 0.5), ConfigError);
}

TEST_CASE("correction matrix is the coefficient times the identity") {
  const Fig3Tables f3;
  const Matrix corr =
      correction_matrix(f3.k, 10.0, 10.0, f3.meta.lambda_bar, f3.meta);
  REQUIRE(corr.rows() == 10);
  REQUIRE(corr.cols() == 10);
  const double coeff = correction_coefficient(
      f3.k, 10.0, 10.0, f3.meta.lambda_bar, f3.meta.dim, 1000.0, 2000.0);
  CHECK((corr - coeff * Matrix::Identity(10, 10)).cwiseAbs().maxCoeff() ==
        0.0);
  // positive semidefinite by construction
  CHECK(coeff >= 0.0);
}

TEST_CASE("covariance error bound matches the frozen oracle") {
  const Fig3Tables f3;
  const auto bound = [&](double n1, double n2) {
    return covariance_error_bound(f3.k, n1, n2, f3.meta.lambda_bar,
                                  f3.meta.dim, 1000.0, 2000.0);
  };
  CHECK(bound(64.0, 1200.0) ==
        doctest::Approx(912.06605361685901022).epsilon(1e-10));
  CHECK(bound(10.0, 10.0) ==
        doctest::Approx(109375.18167841726643).epsilon(1e-10));
  // tightens as the estimation phase lengthens
  CHECK(bound(128.0, 1200.0) < bound(64.0, 1200.0));
  CHECK(bound(64.0, 2400.0) < bound(64.0, 1200.0));
  CHECK_THROWS_AS(bound(1.0, 10.0), ConfigError);
}

TEST_CASE("forced prices split each estimation epoch between the endpoints") {
  const PriceBounds bounds{0.1, 1.0};
  const long long n2 = 8;

  // even epochs: low half first; odd epochs: high half first
  for (int t = 1; t <= 4; ++t) {
    CHECK(forced_price(2, t, n2, bounds) == bounds.p_min);
    CHECK(forced_price(1, t, n2, bounds) == bounds.p_max);
  }
  for (int t = 5; t <= 8; ++t) {
    CHECK(forced_price(2, t, n2, bounds) == bounds.p_max);
    CHECK(forced_price(1, t, n2, bounds) == bounds.p_min);
  }

  // each endpoint is used exactly half the time in every epoch
  for (int epoch = 1; epoch <= 6; ++epoch) {
    int low = 0;
    for (int t = 1; t <= n2; ++t) {
      if (forced_price(epoch, t, n2, bounds) == bounds.p_min) ++low;
    }
    CHECK(low == n2 / 2);
  }

  CHECK_THROWS_AS(forced_price(1, 0, n2, bounds), std::logic_error);
  CHECK_THROWS_AS(forced_price(1, 9, n2, bounds), std::logic_error);
}

TEST_CASE("warm-start policy plans explore then sample") {
  const MetaInstance meta = testutil::synthetic_instance(20, 10, 1);
  const DerivedConstants k = compute_derived_constants(meta);
  ScheduleOverrides o;
  o.exploration_epochs = 3;
  const Schedule schedule = resolve_schedule(meta, k, o, 1.0, false);

  MetaState state(1);
  StreamRng rng(37, 0, 0, 0);
  for (int epoch = 1; epoch <= 2; ++epoch) {
    begin_epoch(state, epoch);
    EpochPlan plan = meta_dp_epoch_plan(state, meta, schedule, true);
    CHECK(plan.kind == EpochPlanKind::kUcbExplore);
    Vector x(1);
    x << rng.next_uniform(0.2, 1.0);
    const DesignVector m =
        make_design_vector(x, init_rule_price(epoch, meta.bounds));
    record_epoch_initialization(state, m, meta.prior_mean.dot(m));
  }

  begin_epoch(state, 3);
  EpochPlan plan = meta_dp_epoch_plan(state, meta, schedule, true);
  CHECK(plan.kind == EpochPlanKind::kTsPrior);
  CHECK_FALSE(plan.used_ridge_fallback);
  // belief: exact estimate of the shared mean, widened prior covariance
  CHECK((plan.belief.mean() - estimate_prior_mean(state)).norm() == 0.0);
  const double eta = 1.0 + 1.0 / std::sqrt(3.0);
  CHECK((plan.belief.cov() - eta * meta.prior_cov).cwiseAbs().maxCoeff() <
        1e-15);

  // without widening the prior covariance is used verbatim
  EpochPlan greedy = meta_dp_epoch_plan(state, meta, schedule, false);
  CHECK((greedy.belief.cov() - meta.prior_cov).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("warm-start plan survives a singular burn-in via the ridge flag") {
  const MetaInstance meta = testutil::synthetic_instance(20, 10, 1);
  const DerivedConstants k = compute_derived_constants(meta);
  ScheduleOverrides o;
  o.exploration_epochs = 1;
  const Schedule schedule = resolve_schedule(meta, k, o, 1.0, false);

  MetaState state(1);
  begin_epoch(state, 1);
  Vector m(2);
  m << 0.5, 0.05;
  record_epoch_initialization(state, m, 0.1);
  begin_epoch(state, 2);
  const EpochPlan plan = meta_dp_epoch_plan(state, meta, schedule, true);
  CHECK(plan.kind == EpochPlanKind::kTsPrior);
  CHECK(plan.used_ridge_fallback);
}

TEST_CASE("estimated-covariance policy freezes its estimate once") {
  const MetaInstance meta = testutil::synthetic_instance(50, 30, 1);
  const DerivedConstants k = compute_derived_constants(meta);
  ScheduleOverrides o;
  o.exploration_epochs = 2;
  o.cov_exploration_epochs = 3;
  o.forced_rounds = 4;
  const Schedule schedule = resolve_schedule(meta, k, o, 1.0, true);

  MetaState state(1);
  StreamRng rng(41, 0, 0, 0);
  for (int epoch = 1; epoch <= 3; ++epoch) {
    begin_epoch(state, epoch);
    EpochPlan plan = meta_dp_pp_epoch_plan(state, meta, schedule, true);
    CHECK(plan.kind == EpochPlanKind::kForcedThenUcb);
    CHECK(plan.forced_rounds == 4);
    Vector x(1);
    x << rng.next_uniform(0.2, 1.0);
    const DesignVector m =
        make_design_vector(x, init_rule_price(epoch, meta.bounds));
    record_epoch_initialization(state, m, meta.prior_mean.dot(m));
    Vector tilde(2);
    tilde << rng.next_uniform(-0.2, 0.2), rng.next_uniform(-0.2, 0.2);
    record_epoch_theta(state, tilde);
  }
  CHECK_FALSE(state.cov_frozen);

  begin_epoch(state, 4);
  const EpochPlan plan = meta_dp_pp_epoch_plan(state, meta, schedule, true);
  CHECK(plan.kind == EpochPlanKind::kTsPrior);
  REQUIRE(state.cov_frozen);

  // the frozen matrix is the sample covariance of the recorded estimates
  // plus the correction constant evaluated at the theoretical phase lengths
  const Matrix expected =
      empirical_covariance(state.epoch_thetas) +
      correction_matrix(k, schedule.n1_theory, schedule.n2_theory,
                        meta.lambda_bar, meta);
  CHECK((state.frozen_cov - expected).cwiseAbs().maxCoeff() == 0.0);

  // widening applies on top of the frozen matrix
  const double eta = 1.0 + 1.0 / std::sqrt(4.0);
  CHECK((plan.belief.cov() - eta * state.frozen_cov).cwiseAbs().maxCoeff() <
        1e-15);

  // later estimates no longer move the frozen matrix
  const Matrix before = state.frozen_cov;
  Vector extra(2);
  extra << 5.0, -5.0;
  record_epoch_theta(state, extra);
  begin_epoch(state, 5);
  const EpochPlan later = meta_dp_pp_epoch_plan(state, meta, schedule, true);
  CHECK((state.frozen_cov - before).cwiseAbs().maxCoeff() == 0.0);
  const double eta5 = 1.0 + 1.0 / std::sqrt(5.0);
  CHECK((later.belief.cov() - eta5 * before).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("estimated-covariance policy without widening keeps the frozen "
          "matrix verbatim") {
  const MetaInstance meta = testutil::synthetic_instance(50, 30, 1);
  const DerivedConstants k = compute_derived_constants(meta);
  ScheduleOverrides o;
  o.exploration_epochs = 2;
  o.cov_exploration_epochs = 3;
  o.forced_rounds = 4;
  const Schedule schedule = resolve_schedule(meta, k, o, 1.0, true);

  MetaState state(1);
  StreamRng rng(43, 0, 0, 0);
  for (int epoch = 1; epoch <= 3; ++epoch) {
    begin_epoch(state, epoch);
    meta_dp_pp_epoch_plan(state, meta, schedule, false);
    Vector x(1);
    x << rng.next_uniform(0.2, 1.0);
    const DesignVector m =
        make_design_vector(x, init_rule_price(epoch, meta.bounds));
    record_epoch_initialization(state, m, meta.prior_mean.dot(m));
    Vector tilde(2);
    tilde << rng.next_uniform(-0.2, 0.2), rng.next_uniform(-0.2, 0.2);
    record_epoch_theta(state, tilde);
  }
  begin_epoch(state, 4);
  const EpochPlan plan = meta_dp_pp_epoch_plan(state, meta, schedule, false);
  CHECK(plan.kind == EpochPlanKind::kTsPrior);
  // no widening factor: the belief carries the frozen matrix itself
  CHECK((plan.belief.cov() - state.frozen_cov).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("recorded epoch estimates must have the stacked length") {
  MetaState state(2);
  CHECK_THROWS_AS(record_epoch_theta(state, Vector::Zero(3)), ConfigError);
  CHECK_NOTHROW(record_epoch_theta(state, Vector::Zero(4)));
}
