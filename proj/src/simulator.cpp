#include "metaprice/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace metaprice {

const char* policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kMetaOracle:
      return "meta-oracle";
    case PolicyKind::kMetaDp:
      return "meta-dp";
    case PolicyKind::kMetaDpPp:
      return "meta-dp-pp";
    case PolicyKind::kGreedy:
      return "greedy";
    case PolicyKind::kPriorFree:
      return "prior-free";
    case PolicyKind::kUcbOnly:
      return "ucb-only";
  }
  throw ConfigError("unknown policy kind");
}

PolicyKind policy_from_name(const std::string& name) {
  for (int id = 0; id <= 5; ++id) {
    const auto kind = static_cast<PolicyKind>(id);
    if (name == policy_name(kind)) return kind;
  }
  throw ConfigError("unknown policy name: " + name);
}

double EpochTrace::total_expected_revenue() const {
  double sum = 0.0;
  for (const RoundRecord& r : rounds) sum += r.expected_revenue;
  return sum;
}

double EpochTrace::total_best_expected_revenue() const {
  double sum = 0.0;
  for (const RoundRecord& r : rounds) sum += r.best_expected_revenue;
  return sum;
}

namespace {

// Draws for one epoch run. Environment streams (features, noise) are labeled
// by (trial, epoch, round) only, so every policy sees identical values;
// decision streams add the policy id.
struct EpochIo {
  const EpochInstance& inst;
  const SeedPlan& seeds;
  EpochStreamIds ids;
  std::vector<FeatureVector>* env_features = nullptr;
  std::vector<double>* env_noise = nullptr;

  FeatureVector feature(int t) const {
    StreamRng rng = seeds.stream(StreamPurpose::kFeature, 0, ids.trial,
                                 ids.epoch, static_cast<std::uint32_t>(t));
    FeatureVector x = inst.feature_sampler->at_round(t, rng);
    if (env_features) env_features->push_back(x);
    return x;
  }

  double noise(int t) const {
    double eps = 0.0;
    if (inst.noise_sigma > 0.0) {
      StreamRng rng = seeds.stream(StreamPurpose::kNoise, 0, ids.trial,
                                   ids.epoch, static_cast<std::uint32_t>(t));
      eps = inst.noise_sigma * rng.next_normal();
    }
    if (env_noise) env_noise->push_back(eps);
    return eps;
  }

  StreamRng decision(int t) const {
    return seeds.stream(StreamPurpose::kDecision, ids.policy_id, ids.trial,
                        ids.epoch, static_cast<std::uint32_t>(t));
  }
};

double ucb_width(const EpochPolicySpec& spec, int dim, int observations,
                 double p_max) {
  if (spec.ucb_mode == UcbMode::kPaper) return 1.0;
  return ucb_theory_width(spec.ucb_r, dim, std::max(observations, 1),
                          spec.ucb_x_max, p_max, spec.ucb_delta,
                          spec.ucb_s_bound);
}

}  // namespace

EpochTrace run_epoch(const EpochPolicySpec& spec, const EpochInstance& inst,
                     const SeedPlan& seeds, const EpochStreamIds& ids,
                     EnvironmentLog* env_log) {
  if (inst.feature_sampler == nullptr) {
    throw ConfigError("epoch run: missing feature sampler");
  }
  if (inst.horizon < 1) throw ConfigError("epoch run: horizon must be >= 1");
  inst.bounds.validate();

  EpochIo io{inst, seeds, ids};
  if (env_log) {
    env_log->features.emplace_back();
    env_log->noise.emplace_back();
    io.env_features = &env_log->features.back();
    io.env_noise = &env_log->noise.back();
  }

  EpochTrace trace;
  trace.rounds.reserve(static_cast<std::size_t>(inst.horizon));
  const DemandParams& theta = inst.theta;
  const int dim = theta.dim();

  const auto play_round = [&](int t, const FeatureVector& x,
                              double price) -> double {
    const double eps = io.noise(t);
    const double demand = realize_demand(theta, x, price, eps);
    RoundRecord record;
    record.x = x;
    record.price = price;
    record.demand = demand;
    record.expected_revenue = price * expected_demand(theta, x, price);
    record.best_expected_revenue =
        optimal_price(theta, x, inst.bounds).expected_revenue;
    trace.rounds.push_back(std::move(record));
    return demand;
  };

  // Round 1.
  const FeatureVector x1 = io.feature(1);
  double p1;
  switch (spec.kind) {
    case EpochPolicySpec::Kind::kClairvoyant:
      p1 = optimal_price(theta, x1, inst.bounds).price;
      break;
    case EpochPolicySpec::Kind::kForcedThenUcb:
      p1 = forced_price(static_cast<int>(ids.epoch), 1, spec.forced_rounds,
                        inst.bounds);
      break;
    default:
      p1 = init_rule_price(static_cast<int>(ids.epoch), inst.bounds);
  }
  const double d1 = play_round(1, x1, p1);

  switch (spec.kind) {
    case EpochPolicySpec::Kind::kClairvoyant: {
      for (int t = 2; t <= inst.horizon; ++t) {
        const FeatureVector x = io.feature(t);
        play_round(t, x, optimal_price(theta, x, inst.bounds).price);
      }
      break;
    }
    case EpochPolicySpec::Kind::kTsBelief: {
      TsEpochState state{spec.belief, 2, inst.bounds, inst.noise_sigma};
      if (spec.fold_round_one && inst.noise_sigma > 0.0) {
        state.belief = posterior_update(
            spec.belief, make_design_vector(x1, p1), d1, inst.noise_sigma);
      }
      for (int t = 2; t <= inst.horizon; ++t) {
        const FeatureVector x = io.feature(t);
        StreamRng decision = io.decision(t);
        const double p = ts_choose_price(state, x, decision);
        const double d = play_round(t, x, p);
        if (inst.noise_sigma > 0.0) {
          ts_observe(state, x, p, d);
        } else {
          state.t += 1;  // noiseless mode: the belief cannot be conditioned
        }
      }
      break;
    }
    case EpochPolicySpec::Kind::kUcb: {
      UcbEpochState state(2 * dim, inst.bounds);
      ucb_observe(state, x1, p1, d1);
      for (int t = 2; t <= inst.horizon; ++t) {
        const FeatureVector x = io.feature(t);
        state.w = ucb_width(spec, dim, state.t - 1, inst.bounds.p_max);
        const double p = ucb_choose_price(state, x);
        const double d = play_round(t, x, p);
        ucb_observe(state, x, p, d);
      }
      break;
    }
    case EpochPolicySpec::Kind::kPriorFreeTs: {
      UcbEpochState state(2 * dim, inst.bounds);
      ucb_observe(state, x1, p1, d1);
      for (int t = 2; t <= inst.horizon; ++t) {
        const FeatureVector x = io.feature(t);
        StreamRng decision = io.decision(t);
        const double p =
            prior_independent_ts_step(state, x, spec.prior_free_v, decision);
        const double d = play_round(t, x, p);
        ucb_observe(state, x, p, d);
      }
      break;
    }
    case EpochPolicySpec::Kind::kForcedThenUcb: {
      UcbEpochState state(2 * dim, inst.bounds);
      ucb_observe(state, x1, p1, d1);
      for (int t = 2; t <= inst.horizon; ++t) {
        const FeatureVector x = io.feature(t);
        double p;
        if (t <= spec.forced_rounds) {
          p = forced_price(static_cast<int>(ids.epoch), t, spec.forced_rounds,
                           inst.bounds);
        } else {
          state.w = ucb_width(spec, dim, state.t - 1, inst.bounds.p_max);
          p = ucb_choose_price(state, x);
        }
        const double d = play_round(t, x, p);
        ucb_observe(state, x, p, d);
      }
      break;
    }
  }
  return trace;
}

PolicyRunResult run_meta_policy_trial(PolicyKind kind,
                                      const MetaInstance& meta,
                                      const RunSettings& settings,
                                      const SeedPlan& seeds,
                                      std::uint32_t trial,
                                      EnvironmentLog* env_log) {
  meta.validate();
  if (kind == PolicyKind::kMetaDp && !settings.cov_known) {
    throw ConfigError(
        "meta-dp needs the prior covariance; use meta-dp-pp when it is "
        "unknown");
  }

  const DerivedConstants consts = compute_derived_constants(meta);
  const bool dp_pipeline =
      kind == PolicyKind::kMetaDp ||
      (kind == PolicyKind::kGreedy && settings.cov_known);
  const bool pp_pipeline =
      kind == PolicyKind::kMetaDpPp ||
      (kind == PolicyKind::kGreedy && !settings.cov_known);
  const bool widening_enabled =
      kind == PolicyKind::kMetaDp || kind == PolicyKind::kMetaDpPp;

  PolicyRunResult out;
  out.epoch_expected_revenue.reserve(
      static_cast<std::size_t>(meta.n_epochs));
  out.epoch_best_revenue.reserve(static_cast<std::size_t>(meta.n_epochs));

  std::optional<MetaState> state;
  if (dp_pipeline || pp_pipeline) {
    state.emplace(meta.dim, settings.rho);
    out.schedule = resolve_schedule(meta, consts, settings.overrides,
                                    settings.rho, pp_pipeline);
  }

  const Matrix prior_factor = cholesky_lower(meta.prior_cov);
  const GaussianBelief oracle_prior(meta.prior_mean, meta.prior_cov);
  const int two_d = 2 * meta.dim;

  for (int i = 1; i <= meta.n_epochs; ++i) {
    Vector theta_vec;
    if (!meta.fixed_thetas.empty()) {
      theta_vec = meta.fixed_thetas[static_cast<std::size_t>(i - 1)];
    } else {
      StreamRng theta_rng =
          seeds.stream(StreamPurpose::kThetaDraw, 0, trial,
                       static_cast<std::uint32_t>(i), 0);
      Vector z(two_d);
      for (int j = 0; j < two_d; ++j) z[j] = theta_rng.next_normal();
      theta_vec = meta.prior_mean + prior_factor * z;
    }
    if (env_log) env_log->thetas.push_back(theta_vec);

    const int horizon = meta.horizon_of(i);
    EpochInstance inst{DemandParams::from_stacked(theta_vec),
                       &meta.sampler_for(i), horizon, meta.sigma,
                       meta.bounds};
    const EpochStreamIds ids{static_cast<std::uint32_t>(kind), trial,
                             static_cast<std::uint32_t>(i)};

    EpochPolicySpec spec;
    spec.ucb_mode = settings.ucb_mode;
    spec.ucb_r = consts.R;
    spec.ucb_x_max = meta.x_max;
    spec.ucb_delta = 1.0 / horizon;
    spec.ucb_s_bound = meta.s_bound;

    if (kind == PolicyKind::kMetaOracle) {
      spec.kind = EpochPolicySpec::Kind::kTsBelief;
      spec.belief = oracle_prior;
      spec.fold_round_one = true;
    } else if (kind == PolicyKind::kUcbOnly) {
      spec.kind = EpochPolicySpec::Kind::kUcb;
    } else if (kind == PolicyKind::kPriorFree) {
      spec.kind = EpochPolicySpec::Kind::kPriorFreeTs;
      spec.prior_free_v =
          prior_free_scale(consts.R, meta.dim, horizon, 1.0 / horizon);
    } else {
      // Meta pipelines: replay round 1 ahead of the epoch run (counter-based
      // streams make the replay draw identical values), record it, and plan.
      begin_epoch(*state, i);
      StreamRng feature_rng =
          seeds.stream(StreamPurpose::kFeature, 0, trial,
                       static_cast<std::uint32_t>(i), 1);
      const FeatureVector x1 =
          meta.sampler_for(i).at_round(1, feature_rng);
      const double p1 = init_rule_price(i, meta.bounds);
      double eps1 = 0.0;
      if (meta.sigma > 0.0) {
        StreamRng noise_rng =
            seeds.stream(StreamPurpose::kNoise, 0, trial,
                         static_cast<std::uint32_t>(i), 1);
        eps1 = meta.sigma * noise_rng.next_normal();
      }
      const double d1 =
          realize_demand(inst.theta, x1, p1, eps1);
      record_epoch_initialization(*state, make_design_vector(x1, p1), d1);

      const EpochPlan plan =
          dp_pipeline
              ? meta_dp_epoch_plan(*state, meta, *out.schedule,
                                   widening_enabled)
              : meta_dp_pp_epoch_plan(*state, meta, *out.schedule,
                                      widening_enabled);
      out.ridge_fallback_used |= plan.used_ridge_fallback;
      switch (plan.kind) {
        case EpochPlanKind::kUcbExplore:
          spec.kind = EpochPolicySpec::Kind::kUcb;
          break;
        case EpochPlanKind::kTsPrior:
          spec.kind = EpochPolicySpec::Kind::kTsBelief;
          spec.belief = plan.belief;
          spec.fold_round_one = false;
          break;
        case EpochPlanKind::kForcedThenUcb:
          spec.kind = EpochPolicySpec::Kind::kForcedThenUcb;
          spec.forced_rounds = plan.forced_rounds;
          break;
      }
      if (pp_pipeline && state->cov_frozen && !out.frozen_cov.has_value()) {
        out.frozen_cov = state->frozen_cov;
        out.empirical_cov = empirical_covariance(state->epoch_thetas);
      }
    }

    const EpochTrace trace = run_epoch(spec, inst, seeds, ids, env_log);
    out.epoch_expected_revenue.push_back(trace.total_expected_revenue());
    out.epoch_best_revenue.push_back(trace.total_best_expected_revenue());

    if (pp_pipeline && i <= out.schedule->n1) {
      std::vector<DesignVector> designs;
      std::vector<double> demands;
      const auto forced = static_cast<std::size_t>(
          std::min<long long>(out.schedule->n2, horizon));
      designs.reserve(forced);
      demands.reserve(forced);
      for (std::size_t t = 0; t < forced; ++t) {
        const RoundRecord& r = trace.rounds[t];
        designs.push_back(make_design_vector(r.x, r.price));
        demands.push_back(r.demand);
      }
      record_epoch_theta(*state, estimate_epoch_theta(designs, demands));
    }
  }
  return out;
}

std::vector<double> cumulative_regret(const PolicyRunResult& oracle_run,
                                      const PolicyRunResult& candidate_run) {
  const std::size_t n = oracle_run.epoch_expected_revenue.size();
  if (candidate_run.epoch_expected_revenue.size() != n) {
    throw DataError("paired runs cover different epoch counts");
  }
  std::vector<double> cumulative(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += oracle_run.epoch_expected_revenue[i] -
           candidate_run.epoch_expected_revenue[i];
    cumulative[i] = sum;
  }
  return cumulative;
}

std::vector<double> run_meta_paired(PolicyKind kind, const MetaInstance& meta,
                                    const RunSettings& settings,
                                    const SeedPlan& seeds,
                                    std::uint32_t trial) {
  const PolicyRunResult oracle_run = run_meta_policy_trial(
      PolicyKind::kMetaOracle, meta, settings, seeds, trial);
  const PolicyRunResult candidate_run =
      run_meta_policy_trial(kind, meta, settings, seeds, trial);
  return cumulative_regret(oracle_run, candidate_run);
}

MetaRegretCurve aggregate_trials(
    const std::vector<std::vector<double>>& per_trial_cumulative) {
  if (per_trial_cumulative.empty()) {
    throw DataError("aggregate: no trials");
  }
  const std::size_t n = per_trial_cumulative.front().size();
  for (const auto& curve : per_trial_cumulative) {
    if (curve.size() != n) {
      throw DataError("aggregate: trials cover different epoch counts");
    }
  }
  const auto k = static_cast<double>(per_trial_cumulative.size());
  MetaRegretCurve out;
  out.trials = static_cast<int>(per_trial_cumulative.size());
  out.mean_cumulative.assign(n, 0.0);
  out.stderr_cumulative.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (const auto& curve : per_trial_cumulative) mean += curve[i];
    mean /= k;
    out.mean_cumulative[i] = mean;
    if (out.trials >= 2) {
      double ss = 0.0;
      for (const auto& curve : per_trial_cumulative) {
        const double dev = curve[i] - mean;
        ss += dev * dev;
      }
      out.stderr_cumulative[i] = std::sqrt(ss / ((k - 1.0) * k));
    }
  }
  return out;
}

}  // namespace metaprice
