#include "metaprice/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace metaprice {

void PriceBounds::validate() const {
  if (!(p_min > 0.0) || !(p_max >= p_min) || !std::isfinite(p_max)) {
    throw ConfigError("price bounds invalid: need 0 < p_min <= p_max < inf");
  }
}

Vector DemandParams::stacked() const {
  Vector theta(alpha.size() + beta.size());
  theta << alpha, beta;
  return theta;
}

DemandParams DemandParams::from_stacked(const Vector& theta) {
  if (theta.size() % 2 != 0 || theta.size() == 0) {
    throw ConfigError("stacked parameter vector must have even length 2d");
  }
  const Eigen::Index d = theta.size() / 2;
  return DemandParams{theta.head(d), theta.tail(d)};
}

UniformBoxSampler::UniformBoxSampler(int dim, double lo, double hi)
    : dim_(dim), lo_(lo), hi_(hi) {
  if (dim < 1 || !(lo <= hi)) {
    throw ConfigError("uniform feature sampler: need dim >= 1 and lo <= hi");
  }
}

FeatureVector UniformBoxSampler::at_round(int, StreamRng& rng) const {
  FeatureVector x(dim_);
  for (int j = 0; j < dim_; ++j) x[j] = rng.next_uniform(lo_, hi_);
  return x;
}

FixedVectorSampler::FixedVectorSampler(Vector value) : value_(std::move(value)) {
  if (value_.size() == 0) {
    throw ConfigError("fixed feature sampler: empty vector");
  }
}

FeatureVector FixedVectorSampler::at_round(int, StreamRng&) const {
  return value_;
}

HistoricalSampler::HistoricalSampler(std::vector<Vector> rows,
                                     std::vector<int> order)
    : rows_(std::move(rows)), order_(std::move(order)) {
  if (rows_.empty() || order_.empty()) {
    throw DataError("historical feature sampler: no rows");
  }
  for (int idx : order_) {
    if (idx < 0 || idx >= static_cast<int>(rows_.size())) {
      throw DataError("historical feature sampler: order index out of range");
    }
  }
}

int HistoricalSampler::dim() const {
  return static_cast<int>(rows_.front().size());
}

FeatureVector HistoricalSampler::at_round(int t, StreamRng&) const {
  if (t < 1 || t > static_cast<int>(order_.size())) {
    throw DataError("historical feature sampler: round " + std::to_string(t) +
                    " beyond recorded horizon");
  }
  return rows_[order_[t - 1]];
}

const FeatureSampler& MetaInstance::sampler_for(int epoch) const {
  if (!epoch_samplers.empty()) {
    return *epoch_samplers.at(static_cast<std::size_t>(epoch - 1));
  }
  return *shared_sampler;
}

int MetaInstance::horizon_of(int epoch) const {
  if (horizons.size() == 1) return horizons.front();
  return horizons.at(static_cast<std::size_t>(epoch - 1));
}

int MetaInstance::max_horizon() const {
  return *std::max_element(horizons.begin(), horizons.end());
}

int MetaInstance::min_horizon() const {
  return *std::min_element(horizons.begin(), horizons.end());
}

void MetaInstance::validate() const {
  if (n_epochs < 1) throw ConfigError("meta instance: need N >= 1");
  if (dim < 1) throw ConfigError("meta instance: need d >= 1");
  bounds.validate();
  if (horizons.empty()) throw ConfigError("meta instance: missing horizons");
  if (horizons.size() != 1 &&
      horizons.size() != static_cast<std::size_t>(n_epochs)) {
    throw ConfigError("meta instance: horizons must be shared or per-epoch");
  }
  if (min_horizon() < 2) {
    throw ConfigError("meta instance: every horizon must be >= 2");
  }
  if (sigma < 0.0) throw ConfigError("meta instance: sigma must be >= 0");
  if (prior_mean.size() != 2 * dim) {
    throw ConfigError("meta instance: prior mean must have length 2d");
  }
  if (prior_cov.rows() != 2 * dim || prior_cov.cols() != 2 * dim) {
    throw ConfigError("meta instance: prior covariance must be 2d x 2d");
  }
  if (!(x_max > 0.0) || !(lambda0 > 0.0)) {
    throw ConfigError("meta instance: x_max and lambda0 must be positive");
  }
  if (!(lambda_lower > 0.0) || lambda_bar < lambda_lower) {
    throw ConfigError(
        "meta instance: need 0 < lambda_lower <= lambda_bar for Sigma*");
  }
  if (!shared_sampler && epoch_samplers.empty()) {
    throw ConfigError("meta instance: no feature sampler");
  }
  if (!epoch_samplers.empty() &&
      epoch_samplers.size() != static_cast<std::size_t>(n_epochs)) {
    throw ConfigError("meta instance: per-epoch samplers must cover all epochs");
  }
  if (!fixed_thetas.empty()) {
    if (fixed_thetas.size() != static_cast<std::size_t>(n_epochs)) {
      throw ConfigError(
          "meta instance: fixed epoch parameters must cover all epochs");
    }
    for (const Vector& th : fixed_thetas) {
      if (th.size() != 2 * dim) {
        throw ConfigError(
            "meta instance: fixed epoch parameters must have length 2d");
      }
    }
  }
}

DesignVector make_design_vector(const FeatureVector& x, double price) {
  const Eigen::Index d = x.size();
  if (d == 0) throw ConfigError("design vector: empty feature vector");
  DesignVector m(2 * d);
  m.head(d) = x;
  m.tail(d) = price * x;
  return m;
}

double expected_demand(const DemandParams& theta, const FeatureVector& x,
                       double price) {
  if (theta.alpha.size() != x.size() || theta.beta.size() != x.size()) {
    throw ConfigError("expected demand: dimension mismatch");
  }
  return theta.alpha.dot(x) + price * theta.beta.dot(x);
}

double realize_demand(const DemandParams& theta, const FeatureVector& x,
                      double price, double noise_draw) {
  return expected_demand(theta, x, price) + noise_draw;
}

PriceChoice optimal_price(const DemandParams& theta, const FeatureVector& x,
                          const PriceBounds& bounds) {
  bounds.validate();
  const double a = theta.alpha.dot(x);
  const double b = theta.beta.dot(x);
  const auto revenue = [a, b](double p) { return p * (a + b * p); };
  double p;
  if (b < 0.0) {
    p = std::clamp(-a / (2.0 * b), bounds.p_min, bounds.p_max);
  } else {
    // Convex or linear revenue: an endpoint maximizes; ties go to p_max.
    p = revenue(bounds.p_max) >= revenue(bounds.p_min) ? bounds.p_max
                                                       : bounds.p_min;
  }
  return PriceChoice{p, revenue(p)};
}

double minimize_c0(const PriceBounds& bounds) {
  bounds.validate();
  const double p0 = bounds.p_min;
  const double p1 = bounds.p_max;
  const auto objective = [p0, p1](double phi) {
    const double a = std::cos(phi);
    const double b = std::sin(phi);
    const double t0 = p0 * b - a;
    const double t1 = p1 * b - a;
    return t0 * t0 + t1 * t1;
  };
  constexpr int kGridPoints = 10000;
  constexpr double kHalfPi = 1.5707963267948966;
  double best_phi = 0.0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kGridPoints; ++k) {
    const double phi = kHalfPi * k / kGridPoints;
    const double val = objective(phi);
    if (val < best_val) {
      best_val = val;
      best_phi = phi;
    }
  }
  double lo = std::max(0.0, best_phi - kHalfPi / kGridPoints);
  double hi = std::min(kHalfPi, best_phi + kHalfPi / kGridPoints);
  while (hi - lo > 1e-10) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (objective(m1) < objective(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return objective(0.5 * (lo + hi)) / 3.0;
}

DerivedConstants compute_derived_constants(const MetaInstance& meta) {
  meta.validate();
  DerivedConstants c;
  c.R = std::sqrt(meta.x_max * meta.x_max * meta.lambda_bar *
                      (1.0 + meta.bounds.p_max * meta.bounds.p_max) +
                  meta.sigma * meta.sigma);
  c.c0 = minimize_c0(meta.bounds);
  if (meta.bounds.p_min == meta.bounds.p_max) c.c0 = 0.0;
  if (c.c0 <= 0.0) {
    c.degenerate = true;
    return c;
  }
  const double p_max_sq = meta.bounds.p_max * meta.bounds.p_max;
  const double n = static_cast<double>(meta.n_epochs);
  const double t = static_cast<double>(meta.max_horizon());
  c.c1 = c.c0 * meta.lambda0 / (std::sqrt(1.0 + p_max_sq) * meta.x_max);
  c.c2 = 4.0 *
         (meta.x_max * meta.x_max * meta.lambda_bar * (1.0 + p_max_sq) +
          meta.sigma * meta.sigma) /
         (meta.lambda_lower * c.c0 * meta.lambda0);
  c.c3 = 16.0 * meta.sigma * meta.sigma *
         (std::log(2.0) + 2.0 * std::log(n) + std::log(t)) /
         (c.c0 * meta.lambda0);
  c.c4 = std::max(2.0 * c.c3 / meta.lambda_lower,
                  (32.0 / meta.lambda_lower) *
                      std::sqrt(meta.lambda_bar + 2.0 * c.c3));
  return c;
}

void validate_lambda0(const MetaInstance& meta, const SeedPlan& seeds) {
  constexpr int kDraws = 10000;
  const int n_samplers =
      meta.epoch_samplers.empty() ? 1 : static_cast<int>(meta.epoch_samplers.size());
  for (int s = 0; s < n_samplers; ++s) {
    const FeatureSampler& sampler = meta.sampler_for(s + 1);
    Matrix second_moment = Matrix::Zero(meta.dim, meta.dim);
    StreamRng rng = seeds.stream(StreamPurpose::kValidation, 0, 0,
                                 static_cast<std::uint32_t>(s), 0);
    double max_norm = 0.0;
    // Historical samplers cycle their recorded rounds; synthetic ones draw.
    const auto* historical = dynamic_cast<const HistoricalSampler*>(&sampler);
    const int draws = historical ? historical->rounds() : kDraws;
    for (int k = 0; k < draws; ++k) {
      const FeatureVector x =
          historical ? sampler.at_round(k + 1, rng)
                     : sampler.at_round(1, rng);
      second_moment.noalias() += x * x.transpose();
      max_norm = std::max(max_norm, x.norm());
    }
    second_moment /= static_cast<double>(draws);
    const double min_eig =
        Eigen::SelfAdjointEigenSolver<Matrix>(second_moment)
            .eigenvalues()
            .minCoeff();
    if (min_eig < 0.9 * meta.lambda0) {
      throw ConfigError(
          "declared lambda0 not supported by the feature distribution: "
          "empirical min eigenvalue " +
          std::to_string(min_eig) + " < 0.9 * " +
          std::to_string(meta.lambda0));
    }
    if (max_norm > meta.x_max * (1.0 + 1e-9)) {
      throw ConfigError("feature draws exceed declared x_max");
    }
  }
}

}  // namespace metaprice
