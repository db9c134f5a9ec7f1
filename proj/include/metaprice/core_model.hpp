#pragma once

#include <Eigen/Dense>

#include <memory>
#include <vector>

#include "metaprice/errors.hpp"
#include "metaprice/rng.hpp"

namespace metaprice {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Covariate vector observed at the start of a round. Length d, norm <= x_max.
using FeatureVector = Vector;

/// Stacked regressor m(x, p) = (x, p*x), length 2d. Demand is linear in it.
using DesignVector = Vector;

/// Feasible posted-price interval, 0 < p_min <= p_max. The meta-learning
/// constants degenerate (c0 = 0) unless p_min < p_max strictly.
struct PriceBounds {
  double p_min = 0.0;
  double p_max = 0.0;

  void validate() const;
};

/// Demand curve parameters of one product: demand = <alpha,x> + p*<beta,x>.
struct DemandParams {
  Vector alpha;
  Vector beta;

  int dim() const { return static_cast<int>(alpha.size()); }
  /// theta = [alpha; beta], length 2d.
  Vector stacked() const;
  static DemandParams from_stacked(const Vector& theta);
};

/// Per-round feature source. at_round must be a pure function of (t, stream
/// draws) so paired policies replaying the same labeled stream see the same
/// features.
class FeatureSampler {
 public:
  virtual ~FeatureSampler() = default;
  virtual int dim() const = 0;
  virtual FeatureVector at_round(int t, StreamRng& rng) const = 0;
};

/// I.i.d. entries uniform on [lo, hi]; consumes dim draws per round.
class UniformBoxSampler final : public FeatureSampler {
 public:
  UniformBoxSampler(int dim, double lo, double hi);
  int dim() const override { return dim_; }
  FeatureVector at_round(int t, StreamRng& rng) const override;

 private:
  int dim_;
  double lo_, hi_;
};

/// The same vector every round; consumes no draws.
class FixedVectorSampler final : public FeatureSampler {
 public:
  explicit FixedVectorSampler(Vector value);
  int dim() const override { return static_cast<int>(value_.size()); }
  FeatureVector at_round(int t, StreamRng& rng) const override;

 private:
  Vector value_;
};

/// Historical rows replayed in a fixed order; round t yields row order[t-1].
class HistoricalSampler final : public FeatureSampler {
 public:
  HistoricalSampler(std::vector<Vector> rows, std::vector<int> order);
  int dim() const override;
  FeatureVector at_round(int t, StreamRng& rng) const override;
  int rounds() const { return static_cast<int>(order_.size()); }

 private:
  std::vector<Vector> rows_;
  std::vector<int> order_;
};

/// One product's pricing problem: fixed parameters for T rounds.
struct EpochInstance {
  DemandParams theta;
  const FeatureSampler* feature_sampler = nullptr;
  int horizon = 0;       // T >= 2; round 1 is the initialization round
  double noise_sigma = 0.0;
  PriceBounds bounds;
};

/// The meta problem: N epochs whose parameters share an unknown Gaussian
/// prior N(prior_mean, prior_cov). Structural constants are declared, not
/// derived; validate_lambda0 spot-checks lambda0 by Monte Carlo.
struct MetaInstance {
  int n_epochs = 0;            // N
  int dim = 0;                 // d
  std::vector<int> horizons;   // per-epoch T; synthetic scenarios share one T
  PriceBounds bounds;
  double sigma = 0.0;          // demand noise standard deviation
  Vector prior_mean;           // theta*, length 2d
  Matrix prior_cov;            // Sigma*, 2d x 2d symmetric PD
  double x_max = 0.0;
  double lambda0 = 0.0;        // min eigenvalue of the feature second moment
  double lambda_bar = 0.0;     // max eigenvalue of Sigma*
  double lambda_lower = 0.0;   // min eigenvalue of Sigma*
  double kappa = 0.0;          // trace bound on Sigma*
  double s_bound = 0.0;        // norm bound on theta*

  /// Shared sampler for synthetic scenarios; per-epoch samplers for replay.
  std::shared_ptr<const FeatureSampler> shared_sampler;
  std::vector<std::shared_ptr<const FeatureSampler>> epoch_samplers;

  /// When non-empty, epoch parameters are these vectors instead of fresh
  /// draws from the prior (replay runs against fitted parameters).
  std::vector<Vector> fixed_thetas;

  const FeatureSampler& sampler_for(int epoch) const;
  int horizon_of(int epoch) const;
  int max_horizon() const;
  int min_horizon() const;
  void validate() const;
};

/// Constants of the exploration schedule and the noise proxy.
struct DerivedConstants {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
  double R = 0.0;
  /// p_min == p_max collapses c0 to zero; the meta policies refuse to run.
  bool degenerate = false;
};

DesignVector make_design_vector(const FeatureVector& x, double price);

double expected_demand(const DemandParams& theta, const FeatureVector& x,
                       double price);

/// expected_demand plus an externally supplied noise draw (unclamped).
double realize_demand(const DemandParams& theta, const FeatureVector& x,
                      double price, double noise_draw);

struct PriceChoice {
  double price = 0.0;
  double expected_revenue = 0.0;
};

/// Maximizes r(p) = p*<alpha,x> + p^2*<beta,x> over [p_min, p_max].
/// Concave case returns the clipped vertex; otherwise the better endpoint.
/// Ties break toward p_max.
PriceChoice optimal_price(const DemandParams& theta, const FeatureVector& x,
                          const PriceBounds& bounds);

/// The schedule constant c0: (1/3) * min over the unit quadrant of
/// (p_min*b - a)^2 + (p_max*b - a)^2 with a = cos(phi), b = sin(phi).
/// Minimized by a 10^4-point grid plus ternary refinement to 1e-10.
double minimize_c0(const PriceBounds& bounds);

DerivedConstants compute_derived_constants(const MetaInstance& meta);

/// Monte-Carlo check of the declared lambda0: 1e4 draws per sampler; throws
/// ConfigError if the empirical second-moment min eigenvalue < 0.9*lambda0.
void validate_lambda0(const MetaInstance& meta, const SeedPlan& seeds);

}  // namespace metaprice
