#pragma once

#include "metaprice/core_model.hpp"

namespace metaprice {

/// Lower-triangular Cholesky factor of a symmetric PD matrix. Throws
/// ConfigError naming the first non-positive pivot, or the asymmetry, so
/// callers can report which coordinate went bad.
Matrix cholesky_lower(const Matrix& cov);

/// Validates symmetry (1e-10 relative) and positive definiteness; returns the
/// factor on success.
Matrix validate_pd(const Matrix& cov);

/// Immutable multivariate normal belief with a cached Cholesky factor.
/// Updates return new beliefs; values are safe to share across workers.
class GaussianBelief {
 public:
  GaussianBelief() = default;
  GaussianBelief(Vector mean, Matrix cov);

  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  const Matrix& factor() const { return factor_; }
  int dim() const { return static_cast<int>(mean_.size()); }

  /// mean + factor * z for externally supplied standard normals.
  Vector sample_with(const Vector& standard_normals) const;
  /// Draws dim() standard normals from the stream and pushes them forward.
  Vector sample(StreamRng& rng) const;

 private:
  Vector mean_;
  Matrix cov_;
  Matrix factor_;
};

/// Conjugate normal-linear update for one observation demand = <theta, m> +
/// noise with known noise standard deviation sigma > 0. Sherman-Morrison
/// form, then symmetrization and refactorization.
GaussianBelief posterior_update(const GaussianBelief& belief,
                                const DesignVector& m, double demand,
                                double sigma);

}  // namespace metaprice
