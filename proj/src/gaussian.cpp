#include "metaprice/gaussian.hpp"

#include <cmath>
#include <string>

namespace metaprice {

Matrix cholesky_lower(const Matrix& cov) {
  const Eigen::Index n = cov.rows();
  Matrix lower = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = cov(j, j) - lower.row(j).head(j).squaredNorm();
    if (!(pivot > 0.0)) {
      throw ConfigError("matrix not positive definite: pivot " +
                        std::to_string(j + 1) + " is " +
                        std::to_string(pivot));
    }
    pivot = std::sqrt(pivot);
    lower(j, j) = pivot;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      lower(i, j) =
          (cov(i, j) - lower.row(i).head(j).dot(lower.row(j).head(j))) / pivot;
    }
  }
  return lower;
}

Matrix validate_pd(const Matrix& cov) {
  if (cov.rows() != cov.cols() || cov.rows() == 0) {
    throw ConfigError("covariance must be square and nonempty");
  }
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    throw ConfigError("covariance asymmetric beyond tolerance: max deviation " +
                      std::to_string(asym));
  }
  return cholesky_lower(cov);
}

GaussianBelief::GaussianBelief(Vector mean, Matrix cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != mean_.size()) {
    throw ConfigError("belief mean and covariance dimensions disagree");
  }
  factor_ = validate_pd(cov_);
}

Vector GaussianBelief::sample_with(const Vector& standard_normals) const {
  if (standard_normals.size() != mean_.size()) {
    throw ConfigError("sample: need exactly dim standard normals");
  }
  return mean_ + factor_ * standard_normals;
}

Vector GaussianBelief::sample(StreamRng& rng) const {
  Vector z(mean_.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.next_normal();
  return sample_with(z);
}

GaussianBelief posterior_update(const GaussianBelief& belief,
                                const DesignVector& m, double demand,
                                double sigma) {
  if (!(sigma > 0.0)) {
    throw ConfigError("degenerate noise; posterior update undefined");
  }
  if (m.size() != belief.mean().size()) {
    throw ConfigError("posterior update: design vector dimension mismatch");
  }
  const Vector cm = belief.cov() * m;
  const double denom = sigma * sigma + m.dot(cm);
  const Vector gain = cm / denom;
  Vector mean = belief.mean() + gain * (demand - m.dot(belief.mean()));
  Matrix cov = belief.cov() - gain * cm.transpose();
  cov = 0.5 * (cov + cov.transpose().eval());
  return GaussianBelief(std::move(mean), std::move(cov));
}

}  // namespace metaprice
