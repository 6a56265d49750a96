#pragma once

#include <string>
#include <variant>
#include <vector>

#include "samplerlab/rng.hpp"

namespace samplerlab {

// A d-dimensional sampler state.
using Point = std::vector<double>;

// Symmetric positive-definite covariance with a cached Cholesky factor.
// All paper experiments use the identity; general SPD matrices are
// supported behind the same interface.
class Covariance {
 public:
  static Covariance identity(int dim);
  explicit Covariance(std::vector<std::vector<double>> matrix);

  int dim() const { return dim_; }
  bool is_identity() const { return identity_; }
  double log_det() const { return log_det_; }
  const std::vector<std::vector<double>>& matrix() const { return matrix_; }

  // (x - mean)' C^{-1} (x - mean)
  double mahalanobis_sq(const Point& x, const Point& mean) const;
  // mean + L z with L the lower Cholesky factor of C
  Point correlate(const Point& z, const Point& mean) const;

 private:
  Covariance() = default;
  int dim_ = 0;
  bool identity_ = true;
  double log_det_ = 0.0;
  std::vector<std::vector<double>> matrix_;
  std::vector<std::vector<double>> chol_;
};

// Equal-covariance Gaussian mixture; the "patchy environment" target.
class GaussianMixture {
 public:
  GaussianMixture(std::vector<Point> means, Covariance covariance,
                  std::vector<double> weights);

  int dim() const { return covariance_.dim(); }
  int n_modes() const { return static_cast<int>(means_.size()); }
  const std::vector<Point>& means() const { return means_; }
  const Covariance& covariance() const { return covariance_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& log_weights() const { return log_weights_; }
  // log of the shared normalization constant: -d/2 log(2 pi) - 1/2 log|C|
  double log_norm() const { return log_norm_; }

 private:
  std::vector<Point> means_;
  Covariance covariance_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  double log_norm_ = 0.0;
};

// Isotropic Gaussian N(mean, sigma^2 I); sigma is the per-axis sd.
class UnimodalGaussian {
 public:
  UnimodalGaussian(Point mean, double sigma);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Point& mean() const { return mean_; }
  double sigma() const { return sigma_; }

 private:
  Point mean_;
  double sigma_ = 1.0;
};

// The probability landscape a sampler runs on.
class TargetDistribution {
 public:
  TargetDistribution(GaussianMixture mixture);        // NOLINT(google-explicit-constructor)
  TargetDistribution(UnimodalGaussian gaussian);      // NOLINT(google-explicit-constructor)

  int dim() const { return dim_; }
  bool is_mixture() const;
  const GaussianMixture& mixture() const;     // throws if not a mixture
  const UnimodalGaussian& unimodal() const;   // throws if not unimodal

 private:
  std::variant<GaussianMixture, UnimodalGaussian> target_;
  int dim_ = 0;
};

// Normalized log density of the target at x. Mixtures are evaluated with a
// log-sum-exp over the component log densities so that points far from all
// modes do not underflow.
double log_density(const TargetDistribution& target, const Point& x);

// log pi(x) / T for a temperature T >= 1.
double tempered_log_density(const TargetDistribution& target, const Point& x,
                            double temperature);

// Exact ancestral sample: pick a component by weight, then draw from it.
Point sample_direct(const TargetDistribution& target, RngEngine& rng);

// n_modes means i.i.d. uniform on [-r, r]^d, identity covariance, equal
// weights.
GaussianMixture generate_patchy_environment(int n_modes, double r, int d,
                                            RngEngine& rng);

// Index of the mean closest to x in Euclidean distance; ties break to the
// lowest index.
int nearest_mode(const GaussianMixture& target, const Point& x);

// Mean Euclidean distance over all unordered mode pairs ("spatial
// sparsity"); requires at least two modes.
double mean_mode_distance(const GaussianMixture& target);

// JSON persistence of an environment:
//   {"dim": d, "means": [[...], ...], "covariance": "identity" | [[...]],
//    "weights": [...]}
std::string environment_to_json(const GaussianMixture& target);
GaussianMixture environment_from_json(const std::string& text);

}  // namespace samplerlab
