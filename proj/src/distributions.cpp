#include "samplerlab/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

namespace samplerlab {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;  // log(2*pi)

void check_dim(const Point& x, int dim, const char* what) {
  if (static_cast<int>(x.size()) != dim) {
    throw std::invalid_argument(std::string(what) + ": point has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(dim));
  }
}

double squared_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

Covariance Covariance::identity(int dim) {
  if (dim < 1) throw std::invalid_argument("covariance dimension must be >= 1");
  Covariance c;
  c.dim_ = dim;
  c.identity_ = true;
  c.log_det_ = 0.0;
  c.matrix_.assign(dim, std::vector<double>(dim, 0.0));
  for (int i = 0; i < dim; ++i) c.matrix_[i][i] = 1.0;
  return c;
}

Covariance::Covariance(std::vector<std::vector<double>> matrix) {
  const int d = static_cast<int>(matrix.size());
  if (d < 1) throw std::invalid_argument("covariance matrix is empty");
  for (const auto& row : matrix) {
    if (static_cast<int>(row.size()) != d) {
      throw std::invalid_argument("covariance matrix is not square");
    }
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < i; ++j) {
      const double scale = std::max({1.0, std::fabs(matrix[i][j]), std::fabs(matrix[j][i])});
      if (std::fabs(matrix[i][j] - matrix[j][i]) > 1e-12 * scale) {
        throw std::invalid_argument("covariance matrix is not symmetric");
      }
    }
  }

  dim_ = d;
  matrix_ = std::move(matrix);
  identity_ = true;
  for (int i = 0; i < d && identity_; ++i) {
    for (int j = 0; j < d && identity_; ++j) {
      if (matrix_[i][j] != (i == j ? 1.0 : 0.0)) identity_ = false;
    }
  }

  // Lower Cholesky factor; failure means the matrix is not positive definite.
  chol_.assign(d, std::vector<double>(d, 0.0));
  log_det_ = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = matrix_[i][j];
      for (int k = 0; k < j; ++k) s -= chol_[i][k] * chol_[j][k];
      if (i == j) {
        if (!(s > 0.0) || !std::isfinite(s)) {
          throw std::invalid_argument("covariance matrix is not positive definite");
        }
        chol_[i][i] = std::sqrt(s);
        log_det_ += 2.0 * std::log(chol_[i][i]);
      } else {
        chol_[i][j] = s / chol_[j][j];
      }
    }
  }
}

double Covariance::mahalanobis_sq(const Point& x, const Point& mean) const {
  if (identity_) {
    return squared_distance(x, mean);
  }
  // Solve L y = (x - mean), then |y|^2.
  std::vector<double> y(dim_);
  double q = 0.0;
  for (int i = 0; i < dim_; ++i) {
    double s = x[i] - mean[i];
    for (int k = 0; k < i; ++k) s -= chol_[i][k] * y[k];
    y[i] = s / chol_[i][i];
    q += y[i] * y[i];
  }
  return q;
}

Point Covariance::correlate(const Point& z, const Point& mean) const {
  Point out(dim_);
  if (identity_) {
    for (int i = 0; i < dim_; ++i) out[i] = mean[i] + z[i];
    return out;
  }
  for (int i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (int k = 0; k <= i; ++k) s += chol_[i][k] * z[k];
    out[i] = mean[i] + s;
  }
  return out;
}

GaussianMixture::GaussianMixture(std::vector<Point> means, Covariance covariance,
                                 std::vector<double> weights)
    : means_(std::move(means)), covariance_(std::move(covariance)),
      weights_(std::move(weights)) {
  if (means_.empty()) throw std::invalid_argument("mixture needs at least one mode");
  if (weights_.size() != means_.size()) {
    throw std::invalid_argument("mixture weights/means size mismatch");
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("mixture weights must be nonnegative");
    }
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture weights must sum to 1");
  }
  const int d = covariance_.dim();
  for (const auto& m : means_) {
    check_dim(m, d, "mixture mean");
    for (double v : m) {
      if (!std::isfinite(v)) throw std::invalid_argument("mixture mean must be finite");
    }
  }
  log_weights_.resize(weights_.size());
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    log_weights_[k] = weights_[k] > 0.0 ? std::log(weights_[k])
                                        : -std::numeric_limits<double>::infinity();
  }
  log_norm_ = -0.5 * d * kLogTwoPi - 0.5 * covariance_.log_det();
}

UnimodalGaussian::UnimodalGaussian(Point mean, double sigma)
    : mean_(std::move(mean)), sigma_(sigma) {
  if (mean_.empty()) throw std::invalid_argument("gaussian mean is empty");
  for (double v : mean_) {
    if (!std::isfinite(v)) throw std::invalid_argument("gaussian mean must be finite");
  }
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) {
    throw std::invalid_argument("gaussian sigma must be positive");
  }
}

TargetDistribution::TargetDistribution(GaussianMixture mixture)
    : target_(std::move(mixture)) {
  dim_ = std::get<GaussianMixture>(target_).dim();
}

TargetDistribution::TargetDistribution(UnimodalGaussian gaussian)
    : target_(std::move(gaussian)) {
  dim_ = std::get<UnimodalGaussian>(target_).dim();
}

bool TargetDistribution::is_mixture() const {
  return std::holds_alternative<GaussianMixture>(target_);
}

const GaussianMixture& TargetDistribution::mixture() const {
  if (!is_mixture()) throw std::invalid_argument("target is not a mixture");
  return std::get<GaussianMixture>(target_);
}

const UnimodalGaussian& TargetDistribution::unimodal() const {
  if (is_mixture()) throw std::invalid_argument("target is not unimodal");
  return std::get<UnimodalGaussian>(target_);
}

double log_density(const TargetDistribution& target, const Point& x) {
  check_dim(x, target.dim(), "log_density");
  if (!target.is_mixture()) {
    const auto& g = target.unimodal();
    const int d = g.dim();
    const double q = squared_distance(x, g.mean()) / (g.sigma() * g.sigma());
    return -0.5 * d * kLogTwoPi - d * std::log(g.sigma()) - 0.5 * q;
  }
  const auto& mix = target.mixture();
  const auto& means = mix.means();
  const auto& lw = mix.log_weights();
  // log-sum-exp over component log densities
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(means.size());
  for (std::size_t k = 0; k < means.size(); ++k) {
    terms[k] = lw[k] + mix.log_norm() -
               0.5 * mix.covariance().mahalanobis_sq(x, means[k]);
    max_term = std::max(max_term, terms[k]);
  }
  if (!std::isfinite(max_term)) return max_term;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - max_term);
  return max_term + std::log(s);
}

double tempered_log_density(const TargetDistribution& target, const Point& x,
                            double temperature) {
  if (!(temperature >= 1.0)) {
    throw std::invalid_argument("temperature must be >= 1");
  }
  return log_density(target, x) / temperature;
}

Point sample_direct(const TargetDistribution& target, RngEngine& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  if (!target.is_mixture()) {
    const auto& g = target.unimodal();
    Point x(g.dim());
    for (int i = 0; i < g.dim(); ++i) x[i] = g.mean()[i] + g.sigma() * normal(rng);
    return x;
  }
  const auto& mix = target.mixture();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  int component = mix.n_modes() - 1;
  for (int k = 0; k < mix.n_modes(); ++k) {
    acc += mix.weights()[k];
    if (u < acc) {
      component = k;
      break;
    }
  }
  Point z(mix.dim());
  for (int i = 0; i < mix.dim(); ++i) z[i] = normal(rng);
  return mix.covariance().correlate(z, mix.means()[component]);
}

GaussianMixture generate_patchy_environment(int n_modes, double r, int d,
                                            RngEngine& rng) {
  if (n_modes < 1) throw std::invalid_argument("n_modes must be >= 1");
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  if (!(r > 0.0)) throw std::invalid_argument("range r must be positive");
  std::uniform_real_distribution<double> coord(-r, r);
  std::vector<Point> means(n_modes, Point(d));
  for (auto& m : means) {
    for (int i = 0; i < d; ++i) m[i] = coord(rng);
  }
  std::vector<double> weights(n_modes, 1.0 / n_modes);
  // Equal weights may not sum to exactly 1 in floating point; renormalize.
  double sum = 0.0;
  for (double w : weights) sum += w;
  for (double& w : weights) w /= sum;
  return GaussianMixture(std::move(means), Covariance::identity(d), std::move(weights));
}

int nearest_mode(const GaussianMixture& target, const Point& x) {
  check_dim(x, target.dim(), "nearest_mode");
  int best = 0;
  double best_sq = squared_distance(x, target.means()[0]);
  for (int k = 1; k < target.n_modes(); ++k) {
    const double sq = squared_distance(x, target.means()[k]);
    if (sq < best_sq) {
      best_sq = sq;
      best = k;
    }
  }
  return best;
}

double mean_mode_distance(const GaussianMixture& target) {
  const int n = target.n_modes();
  if (n < 2) throw std::invalid_argument("mean_mode_distance needs >= 2 modes");
  double sum = 0.0;
  long pairs = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      sum += std::sqrt(squared_distance(target.means()[i], target.means()[j]));
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

std::string environment_to_json(const GaussianMixture& target) {
  nlohmann::json j;
  j["dim"] = target.dim();
  j["means"] = target.means();
  if (target.covariance().is_identity()) {
    j["covariance"] = "identity";
  } else {
    j["covariance"] = target.covariance().matrix();
  }
  j["weights"] = target.weights();
  return j.dump(2);
}

GaussianMixture environment_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const int dim = j.at("dim").get<int>();
  auto means = j.at("means").get<std::vector<Point>>();
  auto weights = j.at("weights").get<std::vector<double>>();
  Covariance cov = Covariance::identity(dim);
  const auto& jc = j.at("covariance");
  if (!jc.is_string()) {
    cov = Covariance(jc.get<std::vector<std::vector<double>>>());
  } else if (jc.get<std::string>() != "identity") {
    throw std::invalid_argument("unknown covariance tag: " + jc.get<std::string>());
  }
  return GaussianMixture(std::move(means), std::move(cov), std::move(weights));
}

}  // namespace samplerlab
