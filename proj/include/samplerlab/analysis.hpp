#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "samplerlab/distributions.hpp"
#include "samplerlab/samplers.hpp"

namespace samplerlab {

// Raised when an estimator cannot produce a fit from the given data
// (degenerate distances, too few nonempty cells, ...).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Series {
  std::vector<double> values;
};

// One log-binned scatter point and the index of the window/block it fell in.
struct BinnedPoint {
  double log_x = 0.0;
  double log_y = 0.0;
  int cell = 0;
};

// Mean of the scatter points inside one window/block.
struct CellMean {
  double log_x = 0.0;
  double log_y = 0.0;
  int cell = 0;
};

// Levy exponent estimate, sign convention P(l) ~ l^{-mu_hat}.
struct PowerLawFit {
  double mu_hat = 0.0;
  double intercept = 0.0;
  int n_cells = 0;          // nonempty windows used in the regression
  double r_squared = 0.0;
  long n_zero_flights_excluded = 0;
  std::vector<BinnedPoint> points;      // log bin center vs log density
  std::vector<CellMean> cell_means;
};

// Spectral slope estimate, sign convention S(f) ~ f^{-alpha_hat}.
struct SpectralFit {
  double alpha_hat = 0.0;
  double intercept = 0.0;
  int n_blocks = 0;         // nonempty blocks used in the regression
  double r_squared = 0.0;
  double f_min = 0.0;       // frequency range used
  double f_max = 0.0;
  std::vector<BinnedPoint> points;      // log f vs log S
  std::vector<CellMean> cell_means;
};

struct KLTrajectory {
  std::vector<std::pair<long, double>> values;  // (t, kl)
};

// Euclidean distances between consecutive trace positions; zeros from
// rejected steps are kept (the power-law fit excludes and counts them).
Series flight_distances(const Trace& trace);

// Paper estimator for the Levy exponent: log-spaced histogram of the
// positive distances, bin densities to (log center, log density) points,
// n_windows equal-width windows on the log axis, OLS on the window means.
PowerLawFit fit_power_law(const Series& distances, int n_windows = 10,
                          int n_bins = 50);

// Mean-subtracted periodogram S(f_k) = |X_k|^2 / n at f_k = k/n for
// k = 1..floor(n/2); the DC term is excluded.
std::vector<std::pair<double, double>> periodogram(const Series& series);

// Block-averaged periodogram regression: n_blocks equal-width blocks on the
// log-frequency axis, OLS on the block means of (log f, log S).
SpectralFit fit_spectral_slope(const std::vector<std::pair<double, double>>& pgram,
                               int n_blocks = 10);

// Biased normalized autocorrelation, C(0) = 1.
std::vector<double> autocorrelation(const Series& series, int max_lag);

// KL divergence of the empirical nearest-mode visit frequencies from the
// uniform distribution over modes, evaluated at each checkpoint t using the
// first t positions. Uses the 0 log 0 = 0 convention.
KLTrajectory kl_mode_divergence(const Trace& trace, const GaussianMixture& target,
                                const std::vector<long>& checkpoints);

std::string power_law_fit_to_json(const PowerLawFit& fit);
std::string spectral_fit_to_json(const SpectralFit& fit);

// Scatter plus cell means as CSV rows `logx,logy,cell_mean`, where
// cell_mean repeats the mean log y of the point's window.
void write_plotdata_csv(const std::vector<BinnedPoint>& points,
                        const std::vector<CellMean>& cell_means,
                        std::ostream& os);

}  // namespace samplerlab
