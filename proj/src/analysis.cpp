#include "samplerlab/analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <ostream>

#include "json.hpp"

namespace samplerlab {

namespace {

// FFTW plan creation/destruction is not thread safe; execution on distinct
// plans is.
std::mutex fftw_planner_mutex;

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
};

OlsFit ols(const std::vector<CellMean>& cells) {
  const double n = static_cast<double>(cells.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& c : cells) {
    sx += c.log_x;
    sy += c.log_y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& c : cells) {
    const double dx = c.log_x - mx, dy = c.log_y - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw FitError("regression abscissae are degenerate");
  OlsFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy > 0.0) {
    const double ss_res = syy - fit.slope * sxy;
    fit.r_squared = std::max(0.0, 1.0 - ss_res / syy);
  }
  return fit;
}

// Bucket index on [lo, hi] split into n equal cells, clamped at the edges.
int cell_index(double v, double lo, double hi, int n) {
  const int idx = static_cast<int>(std::floor((v - lo) / (hi - lo) * n));
  return std::clamp(idx, 0, n - 1);
}

std::vector<CellMean> window_means(const std::vector<BinnedPoint>& points, int n_cells) {
  std::vector<double> sum_x(n_cells, 0.0), sum_y(n_cells, 0.0);
  std::vector<long> counts(n_cells, 0);
  for (const auto& p : points) {
    sum_x[p.cell] += p.log_x;
    sum_y[p.cell] += p.log_y;
    ++counts[p.cell];
  }
  std::vector<CellMean> means;
  for (int c = 0; c < n_cells; ++c) {
    if (counts[c] == 0) continue;
    means.push_back({sum_x[c] / counts[c], sum_y[c] / counts[c], c});
  }
  return means;
}

void check_finite(const Series& series, const char* what) {
  if (series.values.empty()) throw std::invalid_argument(std::string(what) + ": series is empty");
  for (double v : series.values) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": series has non-finite values");
  }
}

void append_csv_value(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  out += buf;
}

}  // namespace

Series flight_distances(const Trace& trace) {
  if (trace.length() < 2) throw std::invalid_argument("trace has fewer than 2 positions");
  Series out;
  out.values.reserve(trace.length() - 1);
  for (long t = 1; t < trace.length(); ++t) {
    double sq = 0.0;
    for (int i = 0; i < trace.dim(); ++i) {
      const double d = trace.positions[t][i] - trace.positions[t - 1][i];
      sq += d * d;
    }
    out.values.push_back(std::sqrt(sq));
  }
  return out;
}

PowerLawFit fit_power_law(const Series& distances, int n_windows, int n_bins) {
  if (n_windows < 2) throw std::invalid_argument("n_windows must be >= 2");
  if (n_bins < n_windows) throw std::invalid_argument("n_bins must be >= n_windows");
  check_finite(distances, "fit_power_law");

  PowerLawFit fit;
  std::vector<double> positive;
  positive.reserve(distances.values.size());
  for (double d : distances.values) {
    if (d > 0.0) {
      positive.push_back(d);
    } else {
      ++fit.n_zero_flights_excluded;
    }
  }
  if (positive.size() < 2) throw FitError("need at least 2 positive flight distances");
  const auto [lo_it, hi_it] = std::minmax_element(positive.begin(), positive.end());
  const double log_lo = std::log(*lo_it), log_hi = std::log(*hi_it);
  if (!(log_hi > log_lo)) throw FitError("all flight distances are equal");

  // Histogram on log-spaced bins, then density per unit length so the
  // regression slope estimates the density exponent.
  std::vector<long> counts(n_bins, 0);
  for (double d : positive) ++counts[cell_index(std::log(d), log_lo, log_hi, n_bins)];
  const double step = (log_hi - log_lo) / n_bins;
  const double total = static_cast<double>(positive.size());
  for (int b = 0; b < n_bins; ++b) {
    if (counts[b] == 0) continue;
    const double edge_lo = std::exp(log_lo + b * step);
    const double edge_hi = std::exp(log_lo + (b + 1) * step);
    const double center = log_lo + (b + 0.5) * step;
    const double density = counts[b] / (total * (edge_hi - edge_lo));
    fit.points.push_back({center, std::log(density),
                          cell_index(center, log_lo, log_hi, n_windows)});
  }

  fit.cell_means = window_means(fit.points, n_windows);
  fit.n_cells = static_cast<int>(fit.cell_means.size());
  if (fit.n_cells < 3) throw FitError("fewer than 3 nonempty windows");
  const OlsFit reg = ols(fit.cell_means);
  fit.mu_hat = -reg.slope;
  fit.intercept = reg.intercept;
  fit.r_squared = reg.r_squared;
  return fit;
}

std::vector<std::pair<double, double>> periodogram(const Series& series) {
  check_finite(series, "periodogram");
  const long n = static_cast<long>(series.values.size());
  if (n < 8) throw std::invalid_argument("periodogram needs a series of length >= 8");

  double mean = 0.0;
  for (double v : series.values) mean += v;
  mean /= static_cast<double>(n);

  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  for (long i = 0; i < n; ++i) in[i] = series.values[i] - mean;
  fftw_execute(plan);

  std::vector<std::pair<double, double>> pgram;
  pgram.reserve(n / 2);
  for (long k = 1; k <= n / 2; ++k) {
    const double re = out[k][0], im = out[k][1];
    pgram.emplace_back(static_cast<double>(k) / static_cast<double>(n),
                       (re * re + im * im) / static_cast<double>(n));
  }
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex);
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return pgram;
}

SpectralFit fit_spectral_slope(const std::vector<std::pair<double, double>>& pgram,
                               int n_blocks) {
  if (n_blocks < 2) throw std::invalid_argument("n_blocks must be >= 2");
  if (static_cast<int>(pgram.size()) < n_blocks) {
    throw std::invalid_argument("periodogram has fewer points than blocks");
  }

  SpectralFit fit;
  double log_f_lo = std::numeric_limits<double>::infinity();
  double log_f_hi = -std::numeric_limits<double>::infinity();
  for (const auto& [f, s] : pgram) {
    if (!(f > 0.0) || !(s > 0.0)) continue;  // DC and zero-power points carry no log info
    log_f_lo = std::min(log_f_lo, std::log(f));
    log_f_hi = std::max(log_f_hi, std::log(f));
  }
  if (!(log_f_hi > log_f_lo)) throw FitError("periodogram has no usable frequency range");

  for (const auto& [f, s] : pgram) {
    if (!(f > 0.0) || !(s > 0.0)) continue;
    const double lf = std::log(f);
    fit.points.push_back({lf, std::log(s), cell_index(lf, log_f_lo, log_f_hi, n_blocks)});
  }
  fit.cell_means = window_means(fit.points, n_blocks);
  fit.n_blocks = static_cast<int>(fit.cell_means.size());
  if (fit.n_blocks < 2) throw FitError("fewer than 2 nonempty blocks");

  const OlsFit reg = ols(fit.cell_means);
  fit.alpha_hat = -reg.slope;
  fit.intercept = reg.intercept;
  fit.r_squared = reg.r_squared;
  fit.f_min = std::exp(log_f_lo);
  fit.f_max = std::exp(log_f_hi);
  return fit;
}

std::vector<double> autocorrelation(const Series& series, int max_lag) {
  check_finite(series, "autocorrelation");
  const long n = static_cast<long>(series.values.size());
  if (max_lag < 0 || max_lag >= n) {
    throw std::invalid_argument("max_lag must be in [0, length)");
  }
  double mean = 0.0;
  for (double v : series.values) mean += v;
  mean /= static_cast<double>(n);
  double denom = 0.0;
  for (double v : series.values) denom += (v - mean) * (v - mean);
  if (!(denom > 0.0)) throw std::invalid_argument("autocorrelation of a constant series");

  std::vector<double> acf(max_lag + 1, 0.0);
  for (int k = 0; k <= max_lag; ++k) {
    double s = 0.0;
    for (long t = 0; t + k < n; ++t) {
      s += (series.values[t] - mean) * (series.values[t + k] - mean);
    }
    acf[k] = s / denom;
  }
  return acf;
}

KLTrajectory kl_mode_divergence(const Trace& trace, const GaussianMixture& target,
                                const std::vector<long>& checkpoints) {
  if (checkpoints.empty()) throw std::invalid_argument("checkpoints are empty");
  long prev = 0;
  for (long t : checkpoints) {
    if (t <= prev) throw std::invalid_argument("checkpoints must be strictly increasing");
    if (t > trace.length()) throw std::invalid_argument("checkpoint beyond trace length");
    prev = t;
  }

  const int n_modes = target.n_modes();
  const double log_n = std::log(static_cast<double>(n_modes));
  std::vector<long> counts(n_modes, 0);
  KLTrajectory out;
  out.values.reserve(checkpoints.size());
  std::size_t next = 0;
  for (long t = 0; t < trace.length() && next < checkpoints.size(); ++t) {
    ++counts[nearest_mode(target, trace.positions[t])];
    if (t + 1 == checkpoints[next]) {
      const double total = static_cast<double>(t + 1);
      double kl = 0.0;
      for (long c : counts) {
        if (c == 0) continue;  // 0 log 0 = 0
        const double h = static_cast<double>(c) / total;
        kl += h * (std::log(h) + log_n);
      }
      out.values.emplace_back(t + 1, kl);
      ++next;
    }
  }
  return out;
}

std::string power_law_fit_to_json(const PowerLawFit& fit) {
  nlohmann::json j;
  j["mu_hat"] = fit.mu_hat;
  j["intercept"] = fit.intercept;
  j["n_cells"] = fit.n_cells;
  j["r_squared"] = fit.r_squared;
  j["excluded_zeros"] = fit.n_zero_flights_excluded;
  return j.dump(2);
}

std::string spectral_fit_to_json(const SpectralFit& fit) {
  nlohmann::json j;
  j["alpha_hat"] = fit.alpha_hat;
  j["intercept"] = fit.intercept;
  j["n_blocks"] = fit.n_blocks;
  j["r_squared"] = fit.r_squared;
  j["f_min"] = fit.f_min;
  j["f_max"] = fit.f_max;
  return j.dump(2);
}

void write_plotdata_csv(const std::vector<BinnedPoint>& points,
                        const std::vector<CellMean>& cell_means,
                        std::ostream& os) {
  std::vector<double> mean_by_cell;
  for (const auto& m : cell_means) {
    if (m.cell >= static_cast<int>(mean_by_cell.size())) {
      mean_by_cell.resize(m.cell + 1, std::numeric_limits<double>::quiet_NaN());
    }
    mean_by_cell[m.cell] = m.log_y;
  }
  std::string out = "logx,logy,cell_mean\n";
  for (const auto& p : points) {
    append_csv_value(out, p.log_x);
    out += ',';
    append_csv_value(out, p.log_y);
    out += ',';
    append_csv_value(out, mean_by_cell[p.cell]);
    out += '\n';
  }
  os << out;
}

}  // namespace samplerlab
