#include <limits>
#include <stdexcept>
#include <cmath>
#include <complex>
#include <sstream>

#include "doctest.h"
#include "samplerlab/analysis.hpp"
#include "samplerlab/stats.hpp"

using namespace samplerlab;

namespace {

// Test-side truncated power-law sampler (inverse CDF written out here so the
// fit is checked against an independent generator).
std::vector<double> power_law_lengths(double mu, double lmin, double lmax, long n,
                                      std::uint64_t seed) {
  RngEngine rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double a = std::pow(lmin, 1.0 - mu);
  const double b = std::pow(lmax, 1.0 - mu);
  std::vector<double> out(n);
  for (long i = 0; i < n; ++i) {
    out[i] = std::pow(a + unit(rng) * (b - a), 1.0 / (1.0 - mu));
  }
  return out;
}

Trace trace_from_positions(std::vector<Point> positions) {
  Trace t;
  t.positions = std::move(positions);
  t.accept_counts = {0};
  t.temperatures = {1.0};
  return t;
}

std::vector<double> gaussian_noise(long n, std::uint64_t seed, double sd = 1.0) {
  RngEngine rng(seed);
  std::normal_distribution<double> normal(0.0, sd);
  std::vector<double> out(n);
  for (auto& v : out) v = normal(rng);
  return out;
}

}  // namespace

TEST_CASE("flight distances") {
  Trace t = trace_from_positions({{0.0, 0.0}, {3.0, 4.0}, {3.0, 4.0}});
  const Series d = flight_distances(t);
  REQUIRE(d.values.size() == 2);
  CHECK(d.values[0] == doctest::Approx(5.0));
  CHECK(d.values[1] == 0.0);  // rejected step keeps a zero in the series

  Trace longer = trace_from_positions(std::vector<Point>(100, Point{1.0}));
  CHECK(flight_distances(longer).values.size() == 99);

  Trace short_trace = trace_from_positions({{0.0}});
  CHECK_THROWS_AS(flight_distances(short_trace), std::invalid_argument);
}

TEST_CASE("power-law fit recovers synthetic exponents") {
  for (double mu : {1.5, 2.0, 2.5}) {
    Series s{power_law_lengths(mu, 0.1, 100.0, 100000, 4242)};
    const PowerLawFit fit = fit_power_law(s);
    CHECK(fit.mu_hat == doctest::Approx(mu).epsilon(0.05));
    CHECK(fit.n_cells >= 3);
    CHECK(fit.n_cells <= 10);
    CHECK(fit.r_squared > 0.9);
    CHECK(fit.n_zero_flights_excluded == 0);
  }
}

TEST_CASE("power-law fit is scale equivariant") {
  Series s{power_law_lengths(2.0, 0.1, 100.0, 20000, 9)};
  const PowerLawFit base = fit_power_law(s);
  for (double c : {0.01, 7.3, 1000.0}) {
    Series scaled;
    scaled.values.reserve(s.values.size());
    for (double v : s.values) scaled.values.push_back(c * v);
    const PowerLawFit fit = fit_power_law(scaled);
    CHECK(fit.mu_hat == doctest::Approx(base.mu_hat).epsilon(1e-9));
  }
}

TEST_CASE("power-law fit counts and excludes zero flights") {
  Series s{power_law_lengths(2.0, 0.1, 100.0, 5000, 77)};
  const PowerLawFit base = fit_power_law(s);
  Series with_zeros = s;
  for (int i = 0; i < 500; ++i) with_zeros.values.push_back(0.0);
  const PowerLawFit fit = fit_power_law(with_zeros);
  CHECK(fit.n_zero_flights_excluded == 500);
  CHECK(fit.mu_hat == doctest::Approx(base.mu_hat).epsilon(1e-12));
}

TEST_CASE("power-law fit rejects degenerate input") {
  Series constant{std::vector<double>(100, 2.5)};
  CHECK_THROWS_AS(fit_power_law(constant), FitError);
  Series zeros{std::vector<double>(100, 0.0)};
  CHECK_THROWS_AS(fit_power_law(zeros), FitError);
  Series tiny{{1.0, 2.0}};
  CHECK_THROWS_AS(fit_power_law(tiny), FitError);  // < 3 nonempty windows
}

TEST_CASE("periodogram of a pure Fourier tone") {
  const long n = 256;
  const long k0 = 16;
  Series s;
  s.values.resize(n);
  for (long t = 0; t < n; ++t) {
    s.values[t] = std::sin(2.0 * M_PI * k0 * t / n);
  }
  const auto pgram = periodogram(s);
  REQUIRE(static_cast<long>(pgram.size()) == n / 2);
  const double peak = pgram[k0 - 1].second;
  CHECK(pgram[k0 - 1].first == doctest::Approx(static_cast<double>(k0) / n));
  CHECK(peak == doctest::Approx(n / 4.0).epsilon(1e-9));
  for (long k = 1; k <= n / 2; ++k) {
    if (k == k0) continue;
    CHECK(pgram[k - 1].second <= peak * 1e-9);
  }
}

TEST_CASE("periodogram matches the direct DFT definition") {
  const long n = 64;
  Series s{gaussian_noise(n, 321)};
  const auto pgram = periodogram(s);

  double mean = 0.0;
  for (double v : s.values) mean += v;
  mean /= n;
  double parseval_sum = 0.0;
  double variance_sum = 0.0;
  for (double v : s.values) variance_sum += (v - mean) * (v - mean);

  for (long k = 1; k <= n / 2; ++k) {
    std::complex<double> x(0.0, 0.0);
    for (long t = 0; t < n; ++t) {
      const double angle = -2.0 * M_PI * k * t / n;
      x += (s.values[t] - mean) * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    const double expected = std::norm(x) / n;
    CHECK(pgram[k - 1].second == doctest::Approx(expected).epsilon(1e-9));
    parseval_sum += (k == n / 2 ? 1.0 : 2.0) * pgram[k - 1].second;
  }
  // Parseval: sum of |X_k|^2 over k=1..n-1 equals n * sum (x-mean)^2
  CHECK(parseval_sum == doctest::Approx(variance_sum).epsilon(1e-9));

  Series too_short{{1.0, 2.0, 3.0}};
  CHECK_THROWS_AS(periodogram(too_short), std::invalid_argument);
}

TEST_CASE("spectral slope of white and brown noise") {
  std::vector<double> white_slopes, brown_slopes;
  for (int seed = 0; seed < 20; ++seed) {
    const auto noise = gaussian_noise(1024, 1000 + seed);
    white_slopes.push_back(fit_spectral_slope(periodogram(Series{noise})).alpha_hat);
    std::vector<double> walk(noise.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < noise.size(); ++i) {
      acc += noise[i];
      walk[i] = acc;
    }
    brown_slopes.push_back(fit_spectral_slope(periodogram(Series{walk})).alpha_hat);
  }
  CHECK(std::fabs(median(white_slopes)) < 0.15);
  const double brown = median(brown_slopes);
  CHECK(brown > 1.7);
  CHECK(brown < 2.1);
}

TEST_CASE("spectral slope ignores constant offsets") {
  const auto noise = gaussian_noise(1024, 5);
  const double base = fit_spectral_slope(periodogram(Series{noise})).alpha_hat;
  std::vector<double> shifted(noise.size());
  for (std::size_t i = 0; i < noise.size(); ++i) shifted[i] = noise[i] + 1000.0;
  const double with_offset = fit_spectral_slope(periodogram(Series{shifted})).alpha_hat;
  CHECK(with_offset == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("spectral slope error paths") {
  const auto pgram = periodogram(Series{gaussian_noise(64, 8)});
  CHECK_THROWS_AS(fit_spectral_slope(pgram, 1), std::invalid_argument);
  std::vector<std::pair<double, double>> tiny(pgram.begin(), pgram.begin() + 3);
  CHECK_THROWS_AS(fit_spectral_slope(tiny, 10), std::invalid_argument);
  // identical frequencies leave no usable log-frequency range
  std::vector<std::pair<double, double>> flat = {{0.25, 1.0}, {0.25, 2.0}};
  CHECK_THROWS_AS(fit_spectral_slope(flat, 2), FitError);
}

TEST_CASE("autocorrelation") {
  SUBCASE("C(0) is one and |C(k)| <= 1") {
    Series s{gaussian_noise(512, 14)};
    const auto acf = autocorrelation(s, 50);
    CHECK(acf[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (double c : acf) {
      CHECK(std::fabs(c) <= 1.0 + 1e-12);
    }
  }
  SUBCASE("iid noise decorrelates") {
    Series s{gaussian_noise(10000, 99)};
    const auto acf = autocorrelation(s, 20);
    for (int k = 1; k <= 20; ++k) {
      CHECK(std::fabs(acf[k]) < 0.05);
    }
  }
  SUBCASE("AR(1) matches the closed form") {
    const double rho = 0.9;
    RngEngine rng(7);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> x(100000);
    double prev = 0.0;
    for (auto& v : x) {
      prev = rho * prev + normal(rng);
      v = prev;
    }
    const auto acf = autocorrelation(Series{x}, 10);
    for (int k = 0; k <= 10; ++k) {
      CHECK(std::fabs(acf[k] - std::pow(rho, k)) < 0.02);
    }
  }
  SUBCASE("errors") {
    Series constant{std::vector<double>(32, 1.0)};
    CHECK_THROWS_AS(autocorrelation(constant, 4), std::invalid_argument);
    Series s{gaussian_noise(16, 2)};
    CHECK_THROWS_AS(autocorrelation(s, 16), std::invalid_argument);
  }
}

TEST_CASE("kl mode divergence") {
  std::vector<Point> means;
  for (int i = 0; i < 15; ++i) means.push_back({10.0 * i});
  GaussianMixture mix(means, Covariance::identity(1), std::vector<double>(15, 1.0 / 15));

  SUBCASE("uniform visits give zero divergence") {
    std::vector<Point> positions;
    for (int cycle = 0; cycle < 10; ++cycle) {
      for (int k = 0; k < 15; ++k) positions.push_back({10.0 * k});
    }
    const Trace t = trace_from_positions(positions);
    const auto klt = kl_mode_divergence(t, mix, {150});
    REQUIRE(klt.values.size() == 1);
    CHECK(klt.values[0].first == 150);
    CHECK(klt.values[0].second == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("all visits in one mode give log N") {
    const Trace t = trace_from_positions(std::vector<Point>(64, Point{0.0}));
    const auto klt = kl_mode_divergence(t, mix, {64});
    CHECK(klt.values[0].second == doctest::Approx(std::log(15.0)).epsilon(1e-12));
  }
  SUBCASE("matches a brute-force histogram sum") {
    RngEngine rng(6);
    std::uniform_real_distribution<double> u(-5.0, 145.0);
    std::vector<Point> positions;
    for (int i = 0; i < 500; ++i) positions.push_back({u(rng)});
    const Trace t = trace_from_positions(positions);
    const std::vector<long> checkpoints = {10, 100, 500};
    const auto klt = kl_mode_divergence(t, mix, checkpoints);
    for (std::size_t ci = 0; ci < checkpoints.size(); ++ci) {
      const long upto = checkpoints[ci];
      std::vector<long> counts(15, 0);
      for (long i = 0; i < upto; ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 15; ++k) {
          const double d = std::fabs(positions[i][0] - 10.0 * k);
          if (d < best_d) {
            best_d = d;
            best = k;
          }
        }
        ++counts[best];
      }
      double expected = 0.0;
      for (long c : counts) {
        if (c == 0) continue;
        const double h = static_cast<double>(c) / upto;
        expected += h * std::log(h / (1.0 / 15));
      }
      CHECK(klt.values[ci].second == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  SUBCASE("KL is nonnegative and checkpoints validated") {
    const Trace t = trace_from_positions(std::vector<Point>(8, Point{3.0}));
    CHECK_THROWS_AS(kl_mode_divergence(t, mix, {0}), std::invalid_argument);
    CHECK_THROWS_AS(kl_mode_divergence(t, mix, {4, 4}), std::invalid_argument);
    CHECK_THROWS_AS(kl_mode_divergence(t, mix, {9}), std::invalid_argument);
  }
}

TEST_CASE("fit serialization") {
  Series s{power_law_lengths(2.0, 0.1, 100.0, 20000, 13)};
  const PowerLawFit fit = fit_power_law(s);
  const std::string j = power_law_fit_to_json(fit);
  CHECK(j.find("\"mu_hat\"") != std::string::npos);
  CHECK(j.find("\"excluded_zeros\"") != std::string::npos);

  const SpectralFit sf = fit_spectral_slope(periodogram(Series{gaussian_noise(256, 4)}));
  const std::string sj = spectral_fit_to_json(sf);
  CHECK(sj.find("\"alpha_hat\"") != std::string::npos);
  CHECK(sj.find("\"n_blocks\"") != std::string::npos);

  std::ostringstream os;
  write_plotdata_csv(fit.points, fit.cell_means, os);
  std::istringstream lines(os.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "logx,logy,cell_mean");
  long rows = 0;
  std::string line;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == static_cast<long>(fit.points.size()));
}
