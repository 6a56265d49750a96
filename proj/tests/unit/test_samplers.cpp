#include <stdexcept>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "samplerlab/analysis.hpp"
#include "samplerlab/samplers.hpp"

using namespace samplerlab;

namespace {

TargetDistribution standard_normal_1d() {
  return TargetDistribution(UnimodalGaussian({0.0}, 1.0));
}

bool traces_equal(const Trace& a, const Trace& b) {
  return a.positions == b.positions;
}

}  // namespace

TEST_CASE("metropolis acceptance probabilities") {
  TargetDistribution target = standard_normal_1d();
  SUBCASE("uphill moves always accepted") {
    CHECK(acceptance_probability(target, {2.0}, {0.5}, 1.0) == 1.0);
    CHECK(acceptance_probability(target, {1.0}, {1.0}, 1.0) == 1.0);
  }
  SUBCASE("downhill move at T=1") {
    CHECK(acceptance_probability(target, {0.0}, {2.0}, 1.0) ==
          doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  }
  SUBCASE("tempered downhill move at T=4") {
    CHECK(acceptance_probability(target, {0.0}, {2.0}, 4.0) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  }
}

TEST_CASE("rwm_step accepts everything when the proposal is tiny") {
  TargetDistribution target = standard_normal_1d();
  RngEngine rng(17);
  Point x{0.2};
  int accepted = 0;
  for (int i = 0; i < 1000; ++i) {
    StepResult s = rwm_step(target, x, ProposalSpec::gaussian(1e-9), 1.0, rng);
    accepted += s.accepted ? 1 : 0;
    x = s.position;
  }
  CHECK(accepted > 990);
}

TEST_CASE("levy proposal") {
  SUBCASE("lengths stay inside the truncation bounds") {
    RngEngine rng(3);
    const Point x{1.0, -2.0};
    for (int i = 0; i < 10000; ++i) {
      const Point y = levy_proposal(x, 2.0, 0.1, 100.0, rng);
      double d = 0.0;
      for (int c = 0; c < 2; ++c) d += (y[c] - x[c]) * (y[c] - x[c]);
      d = std::sqrt(d);
      CHECK(d >= 0.1 * (1 - 1e-12));
      CHECK(d <= 100.0 * (1 + 1e-12));
    }
  }
  SUBCASE("exponent recovered by the power-law fit") {
    RngEngine rng(11);
    Series lengths;
    const Point origin{0.0, 0.0};
    for (int i = 0; i < 100000; ++i) {
      const Point y = levy_proposal(origin, 2.0, 0.1, 100.0, rng);
      lengths.values.push_back(std::hypot(y[0], y[1]));
    }
    const PowerLawFit fit = fit_power_law(lengths);
    CHECK(fit.mu_hat == doctest::Approx(2.0).epsilon(0.05));
  }
  SUBCASE("directions are symmetric") {
    RngEngine rng(29);
    const Point origin{0.0, 0.0};
    double sx = 0.0, sy = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const Point y = levy_proposal(origin, 2.0, 1.0, 1.0000001, rng);
      const double len = std::hypot(y[0], y[1]);
      sx += y[0] / len;
      sy += y[1] / len;
    }
    CHECK(std::fabs(sx / n) < 0.01);
    CHECK(std::fabs(sy / n) < 0.01);
  }
  SUBCASE("invalid bounds rejected") {
    RngEngine rng(1);
    CHECK_THROWS_AS(levy_proposal({0.0}, 2.0, 1.0, 0.5, rng), std::invalid_argument);
    CHECK_THROWS_AS(levy_proposal({0.0}, 0.9, 0.1, 10.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(levy_proposal({0.0}, 3.5, 0.1, 10.0, rng), std::invalid_argument);
  }
}

TEST_CASE("run_rwm basics") {
  TargetDistribution target(UnimodalGaussian({0.0}, 3.0));
  RngEngine rng(5);
  const Trace trace = run_rwm(target, 4096, {0.0}, ProposalSpec::gaussian(1.0), rng);
  CHECK(trace.length() == 4096);
  CHECK(trace.positions[0] == Point{0.0});
  CHECK(trace.accept_counts[0] <= 4096);
  CHECK(trace.accepted[0] == 0);

  SUBCASE("rejected steps repeat the previous position exactly") {
    int rejects = 0;
    for (long t = 1; t < trace.length(); ++t) {
      if (!trace.accepted[t]) {
        CHECK(trace.positions[t] == trace.positions[t - 1]);
        ++rejects;
      }
    }
    CHECK(rejects > 0);
  }
}

TEST_CASE("rwm reaches the stationary distribution on N(0,3)") {
  TargetDistribution target(UnimodalGaussian({0.0}, 3.0));
  RngEngine rng(2);
  const Trace trace = run_rwm(target, 100000, {0.0}, ProposalSpec::gaussian(1.0), rng);
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& p : trace.positions) {
    sum += p[0];
    sum_sq += p[0] * p[0];
  }
  const double mean = sum / trace.length();
  const double sd = std::sqrt(sum_sq / trace.length() - mean * mean);
  CHECK(std::fabs(mean) < 0.1);
  CHECK(std::fabs(sd - 3.0) < 0.15);
}

TEST_CASE("run_ds leaves the MCMC counters at zero") {
  TargetDistribution target(UnimodalGaussian({0.0}, 3.0));
  RngEngine rng(9);
  const Trace trace = run_ds(target, 512, rng);
  CHECK(trace.length() == 512);
  CHECK(trace.accept_counts == std::vector<long>{0});
  CHECK(trace.swap_attempts == 0);
  CHECK(trace.swap_accepts == 0);

  RngEngine again(9);
  CHECK(traces_equal(trace, run_ds(target, 512, again)));
}

TEST_CASE("swap acceptance") {
  TargetDistribution target = standard_normal_1d();
  SUBCASE("equal states swap surely") {
    CHECK(swap_acceptance(target, {1.3}, {1.3}, 1.0, 4.0) == 1.0);
  }
  SUBCASE("equal temperatures swap surely") {
    CHECK(swap_acceptance(target, {0.0}, {2.5}, 2.0, 2.0) == 1.0);
  }
  SUBCASE("direct evaluation") {
    CHECK(swap_acceptance(target, {0.0}, {2.0}, 1.0, 4.0) ==
          doctest::Approx(std::exp(-1.5)).epsilon(1e-12));
  }
  SUBCASE("one direction of every pair is certain") {
    RngEngine rng(23);
    std::normal_distribution<double> n(0.0, 2.0);
    std::uniform_real_distribution<double> temp(1.0, 64.0);
    for (int i = 0; i < 500; ++i) {
      const Point xi{n(rng)}, xj{n(rng)};
      const double ti = temp(rng), tj = temp(rng);
      const double a = swap_acceptance(target, xi, xj, ti, tj);
      const double b = swap_acceptance(target, xj, xi, ti, tj);
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
      CHECK(std::max(a, b) == 1.0);
    }
  }
  SUBCASE("extreme log densities do not overflow") {
    // |log pi| around 5e5 at x = 1000 for the standard normal
    CHECK(swap_acceptance(target, {0.0}, {1000.0}, 1.0, 2.0) == 0.0);
    CHECK(swap_acceptance(target, {1000.0}, {0.0}, 1.0, 2.0) == 1.0);
  }
}

TEST_CASE("mc3 with one chain reduces exactly to rwm") {
  RngEngine env_rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_int_distribution<int> dim_pick(1, 3);
    const int d = dim_pick(env_rng);
    std::uniform_int_distribution<int> mode_pick(1, 6);
    GaussianMixture mix =
        generate_patchy_environment(mode_pick(env_rng), 5.0, d, env_rng);
    TargetDistribution target(mix);
    const Point x0 = mix.means()[0];

    const std::uint64_t seed = 1000 + trial;
    RngEngine a(seed), b(seed);
    const Trace rwm = run_rwm(target, 256, x0, ProposalSpec::gaussian(1.0), a);
    const Trace mc3 = run_mc3(target, 256, 1, TemperatureLadder{},
                              ProposalSpec::gaussian(1.0), SwapPolicy::RandomPairs,
                              x0, b);
    REQUIRE(rwm.length() == mc3.length());
    CHECK(traces_equal(rwm, mc3));
    CHECK(rwm.accept_counts[0] == mc3.accept_counts[0]);
    CHECK(mc3.swap_attempts == 0);
  }
}

TEST_CASE("mc3 bookkeeping") {
  RngEngine env_rng(13);
  GaussianMixture mix = generate_patchy_environment(15, 9.0, 2, env_rng);
  TargetDistribution target(mix);
  const Point x0 = mix.means()[0];
  RngEngine rng(4);
  Mc3Options options;
  options.record_all_chains = true;
  const Trace trace = run_mc3(target, 512, 8, TemperatureLadder::geometric(8),
                              ProposalSpec::gaussian(1.0), SwapPolicy::RandomPairs,
                              x0, rng, options);
  CHECK(trace.length() == 512);
  CHECK(trace.n_chains() == 8);
  CHECK(trace.swap_attempts == 511 * 4);
  CHECK(trace.swap_accepts <= trace.swap_attempts);
  CHECK(trace.swap_accepts > 0);
  CHECK(trace.temperatures.back() == doctest::Approx(128.0));
  REQUIRE(trace.all_chains.size() == 8);
  for (const auto& rec : trace.all_chains) {
    CHECK(static_cast<long>(rec.positions.size()) == trace.length());
  }
  CHECK(trace.all_chains[0].positions == trace.positions);

  SUBCASE("fixed seed reproduces the trace bitwise") {
    RngEngine again(4);
    const Trace repeat = run_mc3(target, 512, 8, TemperatureLadder::geometric(8),
                                 ProposalSpec::gaussian(1.0), SwapPolicy::RandomPairs,
                                 x0, again, options);
    CHECK(traces_equal(trace, repeat));
    CHECK(trace.swap_accepts == repeat.swap_accepts);
  }

  SUBCASE("neighbors-only policy also runs") {
    RngEngine rng2(4);
    const Trace neighbors = run_mc3(target, 512, 8, TemperatureLadder::geometric(8),
                                    ProposalSpec::gaussian(1.0),
                                    SwapPolicy::NeighborsOnly, x0, rng2);
    CHECK(neighbors.length() == 512);
    CHECK(neighbors.swap_attempts == 511 * 4);
  }
}

TEST_CASE("temperature ladders") {
  const TemperatureLadder ladder = TemperatureLadder::geometric(8, 2.0);
  CHECK(ladder.temps == std::vector<double>{1, 2, 4, 8, 16, 32, 64, 128});
  CHECK(TemperatureLadder::geometric(2).temps == std::vector<double>{1, 2});

  TemperatureLadder bad;
  bad.temps = {2.0, 4.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.temps = {1.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  TargetDistribution target = standard_normal_1d();
  RngEngine rng(1);
  CHECK_THROWS_AS(run_mc3(target, 16, 3, TemperatureLadder::geometric(2),
                          ProposalSpec::gaussian(1.0), SwapPolicy::RandomPairs,
                          {0.0}, rng),
                  std::invalid_argument);
}

TEST_CASE("invalid sampler arguments") {
  TargetDistribution target = standard_normal_1d();
  RngEngine rng(1);
  CHECK_THROWS_AS(run_ds(target, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(run_rwm(target, 0, {0.0}, ProposalSpec::gaussian(1.0), rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(ProposalSpec::gaussian(0.0), std::invalid_argument);
  CHECK_THROWS_AS(ProposalSpec::levy(1.0, 0.1, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(run_rwm(target, 8, {0.0, 0.0}, ProposalSpec::gaussian(1.0), rng),
                  std::invalid_argument);
}

TEST_CASE("trace CSV export") {
  TargetDistribution target(UnimodalGaussian({0.0, 0.0}, 1.0));
  RngEngine rng(6);
  Mc3Options options;
  options.record_all_chains = true;
  const Trace trace = run_mc3(target, 16, 2, TemperatureLadder::geometric(2),
                              ProposalSpec::gaussian(1.0), SwapPolicy::RandomPairs,
                              {0.0, 0.0}, rng, options);
  std::ostringstream cold;
  write_trace_csv(trace, cold);
  std::istringstream lines(cold.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "t,chain,dim0,dim1,accepted,swapped");
  long rows = 0;
  std::string line;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 16);

  std::ostringstream full;
  write_trace_csv(trace, full, true);
  std::istringstream full_lines(full.str());
  std::getline(full_lines, header);
  rows = 0;
  while (std::getline(full_lines, line)) ++rows;
  CHECK(rows == 32);

  const Trace cold_only = run_ds(target, 4, rng);
  std::ostringstream os;
  CHECK_THROWS_AS(write_trace_csv(cold_only, os, true), std::invalid_argument);
}
