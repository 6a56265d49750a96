#include "samplerlab/samplers.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace samplerlab {

namespace {

void check_start(const TargetDistribution& target, const Point& x0) {
  if (static_cast<int>(x0.size()) != target.dim()) {
    throw std::invalid_argument("start point dimension mismatch");
  }
  for (double v : x0) {
    if (!std::isfinite(v)) throw std::invalid_argument("start point must be finite");
  }
}

Point gaussian_candidate(const Point& x, double sigma, RngEngine& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Point cand(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) cand[i] = x[i] + sigma * normal(rng);
  return cand;
}

// One chain update with the current log density cached by the caller.
// Draw order is fixed: candidate first, then the acceptance uniform.
StepResult step_chain(const TargetDistribution& target, const Point& x,
                      double log_pi_x, const ProposalSpec& proposal,
                      double temperature, RngEngine& rng) {
  Point cand = proposal.kind == ProposalSpec::Kind::Gaussian
                   ? gaussian_candidate(x, proposal.sigma, rng)
                   : levy_proposal(x, proposal.levy_mu, proposal.levy_lmin,
                                   proposal.levy_lmax, rng);
  const double log_pi_cand = log_density(target, cand);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  const double log_ratio = (log_pi_cand - log_pi_x) / temperature;
  const bool accept = log_ratio >= 0.0 || u < std::exp(log_ratio);
  if (accept) return {std::move(cand), log_pi_cand, true};
  return {x, log_pi_x, false};
}

void format_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

void append_row(std::string& out, long t, int chain, const Point& x,
                int accepted, int swapped) {
  out += std::to_string(t);
  out += ',';
  out += std::to_string(chain);
  for (double v : x) {
    out += ',';
    format_double(out, v);
  }
  out += ',';
  out += std::to_string(accepted);
  out += ',';
  out += std::to_string(swapped);
  out += '\n';
}

}  // namespace

ProposalSpec ProposalSpec::gaussian(double sigma) {
  ProposalSpec p;
  p.kind = Kind::Gaussian;
  p.sigma = sigma;
  p.validate();
  return p;
}

ProposalSpec ProposalSpec::levy(double mu, double lmin, double lmax) {
  ProposalSpec p;
  p.kind = Kind::Levy;
  p.levy_mu = mu;
  p.levy_lmin = lmin;
  p.levy_lmax = lmax;
  p.validate();
  return p;
}

void ProposalSpec::validate() const {
  if (kind == Kind::Gaussian) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw std::invalid_argument("proposal sigma must be positive");
    }
    return;
  }
  if (!(levy_mu > 1.0 && levy_mu <= 3.0)) {
    throw std::invalid_argument("levy_mu must be in (1, 3]");
  }
  if (!(levy_lmin > 0.0 && levy_lmin < levy_lmax) || !std::isfinite(levy_lmax)) {
    throw std::invalid_argument("levy bounds must satisfy 0 < lmin < lmax");
  }
}

TemperatureLadder TemperatureLadder::geometric(int n_chains, double ratio) {
  if (n_chains < 1) throw std::invalid_argument("ladder needs >= 1 chain");
  if (!(ratio > 1.0)) throw std::invalid_argument("ladder ratio must be > 1");
  TemperatureLadder ladder;
  ladder.temps.resize(n_chains);
  double t = 1.0;
  for (int i = 0; i < n_chains; ++i) {
    ladder.temps[i] = t;
    t *= ratio;
  }
  return ladder;
}

void TemperatureLadder::validate() const {
  if (temps.empty()) throw std::invalid_argument("temperature ladder is empty");
  if (temps[0] != 1.0) throw std::invalid_argument("ladder must start at T=1");
  for (std::size_t i = 1; i < temps.size(); ++i) {
    if (!(temps[i] > temps[i - 1])) {
      throw std::invalid_argument("ladder temperatures must be strictly ascending");
    }
  }
}

Trace run_ds(const TargetDistribution& target, long n_samples, RngEngine& rng) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  Trace trace;
  trace.positions.reserve(n_samples);
  trace.accepted.assign(n_samples, 0);
  trace.swapped.assign(n_samples, 0);
  trace.accept_counts = {0};
  trace.temperatures = {1.0};
  for (long t = 0; t < n_samples; ++t) {
    trace.positions.push_back(sample_direct(target, rng));
  }
  return trace;
}

StepResult rwm_step(const TargetDistribution& target, const Point& x,
                    const ProposalSpec& proposal, double temperature,
                    RngEngine& rng) {
  if (!(temperature >= 1.0)) throw std::invalid_argument("temperature must be >= 1");
  proposal.validate();
  check_start(target, x);
  return step_chain(target, x, log_density(target, x), proposal, temperature, rng);
}

double acceptance_probability(const TargetDistribution& target, const Point& x,
                              const Point& xp, double temperature) {
  if (!(temperature >= 1.0)) throw std::invalid_argument("temperature must be >= 1");
  const double log_ratio =
      (log_density(target, xp) - log_density(target, x)) / temperature;
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

Point levy_proposal(const Point& x, double levy_mu, double levy_lmin,
                    double levy_lmax, RngEngine& rng) {
  ProposalSpec::levy(levy_mu, levy_lmin, levy_lmax);  // bounds check
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  // Inverse CDF of the truncated power law p(l) ~ l^{-mu} on [lmin, lmax].
  const double a = std::pow(levy_lmin, 1.0 - levy_mu);
  const double b = std::pow(levy_lmax, 1.0 - levy_mu);
  const double length = std::pow(a + u * (b - a), 1.0 / (1.0 - levy_mu));

  std::normal_distribution<double> normal(0.0, 1.0);
  Point dir(x.size());
  double norm_sq = 0.0;
  do {
    norm_sq = 0.0;
    for (std::size_t i = 0; i < dir.size(); ++i) {
      dir[i] = normal(rng);
      norm_sq += dir[i] * dir[i];
    }
  } while (norm_sq == 0.0);
  const double scale = length / std::sqrt(norm_sq);
  Point out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + scale * dir[i];
  return out;
}

Trace run_rwm(const TargetDistribution& target, long n_samples, const Point& x0,
              const ProposalSpec& proposal, RngEngine& rng) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  proposal.validate();
  check_start(target, x0);

  Trace trace;
  trace.positions.reserve(n_samples);
  trace.accepted.reserve(n_samples);
  trace.swapped.assign(n_samples, 0);
  trace.accept_counts = {0};
  trace.temperatures = {1.0};
  trace.positions.push_back(x0);
  trace.accepted.push_back(0);

  Point x = x0;
  double log_pi = log_density(target, x0);
  for (long t = 1; t < n_samples; ++t) {
    StepResult step = step_chain(target, x, log_pi, proposal, 1.0, rng);
    x = std::move(step.position);
    log_pi = step.log_density;
    trace.accept_counts[0] += step.accepted ? 1 : 0;
    trace.positions.push_back(x);
    trace.accepted.push_back(step.accepted ? 1 : 0);
  }
  return trace;
}

double swap_acceptance_from_logs(double log_pi_i, double log_pi_j, double ti,
                                 double tj) {
  const double exponent = (1.0 / ti - 1.0 / tj) * (log_pi_j - log_pi_i);
  return exponent >= 0.0 ? 1.0 : std::exp(exponent);
}

double swap_acceptance(const TargetDistribution& target, const Point& xi,
                       const Point& xj, double ti, double tj) {
  if (!(ti >= 1.0) || !(tj >= 1.0)) {
    throw std::invalid_argument("temperatures must be >= 1");
  }
  return swap_acceptance_from_logs(log_density(target, xi),
                                   log_density(target, xj), ti, tj);
}

Trace run_mc3(const TargetDistribution& target, long n_samples, int n_chains,
              const TemperatureLadder& ladder, const ProposalSpec& proposal,
              SwapPolicy policy, const Point& x0, RngEngine& rng,
              const Mc3Options& options) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (n_chains < 1) throw std::invalid_argument("n_chains must be >= 1");
  ladder.validate();
  if (ladder.size() != n_chains) {
    throw std::invalid_argument("temperature ladder size does not match n_chains");
  }
  proposal.validate();
  check_start(target, x0);

  const int m = n_chains;
  std::vector<Point> states(m, x0);
  std::vector<double> log_pis(m, log_density(target, x0));

  Trace trace;
  trace.positions.reserve(n_samples);
  trace.accepted.reserve(n_samples);
  trace.swapped.reserve(n_samples);
  trace.accept_counts.assign(m, 0);
  trace.temperatures = ladder.temps;
  trace.positions.push_back(x0);
  trace.accepted.push_back(0);
  trace.swapped.push_back(0);
  if (options.record_all_chains) {
    trace.all_chains.assign(m, ChainRecord{});
    for (auto& rec : trace.all_chains) {
      rec.positions.reserve(n_samples);
      rec.positions.push_back(x0);
      rec.accepted.push_back(0);
      rec.swapped.push_back(0);
    }
  }

  const int n_attempts = m / 2;
  std::vector<int> perm(m);
  std::vector<std::uint8_t> step_accepted(m, 0);
  std::vector<std::uint8_t> swapped_now(m, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (long t = 1; t < n_samples; ++t) {
    for (int k = 0; k < m; ++k) {
      StepResult step = step_chain(target, states[k], log_pis[k], proposal,
                                   ladder.temps[k], rng);
      states[k] = std::move(step.position);
      log_pis[k] = step.log_density;
      step_accepted[k] = step.accepted ? 1 : 0;
      trace.accept_counts[k] += step.accepted ? 1 : 0;
    }

    std::fill(swapped_now.begin(), swapped_now.end(), 0);
    if (n_attempts > 0) {
      if (policy == SwapPolicy::RandomPairs) {
        // Random partition of a shuffled chain list: a chain takes part in
        // at most one attempted swap per iteration.
        for (int k = 0; k < m; ++k) perm[k] = k;
        for (int k = m - 1; k >= 1; --k) {
          std::uniform_int_distribution<int> pick(0, k);
          std::swap(perm[k], perm[pick(rng)]);
        }
      }
      for (int a = 0; a < n_attempts; ++a) {
        int i, j;
        if (policy == SwapPolicy::RandomPairs) {
          i = perm[2 * a];
          j = perm[2 * a + 1];
        } else {
          std::uniform_int_distribution<int> pick(0, m - 2);
          i = pick(rng);
          j = i + 1;
        }
        const double u = unit(rng);
        const double accept = swap_acceptance_from_logs(
            log_pis[i], log_pis[j], ladder.temps[i], ladder.temps[j]);
        ++trace.swap_attempts;
        if (u < accept) {
          std::swap(states[i], states[j]);
          std::swap(log_pis[i], log_pis[j]);
          swapped_now[i] = swapped_now[j] = 1;
          ++trace.swap_accepts;
        }
      }
    }

    trace.positions.push_back(states[0]);
    trace.accepted.push_back(step_accepted[0]);
    trace.swapped.push_back(swapped_now[0]);
    if (options.record_all_chains) {
      for (int k = 0; k < m; ++k) {
        trace.all_chains[k].positions.push_back(states[k]);
        trace.all_chains[k].accepted.push_back(step_accepted[k]);
        trace.all_chains[k].swapped.push_back(swapped_now[k]);
      }
    }
  }
  return trace;
}

void write_trace_csv(const Trace& trace, std::ostream& os, bool full_chains) {
  if (full_chains && trace.all_chains.empty()) {
    throw std::invalid_argument("trace does not carry a full chain record");
  }
  std::string out = "t,chain";
  for (int i = 0; i < trace.dim(); ++i) out += ",dim" + std::to_string(i);
  out += ",accepted,swapped\n";
  if (full_chains) {
    for (long t = 0; t < trace.length(); ++t) {
      for (std::size_t c = 0; c < trace.all_chains.size(); ++c) {
        const auto& rec = trace.all_chains[c];
        append_row(out, t, static_cast<int>(c), rec.positions[t],
                   rec.accepted[t], rec.swapped[t]);
      }
    }
  } else {
    for (long t = 0; t < trace.length(); ++t) {
      append_row(out, t, 0, trace.positions[t], trace.accepted[t],
                 trace.swapped.empty() ? 0 : trace.swapped[t]);
    }
  }
  os << out;
}

}  // namespace samplerlab
