#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "samplerlab/distributions.hpp"
#include "samplerlab/rng.hpp"

namespace samplerlab {

// Proposal distribution for the Metropolis kernels.
struct ProposalSpec {
  enum class Kind { Gaussian, Levy };

  Kind kind = Kind::Gaussian;
  double sigma = 1.0;       // Gaussian step scale, isotropic
  double levy_mu = 2.0;     // power-law exponent, 1 < mu <= 3
  double levy_lmin = 0.1;   // truncation bounds, 0 < lmin < lmax
  double levy_lmax = 36.0;

  static ProposalSpec gaussian(double sigma);
  static ProposalSpec levy(double mu, double lmin, double lmax);
  void validate() const;
};

// Ascending temperatures 1 = T_1 < T_2 < ... < T_M.
struct TemperatureLadder {
  std::vector<double> temps{1.0};

  static TemperatureLadder geometric(int n_chains, double ratio = 2.0);
  int size() const { return static_cast<int>(temps.size()); }
  void validate() const;
};

enum class SwapPolicy { RandomPairs, NeighborsOnly };

// Full per-chain history, recorded on request.
struct ChainRecord {
  std::vector<Point> positions;
  std::vector<std::uint8_t> accepted;
  std::vector<std::uint8_t> swapped;
};

// Run output. positions holds the cold chain; all_chains is populated only
// when requested.
struct Trace {
  std::vector<Point> positions;
  std::vector<std::uint8_t> accepted;   // cold-chain step accepted (index 0 is 0)
  std::vector<std::uint8_t> swapped;    // cold chain in an accepted swap that step
  std::vector<long> accept_counts;      // per chain
  long swap_attempts = 0;
  long swap_accepts = 0;
  std::vector<double> temperatures;
  std::vector<ChainRecord> all_chains;

  long length() const { return static_cast<long>(positions.size()); }
  int dim() const { return positions.empty() ? 0 : static_cast<int>(positions[0].size()); }
  int n_chains() const { return static_cast<int>(accept_counts.size()); }
};

struct StepResult {
  Point position;
  double log_density = 0.0;
  bool accepted = false;
};

// L i.i.d. draws from the target; accept/swap counters stay zero.
Trace run_ds(const TargetDistribution& target, long n_samples, RngEngine& rng);

// One Metropolis update of a chain at the given temperature. Draws the
// candidate first, then the acceptance uniform.
StepResult rwm_step(const TargetDistribution& target, const Point& x,
                    const ProposalSpec& proposal, double temperature,
                    RngEngine& rng);

// min{1, [pi(xp)/pi(x)]^{1/T}}, evaluated in log space.
double acceptance_probability(const TargetDistribution& target, const Point& x,
                              const Point& xp, double temperature);

// Jump of length drawn by inverse CDF from p(l) ~ l^{-mu} on [lmin, lmax],
// in a direction uniform on the unit sphere.
Point levy_proposal(const Point& x, double levy_mu, double levy_lmin,
                    double levy_lmax, RngEngine& rng);

// Random-walk Metropolis at T=1 started at x0; no burn-in, positions[0]=x0.
Trace run_rwm(const TargetDistribution& target, long n_samples, const Point& x0,
              const ProposalSpec& proposal, RngEngine& rng);

// Swap acceptance between chains at (xi, Ti) and (xj, Tj):
// min{1, exp[(1/Ti - 1/Tj) (log pi(xj) - log pi(xi))]}.
double swap_acceptance(const TargetDistribution& target, const Point& xi,
                       const Point& xj, double ti, double tj);

// Same, from precomputed log densities.
double swap_acceptance_from_logs(double log_pi_i, double log_pi_j, double ti,
                                 double tj);

struct Mc3Options {
  bool record_all_chains = false;
};

// Metropolis-coupled MCMC: each iteration updates all M chains with
// rwm_step at their temperatures, then attempts floor(M/2) state swaps.
// Only the cold chain is recorded in Trace.positions (post swap phase).
Trace run_mc3(const TargetDistribution& target, long n_samples, int n_chains,
              const TemperatureLadder& ladder, const ProposalSpec& proposal,
              SwapPolicy policy, const Point& x0, RngEngine& rng,
              const Mc3Options& options = {});

// CSV export with header t,chain,dim0,...,accepted,swapped. Cold chain by
// default; full_chains requires a trace recorded with record_all_chains.
void write_trace_csv(const Trace& trace, std::ostream& os,
                     bool full_chains = false);

}  // namespace samplerlab
