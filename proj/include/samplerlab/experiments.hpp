#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "samplerlab/analysis.hpp"
#include "samplerlab/samplers.hpp"

namespace samplerlab {

// Raised for malformed configs; message carries the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
  Levy,                 // Fig 1: trajectories + Levy exponent fits
  Sparsity,             // Fig 2 left/right: sparsity sweep incl. Levy-proposal control
  KlRace,               // Fig 2 middle: KL of mode visits vs time
  Spectrum,             // Fig 3: spectra on N(0,3)
  RatioSweep,           // Fig 4: width/step-size ratio sweep
  LevyProposalControl,  // Fig 2 right only: RwM with a Levy proposal
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Levy;

  // target
  int n_modes = 15;
  double mode_range = 9.0;   // r: mode means are uniform on [-r, r]^d
  int dim = 2;
  double sigma_target = 3.0;
  int start_mode = -1;       // chain start mode; -1 = mode nearest the origin

  // samplers
  std::vector<std::string> algorithms;  // subset of {DS, RwM, RwM-Levy, MC3}
  long n_samples = 1024;
  int n_chains = 8;
  double ladder_ratio = 2.0;
  std::vector<double> ladder;           // explicit override of the geometric ladder
  double proposal_sigma = 1.0;
  double levy_mu = 2.0;
  double levy_lmin = 0.0;               // 0 = auto: 0.1 * proposal_sigma
  double levy_lmax = 0.0;               // 0 = auto: 4 * r
  SwapPolicy swap_policy = SwapPolicy::RandomPairs;
  bool full_chains = false;

  // sweeps and schedules
  std::vector<double> r_values;         // sparsity sweep grid
  std::vector<double> ratio_values;     // sigma_target / sigma_proposal grid
  std::vector<long> checkpoints;        // KL race
  double sparsity_trend_max = 15.0;     // "low-to-moderate" sparsity cutoff

  // run management
  int replicates = 20;
  bool has_seed = false;
  std::uint64_t master_seed = 0;
  std::string output_dir;               // empty = do not persist files
  int jobs = 0;                         // 0 = hardware concurrency
  bool write_traces = true;

  static ExperimentConfig defaults_for(ExperimentKind kind);
  void validate() const;
  TemperatureLadder make_ladder() const;
};

// Parse a JSON config document; `expected` restricts the experiment kind.
ExperimentConfig config_from_json(const std::string& text,
                                  std::optional<ExperimentKind> expected = {});

struct ResultRow {
  int cell = 0;
  std::string algorithm;
  int replicate = 0;
  std::uint64_t seed = 0;
  std::vector<double> values;  // aligned with ResultSet::columns
};

struct ResultSet {
  std::string experiment;
  std::vector<std::string> columns;
  std::vector<ResultRow> rows;

  double value(const ResultRow& row, const std::string& column) const;
};

struct MetricSummary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  int n = 0;
};

struct CriterionResult {
  std::string id;
  std::string description;
  bool pass = false;
  std::string details;
};

struct Summary {
  std::string experiment;
  // cell -> algorithm -> metric -> summary
  std::map<int, std::map<std::string, std::map<std::string, MetricSummary>>> cells;
  std::vector<CriterionResult> criteria;

  const MetricSummary* find(int cell, const std::string& algorithm,
                            const std::string& metric) const;
};

// Fig 1: per replicate one patchy environment, DS/RwM/MC3, Levy fits.
ResultSet run_levy_experiment(const ExperimentConfig& config);
// Fig 2 left+right: exponent fits across the r grid, incl. RwM-Levy control.
ResultSet run_sparsity_sweep(const ExperimentConfig& config);
// Fig 2 middle: per replicate a shared environment, KL trajectories.
ResultSet run_kl_race(const ExperimentConfig& config);
// Fig 3: spectral fits on the unimodal Gaussian target.
ResultSet run_spectrum_experiment(const ExperimentConfig& config);
// Fig 4: spectral fits across the sigma_target/sigma_proposal grid.
ResultSet run_ratio_sweep(const ExperimentConfig& config);
// Dispatch on config.experiment.
ResultSet run_experiment(const ExperimentConfig& config);

// Medians/IQRs per (cell, algorithm, metric) plus acceptance-band checks.
Summary summarize(const ResultSet& results, const ExperimentConfig& config);

void write_results_csv(const ResultSet& results, std::ostream& os);
std::string summary_to_json(const Summary& summary, const ExperimentConfig& config);

// Write to <path>.tmp then rename, so partial files never appear.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace samplerlab
