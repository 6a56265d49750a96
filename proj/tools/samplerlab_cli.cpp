// samplerlab: config-driven runs of the sampling experiments plus one-off
// fits of external series.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "samplerlab/analysis.hpp"
#include "samplerlab/experiments.hpp"

namespace {

using namespace samplerlab;

struct CliOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<long> samples;
  std::optional<int> chains;
  std::optional<int> replicates;
  std::optional<int> jobs;
  std::string out;
  std::string swap_policy;
  bool full_chains = false;
};

void add_common_options(CLI::App* cmd, CliOverrides& o, bool with_config = true) {
  if (with_config) {
    cmd->add_option("--config", o.config_path, "JSON experiment config")
        ->check(CLI::ExistingFile);
  }
  cmd->add_option("--seed", o.seed, "master seed (required here or in the config)");
  cmd->add_option("--samples", o.samples, "samples per run (L)");
  cmd->add_option("--chains", o.chains, "parallel chains for MC3 (M)");
  cmd->add_option("--replicates", o.replicates, "replicates per cell");
  cmd->add_option("--jobs", o.jobs, "worker threads (default: available cores)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--swap-policy", o.swap_policy, "MC3 swap pairing")
      ->check(CLI::IsMember({"random", "neighbors"}));
  cmd->add_flag("--full-chains", o.full_chains, "persist all M chains in trace files");
}

std::string output_root() {
  const char* env = std::getenv("SAMPLER_LAB_OUT");
  return env && *env ? std::string(env) : std::string("runs");
}

ExperimentConfig build_config(ExperimentKind kind, const CliOverrides& o,
                              const std::string& default_out) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) {
    std::ifstream is(o.config_path);
    if (!is) throw ConfigError("cannot read config file: " + o.config_path);
    std::ostringstream buffer;
    buffer << is.rdbuf();
    cfg = config_from_json(buffer.str(), kind);
  } else {
    cfg = ExperimentConfig::defaults_for(kind);
  }
  if (o.seed) {
    cfg.master_seed = *o.seed;
    cfg.has_seed = true;
  }
  if (o.samples) cfg.n_samples = *o.samples;
  if (o.chains) cfg.n_chains = *o.chains;
  if (o.replicates) cfg.replicates = *o.replicates;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (!o.swap_policy.empty()) {
    cfg.swap_policy = o.swap_policy == "neighbors" ? SwapPolicy::NeighborsOnly
                                                   : SwapPolicy::RandomPairs;
  }
  if (o.full_chains) cfg.full_chains = true;
  if (!o.out.empty()) {
    cfg.output_dir = o.out;
  } else if (cfg.output_dir.empty()) {
    cfg.output_dir = default_out;
  }
  cfg.validate();
  return cfg;
}

int print_summary(const Summary& summary, const std::string& out_dir) {
  for (const auto& c : summary.criteria) {
    std::cout << "[" << c.id << "] " << (c.pass ? "PASS" : "FAIL") << " "
              << c.description << " (" << c.details << ")\n";
  }
  std::cout << "results written to " << out_dir << "\n";
  return 0;
}

int run_one(ExperimentKind kind, const CliOverrides& o) {
  const ExperimentConfig cfg =
      build_config(kind, o, output_root() + "/" + to_string(kind));
  const ResultSet results = run_experiment(cfg);
  return print_summary(summarize(results, cfg), cfg.output_dir);
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_buf{};
  localtime_r(&now, &tm_buf);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm_buf);
  return buf;
}

int run_all(const CliOverrides& o) {
  const std::string root =
      !o.out.empty() ? o.out : output_root() + "/all-" + timestamp();
  const ExperimentKind kinds[] = {ExperimentKind::Levy, ExperimentKind::Sparsity,
                                  ExperimentKind::KlRace, ExperimentKind::Spectrum,
                                  ExperimentKind::RatioSweep};
  bool all_pass = true;
  std::string report = "{\n  \"criteria\": [\n";
  bool first = true;
  for (ExperimentKind kind : kinds) {
    CliOverrides per = o;
    per.out = root + "/" + to_string(kind);
    const ExperimentConfig cfg = build_config(kind, per, per.out);
    std::cout << "== " << to_string(kind) << "\n";
    const ResultSet results = run_experiment(cfg);
    const Summary summary = summarize(results, cfg);
    print_summary(summary, cfg.output_dir);
    for (const auto& c : summary.criteria) {
      all_pass = all_pass && c.pass;
      if (!first) report += ",\n";
      first = false;
      report += "    {\"id\": \"" + c.id + "\", \"experiment\": \"" + to_string(kind) +
                "\", \"pass\": " + (c.pass ? "true" : "false") + "}";
    }
  }
  report += std::string("\n  ],\n  \"pass\": ") + (all_pass ? "true" : "false") + "\n}\n";
  write_file_atomic(root + "/report.json", report);
  std::cout << (all_pass ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL") << "\n";
  std::cout << "combined report written to " << root << "/report.json\n";
  return 0;
}

// One value per line; a trailing CSV column also works. Non-numeric lines
// (headers) are skipped.
Series read_series(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read input file: " + path);
  Series series;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find_last_of(',');
    const std::string token = comma == std::string::npos ? line : line.substr(comma + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(token, &used);
      if (used > 0) series.values.push_back(v);
    } catch (const std::exception&) {
      continue;
    }
  }
  if (series.values.empty()) {
    throw std::runtime_error("no numeric values found in " + path);
  }
  return series;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sampling-algorithms laboratory: DS, RwM and MC3 with Levy-flight "
               "and 1/f spectral analyses"};
  app.require_subcommand(1);

  CliOverrides overrides;
  struct {
    std::string input;
    int windows = 10;
    int bins = 50;
    int blocks = 10;
  } fit_opts;

  auto* levy = app.add_subcommand("levy", "patchy-environment Levy flight experiment");
  auto* sparsity = app.add_subcommand("sparsity", "sparsity sweep incl. Levy-proposal control");
  auto* kl = app.add_subcommand("kl", "KL mode-coverage race");
  auto* spectrum = app.add_subcommand("spectrum", "1/f spectra on the unimodal Gaussian");
  auto* ratio = app.add_subcommand("ratio", "width/step-size ratio sweep");
  auto* all = app.add_subcommand("all", "run the five experiments with a combined report");
  for (auto* cmd : {levy, sparsity, kl, spectrum, ratio}) {
    add_common_options(cmd, overrides);
  }
  add_common_options(all, overrides, /*with_config=*/false);

  auto* fit = app.add_subcommand("fit", "fit a power-law exponent to a distance series");
  fit->add_option("--input", fit_opts.input, "CSV series of flight distances")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--windows", fit_opts.windows, "regression windows on the log axis");
  fit->add_option("--bins", fit_opts.bins, "log-spaced histogram bins");

  auto* analyze = app.add_subcommand("analyze", "fit a spectral slope to a time series");
  analyze->add_option("--input", fit_opts.input, "CSV time series")
      ->required()
      ->check(CLI::ExistingFile);
  analyze->add_option("--blocks", fit_opts.blocks, "periodogram blocks on the log axis");

  CLI11_PARSE(app, argc, argv);

  try {
    if (levy->parsed()) return run_one(ExperimentKind::Levy, overrides);
    if (sparsity->parsed()) return run_one(ExperimentKind::Sparsity, overrides);
    if (kl->parsed()) return run_one(ExperimentKind::KlRace, overrides);
    if (spectrum->parsed()) return run_one(ExperimentKind::Spectrum, overrides);
    if (ratio->parsed()) return run_one(ExperimentKind::RatioSweep, overrides);
    if (all->parsed()) return run_all(overrides);
    if (fit->parsed()) {
      const PowerLawFit f =
          fit_power_law(read_series(fit_opts.input), fit_opts.windows, fit_opts.bins);
      std::cout << power_law_fit_to_json(f) << "\n";
      return 0;
    }
    if (analyze->parsed()) {
      const SpectralFit f =
          fit_spectral_slope(periodogram(read_series(fit_opts.input)), fit_opts.blocks);
      std::cout << spectral_fit_to_json(f) << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
