#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "samplerlab/analysis.hpp"
#include "samplerlab/distributions.hpp"
#include "samplerlab/experiments.hpp"
#include "samplerlab/samplers.hpp"

namespace py = pybind11;
using namespace samplerlab;

namespace {

ProposalSpec proposal_from_args(const std::string& kind, double sigma, double levy_mu,
                                double levy_lmin, double levy_lmax) {
  if (kind == "gaussian") return ProposalSpec::gaussian(sigma);
  if (kind == "levy") return ProposalSpec::levy(levy_mu, levy_lmin, levy_lmax);
  throw std::invalid_argument("proposal kind must be gaussian or levy");
}

SwapPolicy policy_from_string(const std::string& name) {
  if (name == "random" || name == "random_pairs") return SwapPolicy::RandomPairs;
  if (name == "neighbors" || name == "neighbors_only") return SwapPolicy::NeighborsOnly;
  throw std::invalid_argument("swap policy must be random or neighbors");
}

void bind_distributions(py::module_& m) {
  py::class_<Covariance>(m, "Covariance")
      .def_static("identity", &Covariance::identity, py::arg("dim"))
      .def(py::init<std::vector<std::vector<double>>>(), py::arg("matrix"))
      .def_property_readonly("dim", &Covariance::dim)
      .def_property_readonly("is_identity", &Covariance::is_identity)
      .def("matrix", &Covariance::matrix);

  py::class_<GaussianMixture>(m, "GaussianMixture")
      .def(py::init<std::vector<Point>, Covariance, std::vector<double>>(),
           py::arg("means"), py::arg("covariance"), py::arg("weights"))
      .def_property_readonly("dim", &GaussianMixture::dim)
      .def_property_readonly("n_modes", &GaussianMixture::n_modes)
      .def_property_readonly("means", &GaussianMixture::means)
      .def_property_readonly("weights", &GaussianMixture::weights);

  py::class_<UnimodalGaussian>(m, "UnimodalGaussian")
      .def(py::init<Point, double>(), py::arg("mean"), py::arg("sigma"))
      .def_property_readonly("dim", &UnimodalGaussian::dim)
      .def_property_readonly("mean", &UnimodalGaussian::mean)
      .def_property_readonly("sigma", &UnimodalGaussian::sigma);

  py::class_<TargetDistribution>(m, "TargetDistribution")
      .def(py::init<GaussianMixture>(), py::arg("mixture"))
      .def(py::init<UnimodalGaussian>(), py::arg("gaussian"))
      .def_property_readonly("dim", &TargetDistribution::dim)
      .def_property_readonly("is_mixture", &TargetDistribution::is_mixture)
      .def("mixture", &TargetDistribution::mixture,
           py::return_value_policy::reference_internal);

  m.def("log_density", &log_density, py::arg("target"), py::arg("x"));
  m.def("tempered_log_density", &tempered_log_density, py::arg("target"),
        py::arg("x"), py::arg("temperature"));
  m.def(
      "sample_direct",
      [](const TargetDistribution& target, std::uint64_t seed, long n) {
        RngEngine rng(seed);
        std::vector<Point> out;
        out.reserve(n);
        for (long i = 0; i < n; ++i) out.push_back(sample_direct(target, rng));
        return out;
      },
      py::arg("target"), py::arg("seed"), py::arg("n") = 1);
  m.def(
      "generate_patchy_environment",
      [](int n_modes, double r, int d, std::uint64_t seed) {
        RngEngine rng(seed);
        return generate_patchy_environment(n_modes, r, d, rng);
      },
      py::arg("n_modes"), py::arg("r"), py::arg("d"), py::arg("seed"));
  m.def("nearest_mode", &nearest_mode, py::arg("target"), py::arg("x"));
  m.def("mean_mode_distance", &mean_mode_distance, py::arg("target"));
  m.def("environment_to_json", &environment_to_json, py::arg("target"));
  m.def("environment_from_json", &environment_from_json, py::arg("text"));
}

void bind_samplers(py::module_& m) {
  py::class_<Trace>(m, "Trace")
      .def_property_readonly("positions",
                             [](const Trace& t) { return t.positions; })
      .def_property_readonly("accepted",
                             [](const Trace& t) {
                               return std::vector<int>(t.accepted.begin(), t.accepted.end());
                             })
      .def_property_readonly("swapped",
                             [](const Trace& t) {
                               return std::vector<int>(t.swapped.begin(), t.swapped.end());
                             })
      .def_property_readonly("accept_counts",
                             [](const Trace& t) { return t.accept_counts; })
      .def_readonly("swap_attempts", &Trace::swap_attempts)
      .def_readonly("swap_accepts", &Trace::swap_accepts)
      .def_property_readonly("temperatures",
                             [](const Trace& t) { return t.temperatures; })
      .def("__len__", [](const Trace& t) { return t.length(); });

  m.def(
      "run_ds",
      [](const TargetDistribution& target, long n_samples, std::uint64_t seed) {
        RngEngine rng(seed);
        return run_ds(target, n_samples, rng);
      },
      py::arg("target"), py::arg("n_samples"), py::arg("seed"));
  m.def(
      "run_rwm",
      [](const TargetDistribution& target, long n_samples, const Point& x0,
         std::uint64_t seed, const std::string& proposal, double sigma,
         double levy_mu, double levy_lmin, double levy_lmax) {
        RngEngine rng(seed);
        return run_rwm(target, n_samples, x0,
                       proposal_from_args(proposal, sigma, levy_mu, levy_lmin, levy_lmax),
                       rng);
      },
      py::arg("target"), py::arg("n_samples"), py::arg("x0"), py::arg("seed"),
      py::arg("proposal") = "gaussian", py::arg("sigma") = 1.0,
      py::arg("levy_mu") = 2.0, py::arg("levy_lmin") = 0.1,
      py::arg("levy_lmax") = 36.0);
  m.def(
      "run_mc3",
      [](const TargetDistribution& target, long n_samples, int n_chains,
         const Point& x0, std::uint64_t seed, double sigma, double ladder_ratio,
         std::vector<double> ladder, const std::string& swap_policy,
         bool record_all_chains) {
        RngEngine rng(seed);
        TemperatureLadder temps;
        if (!ladder.empty()) {
          temps.temps = std::move(ladder);
        } else {
          temps = TemperatureLadder::geometric(n_chains, ladder_ratio);
        }
        Mc3Options options;
        options.record_all_chains = record_all_chains;
        return run_mc3(target, n_samples, n_chains, temps,
                       ProposalSpec::gaussian(sigma), policy_from_string(swap_policy),
                       x0, rng, options);
      },
      py::arg("target"), py::arg("n_samples"), py::arg("n_chains"), py::arg("x0"),
      py::arg("seed"), py::arg("sigma") = 1.0, py::arg("ladder_ratio") = 2.0,
      py::arg("ladder") = std::vector<double>{},
      py::arg("swap_policy") = "random", py::arg("record_all_chains") = false);
  m.def(
      "levy_proposal",
      [](const Point& x, double mu, double lmin, double lmax, std::uint64_t seed) {
        RngEngine rng(seed);
        return levy_proposal(x, mu, lmin, lmax, rng);
      },
      py::arg("x"), py::arg("levy_mu"), py::arg("levy_lmin"), py::arg("levy_lmax"),
      py::arg("seed"));
  m.def("swap_acceptance", &swap_acceptance, py::arg("target"), py::arg("xi"),
        py::arg("xj"), py::arg("ti"), py::arg("tj"));
  m.def("acceptance_probability", &acceptance_probability, py::arg("target"),
        py::arg("x"), py::arg("xp"), py::arg("temperature"));
}

void bind_analysis(py::module_& m) {
  py::class_<PowerLawFit>(m, "PowerLawFit")
      .def_readonly("mu_hat", &PowerLawFit::mu_hat)
      .def_readonly("intercept", &PowerLawFit::intercept)
      .def_readonly("n_cells", &PowerLawFit::n_cells)
      .def_readonly("r_squared", &PowerLawFit::r_squared)
      .def_readonly("n_zero_flights_excluded", &PowerLawFit::n_zero_flights_excluded)
      .def("to_json", &power_law_fit_to_json);

  py::class_<SpectralFit>(m, "SpectralFit")
      .def_readonly("alpha_hat", &SpectralFit::alpha_hat)
      .def_readonly("intercept", &SpectralFit::intercept)
      .def_readonly("n_blocks", &SpectralFit::n_blocks)
      .def_readonly("r_squared", &SpectralFit::r_squared)
      .def_readonly("f_min", &SpectralFit::f_min)
      .def_readonly("f_max", &SpectralFit::f_max)
      .def("to_json", &spectral_fit_to_json);

  m.def("flight_distances",
        [](const Trace& trace) { return flight_distances(trace).values; },
        py::arg("trace"));
  m.def(
      "fit_power_law",
      [](const std::vector<double>& distances, int n_windows, int n_bins) {
        return fit_power_law(Series{distances}, n_windows, n_bins);
      },
      py::arg("distances"), py::arg("n_windows") = 10, py::arg("n_bins") = 50);
  m.def(
      "periodogram",
      [](const std::vector<double>& values) { return periodogram(Series{values}); },
      py::arg("series"));
  m.def("fit_spectral_slope", &fit_spectral_slope, py::arg("periodogram"),
        py::arg("n_blocks") = 10);
  m.def(
      "autocorrelation",
      [](const std::vector<double>& values, int max_lag) {
        return autocorrelation(Series{values}, max_lag);
      },
      py::arg("series"), py::arg("max_lag"));
  m.def(
      "kl_mode_divergence",
      [](const Trace& trace, const GaussianMixture& target,
         const std::vector<long>& checkpoints) {
        return kl_mode_divergence(trace, target, checkpoints).values;
      },
      py::arg("trace"), py::arg("target"), py::arg("checkpoints"));
}

void bind_experiments(py::module_& m) {
  m.def(
      "run_experiment_json",
      [](const std::string& config_json) {
        const ExperimentConfig cfg = config_from_json(config_json);
        const ResultSet results = run_experiment(cfg);
        return summary_to_json(summarize(results, cfg), cfg);
      },
      py::arg("config_json"),
      "Run an experiment from a JSON config string; returns the summary JSON.");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "sampling-algorithms laboratory: DS, RwM and MC3 with Levy-flight "
            "and 1/f spectral analyses";
  m.attr("__version__") = "0.1.0";
  py::register_exception<FitError>(m, "FitError");
  py::register_exception<ConfigError>(m, "ConfigError");
  bind_distributions(m);
  bind_samplers(m);
  bind_analysis(m);
  bind_experiments(m);
}
