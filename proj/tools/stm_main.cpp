// Command-line front end: simulate / logprob / ode / fit / bootstrap on
// declarative model files. Exit codes: 0 success, 2 user or input error,
// 3 numerical non-convergence.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stm/batch.hpp"
#include "stm/ctmc.hpp"
#include "stm/dsl.hpp"
#include "stm/dtmc.hpp"
#include "stm/infer.hpp"
#include "stm/io.hpp"
#include "stm/ode.hpp"

namespace fs = std::filesystem;
using namespace stm;

namespace {

constexpr int kExitUserError = 2;
constexpr int kExitNotConverged = 3;

struct CommonOptions {
  std::string model_path;
  std::vector<std::string> set_values;  // name=value
  std::string out_dir;
};

Parameters parse_overrides(const std::vector<std::string>& pairs) {
  Parameters overrides;
  for (const auto& pair : pairs) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos)
      throw Error("--set expects name=value, got '" + pair + "'");
    try {
      overrides[pair.substr(0, eq)] = std::stod(pair.substr(eq + 1));
    } catch (const std::exception&) {
      throw Error("--set '" + pair + "': value is not a number");
    }
  }
  return overrides;
}

fs::path output_dir(const CommonOptions& common) {
  if (!common.out_dir.empty()) return common.out_dir;
  if (const char* env = std::getenv("STM_OUTPUT_DIR")) return env;
  return ".";
}

fs::path prepare_output(const CommonOptions& common, const std::string& name) {
  const fs::path dir = output_dir(common);
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

/// Output grid for state reconstruction: the declared step grid when
/// time_delta is set, otherwise unit spacing over num_steps intervals.
std::vector<double> state_grid(const ModelSpec& spec) {
  const double delta = spec.time_delta > 0.0 ? spec.time_delta : 1.0;
  std::vector<double> times;
  for (std::size_t k = 0; k <= spec.num_steps; ++k)
    times.push_back(spec.initial_step + static_cast<double>(k) * delta);
  return times;
}

EventTensor read_tensor_file(const fs::path& path, const ModelSpec& spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open events file " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  in.seekg(0);
  if (std::string(magic, 4) == "STE1") return io::read_event_tensor_binary(in);
  return io::read_event_tensor_csv(in, spec.num_steps, spec.num_units(),
                                   spec.transitions.size());
}

EventList read_list_file(const fs::path& path, const ModelSpec& spec) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open events file " + path.string());
  return io::read_event_list_csv(in, spec.num_steps);
}

double log_prob_of_file(const ModelSpec& spec, const fs::path& path) {
  if (spec.integrator == Integrator::discrete)
    return dtmc_log_prob(spec, read_tensor_file(path, spec));
  return ctmc_log_prob(spec, read_list_file(path, spec));
}

// ---------------------------------------------------------------------------

int cmd_simulate(const CommonOptions& common, std::uint64_t seed,
                 std::size_t replicates, bool states) {
  const auto file = dsl::load_model_file(common.model_path);
  const auto spec = dsl::build_spec(file, parse_overrides(common.set_values));
  if (spec.integrator == Integrator::ode)
    throw Error("model integrator is 'ode'; use the ode subcommand");
  if (replicates < 1) throw Error("--replicates must be >= 1");

  const auto times = state_grid(spec);
  std::vector<std::vector<StateMatrix>> replicate_states;

  auto write_events = [&](const std::string& name, std::size_t r,
                          std::uint64_t replicate_seed) {
    std::ostringstream out;
    if (spec.integrator == Integrator::discrete) {
      const auto events = dtmc_sample(spec, replicate_seed);
      io::write_event_tensor_csv(out, events);
      if (states) replicate_states.push_back(dtmc_compute_state(spec, events));
    } else {
      const auto events = ctmc_sample(spec, replicate_seed);
      io::write_event_list_csv(out, events);
      if (states)
        replicate_states.push_back(ctmc_compute_state(spec, events, times));
    }
    write_file(prepare_output(common, name), out.str());
    (void)r;
  };

  if (replicates == 1) {
    write_events("events.csv", 0, seed);
  } else {
    for (std::size_t r = 0; r < replicates; ++r) {
      std::ostringstream name;
      name << "events_r" << r << ".csv";
      write_events(name.str(), r, RngStream(seed).child(r).state());
    }
  }

  if (states) {
    for (std::size_t r = 0; r < replicate_states.size(); ++r) {
      std::ostringstream out, name;
      io::write_states_csv(out, times, replicate_states[r],
                           spec.compartments.names);
      if (replicates == 1)
        name << "states.csv";
      else
        name << "states_r" << r << ".csv";
      write_file(prepare_output(common, name.str()), out.str());
    }
    if (replicates > 1) {
      std::ostringstream out;
      io::write_replicate_summary_csv(out, times, replicate_states,
                                      spec.compartments.names);
      write_file(prepare_output(common, "summary.csv"), out.str());
    }
  }
  std::cout << "wrote " << replicates << " replicate(s) to "
            << output_dir(common).string() << "\n";
  return 0;
}

int cmd_logprob(const CommonOptions& common,
                const std::vector<std::string>& event_paths) {
  const auto file = dsl::load_model_file(common.model_path);
  const auto spec = dsl::build_spec(file, parse_overrides(common.set_values));
  double total = 0.0;
  for (const auto& path : event_paths) total += log_prob_of_file(spec, path);
  std::cout << io::format_double(total) << "\n";
  std::ostringstream json;
  json << "{\n  \"log_prob\": " << io::format_double(total) << "\n}\n";
  write_file(prepare_output(common, "logprob.json"), json.str());
  return 0;
}

int cmd_ode(const CommonOptions& common, bool adaptive) {
  const auto file = dsl::load_model_file(common.model_path);
  auto spec = dsl::build_spec(file, parse_overrides(common.set_values));
  // any model can be solved deterministically on its step grid
  spec.integrator = Integrator::ode;
  if (spec.time_delta <= 0.0) spec.time_delta = 1.0;
  OdeOptions options;
  options.adaptive = adaptive;
  const auto solution = ode_solve(spec, options);
  std::ostringstream out;
  io::write_states_csv(out, solution.times, solution.states,
                       spec.compartments.names);
  write_file(prepare_output(common, "solution.csv"), out.str());
  std::cout << "wrote " << solution.times.size() << " time points to "
            << (output_dir(common) / "solution.csv").string() << "\n";
  return 0;
}

struct FitConfig {
  std::vector<std::string> fit_params;  // empty = all declared
  double tolerance = 1e-4;
  int max_iterations = 5000;
  bool no_log_transform = false;
  bool allow_nonconverged = false;
};

FitResult run_fit(const dsl::ModelFile& file, const Parameters& overrides,
                  const std::vector<EventTensor>& tensors,
                  const std::vector<EventList>& lists, const FitConfig& config) {
  std::vector<std::string> labels = config.fit_params;
  if (labels.empty())
    for (const auto& [name, value] : file.parameters) labels.push_back(name);

  Parameters initial = dsl::default_parameters(file);
  for (const auto& [name, value] : overrides) {
    if (!initial.count(name))
      throw Error("override references undeclared parameter '" + name + "'");
    initial[name] = value;
  }
  for (const auto& label : labels)
    if (!initial.count(label))
      throw Error("--fit-param references undeclared parameter '" + label +
                  "'");

  auto nll = [&](const Parameters& params) {
    const auto spec = dsl::build_spec(file, params);
    double total = 0.0;
    for (const auto& events : tensors) total += dtmc_log_prob(spec, events);
    for (const auto& events : lists) total += ctmc_log_prob(spec, events);
    return -total;
  };

  FitOptions options;
  options.optimizer.func_tolerance = config.tolerance;
  options.optimizer.max_iterations = config.max_iterations;
  if (!config.no_log_transform) {
    for (const auto& label : labels)
      if (!(initial.at(label) > 0.0))
        throw Error("parameter '" + label +
                    "' must start positive (or pass --no-log-transform)");
    options.log_transform.assign(labels.size(), true);
  }
  return fit_mle(nll, labels, initial, options);
}

int cmd_fit(const CommonOptions& common,
            const std::vector<std::string>& data_paths,
            const FitConfig& config) {
  const auto file = dsl::load_model_file(common.model_path);
  const auto overrides = parse_overrides(common.set_values);
  const auto spec = dsl::build_spec(file, overrides);
  if (spec.integrator == Integrator::ode)
    throw Error("fit requires a stochastic integrator (continuous/discrete)");
  if (data_paths.empty()) throw Error("fit: no data files given");

  std::vector<EventTensor> tensors;
  std::vector<EventList> lists;
  for (const auto& path : data_paths) {
    if (spec.integrator == Integrator::discrete)
      tensors.push_back(read_tensor_file(path, spec));
    else
      lists.push_back(read_list_file(path, spec));
  }

  const auto fit = run_fit(file, overrides, tensors, lists, config);
  write_file(prepare_output(common, "fit.json"), io::fit_result_to_json(fit));
  std::cout << io::fit_result_to_json(fit) << "\n";
  if (!fit.converged && !config.allow_nonconverged) {
    std::cerr << "fit did not converge within " << config.max_iterations
              << " iterations (pass --allow-nonconverged to accept)\n";
    return kExitNotConverged;
  }
  return 0;
}

int cmd_bootstrap(const CommonOptions& common, const std::string& fit_path,
                  std::size_t n_replicates, std::size_t datasets,
                  std::uint64_t seed, const FitConfig& config) {
  const auto file = dsl::load_model_file(common.model_path);
  const auto overrides = parse_overrides(common.set_values);

  std::ifstream in(fit_path);
  if (!in) throw Error("cannot open fit file " + fit_path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const FitResult fitted = io::fit_result_from_json(buffer.str());
  if (fitted.labels.empty()) throw Error("fit file has no parameter labels");

  Parameters fitted_params = overrides;
  for (std::size_t j = 0; j < fitted.labels.size(); ++j)
    fitted_params[fitted.labels[j]] = fitted.position[j];
  const auto generative = dsl::build_spec(file, fitted_params);

  FitConfig replicate_config = config;
  replicate_config.fit_params = fitted.labels;

  auto replicate_fit = [&](RngStream stream) {
    Parameters replicate_overrides = overrides;
    std::vector<EventTensor> tensors;
    std::vector<EventList> lists;
    for (std::size_t d = 0; d < datasets; ++d) {
      const std::uint64_t replicate_seed = stream.child(d).state();
      if (generative.integrator == Integrator::discrete)
        tensors.push_back(dtmc_sample(generative, replicate_seed));
      else
        lists.push_back(ctmc_sample(generative, replicate_seed));
    }
    return run_fit(file, replicate_overrides, tensors, lists,
                   replicate_config);
  };

  const auto result = bootstrap(fitted, replicate_fit, n_replicates, seed);

  std::ostringstream out;
  io::write_bootstrap_csv(out, result, fitted.labels);
  write_file(prepare_output(common, "bootstrap.csv"), out.str());

  // Percentile summary over converged replicates only.
  std::ostringstream summary;
  summary << "parameter,mean,p025,p50,p975\n";
  for (std::size_t j = 0; j < fitted.labels.size(); ++j) {
    std::vector<double> values;
    for (std::size_t r = 0; r < n_replicates; ++r)
      if (result.converged[r]) values.push_back(result.samples(r, j));
    std::sort(values.begin(), values.end());
    auto quantile = [&](double p) {
      if (values.empty()) return 0.0;
      const double idx = p * static_cast<double>(values.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(idx);
      const std::size_t hi = std::min(lo + 1, values.size() - 1);
      return values[lo] + (idx - lo) * (values[hi] - values[lo]);
    };
    double mean = 0.0;
    for (double v : values) mean += v;
    if (!values.empty()) mean /= static_cast<double>(values.size());
    summary << fitted.labels[j] << "," << io::format_double(mean) << ","
            << io::format_double(quantile(0.025)) << ","
            << io::format_double(quantile(0.5)) << ","
            << io::format_double(quantile(0.975)) << "\n";
  }
  write_file(prepare_output(common, "bootstrap_summary.csv"), summary.str());

  std::size_t n_converged = 0;
  for (bool c : result.converged) n_converged += c;
  std::cout << n_converged << "/" << n_replicates
            << " bootstrap replicates converged\n";
  if (n_converged < n_replicates && !config.allow_nonconverged)
    return kExitNotConverged;
  return 0;
}

const char* kModelGrammar = R"(Model file grammar (sections in any order):

  compartments: S I R              # ordered labels
  transitions:
    S -> I : beta * I / sumstate   # one 'SRC -> DST : expression' per line
    I -> R : gamma
  parameters:
    beta = 0.5                     # name = default value
  arrays:
    C = [[0, 1], [1, 0]]           # matrix literal, or: C = file:path.csv
  initial_state: [[99, 1, 0]]      # one row per stratum
  integrator:
    kind = continuous              # continuous | discrete | ode
    num_steps = 20
    time_delta = 1                 # required for discrete/ode
    initial_step = 0
    substeps = 10                  # ode only

Expressions: + - * / unary-, parentheses, exp log pow sum matvec,
compartment names (per-stratum vectors), parameter names, arrays, t,
sumstate (per-stratum population). '#' starts a comment.
Output directory: --out, else $STM_OUTPUT_DIR, else the current directory.)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov state-transition epidemic models: simulate, evaluate "
               "likelihoods, solve ODEs, fit and bootstrap.\n"};
  app.footer(kModelGrammar);
  app.require_subcommand(1);

  CommonOptions common;
  std::uint64_t seed = 0;
  std::size_t replicates = 1;
  bool states = false;
  bool adaptive = false;
  std::vector<std::string> data_paths;
  std::string fit_path;
  std::size_t datasets = 1;
  FitConfig fit_config;

  auto add_common = [&](CLI::App* sub, bool with_seed) {
    sub->add_option("model", common.model_path, "model file")->required();
    sub->add_option("--set", common.set_values,
                    "parameter override, name=value (repeatable)");
    sub->add_option("--out", common.out_dir, "output directory");
    if (with_seed) sub->add_option("--seed", seed, "RNG seed");
  };

  auto* simulate = app.add_subcommand("simulate", "sample trajectories");
  add_common(simulate, true);
  simulate->add_option("--replicates", replicates, "number of replicates");
  simulate->add_flag("--states", states, "also write reconstructed states");

  auto* logprob =
      app.add_subcommand("logprob", "log-probability of event files");
  add_common(logprob, false);
  logprob->add_option("events", data_paths, "event file(s)")->required();

  auto* ode = app.add_subcommand("ode", "deterministic solution");
  add_common(ode, false);
  ode->add_flag("--adaptive", adaptive, "adaptive Dormand-Prince driver");

  auto add_fit_options = [&](CLI::App* sub) {
    sub->add_option("--fit-param", fit_config.fit_params,
                    "parameter to fit (repeatable; default: all)");
    sub->add_option("--tolerance", fit_config.tolerance,
                    "optimizer function tolerance");
    sub->add_option("--max-iterations", fit_config.max_iterations,
                    "optimizer iteration cap");
    sub->add_flag("--no-log-transform", fit_config.no_log_transform,
                  "optimize on the natural scale");
    sub->add_flag("--allow-nonconverged", fit_config.allow_nonconverged,
                  "exit 0 even without convergence");
  };

  auto* fit = app.add_subcommand("fit", "maximum-likelihood fit");
  add_common(fit, false);
  fit->add_option("data", data_paths, "observed event file(s)")->required();
  add_fit_options(fit);

  auto* boot = app.add_subcommand("bootstrap", "parametric bootstrap");
  add_common(boot, true);
  boot->add_option("fit", fit_path, "fit.json from the fit subcommand")
      ->required();
  boot->add_option("--replicates", replicates, "bootstrap sample count");
  boot->add_option("--datasets", datasets,
                   "simulated datasets per replicate");
  add_fit_options(boot);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUserError;
  }

  try {
    if (simulate->parsed())
      return cmd_simulate(common, seed, replicates, states);
    if (logprob->parsed()) return cmd_logprob(common, data_paths);
    if (ode->parsed()) return cmd_ode(common, adaptive);
    if (fit->parsed()) return cmd_fit(common, data_paths, fit_config);
    if (boot->parsed())
      return cmd_bootstrap(common, fit_path, replicates, datasets, seed,
                           fit_config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUserError;
  }
  return kExitUserError;
}
