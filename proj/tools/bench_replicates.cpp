// Benchmark: serial reference vs OpenMP batch sampling, with an output
// identity check. Usage: stm_bench [replicates] [num_steps].
#include <chrono>
#include <cstdlib>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "stm/batch.hpp"

using namespace stm;

namespace {

ModelSpec benchmark_spec(Integrator integrator, std::size_t num_steps) {
  ModelSpec spec;
  spec.integrator = integrator;
  spec.compartments.names = {"S", "I", "R"};
  spec.transitions.entries = {{0, 1}, {1, 2}};
  spec.incidence = IncidenceMatrix::from_transitions(spec.transitions, 3);
  const double beta = 0.4, gamma = 0.1;
  spec.rates = {[beta](double, const StateMatrix& x) {
                  std::vector<double> out(x.rows());
                  for (std::size_t i = 0; i < x.rows(); ++i) {
                    double n = 0.0;
                    for (std::size_t q = 0; q < x.cols(); ++q) n += x(i, q);
                    out[i] = beta * x(i, 1) / n;
                  }
                  return out;
                },
                [gamma](double, const StateMatrix& x) {
                  return std::vector<double>(x.rows(), gamma);
                }};
  spec.initial_state = StateMatrix(1, 3, {9990, 10, 0});
  spec.num_steps = num_steps;
  spec.time_delta = 0.25;
  return spec;
}

template <typename F>
double seconds(F&& run) {
  const auto start = std::chrono::steady_clock::now();
  run();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t replicates =
      argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 256;
  const std::size_t num_steps =
      argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 2000;
  const std::uint64_t seed = 12345;

#ifdef _OPENMP
  std::cout << "OpenMP threads: " << omp_get_max_threads() << "\n";
#else
  std::cout << "OpenMP: not enabled (both paths run serially)\n";
#endif
  std::cout << "replicates: " << replicates << ", steps per replicate: "
            << num_steps << "\n\n";

  {
    const auto spec = benchmark_spec(Integrator::continuous, num_steps);
    std::vector<EventList> serial, parallel;
    const double t_serial = seconds(
        [&] { serial = ctmc_sample_replicates_serial(spec, seed, replicates); });
    const double t_parallel =
        seconds([&] { parallel = ctmc_sample_replicates(spec, seed, replicates); });
    bool identical = true;
    for (std::size_t r = 0; r < replicates; ++r)
      if (serial[r].times != parallel[r].times ||
          serial[r].transitions != parallel[r].transitions ||
          serial[r].units != parallel[r].units)
        identical = false;
    std::cout << "continuous  serial: " << t_serial
              << " s  parallel: " << t_parallel
              << " s  speedup: " << t_serial / t_parallel
              << "  identical: " << (identical ? "yes" : "NO") << "\n";
    if (!identical) return 1;
  }

  {
    const auto spec = benchmark_spec(Integrator::discrete, num_steps);
    std::vector<EventTensor> serial, parallel;
    const double t_serial = seconds(
        [&] { serial = dtmc_sample_replicates_serial(spec, seed, replicates); });
    const double t_parallel =
        seconds([&] { parallel = dtmc_sample_replicates(spec, seed, replicates); });
    bool identical = true;
    for (std::size_t r = 0; r < replicates; ++r)
      if (serial[r] != parallel[r]) identical = false;
    std::cout << "discrete    serial: " << t_serial
              << " s  parallel: " << t_parallel
              << " s  speedup: " << t_serial / t_parallel
              << "  identical: " << (identical ? "yes" : "NO") << "\n";
    if (!identical) return 1;
  }
  return 0;
}
