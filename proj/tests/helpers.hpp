#ifndef STM_TESTS_HELPERS_HPP
#define STM_TESTS_HELPERS_HPP

#include <cstddef>
#include <vector>

#include "stm/core.hpp"

namespace stm::test {

// Population-level SIR with per-capita hazards lambda_SI = beta * I and
// lambda_IR = gamma (density dependent, single stratum unless stated).
inline ModelSpec sir_spec(double beta, double gamma,
                          std::vector<double> initial,
                          Integrator integrator = Integrator::continuous,
                          std::size_t num_steps = 10, double time_delta = 1.0) {
  ModelSpec spec;
  spec.integrator = integrator;
  spec.compartments.names = {"S", "I", "R"};
  spec.transitions.entries = {{0, 1}, {1, 2}};
  spec.incidence = IncidenceMatrix::from_transitions(spec.transitions, 3);
  spec.rates = {
      [beta](double, const StateMatrix& x) {
        std::vector<double> out(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] = beta * x(i, 1);
        return out;
      },
      [gamma](double, const StateMatrix& x) {
        return std::vector<double>(x.rows(), gamma);
      }};
  spec.initial_state = StateMatrix(1, 3, std::move(initial));
  spec.num_steps = num_steps;
  spec.time_delta = time_delta;
  return spec;
}

// Frequency-dependent SIR: lambda_SI = beta * I / N.
inline ModelSpec sir_freq_spec(double beta, double gamma,
                               std::vector<double> initial,
                               Integrator integrator, std::size_t num_steps,
                               double time_delta) {
  ModelSpec spec = sir_spec(beta, gamma, std::move(initial), integrator,
                            num_steps, time_delta);
  spec.rates[0] = [beta](double, const StateMatrix& x) {
    std::vector<double> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double n = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) n += x(i, j);
      out[i] = beta * x(i, 1) / n;
    }
    return out;
  };
  return spec;
}

// Two compartments I -> R with constant per-capita removal rate gamma.
inline ModelSpec pure_death_spec(double gamma, long long n,
                                 Integrator integrator = Integrator::continuous,
                                 std::size_t num_steps = 0) {
  ModelSpec spec;
  spec.integrator = integrator;
  spec.compartments.names = {"I", "R"};
  spec.transitions.entries = {{0, 1}};
  spec.incidence = IncidenceMatrix::from_transitions(spec.transitions, 2);
  spec.rates = {[gamma](double, const StateMatrix& x) {
    return std::vector<double>(x.rows(), gamma);
  }};
  spec.initial_state = StateMatrix(1, 2, {static_cast<double>(n), 0.0});
  spec.num_steps = num_steps == 0 ? static_cast<std::size_t>(n) : num_steps;
  spec.time_delta = 1.0;
  return spec;
}

// Three-stratum metapopulation SIR: lambda_SI = (b1*I + b2*C.I) / n.
inline ModelSpec metapop_sir_spec(double beta1, double beta2, double gamma,
                                  const Grid<double>& connectivity,
                                  StateMatrix initial, std::size_t num_steps,
                                  double time_delta = 1.0) {
  ModelSpec spec;
  spec.integrator = Integrator::discrete;
  spec.compartments.names = {"S", "I", "R"};
  spec.transitions.entries = {{0, 1}, {1, 2}};
  spec.incidence = IncidenceMatrix::from_transitions(spec.transitions, 3);
  Grid<double> c = connectivity;
  spec.rates = {
      [beta1, beta2, c](double, const StateMatrix& x) {
        const std::size_t m = x.rows();
        std::vector<double> out(m);
        for (std::size_t i = 0; i < m; ++i) {
          double flux = 0.0;
          for (std::size_t j = 0; j < m; ++j) flux += c(i, j) * x(j, 1);
          double n = 0.0;
          for (std::size_t q = 0; q < x.cols(); ++q) n += x(i, q);
          out[i] = (beta1 * x(i, 1) + beta2 * flux) / n;
        }
        return out;
      },
      [gamma](double, const StateMatrix& x) {
        return std::vector<double>(x.rows(), gamma);
      }};
  spec.initial_state = std::move(initial);
  spec.num_steps = num_steps;
  spec.time_delta = time_delta;
  return spec;
}

}  // namespace stm::test

#endif
