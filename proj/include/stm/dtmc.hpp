#ifndef STM_DTMC_HPP
#define STM_DTMC_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "stm/core.hpp"
#include "stm/rng.hpp"

namespace stm {

/// Dense discrete-time simulation output: transition counts per step,
/// stratum, and transition, on the grid t_k = initial_step + k * time_delta.
struct EventTensor {
  std::size_t num_steps = 0;
  std::size_t num_units = 0;
  std::size_t num_transitions = 0;
  std::vector<long long> counts;  // row-major (step, unit, transition)

  EventTensor() = default;
  EventTensor(std::size_t t, std::size_t m, std::size_t z)
      : num_steps(t), num_units(m), num_transitions(z), counts(t * m * z, 0) {}

  long long& at(std::size_t step, std::size_t unit, std::size_t transition) {
    return counts[(step * num_units + unit) * num_transitions + transition];
  }
  long long at(std::size_t step, std::size_t unit,
               std::size_t transition) const {
    return counts[(step * num_units + unit) * num_transitions + transition];
  }

  /// The M x |Z| event matrix of one step.
  EventMatrix slice(std::size_t step) const;

  friend bool operator==(const EventTensor&, const EventTensor&) = default;
};

/// Per-stratum |X| x |X| right-stochastic transition matrix. Off-diagonal
/// (q, r) = 1 - exp(-lambda^{qr} * time_delta) at declared transitions,
/// diagonal = 1 - row sum of off-diagonals, zeros elsewhere. Throws
/// ProbabilityOverflowError if competing hazards drive a diagonal below
/// -1e-12 (time_delta too large); smaller negativity is clamped to 0.
std::vector<Grid<double>> transition_prob_matrix(const ModelSpec& spec,
                                                 double t,
                                                 const StateMatrix& state);

/// One chain-multinomial step: for each stratum (outer) and source
/// compartment in declaration order, draws the exits via a multinomial over
/// (declared exits in transition order, stay). Returns the event counts and
/// the updated state.
std::pair<EventMatrix, StateMatrix> dtmc_step(const ModelSpec& spec, double t,
                                              const StateMatrix& state,
                                              RngStream& stream);

/// num_steps chained dtmc_step draws; deterministic given the seed.
EventTensor dtmc_sample(const ModelSpec& spec, std::uint64_t seed);

/// Log-pmf of an event tensor: sum over steps, strata and source
/// compartments of the full multinomial log-pmf (coefficients included,
/// 0^0 = 1). Returns -inf if any step's exits exceed occupancy.
double dtmc_log_prob(const ModelSpec& spec, const EventTensor& events);

/// State trajectory of length num_steps + 1; trajectory[0] is the initial
/// state.
std::vector<StateMatrix> dtmc_compute_state(const ModelSpec& spec,
                                            const EventTensor& events);

}  // namespace stm

#endif
