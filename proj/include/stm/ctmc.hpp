#ifndef STM_CTMC_HPP
#define STM_CTMC_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "stm/core.hpp"
#include "stm/rng.hpp"

namespace stm {

/// Sparse continuous-time simulation output: one (time, transition, unit)
/// triple per Markov jump. After extinction the remaining slots are
/// padding: time = +inf, transition = kPadding. Once padding begins it
/// continues to the end.
struct EventList {
  static constexpr std::size_t kPadding = static_cast<std::size_t>(-1);

  std::vector<double> times;
  std::vector<std::size_t> transitions;
  std::vector<std::size_t> units;

  std::size_t size() const { return times.size(); }
  /// Number of non-padding events.
  std::size_t num_events() const;
};

struct NextEvent {
  double delta_t;
  std::size_t transition;
  std::size_t unit;
};

/// One Gillespie step: delta_t ~ Exponential(total propensity), then the
/// (unit, transition) pair from a categorical over the flattened propensity
/// matrix in stratum-major order. Returns nullopt when the total propensity
/// is zero (extinction).
std::optional<NextEvent> ctmc_next_event(const ModelSpec& spec, double t,
                                         const StateMatrix& state,
                                         RngStream& stream);

/// Gillespie simulation for exactly spec.num_steps jumps; padding after
/// extinction. Deterministic given the seed.
EventList ctmc_sample(const ModelSpec& spec, std::uint64_t seed);

/// Exact log-likelihood of an event sequence: sum over events of
/// ln(propensity of the chosen event) - delta_t * total propensity,
/// evaluated at the pre-event state. Returns -inf for impossible sequences.
double ctmc_log_prob(const ModelSpec& spec, const EventList& events);

/// State at each query time (nondecreasing): initial state plus all events
/// with time <= query time; right-continuous piecewise-constant.
std::vector<StateMatrix> ctmc_compute_state(const ModelSpec& spec,
                                            const EventList& events,
                                            std::span<const double> query_times);

}  // namespace stm

#endif
