#ifndef STM_CORE_HPP
#define STM_CORE_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stm/errors.hpp"
#include "stm/grid.hpp"

namespace stm {

/// Population state: M strata by |X| compartments. Stochastic integrators
/// keep the entries integer-valued; the ODE integrator uses them as reals.
using StateMatrix = Grid<double>;

/// Per-step event counts: M strata by |Z| transitions.
using EventMatrix = Grid<long long>;

/// Ordered, unique compartment labels.
struct CompartmentSet {
  std::vector<std::string> names;

  std::size_t size() const { return names.size(); }
  /// Index of a label, or npos if absent.
  std::size_t index_of(const std::string& name) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// Ordered (source, destination) compartment index pairs. The order fixes
/// the columns of the incidence matrix and the order of rate functions.
struct TransitionSet {
  std::vector<std::pair<std::size_t, std::size_t>> entries;

  std::size_t size() const { return entries.size(); }
  std::size_t source(std::size_t k) const { return entries[k].first; }
  std::size_t destination(std::size_t k) const { return entries[k].second; }
};

/// |X| x |Z| matrix B; each column has one -1 (source row), one +1
/// (destination row), zeros elsewhere.
struct IncidenceMatrix {
  Grid<int> entries;

  std::size_t num_compartments() const { return entries.rows(); }
  std::size_t num_transitions() const { return entries.cols(); }

  /// Builds B from the transition list.
  static IncidenceMatrix from_transitions(const TransitionSet& transitions,
                                          std::size_t num_compartments);
};

/// Per-capita hazard function: (t, state) -> length-M vector, units events
/// per individual in the source compartment per unit time.
using RateFunction =
    std::function<std::vector<double>(double, const StateMatrix&)>;

enum class Integrator { continuous, discrete, ode };

/// The model triplet plus initial conditions and time-grid metadata.
struct ModelSpec {
  Integrator integrator = Integrator::continuous;
  CompartmentSet compartments;
  TransitionSet transitions;
  IncidenceMatrix incidence;
  std::vector<RateFunction> rates;
  StateMatrix initial_state;
  std::size_t num_steps = 0;
  double initial_step = 0.0;
  double time_delta = 0.0;  // discrete/ODE only
  int ode_substeps = 10;    // RK4 substeps per output interval

  std::size_t num_units() const { return initial_state.rows(); }
};

/// Named parameter values.
using Parameters = std::map<std::string, double>;

/// Checks every structural invariant of the spec. Returns one message per
/// violation; an empty report means the spec is valid. Never throws.
std::vector<std::string> validate_model(const ModelSpec& spec);

/// Applies an M x |Z| event-count matrix to a state: X + Z * B^T.
/// The input state is not modified. Throws NegativeStateError if any
/// resulting count would be negative.
StateMatrix apply_events(const StateMatrix& state, const EventMatrix& events,
                         const IncidenceMatrix& incidence);

/// M x |Z| total propensities: per-capita rate times source-compartment
/// count. Entries with zero source occupancy are zero regardless of the
/// rate function's value there.
Grid<double> total_propensity_matrix(const ModelSpec& spec, double t,
                                     const StateMatrix& state);

/// Evaluates all rate functions at (t, state); result[k] is the length-M
/// per-capita hazard vector of transition k. Throws InvalidRateError on
/// wrong-length output.
std::vector<std::vector<double>> evaluate_rates(const ModelSpec& spec,
                                                double t,
                                                const StateMatrix& state);

}  // namespace stm

#endif
