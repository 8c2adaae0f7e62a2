#include "stm/ctmc.hpp"

#include <cmath>
#include <limits>

namespace stm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

EventMatrix one_hot(std::size_t m, std::size_t nz, std::size_t unit,
                    std::size_t transition) {
  EventMatrix z(m, nz, 0);
  z(unit, transition) = 1;
  return z;
}

void check_event_list(const ModelSpec& spec, const EventList& events) {
  if (events.times.size() != events.transitions.size() ||
      events.times.size() != events.units.size())
    throw ShapeError("event list columns have different lengths");
  bool padding = false;
  double prev = -kInf;
  for (std::size_t s = 0; s < events.size(); ++s) {
    const bool pad = events.transitions[s] == EventList::kPadding;
    if (pad) {
      if (!std::isinf(events.times[s]))
        throw ShapeError("padding entry with finite time");
      padding = true;
      continue;
    }
    if (padding) throw ShapeError("real event after padding began");
    if (events.transitions[s] >= spec.transitions.size())
      throw ShapeError("transition index out of range");
    if (events.units[s] >= spec.num_units())
      throw ShapeError("unit index out of range");
    if (!(events.times[s] > prev))
      throw ShapeError("event times must be strictly increasing");
    prev = events.times[s];
  }
}

}  // namespace

std::size_t EventList::num_events() const {
  std::size_t n = 0;
  while (n < transitions.size() && transitions[n] != kPadding) ++n;
  return n;
}

std::optional<NextEvent> ctmc_next_event(const ModelSpec& spec, double t,
                                         const StateMatrix& state,
                                         RngStream& stream) {
  const Grid<double> prop = total_propensity_matrix(spec, t, state);
  double total = 0.0;
  for (double p : prop.data()) total += p;
  if (total <= 0.0) return std::nullopt;

  const double delta_t = stream.exponential(total);
  // Flattened stratum-major, transition-minor; matches Grid's row-major
  // layout.
  const std::size_t flat = stream.categorical(prop.data());
  const std::size_t nz = spec.transitions.size();
  return NextEvent{delta_t, flat % nz, flat / nz};
}

EventList ctmc_sample(const ModelSpec& spec, std::uint64_t seed) {
  if (const auto report = validate_model(spec); !report.empty())
    throw ValidationError("ctmc_sample: " + report.front());
  if (spec.integrator != Integrator::continuous)
    throw ValidationError("ctmc_sample: spec integrator is not continuous");

  RngStream stream(seed);
  EventList out;
  out.times.reserve(spec.num_steps);
  out.transitions.reserve(spec.num_steps);
  out.units.reserve(spec.num_steps);

  StateMatrix state = spec.initial_state;
  double t = spec.initial_step;
  const std::size_t m = spec.num_units();
  const std::size_t nz = spec.transitions.size();

  for (std::size_t s = 0; s < spec.num_steps; ++s) {
    const auto next = ctmc_next_event(spec, t, state, stream);
    if (!next) break;
    t += next->delta_t;
    state = apply_events(state, one_hot(m, nz, next->unit, next->transition),
                         spec.incidence);
    out.times.push_back(t);
    out.transitions.push_back(next->transition);
    out.units.push_back(next->unit);
  }
  while (out.size() < spec.num_steps) {
    out.times.push_back(kInf);
    out.transitions.push_back(EventList::kPadding);
    out.units.push_back(EventList::kPadding);
  }
  return out;
}

double ctmc_log_prob(const ModelSpec& spec, const EventList& events) {
  check_event_list(spec, events);

  StateMatrix state = spec.initial_state;
  double t = spec.initial_step;
  double log_prob = 0.0;
  const std::size_t m = spec.num_units();
  const std::size_t nz = spec.transitions.size();

  for (std::size_t s = 0; s < events.size(); ++s) {
    if (events.transitions[s] == EventList::kPadding) break;
    const double delta_t = events.times[s] - t;
    const Grid<double> prop = total_propensity_matrix(spec, t, state);
    double total = 0.0;
    for (double p : prop.data()) total += p;
    const double chosen = prop(events.units[s], events.transitions[s]);
    if (!(chosen > 0.0)) return -kInf;
    log_prob += std::log(chosen) - delta_t * total;

    try {
      state = apply_events(
          state, one_hot(m, nz, events.units[s], events.transitions[s]),
          spec.incidence);
    } catch (const NegativeStateError&) {
      return -kInf;
    }
    t = events.times[s];
  }
  return log_prob;
}

std::vector<StateMatrix> ctmc_compute_state(
    const ModelSpec& spec, const EventList& events,
    std::span<const double> query_times) {
  check_event_list(spec, events);
  for (std::size_t i = 1; i < query_times.size(); ++i) {
    if (query_times[i] < query_times[i - 1])
      throw ShapeError("query times must be nondecreasing");
  }

  std::vector<StateMatrix> out;
  out.reserve(query_times.size());
  StateMatrix state = spec.initial_state;
  const std::size_t m = spec.num_units();
  const std::size_t nz = spec.transitions.size();
  std::size_t s = 0;
  for (double q : query_times) {
    while (s < events.size() && events.transitions[s] != EventList::kPadding &&
           events.times[s] <= q) {
      state = apply_events(
          state, one_hot(m, nz, events.units[s], events.transitions[s]),
          spec.incidence);
      ++s;
    }
    out.push_back(state);
  }
  return out;
}

}  // namespace stm
