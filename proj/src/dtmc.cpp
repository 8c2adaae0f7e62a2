#include "stm/dtmc.hpp"

#include <cmath>
#include <limits>

#include "stm/infer.hpp"

namespace stm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDiagonalSlack = 1e-12;

void check_tensor(const ModelSpec& spec, const EventTensor& events) {
  if (events.num_units != spec.num_units() ||
      events.num_transitions != spec.transitions.size() ||
      events.counts.size() !=
          events.num_steps * events.num_units * events.num_transitions)
    throw ShapeError("event tensor shape does not match the model");
}

long long occupancy_of(double value) {
  return static_cast<long long>(std::llround(value));
}

}  // namespace

EventMatrix EventTensor::slice(std::size_t step) const {
  EventMatrix z(num_units, num_transitions, 0);
  for (std::size_t i = 0; i < num_units; ++i)
    for (std::size_t k = 0; k < num_transitions; ++k)
      z(i, k) = at(step, i, k);
  return z;
}

std::vector<Grid<double>> transition_prob_matrix(const ModelSpec& spec,
                                                 double t,
                                                 const StateMatrix& state) {
  if (!(spec.time_delta > 0.0))
    throw ValidationError("transition_prob_matrix: time_delta must be > 0");
  const auto rates = evaluate_rates(spec, t, state);
  const std::size_t m = state.rows();
  const std::size_t nx = spec.compartments.size();
  const std::size_t nz = spec.transitions.size();

  std::vector<Grid<double>> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    Grid<double> p(nx, nx, 0.0);
    for (std::size_t k = 0; k < nz; ++k) {
      const double rate = rates[k][i];
      if (!std::isfinite(rate) || rate < 0.0)
        throw InvalidRateError("rate function " + std::to_string(k) +
                               " returned negative or non-finite hazard");
      p(spec.transitions.source(k), spec.transitions.destination(k)) +=
          -std::expm1(-rate * spec.time_delta);
    }
    for (std::size_t q = 0; q < nx; ++q) {
      double off = 0.0;
      for (std::size_t r = 0; r < nx; ++r)
        if (r != q) off += p(q, r);
      double diag = 1.0 - off;
      if (diag < -kDiagonalSlack)
        throw ProbabilityOverflowError(
            "transition_prob_matrix: stratum " + std::to_string(i) +
            ", compartment " + std::to_string(q) +
            ": competing hazards exceed 1; reduce time_delta");
      p(q, q) = diag < 0.0 ? 0.0 : diag;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::pair<EventMatrix, StateMatrix> dtmc_step(const ModelSpec& spec, double t,
                                              const StateMatrix& state,
                                              RngStream& stream) {
  const auto prob = transition_prob_matrix(spec, t, state);
  const std::size_t m = state.rows();
  const std::size_t nx = spec.compartments.size();
  const std::size_t nz = spec.transitions.size();

  EventMatrix events(m, nz, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t q = 0; q < nx; ++q) {
      const long long n = occupancy_of(state(i, q));
      if (n == 0) continue;

      // Categories: declared exits from q in transition order, then stay.
      std::vector<std::size_t> exits;
      std::vector<double> probs;
      for (std::size_t k = 0; k < nz; ++k) {
        if (spec.transitions.source(k) == q) {
          exits.push_back(k);
          probs.push_back(prob[i](q, spec.transitions.destination(k)));
        }
      }
      if (exits.empty()) continue;
      probs.push_back(prob[i](q, q));
      double total = 0.0;
      for (double& p : probs) total += p;
      if (total != 1.0) {  // absorb clamping round-off into the stay slot
        probs.back() += 1.0 - total;
        if (probs.back() < 0.0) probs.back() = 0.0;
      }

      const auto draw = stream.multinomial(n, probs);
      for (std::size_t e = 0; e < exits.size(); ++e)
        events(i, exits[e]) = draw[e];
    }
  }
  return {events, apply_events(state, events, spec.incidence)};
}

EventTensor dtmc_sample(const ModelSpec& spec, std::uint64_t seed) {
  if (const auto report = validate_model(spec); !report.empty())
    throw ValidationError("dtmc_sample: " + report.front());
  if (spec.integrator != Integrator::discrete)
    throw ValidationError("dtmc_sample: spec integrator is not discrete");

  RngStream stream(seed);
  EventTensor out(spec.num_steps, spec.num_units(), spec.transitions.size());
  StateMatrix state = spec.initial_state;
  for (std::size_t s = 0; s < spec.num_steps; ++s) {
    const double t = spec.initial_step + static_cast<double>(s) *
                                             spec.time_delta;
    auto [events, next] = dtmc_step(spec, t, state, stream);
    for (std::size_t i = 0; i < events.rows(); ++i)
      for (std::size_t k = 0; k < events.cols(); ++k)
        out.at(s, i, k) = events(i, k);
    state = std::move(next);
  }
  return out;
}

double dtmc_log_prob(const ModelSpec& spec, const EventTensor& events) {
  check_tensor(spec, events);
  const std::size_t nx = spec.compartments.size();
  const std::size_t nz = spec.transitions.size();

  StateMatrix state = spec.initial_state;
  double log_prob = 0.0;
  for (std::size_t s = 0; s < events.num_steps; ++s) {
    const double t = spec.initial_step + static_cast<double>(s) *
                                             spec.time_delta;
    const auto prob = transition_prob_matrix(spec, t, state);
    for (std::size_t i = 0; i < events.num_units; ++i) {
      for (std::size_t q = 0; q < nx; ++q) {
        std::vector<long long> counts;
        std::vector<double> probs;
        long long exits_total = 0;
        for (std::size_t k = 0; k < nz; ++k) {
          if (spec.transitions.source(k) != q) continue;
          const long long z = events.at(s, i, k);
          if (z < 0) return -kInf;
          counts.push_back(z);
          probs.push_back(prob[i](q, spec.transitions.destination(k)));
          exits_total += z;
        }
        if (counts.empty()) {
          // No declared exits: any recorded event here is impossible.
          continue;
        }
        const long long n = occupancy_of(state(i, q));
        if (exits_total > n) return -kInf;
        counts.push_back(n - exits_total);
        probs.push_back(prob[i](q, q));
        double total = 0.0;
        for (double& p : probs) total += p;
        if (total != 1.0) {
          probs.back() += 1.0 - total;
          if (probs.back() < 0.0) probs.back() = 0.0;
        }
        log_prob += multinomial_log_pmf(counts, n, probs);
        if (log_prob == -kInf) return -kInf;
      }
    }
    try {
      state = apply_events(state, events.slice(s), spec.incidence);
    } catch (const NegativeStateError&) {
      return -kInf;
    }
  }
  return log_prob;
}

std::vector<StateMatrix> dtmc_compute_state(const ModelSpec& spec,
                                            const EventTensor& events) {
  check_tensor(spec, events);
  std::vector<StateMatrix> trajectory;
  trajectory.reserve(events.num_steps + 1);
  trajectory.push_back(spec.initial_state);
  for (std::size_t s = 0; s < events.num_steps; ++s)
    trajectory.push_back(
        apply_events(trajectory.back(), events.slice(s), spec.incidence));
  return trajectory;
}

}  // namespace stm
