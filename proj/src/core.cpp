#include "stm/core.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace stm {

std::size_t CompartmentSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return npos;
}

IncidenceMatrix IncidenceMatrix::from_transitions(
    const TransitionSet& transitions, std::size_t num_compartments) {
  Grid<int> b(num_compartments, transitions.size(), 0);
  for (std::size_t k = 0; k < transitions.size(); ++k) {
    b(transitions.source(k), k) = -1;
    b(transitions.destination(k), k) = 1;
  }
  return IncidenceMatrix{std::move(b)};
}

namespace {

std::string loc(std::size_t i, std::size_t j) {
  std::ostringstream os;
  os << "(" << i << ", " << j << ")";
  return os.str();
}

}  // namespace

std::vector<std::string> validate_model(const ModelSpec& spec) {
  std::vector<std::string> report;
  auto add = [&](const std::string& msg) { report.push_back(msg); };

  const std::size_t nx = spec.compartments.size();
  const std::size_t nz = spec.transitions.size();

  if (nx < 2) add("compartments: need at least 2, got " + std::to_string(nx));
  {
    std::set<std::string> seen;
    for (const auto& name : spec.compartments.names) {
      if (!seen.insert(name).second)
        add("compartments: duplicate label '" + name + "'");
    }
  }

  for (std::size_t k = 0; k < nz; ++k) {
    const auto src = spec.transitions.source(k);
    const auto dst = spec.transitions.destination(k);
    if (src >= nx || dst >= nx)
      add("transitions: entry " + std::to_string(k) +
          " references a compartment out of range");
    else if (src == dst)
      add("transitions: entry " + std::to_string(k) +
          " has identical source and destination");
  }

  const auto& b = spec.incidence.entries;
  if (b.rows() != nx || b.cols() != nz) {
    add("incidence: expected " + std::to_string(nx) + "x" +
        std::to_string(nz) + " matrix, got " + std::to_string(b.rows()) + "x" +
        std::to_string(b.cols()));
  } else {
    for (std::size_t k = 0; k < nz; ++k) {
      int minus = 0, plus = 0, sum = 0;
      bool bad_entry = false;
      for (std::size_t q = 0; q < nx; ++q) {
        const int v = b(q, k);
        sum += v;
        if (v == -1)
          ++minus;
        else if (v == 1)
          ++plus;
        else if (v != 0)
          bad_entry = true;
      }
      if (bad_entry)
        add("incidence: column " + std::to_string(k) +
            " has an entry outside {-1, 0, 1}");
      if (minus != 1 || plus != 1)
        add("incidence: column " + std::to_string(k) +
            " must contain exactly one -1 and one +1");
      if (sum != 0)
        add("incidence: column " + std::to_string(k) + " sums to " +
            std::to_string(sum) + ", expected 0");
      if (minus == 1 && plus == 1 && k < spec.transitions.size()) {
        if (b(spec.transitions.source(k), k) != -1 ||
            b(spec.transitions.destination(k), k) != 1)
          add("incidence: column " + std::to_string(k) +
              " disagrees with the declared transition endpoints");
      }
    }
  }

  if (spec.rates.size() != nz)
    add("rates: got " + std::to_string(spec.rates.size()) +
        " rate functions for " + std::to_string(nz) + " transitions");

  const auto& x0 = spec.initial_state;
  if (x0.rows() < 1)
    add("initial_state: need at least one stratum");
  if (x0.cols() != nx)
    add("initial_state: expected " + std::to_string(nx) +
        " columns, got " + std::to_string(x0.cols()));
  for (std::size_t i = 0; i < x0.rows(); ++i) {
    for (std::size_t j = 0; j < x0.cols(); ++j) {
      const double v = x0(i, j);
      if (!(v >= 0.0) || !std::isfinite(v))
        add("initial_state: entry " + loc(i, j) + " is negative or non-finite");
    }
  }

  if (spec.num_steps == 0 && spec.integrator != Integrator::ode)
    ;  // zero steps is a legal degenerate run
  if (spec.integrator != Integrator::continuous && !(spec.time_delta > 0.0))
    add("time_delta: must be positive for discrete/ODE integrators");
  if (!std::isfinite(spec.initial_step))
    add("initial_step: must be finite");

  return report;
}

StateMatrix apply_events(const StateMatrix& state, const EventMatrix& events,
                         const IncidenceMatrix& incidence) {
  const std::size_t m = state.rows();
  const std::size_t nx = state.cols();
  const std::size_t nz = incidence.num_transitions();
  if (events.rows() != m || events.cols() != nz ||
      incidence.num_compartments() != nx)
    throw ShapeError("apply_events: shape mismatch between state, events and "
                     "incidence matrix");

  StateMatrix next = state;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < nz; ++k) {
      const long long z = events(i, k);
      if (z == 0) continue;
      for (std::size_t q = 0; q < nx; ++q) {
        const int bqk = incidence.entries(q, k);
        if (bqk != 0) next(i, q) += static_cast<double>(bqk * z);
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t q = 0; q < nx; ++q) {
      if (next(i, q) < 0.0)
        throw NegativeStateError("apply_events: compartment " + loc(i, q) +
                                 " would become negative");
    }
  }
  return next;
}

std::vector<std::vector<double>> evaluate_rates(const ModelSpec& spec,
                                                double t,
                                                const StateMatrix& state) {
  std::vector<std::vector<double>> rates(spec.rates.size());
  for (std::size_t k = 0; k < spec.rates.size(); ++k) {
    rates[k] = spec.rates[k](t, state);
    if (rates[k].size() != state.rows())
      throw InvalidRateError(
          "rate function " + std::to_string(k) + " returned " +
          std::to_string(rates[k].size()) + " entries, expected " +
          std::to_string(state.rows()));
  }
  return rates;
}

Grid<double> total_propensity_matrix(const ModelSpec& spec, double t,
                                     const StateMatrix& state) {
  const auto rates = evaluate_rates(spec, t, state);
  const std::size_t m = state.rows();
  const std::size_t nz = spec.transitions.size();
  Grid<double> prop(m, nz, 0.0);
  for (std::size_t k = 0; k < nz; ++k) {
    const std::size_t src = spec.transitions.source(k);
    for (std::size_t i = 0; i < m; ++i) {
      const double occupancy = state(i, src);
      if (occupancy == 0.0) continue;  // zero regardless of the rate value
      const double rate = rates[k][i];
      if (!std::isfinite(rate) || rate < 0.0)
        throw InvalidRateError("rate function " + std::to_string(k) +
                               " returned negative or non-finite hazard for "
                               "stratum " + std::to_string(i));
      prop(i, k) = rate * occupancy;
    }
  }
  return prop;
}

}  // namespace stm
