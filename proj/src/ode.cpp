#include "stm/ode.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace stm {

namespace {

void axpy(StateMatrix& y, double a, const StateMatrix& x) {
  for (std::size_t i = 0; i < y.data().size(); ++i)
    y.data()[i] += a * x.data()[i];
}

void check_finite(const StateMatrix& state, double t) {
  bool warned = false;
  for (double v : state.data()) {
    if (!std::isfinite(v))
      throw NonFiniteStateError("ode_solve: non-finite state at t = " +
                                std::to_string(t));
    if (v < -1e-9 && !warned) {
      std::cerr << "warning: ode_solve: state went negative (" << v
                << ") at t = " << t << "\n";
      warned = true;
    }
  }
}

StateMatrix rk4_step(const ModelSpec& spec, double t, double h,
                     const StateMatrix& y) {
  const StateMatrix k1 = ode_rhs(spec, t, y);
  StateMatrix y2 = y;
  axpy(y2, h / 2.0, k1);
  const StateMatrix k2 = ode_rhs(spec, t + h / 2.0, y2);
  StateMatrix y3 = y;
  axpy(y3, h / 2.0, k2);
  const StateMatrix k3 = ode_rhs(spec, t + h / 2.0, y3);
  StateMatrix y4 = y;
  axpy(y4, h, k3);
  const StateMatrix k4 = ode_rhs(spec, t + h, y4);

  StateMatrix out = y;
  axpy(out, h / 6.0, k1);
  axpy(out, h / 3.0, k2);
  axpy(out, h / 3.0, k3);
  axpy(out, h / 6.0, k4);
  return out;
}

// Dormand-Prince 5(4) embedded pair.
constexpr double kA[7][6] = {
    {},
    {1.0 / 5.0},
    {3.0 / 40.0, 9.0 / 40.0},
    {44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0},
    {19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0},
    {9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
     -5103.0 / 18656.0},
    {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
     11.0 / 84.0}};
constexpr double kC[7] = {0.0,       1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0,
                          8.0 / 9.0, 1.0,       1.0};
constexpr double kB5[7] = {35.0 / 384.0,     0.0,  500.0 / 1113.0,
                           125.0 / 192.0,    -2187.0 / 6784.0,
                           11.0 / 84.0,      0.0};
constexpr double kB4[7] = {5179.0 / 57600.0,    0.0,
                           7571.0 / 16695.0,    393.0 / 640.0,
                           -92097.0 / 339200.0, 187.0 / 2100.0,
                           1.0 / 40.0};

// Advances y from t to t_end with adaptive step control.
void dp45_advance(const ModelSpec& spec, double& t, double t_end,
                  StateMatrix& y, double& h, const OdeOptions& opt) {
  while (t < t_end) {
    h = std::min(h, t_end - t);
    StateMatrix k[7];
    for (int stage = 0; stage < 7; ++stage) {
      StateMatrix ys = y;
      for (int j = 0; j < stage; ++j)
        if (kA[stage][j] != 0.0) axpy(ys, h * kA[stage][j], k[j]);
      k[stage] = ode_rhs(spec, t + kC[stage] * h, ys);
    }
    StateMatrix y5 = y, y4 = y;
    for (int stage = 0; stage < 7; ++stage) {
      if (kB5[stage] != 0.0) axpy(y5, h * kB5[stage], k[stage]);
      if (kB4[stage] != 0.0) axpy(y4, h * kB4[stage], k[stage]);
    }
    double err = 0.0;
    for (std::size_t i = 0; i < y5.data().size(); ++i) {
      const double scale =
          opt.abs_tol + opt.rel_tol * std::max(std::abs(y.data()[i]),
                                               std::abs(y5.data()[i]));
      const double e = (y5.data()[i] - y4.data()[i]) / scale;
      err += e * e;
    }
    err = std::sqrt(err / static_cast<double>(y5.data().size()));
    if (err <= 1.0) {
      t += h;
      y = std::move(y5);
      check_finite(y, t);
    }
    const double factor =
        err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::clamp(factor, 0.2, 5.0);
    if (!(h > 0.0) || !std::isfinite(h))
      throw NonFiniteStateError("ode_solve: step size collapsed");
  }
}

}  // namespace

StateMatrix ode_rhs(const ModelSpec& spec, double t, const StateMatrix& state) {
  const Grid<double> prop = total_propensity_matrix(spec, t, state);
  const std::size_t m = state.rows();
  const std::size_t nx = state.cols();
  const std::size_t nz = spec.transitions.size();
  StateMatrix deriv(m, nx, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < nz; ++k) {
      const double flow = prop(i, k);
      if (flow == 0.0) continue;
      deriv(i, spec.transitions.source(k)) -= flow;
      deriv(i, spec.transitions.destination(k)) += flow;
    }
  }
  return deriv;
}

OdeSolution ode_solve(const ModelSpec& spec, const OdeOptions& options) {
  if (const auto report = validate_model(spec); !report.empty())
    throw ValidationError("ode_solve: " + report.front());
  if (spec.integrator != Integrator::ode)
    throw ValidationError("ode_solve: spec integrator is not ode");

  OdeSolution solution;
  solution.times.reserve(spec.num_steps + 1);
  solution.states.reserve(spec.num_steps + 1);

  StateMatrix y = spec.initial_state;
  solution.times.push_back(spec.initial_step);
  solution.states.push_back(y);

  double h_adaptive = spec.time_delta / 10.0;
  for (std::size_t step = 0; step < spec.num_steps; ++step) {
    const double t0 = spec.initial_step + static_cast<double>(step) *
                                              spec.time_delta;
    const double t1 = t0 + spec.time_delta;
    if (options.adaptive) {
      double t = t0;
      dp45_advance(spec, t, t1, y, h_adaptive, options);
    } else {
      const int n = std::max(1, spec.ode_substeps);
      const double h = spec.time_delta / static_cast<double>(n);
      for (int sub = 0; sub < n; ++sub)
        y = rk4_step(spec, t0 + sub * h, h, y);
      check_finite(y, t1);
    }
    solution.times.push_back(t1);
    solution.states.push_back(y);
  }
  return solution;
}

}  // namespace stm
