#ifndef STM_ODE_HPP
#define STM_ODE_HPP

#include <vector>

#include "stm/core.hpp"

namespace stm {

/// Time-state pairings on the uniform grid
/// t_k = initial_step + k * time_delta, k = 0..num_steps.
struct OdeSolution {
  std::vector<double> times;
  std::vector<StateMatrix> states;
};

struct OdeOptions {
  bool adaptive = false;   // opt-in embedded 4(5) pair
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
};

/// dX/dt as an M x |X| matrix: (total propensity matrix) * B^T per stratum.
/// Row sums are zero because the columns of B conserve mass.
StateMatrix ode_rhs(const ModelSpec& spec, double t, const StateMatrix& state);

/// Integrates dX/dt = B Lambda. Default is fixed-step classic RK4 with
/// spec.ode_substeps substeps per output interval; the adaptive embedded
/// Dormand-Prince 4(5) pair is selectable via options. Throws
/// NonFiniteStateError if the state becomes non-finite.
OdeSolution ode_solve(const ModelSpec& spec, const OdeOptions& options = {});

}  // namespace stm

#endif
