#ifndef STM_INFER_HPP
#define STM_INFER_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stm/core.hpp"
#include "stm/grid.hpp"
#include "stm/rng.hpp"

namespace stm {

/// k * ln(rate) - rate - ln(k!); rate = 0 gives 0 for k = 0 and -inf
/// otherwise. Throws DomainError on negative rate or k.
double poisson_log_pmf(long long k, double rate);

/// Full binomial log-pmf with log-gamma coefficients; 0^0 = 1 convention.
double binomial_log_pmf(long long k, long long n, double p);

/// Full multinomial log-pmf; counts must sum to n. Positive count on a
/// zero-probability cell gives -inf.
double multinomial_log_pmf(std::span<const long long> counts, long long n,
                           std::span<const double> probs);

struct FitResult {
  std::vector<double> position;  // natural scale
  double value = 0.0;            // objective at the optimum
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> labels;
};

struct NelderMeadOptions {
  double func_tolerance = 1e-8;
  int max_iterations = 5000;
};

/// Nelder-Mead simplex with reflection 1.0, expansion 2.0, contraction 0.5,
/// shrink 0.5. The initial simplex perturbs each coordinate of the initial
/// vertex by max(5% of |value|, 0.00025). Converged when the spread of
/// simplex objective values is <= func_tolerance. Non-convergence within
/// max_iterations is returned as converged = false, not thrown. Throws
/// NonFiniteObjectiveError if the objective is non-finite at the initial
/// vertex.
FitResult nelder_mead_minimize(
    const std::function<double(std::span<const double>)>& objective,
    std::vector<double> initial_vertex, const NelderMeadOptions& options = {});

struct FitOptions {
  NelderMeadOptions optimizer;
  /// Per-parameter positivity flags; flagged parameters are optimized on
  /// the log scale and reported on the natural scale. Empty = no transform.
  std::vector<bool> log_transform;
};

/// Derivative-free MLE: minimizes the negative log-likelihood over the
/// labelled parameters, starting at `initial`.
FitResult fit_mle(
    const std::function<double(const Parameters&)>& negative_log_likelihood,
    const std::vector<std::string>& labels, const Parameters& initial,
    const FitOptions& options = {});

struct BootstrapResult {
  Grid<double> samples;         // n_replicates x d, natural scale
  std::vector<bool> converged;  // per replicate
};

/// Parametric bootstrap: replicate_fit must simulate a dataset at the
/// fitted parameters using the provided stream and refit it. Replicates run
/// with independent child streams; non-converged replicates are flagged,
/// not dropped. Requires fitted.converged.
BootstrapResult bootstrap(
    const FitResult& fitted,
    const std::function<FitResult(RngStream)>& replicate_fit,
    std::size_t n_replicates, std::uint64_t seed);

}  // namespace stm

#endif
