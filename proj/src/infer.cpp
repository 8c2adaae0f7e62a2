#include "stm/infer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_factorial(long long n) {
  return std::lgamma(static_cast<double>(n) + 1.0);
}

}  // namespace

double poisson_log_pmf(long long k, double rate) {
  if (k < 0 || !(rate >= 0.0) || !std::isfinite(rate))
    throw DomainError("poisson_log_pmf: need k >= 0 and finite rate >= 0");
  if (rate == 0.0) return k == 0 ? 0.0 : -kInf;
  return static_cast<double>(k) * std::log(rate) - rate - log_factorial(k);
}

double binomial_log_pmf(long long k, long long n, double p) {
  if (n < 0 || !(p >= 0.0) || !(p <= 1.0))
    throw DomainError("binomial_log_pmf: need n >= 0 and p in [0, 1]");
  if (k < 0 || k > n) return -kInf;
  double out = log_factorial(n) - log_factorial(k) - log_factorial(n - k);
  if (k > 0) {
    if (p == 0.0) return -kInf;
    out += static_cast<double>(k) * std::log(p);
  }
  if (n - k > 0) {
    if (p == 1.0) return -kInf;
    out += static_cast<double>(n - k) * std::log1p(-p);
  }
  return out;  // 0^0 terms contribute nothing
}

double multinomial_log_pmf(std::span<const long long> counts, long long n,
                           std::span<const double> probs) {
  if (counts.size() != probs.size())
    throw DomainError("multinomial_log_pmf: counts/probs length mismatch");
  long long total = 0;
  for (long long c : counts) {
    if (c < 0) throw DomainError("multinomial_log_pmf: negative count");
    total += c;
  }
  if (total != n)
    throw DomainError("multinomial_log_pmf: counts must sum to n");

  double out = log_factorial(n);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double p = probs[i];
    if (!(p >= 0.0) || !std::isfinite(p))
      throw DomainError("multinomial_log_pmf: invalid probability");
    out -= log_factorial(counts[i]);
    if (counts[i] > 0) {
      if (p == 0.0) return -kInf;
      out += static_cast<double>(counts[i]) * std::log(p);
    }
  }
  return out;
}

FitResult nelder_mead_minimize(
    const std::function<double(std::span<const double>)>& objective,
    std::vector<double> initial_vertex, const NelderMeadOptions& options) {
  const std::size_t d = initial_vertex.size();
  if (d == 0)
    throw DomainError("nelder_mead_minimize: need at least one dimension");

  auto eval = [&](const std::vector<double>& x) {
    const double f = objective(x);
    return std::isnan(f) ? kInf : f;
  };

  // Simplex: initial vertex plus one perturbed vertex per coordinate.
  std::vector<std::vector<double>> simplex;
  simplex.push_back(initial_vertex);
  for (std::size_t j = 0; j < d; ++j) {
    auto v = initial_vertex;
    v[j] += std::max(0.05 * std::abs(v[j]), 0.00025);
    simplex.push_back(std::move(v));
  }
  std::vector<double> values(d + 1);
  for (std::size_t i = 0; i <= d; ++i) values[i] = eval(simplex[i]);
  if (!std::isfinite(values[0]))
    throw NonFiniteObjectiveError(
        "nelder_mead_minimize: objective non-finite at the initial vertex");

  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  std::vector<std::size_t> order(d + 1);
  int iterations = 0;
  bool converged = false;
  while (iterations < options.max_iterations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order[0];
    const std::size_t worst = order[d];
    const std::size_t second_worst = order[d - 1];

    const double spread = values[worst] - values[best];
    if (std::isfinite(values[worst]) && spread <= options.func_tolerance) {
      converged = true;
      break;
    }
    ++iterations;

    // Centroid of all vertices but the worst.
    std::vector<double> centroid(d, 0.0);
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < d; ++j) centroid[j] += simplex[i][j];
    }
    for (double& c : centroid) c /= static_cast<double>(d);

    auto blend = [&](double coef) {
      std::vector<double> x(d);
      for (std::size_t j = 0; j < d; ++j)
        x[j] = centroid[j] + coef * (centroid[j] - simplex[worst][j]);
      return x;
    };

    const auto reflected = blend(kReflect);
    const double f_reflected = eval(reflected);
    if (f_reflected < values[best]) {
      const auto expanded = blend(kExpand);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        simplex[worst] = expanded;
        values[worst] = f_expanded;
      } else {
        simplex[worst] = reflected;
        values[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[second_worst]) {
      simplex[worst] = reflected;
      values[worst] = f_reflected;
      continue;
    }
    // Contraction (outside if the reflection improved on the worst).
    const bool outside = f_reflected < values[worst];
    const auto contracted = blend(outside ? kContract : -kContract);
    const double f_contracted = eval(contracted);
    if (f_contracted < std::min(f_reflected, values[worst])) {
      simplex[worst] = contracted;
      values[worst] = f_contracted;
      continue;
    }
    // Shrink towards the best vertex.
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < d; ++j)
        simplex[i][j] =
            simplex[best][j] + kShrink * (simplex[i][j] - simplex[best][j]);
      values[i] = eval(simplex[i]);
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= d; ++i)
    if (values[i] < values[best]) best = i;

  FitResult result;
  result.position = simplex[best];
  result.value = values[best];
  result.converged = converged;
  result.iterations = iterations;
  return result;
}

FitResult fit_mle(
    const std::function<double(const Parameters&)>& negative_log_likelihood,
    const std::vector<std::string>& labels, const Parameters& initial,
    const FitOptions& options) {
  const std::size_t d = labels.size();
  std::vector<bool> log_transform = options.log_transform;
  if (log_transform.empty()) log_transform.assign(d, false);
  if (log_transform.size() != d)
    throw DomainError("fit_mle: log_transform length mismatch");

  std::vector<double> x0(d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto it = initial.find(labels[j]);
    if (it == initial.end())
      throw DomainError("fit_mle: missing initial value for '" + labels[j] +
                        "'");
    if (log_transform[j] && !(it->second > 0.0))
      throw DomainError("fit_mle: log-transformed parameter '" + labels[j] +
                        "' needs a positive initial value");
    x0[j] = log_transform[j] ? std::log(it->second) : it->second;
  }

  Parameters base = initial;
  auto objective = [&](std::span<const double> x) {
    Parameters params = base;
    for (std::size_t j = 0; j < d; ++j)
      params[labels[j]] = log_transform[j] ? std::exp(x[j]) : x[j];
    return negative_log_likelihood(params);
  };

  FitResult result =
      nelder_mead_minimize(objective, std::move(x0), options.optimizer);
  for (std::size_t j = 0; j < d; ++j)
    if (log_transform[j]) result.position[j] = std::exp(result.position[j]);
  result.labels = labels;
  return result;
}

BootstrapResult bootstrap(
    const FitResult& fitted,
    const std::function<FitResult(RngStream)>& replicate_fit,
    std::size_t n_replicates, std::uint64_t seed) {
  if (!fitted.converged)
    throw DomainError("bootstrap: fit must have converged");
  const std::size_t d = fitted.position.size();

  BootstrapResult out;
  out.samples = Grid<double>(n_replicates, d, 0.0);
  out.converged.assign(n_replicates, false);

  const RngStream parent(seed);
#pragma omp parallel for schedule(dynamic)
  for (long long r = 0; r < static_cast<long long>(n_replicates); ++r) {
    const FitResult fit =
        replicate_fit(parent.child(static_cast<std::uint64_t>(r)));
    for (std::size_t j = 0; j < d && j < fit.position.size(); ++j)
      out.samples(static_cast<std::size_t>(r), j) = fit.position[j];
    out.converged[static_cast<std::size_t>(r)] = fit.converged;
  }
  return out;
}

}  // namespace stm
