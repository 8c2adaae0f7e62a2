#include "stm/rng.hpp"

#include <cmath>

#include "stm/errors.hpp"

namespace stm {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RngStream::next_raw() {
  state_ += kGamma;
  return mix64(state_);
}

double RngStream::uniform() {
  return static_cast<double>(next_raw() >> 11) * 0x1.0p-53;
}

double RngStream::exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate))
    throw DomainError("exponential: rate must be positive and finite");
  const double u = uniform();
  return -std::log1p(-u) / rate;
}

std::size_t RngStream::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw DomainError("categorical: weights must be nonnegative and finite");
    total += w;
  }
  if (!(total > 0.0))
    throw DomainError("categorical: total weight must be positive");
  const double target = uniform() * total;
  double cum = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) last_nonzero = i;
    cum += weights[i];
    if (target < cum) return i;
  }
  return last_nonzero;  // fp round-off put target at or past the top
}

long long RngStream::binomial(long long n, double p) {
  if (n < 0) throw DomainError("binomial: n must be nonnegative");
  if (!(p >= 0.0) || !(p <= 1.0))
    throw DomainError("binomial: p must lie in [0, 1]");
  const double u = uniform();  // always consume one draw
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;

  // CDF inversion with the pmf recurrence kept in log space so large n
  // does not underflow the starting term.
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  double log_pmf = static_cast<double>(n) * log_q;
  double cdf = std::exp(log_pmf);
  for (long long k = 0; k < n; ++k) {
    if (u < cdf) return k;
    log_pmf += std::log(static_cast<double>(n - k) /
                        static_cast<double>(k + 1)) +
               log_p - log_q;
    cdf += std::exp(log_pmf);
  }
  return n;
}

std::vector<long long> RngStream::multinomial(long long n,
                                              std::span<const double> probs) {
  if (n < 0) throw DomainError("multinomial: n must be nonnegative");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw DomainError("multinomial: probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw DomainError("multinomial: probabilities must sum to 1");

  std::vector<long long> counts(probs.size(), 0);
  if (probs.empty()) {
    if (n != 0) throw DomainError("multinomial: no categories for n > 0");
    return counts;
  }
  long long remaining = n;
  double mass = 1.0;
  for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
    if (remaining == 0) break;
    double cond = probs[k] / mass;
    if (cond > 1.0) cond = 1.0;
    if (cond < 0.0 || mass <= 0.0) cond = (mass <= 0.0) ? 1.0 : 0.0;
    counts[k] = binomial(remaining, cond);
    remaining -= counts[k];
    mass -= probs[k];
  }
  counts.back() += remaining;
  return counts;
}

RngStream RngStream::child(std::uint64_t index) const {
  return RngStream(mix64(state_ ^ (kGamma * (index + 1))));
}

}  // namespace stm
