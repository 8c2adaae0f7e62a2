#ifndef STM_RNG_HPP
#define STM_RNG_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace stm {

/// Deterministic counter-style generator (splitmix64). Every sampling
/// primitive consumes exactly one uniform draw per sample, and the sampling
/// algorithms are fixed (inverse CDF, linear cumulative scan,
/// conditional-binomial), so trajectories are bit-reproducible from a seed.
///
/// A stream is single-owner while in use. Parallel work must derive child
/// streams with child(i) before the parallel region starts: child state is
/// the splitmix64 finalizer applied to parent_state XOR GAMMA * (i + 1).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  /// Next raw 64-bit word of the splitmix64 sequence.
  std::uint64_t next_raw();

  /// Uniform draw in [0, 1) with 53 random bits.
  double uniform();

  /// Inverse-CDF exponential: -ln(1 - u) / rate. Throws DomainError if
  /// rate <= 0 or non-finite.
  double exponential(double rate);

  /// Index i with probability w_i / sum(w), via one uniform and a linear
  /// cumulative scan in index order. Throws DomainError if any weight is
  /// negative or non-finite, or all weights are zero.
  std::size_t categorical(std::span<const double> weights);

  /// Exact binomial sample by CDF inversion from a single uniform.
  long long binomial(long long n, double p);

  /// Multinomial by the conditional-binomial method in index order:
  /// category k draws Binomial(remaining, p_k / remaining_mass). Requires
  /// probs >= 0 and |sum - 1| <= 1e-9.
  std::vector<long long> multinomial(long long n,
                                     std::span<const double> probs);

  /// Independent child stream for parallel work; deterministic, does not
  /// advance this stream.
  RngStream child(std::uint64_t index) const;

  /// Current internal state; usable as a seed for an identical stream.
  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace stm

#endif
