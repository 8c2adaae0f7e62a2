#include "stm/batch.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stm {

namespace {

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t replicate) {
  return RngStream(seed).child(replicate).state();
}

}  // namespace

std::vector<EventList> ctmc_sample_replicates_serial(const ModelSpec& spec,
                                                     std::uint64_t seed,
                                                     std::size_t n_replicates) {
  std::vector<EventList> out(n_replicates);
  for (std::size_t r = 0; r < n_replicates; ++r)
    out[r] = ctmc_sample(spec, replicate_seed(seed, r));
  return out;
}

std::vector<EventList> ctmc_sample_replicates(const ModelSpec& spec,
                                              std::uint64_t seed,
                                              std::size_t n_replicates) {
  std::vector<EventList> out(n_replicates);
#pragma omp parallel for schedule(dynamic)
  for (long long r = 0; r < static_cast<long long>(n_replicates); ++r)
    out[r] = ctmc_sample(spec, replicate_seed(seed, r));
  return out;
}

std::vector<EventTensor> dtmc_sample_replicates_serial(
    const ModelSpec& spec, std::uint64_t seed, std::size_t n_replicates) {
  std::vector<EventTensor> out(n_replicates);
  for (std::size_t r = 0; r < n_replicates; ++r)
    out[r] = dtmc_sample(spec, replicate_seed(seed, r));
  return out;
}

std::vector<EventTensor> dtmc_sample_replicates(const ModelSpec& spec,
                                                std::uint64_t seed,
                                                std::size_t n_replicates) {
  std::vector<EventTensor> out(n_replicates);
#pragma omp parallel for schedule(dynamic)
  for (long long r = 0; r < static_cast<long long>(n_replicates); ++r)
    out[r] = dtmc_sample(spec, replicate_seed(seed, r));
  return out;
}

}  // namespace stm
