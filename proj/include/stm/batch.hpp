#ifndef STM_BATCH_HPP
#define STM_BATCH_HPP

#include <cstdint>
#include <vector>

#include "stm/ctmc.hpp"
#include "stm/dtmc.hpp"

namespace stm {

/// Replicate r of a batch runs on the child stream child(r) of the seed, so
/// the parallel and serial paths produce bit-identical output. The serial
/// variants are the reference implementation the OpenMP kernels are checked
/// against.
std::vector<EventList> ctmc_sample_replicates_serial(const ModelSpec& spec,
                                                     std::uint64_t seed,
                                                     std::size_t n_replicates);
std::vector<EventList> ctmc_sample_replicates(const ModelSpec& spec,
                                              std::uint64_t seed,
                                              std::size_t n_replicates);

std::vector<EventTensor> dtmc_sample_replicates_serial(
    const ModelSpec& spec, std::uint64_t seed, std::size_t n_replicates);
std::vector<EventTensor> dtmc_sample_replicates(const ModelSpec& spec,
                                                std::uint64_t seed,
                                                std::size_t n_replicates);

}  // namespace stm

#endif
