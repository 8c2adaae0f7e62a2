#ifndef STM_IO_HPP
#define STM_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "stm/core.hpp"
#include "stm/ctmc.hpp"
#include "stm/dtmc.hpp"
#include "stm/infer.hpp"
#include "stm/ode.hpp"

namespace stm::io {

/// Floats are printed with 17 significant digits so CSV round-trips are
/// bit-exact.
std::string format_double(double value);

// EventList: columnar CSV (time, transition, unit); padding rows omitted.
void write_event_list_csv(std::ostream& out, const EventList& events);
EventList read_event_list_csv(std::istream& in, std::size_t num_steps);

// EventTensor: long-format CSV (step, stratum, transition, count); zero
// counts omitted. The binary format is a fixed-header dump of the counts.
void write_event_tensor_csv(std::ostream& out, const EventTensor& events);
EventTensor read_event_tensor_csv(std::istream& in, std::size_t num_steps,
                                  std::size_t num_units,
                                  std::size_t num_transitions);
void write_event_tensor_binary(std::ostream& out, const EventTensor& events);
EventTensor read_event_tensor_binary(std::istream& in);

/// Wide CSV: time, then one column per stratum-compartment (stratum-major),
/// header "u{i}_{compartment}".
void write_states_csv(std::ostream& out, const std::vector<double>& times,
                      const std::vector<StateMatrix>& states,
                      const std::vector<std::string>& compartments);

/// FitResult as JSON (position, value, converged, iterations, labels).
std::string fit_result_to_json(const FitResult& result);
FitResult fit_result_from_json(const std::string& text);

/// Per-time replicate summary: mean and 5/95 percentiles of each
/// compartment's stratum total across replicates.
void write_replicate_summary_csv(
    std::ostream& out, const std::vector<double>& times,
    const std::vector<std::vector<StateMatrix>>& replicate_states,
    const std::vector<std::string>& compartments);

/// Bootstrap samples as CSV: one row per replicate with a converged flag.
void write_bootstrap_csv(std::ostream& out, const BootstrapResult& result,
                         const std::vector<std::string>& labels);

}  // namespace stm::io

#endif
