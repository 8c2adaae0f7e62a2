#include "stm/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace stm::io {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

double percentile(std::vector<double>& sorted_values, double p) {
  // Linear interpolation between order statistics.
  if (sorted_values.empty()) return 0.0;
  const double idx = p * static_cast<double>(sorted_values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, sorted_values.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return sorted_values[lo] * (1.0 - frac) + sorted_values[hi] * frac;
}

}  // namespace

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void write_event_list_csv(std::ostream& out, const EventList& events) {
  out << "time,transition,unit\n";
  for (std::size_t s = 0; s < events.size(); ++s) {
    if (events.transitions[s] == EventList::kPadding) break;
    out << format_double(events.times[s]) << "," << events.transitions[s]
        << "," << events.units[s] << "\n";
  }
}

EventList read_event_list_csv(std::istream& in, std::size_t num_steps) {
  EventList events;
  std::string line;
  if (!std::getline(in, line))
    throw ShapeError("event list CSV: empty file");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 3)
      throw ShapeError("event list CSV: expected 3 columns");
    try {
      events.times.push_back(std::stod(cells[0]));
      events.transitions.push_back(std::stoull(cells[1]));
      events.units.push_back(std::stoull(cells[2]));
    } catch (const std::exception&) {
      throw ShapeError("event list CSV: malformed row '" + line + "'");
    }
  }
  if (num_steps < events.size())
    throw ShapeError("event list CSV: more events than num_steps");
  while (events.size() < num_steps) {
    events.times.push_back(std::numeric_limits<double>::infinity());
    events.transitions.push_back(EventList::kPadding);
    events.units.push_back(EventList::kPadding);
  }
  return events;
}

void write_event_tensor_csv(std::ostream& out, const EventTensor& events) {
  out << "step,stratum,transition,count\n";
  for (std::size_t s = 0; s < events.num_steps; ++s)
    for (std::size_t i = 0; i < events.num_units; ++i)
      for (std::size_t k = 0; k < events.num_transitions; ++k)
        if (events.at(s, i, k) != 0)
          out << s << "," << i << "," << k << "," << events.at(s, i, k)
              << "\n";
}

EventTensor read_event_tensor_csv(std::istream& in, std::size_t num_steps,
                                  std::size_t num_units,
                                  std::size_t num_transitions) {
  EventTensor events(num_steps, num_units, num_transitions);
  std::string line;
  if (!std::getline(in, line))
    throw ShapeError("event tensor CSV: empty file");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 4)
      throw ShapeError("event tensor CSV: expected 4 columns");
    std::size_t s, i, k;
    long long count;
    try {
      s = std::stoull(cells[0]);
      i = std::stoull(cells[1]);
      k = std::stoull(cells[2]);
      count = std::stoll(cells[3]);
    } catch (const std::exception&) {
      throw ShapeError("event tensor CSV: malformed row '" + line + "'");
    }
    if (s >= num_steps || i >= num_units || k >= num_transitions)
      throw ShapeError("event tensor CSV: index out of range in '" + line +
                       "'");
    events.at(s, i, k) = count;
  }
  return events;
}

void write_event_tensor_binary(std::ostream& out, const EventTensor& events) {
  const char magic[4] = {'S', 'T', 'E', '1'};
  out.write(magic, 4);
  const std::uint64_t dims[3] = {events.num_steps, events.num_units,
                                 events.num_transitions};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(events.counts.data()),
            static_cast<std::streamsize>(events.counts.size() *
                                         sizeof(long long)));
}

EventTensor read_event_tensor_binary(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "STE1")
    throw ShapeError("event tensor binary: bad magic");
  std::uint64_t dims[3];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in) throw ShapeError("event tensor binary: truncated header");
  EventTensor events(dims[0], dims[1], dims[2]);
  in.read(reinterpret_cast<char*>(events.counts.data()),
          static_cast<std::streamsize>(events.counts.size() *
                                       sizeof(long long)));
  if (!in) throw ShapeError("event tensor binary: truncated data");
  return events;
}

void write_states_csv(std::ostream& out, const std::vector<double>& times,
                      const std::vector<StateMatrix>& states,
                      const std::vector<std::string>& compartments) {
  out << "time";
  if (!states.empty()) {
    for (std::size_t i = 0; i < states.front().rows(); ++i)
      for (const auto& name : compartments) out << ",u" << i << "_" << name;
  }
  out << "\n";
  for (std::size_t row = 0; row < times.size(); ++row) {
    out << format_double(times[row]);
    const StateMatrix& x = states[row];
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t j = 0; j < x.cols(); ++j)
        out << "," << format_double(x(i, j));
    out << "\n";
  }
}

std::string fit_result_to_json(const FitResult& result) {
  nlohmann::json j;
  j["position"] = result.position;
  j["value"] = result.value;
  j["converged"] = result.converged;
  j["iterations"] = result.iterations;
  j["labels"] = result.labels;
  return j.dump(2);
}

FitResult fit_result_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    FitResult result;
    result.position = j.at("position").get<std::vector<double>>();
    result.value = j.at("value").get<double>();
    result.converged = j.at("converged").get<bool>();
    result.iterations = j.at("iterations").get<int>();
    result.labels = j.at("labels").get<std::vector<std::string>>();
    return result;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("fit result JSON: ") + e.what());
  }
}

void write_replicate_summary_csv(
    std::ostream& out, const std::vector<double>& times,
    const std::vector<std::vector<StateMatrix>>& replicate_states,
    const std::vector<std::string>& compartments) {
  out << "time";
  for (const auto& name : compartments)
    out << ",mean_" << name << ",p05_" << name << ",p95_" << name;
  out << "\n";
  const std::size_t n_rep = replicate_states.size();
  for (std::size_t row = 0; row < times.size(); ++row) {
    out << format_double(times[row]);
    for (std::size_t q = 0; q < compartments.size(); ++q) {
      std::vector<double> totals(n_rep, 0.0);
      for (std::size_t r = 0; r < n_rep; ++r) {
        const StateMatrix& x = replicate_states[r][row];
        for (std::size_t i = 0; i < x.rows(); ++i) totals[r] += x(i, q);
      }
      double mean = 0.0;
      for (double v : totals) mean += v;
      mean /= static_cast<double>(std::max<std::size_t>(n_rep, 1));
      std::sort(totals.begin(), totals.end());
      out << "," << format_double(mean) << ","
          << format_double(percentile(totals, 0.05)) << ","
          << format_double(percentile(totals, 0.95));
    }
    out << "\n";
  }
}

void write_bootstrap_csv(std::ostream& out, const BootstrapResult& result,
                         const std::vector<std::string>& labels) {
  out << "replicate";
  for (const auto& label : labels) out << "," << label;
  out << ",converged\n";
  for (std::size_t r = 0; r < result.samples.rows(); ++r) {
    out << r;
    for (std::size_t j = 0; j < result.samples.cols(); ++j)
      out << "," << format_double(result.samples(r, j));
    out << "," << (result.converged[r] ? 1 : 0) << "\n";
  }
}

}  // namespace stm::io
