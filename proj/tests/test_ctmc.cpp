#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "helpers.hpp"
#include "stm/ctmc.hpp"

using namespace stm;

namespace {

EventList single_event(double time, std::size_t transition, std::size_t unit,
                       std::size_t padded_to = 1) {
  EventList events;
  events.times = {time};
  events.transitions = {transition};
  events.units = {unit};
  while (events.size() < padded_to) {
    events.times.push_back(std::numeric_limits<double>::infinity());
    events.transitions.push_back(EventList::kPadding);
    events.units.push_back(EventList::kPadding);
  }
  return events;
}

}  // namespace

TEST_CASE("first SIR event is SI with probability 2/3") {
  const auto spec = test::sir_spec(1.0, 1.0, {2, 1, 0});
  RngStream rng(1);
  int si = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    RngStream stream = rng.child(i);
    const auto next = ctmc_next_event(spec, 0.0, spec.initial_state, stream);
    REQUIRE(next.has_value());
    if (next->transition == 0) ++si;
  }
  CHECK(static_cast<double>(si) / n == doctest::Approx(2.0 / 3.0).epsilon(0.02));
}

TEST_CASE("no infectives means extinction") {
  const auto spec = test::sir_spec(1.0, 1.0, {100, 0, 0});
  RngStream stream(1);
  CHECK(!ctmc_next_event(spec, 0.0, spec.initial_state, stream).has_value());
}

TEST_CASE("a single nonzero propensity is chosen with certainty") {
  const auto spec = test::sir_spec(0.0, 1.0, {2, 1, 0});
  for (int i = 0; i < 20; ++i) {
    RngStream stream(static_cast<std::uint64_t>(i));
    const auto next = ctmc_next_event(spec, 0.0, spec.initial_state, stream);
    REQUIRE(next.has_value());
    CHECK(next->transition == 1);
    CHECK(next->unit == 0);
  }
}

TEST_CASE("pure-death sampler produces exactly n removals then padding") {
  const long long n = 10;
  auto spec = test::pure_death_spec(0.7, n);
  spec.num_steps = 15;  // more steps than possible events
  const auto events = ctmc_sample(spec, 99);
  CHECK(events.num_events() == 10);
  for (std::size_t s = 0; s < 10; ++s) CHECK(events.transitions[s] == 0);
  for (std::size_t s = 10; s < 15; ++s) {
    CHECK(events.transitions[s] == EventList::kPadding);
    CHECK(std::isinf(events.times[s]));
  }
}

TEST_CASE("pure-death waiting times have mean 1/(gamma*(n-k+1))") {
  const long long n = 4;
  const double gamma = 2.0;
  const auto spec = test::pure_death_spec(gamma, n);
  const int reps = 20000;
  std::vector<double> sums(static_cast<std::size_t>(n), 0.0);
  const RngStream parent(5);
  for (int r = 0; r < reps; ++r) {
    const auto events =
        ctmc_sample(spec, parent.child(static_cast<std::uint64_t>(r)).state());
    double prev = 0.0;
    for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
      sums[k] += events.times[k] - prev;
      prev = events.times[k];
    }
  }
  for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
    const double expected = 1.0 / (gamma * static_cast<double>(n - k));
    CHECK(sums[k] / reps == doctest::Approx(expected).epsilon(0.03));
  }
}

TEST_CASE("all-zero rates give an entirely padded event list") {
  const auto spec = test::sir_spec(0.0, 0.0, {2, 1, 0});
  const auto events = ctmc_sample(spec, 1);
  CHECK(events.num_events() == 0);
  CHECK(events.size() == spec.num_steps);
}

TEST_CASE("worked single-event log probability") {
  auto spec = test::sir_spec(1.0, 1.0, {2, 1, 0});
  spec.num_steps = 1;
  const auto events = single_event(0.5, 0, 0);
  CHECK(ctmc_log_prob(spec, events) ==
        doctest::Approx(std::log(2.0) - 1.5).epsilon(1e-12));
}

TEST_CASE("impossible events have log probability -inf") {
  auto spec = test::sir_spec(1.0, 1.0, {0, 1, 0});
  spec.num_steps = 1;
  const auto events = single_event(0.5, 0, 0);  // SI with no susceptibles
  CHECK(ctmc_log_prob(spec, events) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("log_prob rejects malformed event lists") {
  auto spec = test::sir_spec(1.0, 1.0, {2, 1, 0});
  EventList events;
  events.times = {0.5, 0.4};  // not increasing
  events.transitions = {0, 1};
  events.units = {0, 0};
  CHECK_THROWS_AS(ctmc_log_prob(spec, events), ShapeError);
  events.times = {0.5};
  CHECK_THROWS_AS(ctmc_log_prob(spec, events), ShapeError);
}

TEST_CASE("one-step density integrates to 1 over (delta t, event)") {
  // 2-event toy model; quadrature over delta t for each event.
  auto spec = test::sir_spec(1.0, 1.0, {2, 1, 0});
  spec.num_steps = 1;
  const int grid = 20000;
  const double upper = 20.0;  // total rate 3, tail below 1e-26
  const double h = upper / grid;
  double integral = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    // composite Simpson
    auto density = [&](double dt) {
      return std::exp(ctmc_log_prob(spec, single_event(dt, k, 0)));
    };
    double acc = density(1e-300) + density(upper);
    for (int j = 1; j < grid; ++j)
      acc += density(j * h) * (j % 2 ? 4.0 : 2.0);
    integral += acc * h / 3.0;
  }
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sampled event lists always have finite log probability") {
  const auto spec = test::sir_spec(0.8, 1.2, {30, 3, 0},
                                   Integrator::continuous, 40);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto events = ctmc_sample(spec, seed);
    CHECK(std::isfinite(ctmc_log_prob(spec, events)));
  }
}

TEST_CASE("compute_state with no events repeats the initial state") {
  const auto spec = test::sir_spec(1.0, 1.0, {2, 1, 0});
  EventList events;  // empty
  const std::vector<double> queries{0.0, 1.0, 2.0};
  const auto states = ctmc_compute_state(spec, events, queries);
  for (const auto& x : states) CHECK(x == spec.initial_state);
}

TEST_CASE("compute_state replays events up to each query time") {
  auto spec = test::sir_spec(1.0, 1.0, {2, 1, 0});
  EventList events;
  events.times = {0.5, 0.7};
  events.transitions = {0, 1};
  events.units = {0, 0};
  const std::vector<double> queries{0.6};
  const auto states = ctmc_compute_state(spec, events, queries);
  CHECK(states[0](0, 0) == 1);
  CHECK(states[0](0, 1) == 2);
  CHECK(states[0](0, 2) == 0);

  // query exactly at an event time includes that event
  const std::vector<double> at_event{0.7};
  const auto at = ctmc_compute_state(spec, events, at_event);
  CHECK(at[0](0, 2) == 1);
}

TEST_CASE("reconstructed states conserve the population") {
  const auto spec = test::sir_spec(0.9, 1.1, {20, 5, 0},
                                   Integrator::continuous, 30);
  const auto events = ctmc_sample(spec, 17);
  std::vector<double> queries;
  for (int i = 0; i <= 50; ++i) queries.push_back(i * 0.2);
  for (const auto& x : ctmc_compute_state(spec, events, queries)) {
    double total = 0.0;
    for (std::size_t q = 0; q < 3; ++q) total += x(0, q);
    CHECK(total == 25.0);
  }
}
