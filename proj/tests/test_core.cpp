#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "stm/core.hpp"
#include "stm/rng.hpp"

using namespace stm;

TEST_CASE("validate_model accepts the SIR triplet") {
  const auto spec = test::sir_spec(1.0, 1.0, {99, 1, 0});
  CHECK(validate_model(spec).empty());
}

TEST_CASE("validate_model reports a non-conservative incidence column") {
  auto spec = test::sir_spec(1.0, 1.0, {99, 1, 0});
  spec.incidence.entries(0, 1) = 1;  // column 1 now sums to 1
  const auto report = validate_model(spec);
  REQUIRE(!report.empty());
  bool found = false;
  for (const auto& msg : report)
    if (msg.find("column 1") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("validate_model reports a rate-list length mismatch") {
  auto spec = test::sir_spec(1.0, 1.0, {99, 1, 0});
  spec.rates.pop_back();
  const auto report = validate_model(spec);
  REQUIRE(!report.empty());
  bool found = false;
  for (const auto& msg : report)
    if (msg.find("rate functions") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("validate_model reports negative initial counts") {
  auto spec = test::sir_spec(1.0, 1.0, {99, -1, 0});
  CHECK(!validate_model(spec).empty());
}

TEST_CASE("apply_events moves one individual along the SI column") {
  const auto spec = test::sir_spec(1.0, 1.0, {99, 1, 0});
  EventMatrix events(1, 2, {1, 0});
  const auto next = apply_events(spec.initial_state, events, spec.incidence);
  CHECK(next(0, 0) == 98);
  CHECK(next(0, 1) == 2);
  CHECK(next(0, 2) == 0);
  // input untouched
  CHECK(spec.initial_state(0, 0) == 99);
}

TEST_CASE("apply_events with a zero event matrix is the identity") {
  const auto spec = test::sir_spec(1.0, 1.0, {99, 1, 0});
  EventMatrix zero(1, 2, 0);
  CHECK(apply_events(spec.initial_state, zero, spec.incidence) ==
        spec.initial_state);
}

TEST_CASE("apply_events rejects events that would go negative") {
  const auto spec = test::sir_spec(1.0, 1.0, {0, 1, 0});
  EventMatrix events(1, 2, {1, 0});
  CHECK_THROWS_AS(apply_events(spec.initial_state, events, spec.incidence),
                  NegativeStateError);
}

TEST_CASE("apply_events preserves row sums and composes additively") {
  const auto spec = test::sir_spec(1.0, 1.0, {50, 30, 20});
  RngStream rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    EventMatrix z1(1, 2, {static_cast<long long>(rng.uniform() * 10), 0});
    EventMatrix z2(1, 2, {0, static_cast<long long>(rng.uniform() * 10)});
    EventMatrix both(1, 2, {z1(0, 0), z2(0, 1)});

    const auto direct = apply_events(spec.initial_state, both, spec.incidence);
    const auto chained = apply_events(
        apply_events(spec.initial_state, z1, spec.incidence), z2,
        spec.incidence);
    CHECK(direct == chained);

    double row_sum = 0.0;
    for (std::size_t q = 0; q < 3; ++q) row_sum += direct(0, q);
    CHECK(row_sum == 100.0);
  }
}

TEST_CASE("total_propensity_matrix multiplies per-capita rates by occupancy") {
  const auto spec = test::sir_spec(1.0, 1.0, {2, 1, 0});
  const auto prop = total_propensity_matrix(spec, 0.0, spec.initial_state);
  CHECK(prop(0, 0) == doctest::Approx(2.0));  // beta * I * S = 1*1*2
  CHECK(prop(0, 1) == doctest::Approx(1.0));  // gamma * I = 1*1
}

TEST_CASE("total_propensity_matrix is zero without infectives") {
  const auto spec = test::sir_spec(1.0, 1.0, {100, 0, 0});
  const auto prop = total_propensity_matrix(spec, 0.0, spec.initial_state);
  CHECK(prop(0, 0) == 0.0);
}

TEST_CASE("total_propensity_matrix with all hazards off is the zero matrix") {
  const auto spec = test::sir_spec(0.0, 0.0, {2, 1, 0});
  const auto prop = total_propensity_matrix(spec, 0.0, spec.initial_state);
  for (double p : prop.data()) CHECK(p == 0.0);
}

TEST_CASE("zero occupancy masks even invalid rate values") {
  auto spec = test::sir_spec(1.0, 1.0, {100, 0, 0});
  spec.rates[1] = [](double, const StateMatrix& x) {
    return std::vector<double>(x.rows(), std::nan(""));
  };
  const auto prop = total_propensity_matrix(spec, 0.0, spec.initial_state);
  CHECK(prop(0, 1) == 0.0);
}

TEST_CASE("invalid rate output raises InvalidRateError") {
  auto spec = test::sir_spec(1.0, 1.0, {2, 1, 0});
  spec.rates[1] = [](double, const StateMatrix& x) {
    return std::vector<double>(x.rows(), -1.0);
  };
  CHECK_THROWS_AS(total_propensity_matrix(spec, 0.0, spec.initial_state),
                  InvalidRateError);
  spec.rates[1] = [](double, const StateMatrix&) {
    return std::vector<double>{};  // wrong length
  };
  CHECK_THROWS_AS(total_propensity_matrix(spec, 0.0, spec.initial_state),
                  InvalidRateError);
}
