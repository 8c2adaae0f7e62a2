#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "stm/ctmc.hpp"
#include "stm/dsl.hpp"

using namespace stm;
using namespace stm::dsl;

namespace {

const std::vector<std::string> kSIR{"S", "I", "R"};
const std::vector<std::string> kBetaGamma{"beta", "gamma"};

ExprPtr resolved(const std::string& text,
                 const std::vector<std::string>& arrays = {}) {
  return resolve_expression(parse_expression(text), kSIR, kBetaGamma, arrays);
}

const char* kSirModel = R"(# simple SIR
compartments: S I R

transitions:
  S -> I : beta * I / sumstate
  I -> R : gamma

parameters:
  beta = 0.5
  gamma = 0.25

initial_state: [[99, 1, 0]]

integrator:
  kind = continuous
  num_steps = 20
)";

}  // namespace

TEST_CASE("pretty_print is canonical and minimal") {
  CHECK(pretty_print(parse_expression("beta*I/sumstate")) ==
        "beta * I / sumstate");
  CHECK(pretty_print(parse_expression("a*(b+c)")) == "a * (b + c)");
  CHECK(pretty_print(parse_expression("(a*b)+c")) == "a * b + c");
  CHECK(pretty_print(parse_expression("a-(b-c)")) == "a - (b - c)");
  CHECK(pretty_print(parse_expression("a/(b*c)")) == "a / (b * c)");
  CHECK(pretty_print(parse_expression("-(a+b)")) == "-(a + b)");
  CHECK(pretty_print(parse_expression("pow( x ,2)")) == "pow(x, 2)");
}

TEST_CASE("reparsing the pretty-printed form is a fixed point") {
  for (const char* text :
       {"beta * I / sumstate", "-(a + b) * exp(-k * t)",
        "(b1 * I + b2 * matvec(C, I)) / sumstate", "1 - x / (y - z)"}) {
    const std::string once = pretty_print(parse_expression(text));
    CHECK(pretty_print(parse_expression(once)) == once);
  }
}

TEST_CASE("parse errors carry line and column") {
  try {
    parse_expression("beta * ");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
    CHECK(e.column == 8);  // the end of input, just past the trailing space
  }
  CHECK_THROWS_AS(parse_expression("a + + b"), ParseError);
  CHECK_THROWS_AS(parse_expression("pow(a, b"), ParseError);
  CHECK_THROWS_AS(parse_expression("a @ b"), ParseError);
  CHECK_THROWS_AS(parse_expression("a b"), ParseError);
}

TEST_CASE("resolution classifies identifiers") {
  const auto e = resolved("beta * I / sumstate + t");
  // root is add; left is divide chain ending at sumstate
  CHECK(e->kind == ExprKind::add);
  CHECK(e->args[1]->kind == ExprKind::time);
  const auto& div = e->args[0];
  CHECK(div->kind == ExprKind::divide);
  CHECK(div->args[1]->kind == ExprKind::sumstate);
  CHECK(div->args[0]->args[0]->kind == ExprKind::parameter);
  CHECK(div->args[0]->args[1]->kind == ExprKind::compartment);
}

TEST_CASE("unknown identifiers and functions are rejected at resolve time") {
  CHECK_THROWS_AS(resolved("beta * Z"), UnknownIdentifierError);
  CHECK_THROWS_AS(resolved("sqrt(beta)"), UnknownIdentifierError);
}

TEST_CASE("evaluation broadcasts scalars over strata") {
  const StateMatrix state(2, 3, {10, 2, 0, 5, 1, 4});
  const Parameters params{{"beta", 0.5}, {"gamma", 0.25}};
  const std::map<std::string, Grid<double>> arrays;
  CompartmentSet comps;
  comps.names = kSIR;
  const EvalContext ctx{1.5, &state, &params, &arrays, &comps};

  const auto gamma = evaluate(resolved("gamma"), ctx);
  CHECK(gamma == std::vector<double>{0.25, 0.25});

  const auto rate = evaluate(resolved("beta * I / sumstate"), ctx);
  CHECK(rate[0] == doctest::Approx(0.5 * 2 / 12.0).epsilon(1e-12));
  CHECK(rate[1] == doctest::Approx(0.5 * 1 / 10.0).epsilon(1e-12));

  const auto at_t = evaluate(resolved("t * gamma"), ctx);
  CHECK(at_t[0] == doctest::Approx(0.375).epsilon(1e-12));
}

TEST_CASE("matvec couples strata through a named array") {
  const StateMatrix state(2, 3, {10, 2, 0, 5, 4, 1});
  const Parameters params{{"beta", 1.0}, {"gamma", 0.25}};
  std::map<std::string, Grid<double>> arrays;
  arrays["C"] = Grid<double>(2, 2, {0, 1, 1, 0});
  CompartmentSet comps;
  comps.names = kSIR;
  const EvalContext ctx{0.0, &state, &params, &arrays, &comps};

  const auto v = evaluate(resolved("matvec(C, I)", {"C"}), ctx);
  CHECK(v == std::vector<double>{4, 2});

  const auto s = evaluate(resolved("sum(I)", {"C"}), ctx);
  CHECK(s == std::vector<double>{6, 6});
}

TEST_CASE("evaluation errors are reported as EvalError") {
  const StateMatrix state(1, 3, {10, 0, 0});
  const Parameters params{{"beta", 1.0}, {"gamma", 1.0}};
  std::map<std::string, Grid<double>> arrays;
  arrays["C"] = Grid<double>(2, 2, {0, 1, 1, 0});
  CompartmentSet comps;
  comps.names = kSIR;
  const EvalContext ctx{0.0, &state, &params, &arrays, &comps};

  CHECK_THROWS_AS(evaluate(resolved("beta / I"), ctx), EvalError);  // 1/0
  // matrix array outside matvec
  CHECK_THROWS_AS(evaluate(resolved("C * I", {"C"}), ctx), EvalError);
  // matvec array dimension must match the number of strata
  CHECK_THROWS_AS(evaluate(resolved("matvec(C, I)", {"C"}), ctx), EvalError);
  CHECK_THROWS_AS(evaluate(resolved("pow(beta)"), ctx), EvalError);
}

TEST_CASE("the SIR model file round-trips through build_spec") {
  const auto file = parse_model_file(kSirModel);
  CHECK(file.compartments == kSIR);
  REQUIRE(file.transitions.size() == 2);
  CHECK(file.transitions[0].source == "S");
  CHECK(file.transitions[0].destination == "I");
  CHECK(pretty_print(file.transitions[0].rate) == "beta * I / sumstate");
  CHECK(file.integrator == Integrator::continuous);
  CHECK(file.num_steps == 20);

  const auto params = default_parameters(file);
  CHECK(params.at("beta") == 0.5);
  CHECK(params.at("gamma") == 0.25);

  const auto spec = build_spec(file);
  CHECK(validate_model(spec).empty());
  const auto rates = evaluate_rates(spec, 0.0, spec.initial_state);
  CHECK(rates[0][0] == doctest::Approx(0.5 * 1 / 100.0).epsilon(1e-12));
  CHECK(rates[1][0] == doctest::Approx(0.25).epsilon(1e-12));

  // simulation end to end from the parsed file
  const auto events = ctmc_sample(spec, 7);
  CHECK(events.size() == 20);
}

TEST_CASE("parameter overrides replace defaults and must exist") {
  const auto file = parse_model_file(kSirModel);
  const auto spec = build_spec(file, {{"beta", 2.0}});
  const auto rates = evaluate_rates(spec, 0.0, spec.initial_state);
  CHECK(rates[0][0] == doctest::Approx(0.02).epsilon(1e-12));
  CHECK_THROWS_AS(build_spec(file, {{"delta", 1.0}}), ValidationError);
}

TEST_CASE("multi-line matrix literals and arrays parse") {
  const char* text = R"(
compartments: S I R
transitions:
  S -> I : (b1 * I + b2 * matvec(C, I)) / sumstate
  I -> R : g
parameters:
  b1 = 0.05
  b2 = 0.005
  g = 0.1
arrays:
  C = [[0, 5, 5],
       [5, 0, 5],
       [5, 5, 0]]
initial_state:
  [[99, 1, 0],
   [100, 0, 0],
   [100, 0, 0]]
integrator:
  kind = discrete
  num_steps = 10
  time_delta = 1
)";
  const auto file = parse_model_file(text);
  CHECK(file.arrays.at("C").rows() == 3);
  CHECK(file.arrays.at("C")(0, 1) == 5.0);
  CHECK(file.initial_state.rows() == 3);
  CHECK(file.integrator == Integrator::discrete);
  const auto spec = build_spec(file);
  CHECK(spec.num_units() == 3);
  const auto rates = evaluate_rates(spec, 0.0, spec.initial_state);
  // stratum 1: only coupling, b2 * 5 * 1 / 100
  CHECK(rates[0][1] == doctest::Approx(0.005 * 5 / 100.0).epsilon(1e-12));
}

TEST_CASE("arrays can be loaded from CSV files") {
  const std::filesystem::path dir = std::filesystem::temp_directory_path();
  const std::filesystem::path csv = dir / "stm_test_matrix.csv";
  {
    std::ofstream out(csv);
    out << "0, 2\n3, 0\n";
  }
  const std::string text = std::string(R"(
compartments: S I R
transitions:
  S -> I : beta * matvec(K, I)
  I -> R : gamma
parameters:
  beta = 1
  gamma = 1
arrays:
  K = file:)") + csv.filename().string() + R"(
initial_state: [[9, 1, 0], [10, 0, 0]]
integrator:
  kind = continuous
  num_steps = 5
)";
  const auto file = parse_model_file(text, dir);
  CHECK(file.arrays.at("K")(1, 0) == 3.0);
  std::remove(csv.string().c_str());
}

TEST_CASE("model file validation failures") {
  // undeclared compartment in a transition, with its line number
  try {
    parse_model_file(R"(compartments: S I
transitions:
  S -> X : 1
initial_state: [[1, 0]]
)");
    FAIL("expected UnknownIdentifierError");
  } catch (const UnknownIdentifierError& e) {
    CHECK(e.line == 3);
  }

  // reserved parameter name
  CHECK_THROWS_AS(parse_model_file(R"(compartments: S I
transitions:
  S -> I : t
parameters:
  t = 1
initial_state: [[1, 0]]
)"),
                  ValidationError);

  // duplicate compartment
  CHECK_THROWS_AS(parse_model_file(R"(compartments: S S
transitions:
  S -> S : 1
initial_state: [[1, 1]]
)"),
                  ValidationError);

  // discrete integrator requires a positive time_delta
  CHECK_THROWS_AS(parse_model_file(R"(compartments: S I
transitions:
  S -> I : 1
initial_state: [[1, 0]]
integrator:
  kind = discrete
  num_steps = 5
)"),
                  ValidationError);

  // initial_state column count must match the compartments
  CHECK_THROWS_AS(parse_model_file(R"(compartments: S I R
transitions:
  S -> I : 1
initial_state: [[1, 0]]
)"),
                  ValidationError);

  // missing initial_state
  CHECK_THROWS_AS(parse_model_file(R"(compartments: S I
transitions:
  S -> I : 1
)"),
                  ValidationError);
}
