#ifndef STM_DSL_HPP
#define STM_DSL_HPP

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "stm/core.hpp"

namespace stm::dsl {

enum class ExprKind {
  number,
  identifier,   // unresolved; becomes one of the kinds below
  parameter,
  compartment,  // length-M vector of counts
  array,
  time,
  sumstate,     // per-stratum row sum of the current state
  negate,
  add,
  sub,
  mul,
  divide,
  call,         // exp, log, pow, sum, matvec
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Node of a parsed rate expression.
struct Expr {
  ExprKind kind;
  double number = 0.0;
  std::string name;  // identifier or function name
  std::vector<ExprPtr> args;
  std::size_t line = 1;
  std::size_t column = 1;
};

/// Parses an expression; identifiers are left unresolved. Throws ParseError
/// with position on malformed input.
ExprPtr parse_expression(const std::string& text);

/// Resolves every identifier to a parameter, compartment, array, or builtin
/// (t, sumstate). Throws UnknownIdentifierError on failure.
ExprPtr resolve_expression(const ExprPtr& expr,
                           const std::vector<std::string>& compartments,
                           const std::vector<std::string>& parameters,
                           const std::vector<std::string>& arrays);

/// Canonical text form; reparsing yields an identical AST.
std::string pretty_print(const ExprPtr& expr);

struct EvalContext {
  double t = 0.0;
  const StateMatrix* state = nullptr;
  const Parameters* params = nullptr;
  const std::map<std::string, Grid<double>>* arrays = nullptr;
  const CompartmentSet* compartments = nullptr;
};

/// Evaluates a resolved expression to a length-M vector (scalars
/// broadcast). Throws EvalError on shape mismatch or a division producing
/// non-finite output.
std::vector<double> evaluate(const ExprPtr& expr, const EvalContext& ctx);

/// Declarative model file: compartments, transitions with rate
/// expressions, parameters, named arrays, initial state, and integrator
/// settings.
struct ModelFile {
  struct Transition {
    std::string source;
    std::string destination;
    ExprPtr rate;  // resolved
  };

  std::vector<std::string> compartments;
  std::vector<Transition> transitions;
  std::vector<std::pair<std::string, double>> parameters;  // declaration order
  std::map<std::string, Grid<double>> arrays;
  Grid<double> initial_state;
  Integrator integrator = Integrator::continuous;
  std::size_t num_steps = 0;
  double initial_step = 0.0;
  double time_delta = 0.0;
  int substeps = 10;
};

/// Parses and resolves a model file; CSV array paths are read relative to
/// base_dir. Throws ParseError / UnknownIdentifierError / ValidationError
/// with locations.
ModelFile parse_model_file(const std::string& text,
                           const std::filesystem::path& base_dir = ".");

/// Convenience: read and parse a model file from disk.
ModelFile load_model_file(const std::filesystem::path& path);

/// Declared parameter defaults.
Parameters default_parameters(const ModelFile& file);

/// Builds a validated ModelSpec; rate functions close over the expression
/// ASTs and the merged parameter values. Overrides must reference declared
/// parameters.
ModelSpec build_spec(const ModelFile& file, const Parameters& overrides = {});

}  // namespace stm::dsl

#endif
