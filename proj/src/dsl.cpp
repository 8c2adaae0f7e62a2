#include "stm/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace stm::dsl {

namespace {

const std::set<std::string> kFunctions = {"exp", "log", "pow", "sum",
                                          "matvec"};
const std::set<std::string> kReserved = {"t",   "sumstate", "exp", "log",
                                         "pow", "sum",      "matvec"};

// ---------------------------------------------------------------------------
// Expression lexer / parser
// ---------------------------------------------------------------------------

struct Token {
  enum class Kind { number, identifier, op, lparen, rparen, comma, end };
  Kind kind;
  std::string text;
  double number = 0.0;
  std::size_t line;
  std::size_t column;
};

class Lexer {
 public:
  Lexer(const std::string& text, std::size_t line_offset)
      : text_(text), line_(line_offset) {}

  Token next() {
    skip_space();
    const std::size_t line = line_, col = col_;
    if (pos_ >= text_.size()) return {Token::Kind::end, "", 0.0, line, col};
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t consumed = 0;
      double value;
      try {
        value = std::stod(text_.substr(pos_), &consumed);
      } catch (const std::exception&) {
        throw ParseError("malformed number", line, col);
      }
      advance(consumed);
      return {Token::Kind::number, text_.substr(pos_ - consumed, consumed),
              value, line, col};
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos_;
      while (end < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[end])) ||
              text_[end] == '_'))
        ++end;
      std::string name = text_.substr(pos_, end - pos_);
      advance(end - pos_);
      return {Token::Kind::identifier, std::move(name), 0.0, line, col};
    }
    advance(1);
    switch (c) {
      case '+': case '-': case '*': case '/':
        return {Token::Kind::op, std::string(1, c), 0.0, line, col};
      case '(': return {Token::Kind::lparen, "(", 0.0, line, col};
      case ')': return {Token::Kind::rparen, ")", 0.0, line, col};
      case ',': return {Token::Kind::comma, ",", 0.0, line, col};
      default:
        throw ParseError(std::string("unexpected character '") + c + "'",
                         line, col);
    }
  }

 private:
  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {  // line comment
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_, ++col_;
        continue;
      }
      if (c == '\n') {
        ++pos_;
        ++line_;
        col_ = 1;
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
        ++col_;
        continue;
      }
      break;
    }
  }
  void advance(std::size_t n) {
    pos_ += n;
    col_ += n;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  std::size_t line_;
  std::size_t col_ = 1;
};

class ExprParser {
 public:
  ExprParser(const std::string& text, std::size_t line_offset)
      : lexer_(text, line_offset) {
    current_ = lexer_.next();
  }

  ExprPtr parse() {
    ExprPtr e = expression();
    if (current_.kind != Token::Kind::end)
      throw ParseError("unexpected trailing input; expected operator or end",
                       current_.line, current_.column);
    return e;
  }

 private:
  Token consume() {
    Token t = current_;
    current_ = lexer_.next();
    return t;
  }

  static ExprPtr make(ExprKind kind, const Token& at,
                      std::vector<ExprPtr> args = {}) {
    auto e = std::make_shared<Expr>();
    e->kind = kind;
    e->args = std::move(args);
    e->line = at.line;
    e->column = at.column;
    return e;
  }

  ExprPtr expression() {
    ExprPtr lhs = term();
    while (current_.kind == Token::Kind::op &&
           (current_.text == "+" || current_.text == "-")) {
      const Token op = consume();
      ExprPtr rhs = term();
      lhs = make(op.text == "+" ? ExprKind::add : ExprKind::sub, op,
                 {lhs, rhs});
    }
    return lhs;
  }

  ExprPtr term() {
    ExprPtr lhs = unary();
    while (current_.kind == Token::Kind::op &&
           (current_.text == "*" || current_.text == "/")) {
      const Token op = consume();
      ExprPtr rhs = unary();
      lhs = make(op.text == "*" ? ExprKind::mul : ExprKind::divide, op,
                 {lhs, rhs});
    }
    return lhs;
  }

  ExprPtr unary() {
    if (current_.kind == Token::Kind::op && current_.text == "-") {
      const Token op = consume();
      return make(ExprKind::negate, op, {unary()});
    }
    return primary();
  }

  ExprPtr primary() {
    switch (current_.kind) {
      case Token::Kind::number: {
        const Token t = consume();
        auto e = make(ExprKind::number, t);
        const_cast<Expr&>(*e).number = t.number;
        return e;
      }
      case Token::Kind::identifier: {
        const Token t = consume();
        if (current_.kind == Token::Kind::lparen) {
          consume();  // '('
          std::vector<ExprPtr> args;
          if (current_.kind != Token::Kind::rparen) {
            args.push_back(expression());
            while (current_.kind == Token::Kind::comma) {
              consume();
              args.push_back(expression());
            }
          }
          if (current_.kind != Token::Kind::rparen)
            throw ParseError("expected ')' or ','", current_.line,
                             current_.column);
          consume();
          auto e = make(ExprKind::call, t, std::move(args));
          const_cast<Expr&>(*e).name = t.text;
          return e;
        }
        auto e = make(ExprKind::identifier, t);
        const_cast<Expr&>(*e).name = t.text;
        return e;
      }
      case Token::Kind::lparen: {
        consume();
        ExprPtr inner = expression();
        if (current_.kind != Token::Kind::rparen)
          throw ParseError("expected ')'", current_.line, current_.column);
        consume();
        return inner;
      }
      default:
        throw ParseError(
            "expected number, identifier, function call or '('",
            current_.line, current_.column);
    }
  }

  Lexer lexer_;
  Token current_;
};

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

// A value is a scalar or a length-M vector; M x M arrays may only appear
// as the first argument of matvec and never leave that call.
struct Value {
  bool is_scalar = true;
  double scalar = 0.0;
  std::vector<double> vec;

  double at(std::size_t i) const { return is_scalar ? scalar : vec[i]; }
  std::size_t length(std::size_t m) const { return is_scalar ? m : vec.size(); }
};

Value eval_value(const ExprPtr& expr, const EvalContext& ctx);

Value broadcast_binary(const ExprPtr& expr, const EvalContext& ctx,
                       double (*op)(double, double), bool check_finite) {
  const Value a = eval_value(expr->args[0], ctx);
  const Value b = eval_value(expr->args[1], ctx);
  if (a.is_scalar && b.is_scalar) {
    const double r = op(a.scalar, b.scalar);
    if (check_finite && !std::isfinite(r))
      throw EvalError("non-finite result in expression (division by zero?)");
    return {true, r, {}};
  }
  const std::size_t m = a.is_scalar ? b.vec.size() : a.vec.size();
  if (!a.is_scalar && !b.is_scalar && a.vec.size() != b.vec.size())
    throw EvalError("vector length mismatch in expression");
  Value out{false, 0.0, std::vector<double>(m)};
  for (std::size_t i = 0; i < m; ++i) {
    out.vec[i] = op(a.at(i), b.at(i));
    if (check_finite && !std::isfinite(out.vec[i]))
      throw EvalError("non-finite result in expression (division by zero?)");
  }
  return out;
}

Value eval_value(const ExprPtr& expr, const EvalContext& ctx) {
  const std::size_t m = ctx.state->rows();
  switch (expr->kind) {
    case ExprKind::number:
      return {true, expr->number, {}};
    case ExprKind::time:
      return {true, ctx.t, {}};
    case ExprKind::parameter: {
      const auto it = ctx.params->find(expr->name);
      if (it == ctx.params->end())
        throw EvalError("parameter '" + expr->name + "' has no value");
      return {true, it->second, {}};
    }
    case ExprKind::compartment: {
      const std::size_t q = ctx.compartments->index_of(expr->name);
      if (q == CompartmentSet::npos)
        throw EvalError("unknown compartment '" + expr->name + "'");
      Value out{false, 0.0, std::vector<double>(m)};
      for (std::size_t i = 0; i < m; ++i) out.vec[i] = (*ctx.state)(i, q);
      return out;
    }
    case ExprKind::sumstate: {
      Value out{false, 0.0, std::vector<double>(m)};
      for (std::size_t i = 0; i < m; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < ctx.state->cols(); ++j)
          sum += (*ctx.state)(i, j);
        out.vec[i] = sum;
      }
      return out;
    }
    case ExprKind::array: {
      const auto it = ctx.arrays->find(expr->name);
      if (it == ctx.arrays->end())
        throw EvalError("unknown array '" + expr->name + "'");
      const Grid<double>& a = it->second;
      if (a.rows() == 1 && a.cols() == 1) return {true, a(0, 0), {}};
      if (a.rows() == 1 || a.cols() == 1) {
        Value out{false, 0.0, a.data()};
        return out;
      }
      throw EvalError("array '" + expr->name +
                      "' is a matrix; use it inside matvec");
    }
    case ExprKind::negate: {
      Value v = eval_value(expr->args[0], ctx);
      if (v.is_scalar) {
        v.scalar = -v.scalar;
      } else {
        for (double& x : v.vec) x = -x;
      }
      return v;
    }
    case ExprKind::add:
      return broadcast_binary(
          expr, ctx, +[](double a, double b) { return a + b; }, false);
    case ExprKind::sub:
      return broadcast_binary(
          expr, ctx, +[](double a, double b) { return a - b; }, false);
    case ExprKind::mul:
      return broadcast_binary(
          expr, ctx, +[](double a, double b) { return a * b; }, false);
    case ExprKind::divide:
      return broadcast_binary(
          expr, ctx, +[](double a, double b) { return a / b; }, true);
    case ExprKind::call: {
      const std::string& fn = expr->name;
      auto expect_args = [&](std::size_t n) {
        if (expr->args.size() != n)
          throw EvalError(fn + " expects " + std::to_string(n) +
                          " argument(s)");
      };
      if (fn == "exp" || fn == "log") {
        expect_args(1);
        Value v = eval_value(expr->args[0], ctx);
        auto apply = [&](double x) {
          return fn == "exp" ? std::exp(x) : std::log(x);
        };
        if (v.is_scalar) {
          v.scalar = apply(v.scalar);
        } else {
          for (double& x : v.vec) x = apply(x);
        }
        return v;
      }
      if (fn == "pow") {
        expect_args(2);
        return broadcast_binary(
            expr, ctx, +[](double a, double b) { return std::pow(a, b); },
            false);
      }
      if (fn == "sum") {
        expect_args(1);
        const Value v = eval_value(expr->args[0], ctx);
        if (v.is_scalar) return v;
        double sum = 0.0;
        for (double x : v.vec) sum += x;
        return {true, sum, {}};
      }
      if (fn == "matvec") {
        expect_args(2);
        if (expr->args[0]->kind != ExprKind::array)
          throw EvalError("matvec: first argument must be a named array");
        const auto it = ctx.arrays->find(expr->args[0]->name);
        if (it == ctx.arrays->end())
          throw EvalError("unknown array '" + expr->args[0]->name + "'");
        const Grid<double>& a = it->second;
        const Value v = eval_value(expr->args[1], ctx);
        if (a.rows() != m || a.cols() != m)
          throw EvalError("matvec: array '" + expr->args[0]->name +
                          "' must be M x M (M = number of strata)");
        Value out{false, 0.0, std::vector<double>(m, 0.0)};
        for (std::size_t i = 0; i < m; ++i) {
          double sum = 0.0;
          for (std::size_t j = 0; j < m; ++j) sum += a(i, j) * v.at(j);
          out.vec[i] = sum;
        }
        return out;
      }
      throw EvalError("unknown function '" + fn + "'");
    }
    case ExprKind::identifier:
      throw EvalError("unresolved identifier '" + expr->name + "'");
  }
  throw EvalError("corrupt expression node");
}

int precedence(ExprKind kind) {
  switch (kind) {
    case ExprKind::add:
    case ExprKind::sub:
      return 1;
    case ExprKind::mul:
    case ExprKind::divide:
      return 2;
    case ExprKind::negate:
      return 3;
    default:
      return 4;
  }
}

void print(const ExprPtr& e, std::ostringstream& os, int parent_prec,
           bool rhs_of_noncommutative) {
  const int prec = precedence(e->kind);
  const bool parens =
      prec < parent_prec || (prec == parent_prec && rhs_of_noncommutative);
  if (parens) os << "(";
  switch (e->kind) {
    case ExprKind::number: {
      std::ostringstream num;
      num.precision(17);
      num << e->number;
      os << num.str();
      break;
    }
    case ExprKind::identifier:
    case ExprKind::parameter:
    case ExprKind::compartment:
    case ExprKind::array:
      os << e->name;
      break;
    case ExprKind::time:
      os << "t";
      break;
    case ExprKind::sumstate:
      os << "sumstate";
      break;
    case ExprKind::negate:
      os << "-";
      print(e->args[0], os, prec, false);
      break;
    case ExprKind::add:
    case ExprKind::sub:
    case ExprKind::mul:
    case ExprKind::divide: {
      const char* op = e->kind == ExprKind::add   ? " + "
                       : e->kind == ExprKind::sub ? " - "
                       : e->kind == ExprKind::mul ? " * "
                                                  : " / ";
      print(e->args[0], os, prec, false);
      os << op;
      print(e->args[1], os, prec,
            e->kind == ExprKind::sub || e->kind == ExprKind::divide);
      break;
    }
    case ExprKind::call: {
      os << e->name << "(";
      for (std::size_t i = 0; i < e->args.size(); ++i) {
        if (i) os << ", ";
        print(e->args[i], os, 0, false);
      }
      os << ")";
      break;
    }
  }
  if (parens) os << ")";
}

}  // namespace

ExprPtr parse_expression(const std::string& text) {
  return ExprParser(text, 1).parse();
}

ExprPtr resolve_expression(const ExprPtr& expr,
                           const std::vector<std::string>& compartments,
                           const std::vector<std::string>& parameters,
                           const std::vector<std::string>& arrays) {
  auto node = std::make_shared<Expr>(*expr);
  if (node->kind == ExprKind::identifier) {
    if (node->name == "t") {
      node->kind = ExprKind::time;
    } else if (node->name == "sumstate") {
      node->kind = ExprKind::sumstate;
    } else if (contains(compartments, node->name)) {
      node->kind = ExprKind::compartment;
    } else if (contains(parameters, node->name)) {
      node->kind = ExprKind::parameter;
    } else if (contains(arrays, node->name)) {
      node->kind = ExprKind::array;
    } else {
      throw UnknownIdentifierError("unknown identifier '" + node->name + "'",
                                   node->line, node->column);
    }
  }
  if (node->kind == ExprKind::call && !kFunctions.count(node->name))
    throw UnknownIdentifierError("unknown function '" + node->name + "'",
                                 node->line, node->column);
  for (auto& arg : node->args)
    arg = resolve_expression(arg, compartments, parameters, arrays);
  return node;
}

std::string pretty_print(const ExprPtr& expr) {
  std::ostringstream os;
  print(expr, os, 0, false);
  return os.str();
}

std::vector<double> evaluate(const ExprPtr& expr, const EvalContext& ctx) {
  if (!ctx.state || !ctx.params || !ctx.arrays || !ctx.compartments)
    throw EvalError("evaluate: incomplete context");
  const Value v = eval_value(expr, ctx);
  if (!v.is_scalar) return v.vec;
  return std::vector<double>(ctx.state->rows(), v.scalar);
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string strip_comment(const std::string& s) {
  const auto pos = s.find('#');
  return pos == std::string::npos ? s : s.substr(0, pos);
}

Grid<double> parse_matrix_literal(const std::string& text, std::size_t line) {
  // [[a, b], [c, d]] or [a, b] (one row).
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  auto skip = [&] {
    while (pos < text.size() &&
           std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  };
  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError("matrix literal: " + msg, line, pos + 1);
  };
  skip();
  if (pos >= text.size() || text[pos] != '[') throw fail("expected '['");
  ++pos;
  skip();
  const bool nested = pos < text.size() && text[pos] == '[';
  auto read_row = [&]() {
    std::vector<double> row;
    if (nested) {
      if (text[pos] != '[') throw fail("expected '['");
      ++pos;
    }
    for (;;) {
      skip();
      std::size_t consumed = 0;
      double v;
      try {
        v = std::stod(text.substr(pos), &consumed);
      } catch (const std::exception&) {
        throw fail("expected number");
      }
      pos += consumed;
      row.push_back(v);
      skip();
      if (pos < text.size() && text[pos] == ',') {
        ++pos;
        continue;
      }
      break;
    }
    if (nested) {
      if (pos >= text.size() || text[pos] != ']') throw fail("expected ']'");
      ++pos;
    }
    return row;
  };
  rows.push_back(read_row());
  skip();
  while (nested && pos < text.size() && text[pos] == ',') {
    ++pos;
    skip();
    rows.push_back(read_row());
    skip();
  }
  if (pos >= text.size() || text[pos] != ']')
    throw fail("expected closing ']'");
  ++pos;
  skip();
  if (pos != text.size()) throw fail("trailing characters");

  const std::size_t cols = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != cols) throw fail("ragged rows");
  Grid<double> out(rows.size(), cols, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = rows[i][j];
  return out;
}

Grid<double> read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV file: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string csv_line;
  while (std::getline(in, csv_line)) {
    const std::string content = trim(strip_comment(csv_line));
    if (content.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(content);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(trim(cell)));
      } catch (const std::exception&) {
        throw Error("non-numeric cell in " + path.string() + ": '" + cell +
                    "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error("empty CSV file: " + path.string());
  const std::size_t cols = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != cols) throw Error("ragged CSV file: " + path.string());
  Grid<double> out(rows.size(), cols, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = rows[i][j];
  return out;
}

bool balanced_brackets(const std::string& s) {
  int depth = 0;
  for (char c : s) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
  }
  return depth == 0;
}

bool valid_identifier(const std::string& s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')
    return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

}  // namespace

ModelFile parse_model_file(const std::string& text,
                           const std::filesystem::path& base_dir) {
  const std::set<std::string> kSections = {"compartments", "transitions",
                                           "parameters",   "arrays",
                                           "initial_state", "integrator"};
  ModelFile file;
  std::vector<std::pair<std::string, std::string>> raw_transitions;  // src->dst
  std::vector<std::string> transition_exprs;
  std::vector<std::size_t> transition_lines;
  std::map<std::string, double> integrator_settings;
  std::string integrator_kind;
  bool have_initial_state = false;

  std::istringstream in(text);
  std::string raw_line;
  std::string section;
  std::size_t line_no = 0;

  auto parse_value = [&](std::string value, std::size_t at_line) {
    if (value.rfind("file:", 0) == 0)
      return read_csv_matrix(base_dir / trim(value.substr(5)));
    return parse_matrix_literal(value, at_line);
  };

  // Reads continuation lines until brackets balance.
  auto gather_balanced = [&](std::string value) {
    while (!balanced_brackets(value) && std::getline(in, raw_line)) {
      ++line_no;
      value += " " + trim(strip_comment(raw_line));
    }
    return value;
  };

  while (std::getline(in, raw_line)) {
    ++line_no;
    const std::string content = trim(strip_comment(raw_line));
    if (content.empty()) continue;

    // Section headers: "name:" with optional inline content.
    const auto colon = content.find(':');
    if (colon != std::string::npos) {
      const std::string head = trim(content.substr(0, colon));
      if (kSections.count(head)) {
        section = head;
        const std::string rest = trim(content.substr(colon + 1));
        if (!rest.empty()) {
          if (section == "compartments") {
            std::stringstream ss(rest);
            std::string name;
            while (ss >> name) file.compartments.push_back(name);
          } else if (section == "initial_state") {
            file.initial_state =
                parse_value(gather_balanced(rest), line_no);
            have_initial_state = true;
          } else {
            throw ParseError("section '" + section +
                                 "' takes no inline content",
                             line_no, colon + 2);
          }
        }
        continue;
      }
    }

    if (section.empty())
      throw ParseError("content before any section header", line_no, 1);

    if (section == "compartments") {
      std::stringstream ss(content);
      std::string name;
      while (ss >> name) file.compartments.push_back(name);
    } else if (section == "transitions") {
      // SRC -> DST : expression
      const auto arrow = content.find("->");
      if (arrow == std::string::npos)
        throw ParseError("expected 'SRC -> DST : expression'", line_no, 1);
      const auto rate_colon = content.find(':', arrow);
      if (rate_colon == std::string::npos)
        throw ParseError("expected ':' before the rate expression", line_no,
                         arrow + 3);
      raw_transitions.emplace_back(trim(content.substr(0, arrow)),
                                   trim(content.substr(arrow + 2,
                                                       rate_colon - arrow - 2)));
      transition_exprs.push_back(trim(content.substr(rate_colon + 1)));
      transition_lines.push_back(line_no);
    } else if (section == "parameters" || section == "integrator") {
      const auto eq = content.find('=');
      if (eq == std::string::npos)
        throw ParseError("expected 'name = value'", line_no, 1);
      const std::string name = trim(content.substr(0, eq));
      const std::string value = trim(content.substr(eq + 1));
      if (section == "parameters") {
        if (!valid_identifier(name))
          throw ParseError("invalid parameter name '" + name + "'", line_no,
                           1);
        double v;
        try {
          v = std::stod(value);
        } catch (const std::exception&) {
          throw ParseError("invalid numeric value for '" + name + "'",
                           line_no, eq + 2);
        }
        file.parameters.emplace_back(name, v);
      } else {
        if (name == "kind") {
          integrator_kind = value;
        } else {
          try {
            integrator_settings[name] = std::stod(value);
          } catch (const std::exception&) {
            throw ParseError("invalid numeric value for '" + name + "'",
                             line_no, eq + 2);
          }
        }
      }
    } else if (section == "arrays") {
      const auto eq = content.find('=');
      if (eq == std::string::npos)
        throw ParseError("expected 'name = [[...]] or name = file:path.csv'",
                         line_no, 1);
      const std::string name = trim(content.substr(0, eq));
      if (!valid_identifier(name))
        throw ParseError("invalid array name '" + name + "'", line_no, 1);
      const std::size_t at_line = line_no;
      file.arrays[name] =
          parse_value(gather_balanced(trim(content.substr(eq + 1))), at_line);
    } else if (section == "initial_state") {
      file.initial_state = parse_value(gather_balanced(content), line_no);
      have_initial_state = true;
    }
  }

  // ---- validation ---------------------------------------------------------
  auto require = [&](bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
  };
  require(!file.compartments.empty(), "model file: no compartments declared");
  {
    std::set<std::string> seen;
    for (const auto& c : file.compartments) {
      require(valid_identifier(c), "invalid compartment name '" + c + "'");
      require(!kReserved.count(c),
              "compartment name '" + c + "' is reserved");
      require(seen.insert(c).second, "duplicate compartment '" + c + "'");
    }
  }
  std::vector<std::string> param_names;
  {
    std::set<std::string> seen;
    for (const auto& [name, value] : file.parameters) {
      require(!kReserved.count(name),
              "parameter name '" + name + "' is reserved");
      require(seen.insert(name).second, "duplicate parameter '" + name + "'");
      require(!contains(file.compartments, name),
              "parameter '" + name + "' collides with a compartment");
      param_names.push_back(name);
    }
  }
  std::vector<std::string> array_names;
  for (const auto& [name, grid] : file.arrays) {
    require(!kReserved.count(name), "array name '" + name + "' is reserved");
    require(!contains(file.compartments, name),
            "array '" + name + "' collides with a compartment");
    require(!contains(param_names, name),
            "array '" + name + "' collides with a parameter");
    array_names.push_back(name);
  }

  for (std::size_t k = 0; k < raw_transitions.size(); ++k) {
    const auto& [src, dst] = raw_transitions[k];
    for (const auto& end : {src, dst}) {
      if (!contains(file.compartments, end))
        throw UnknownIdentifierError(
            "transition references undeclared compartment '" + end + "'",
            transition_lines[k], 1);
    }
    require(src != dst, "transition '" + src + " -> " + dst +
                            "' has identical endpoints");
    ExprPtr raw = ExprParser(transition_exprs[k], transition_lines[k]).parse();
    file.transitions.push_back(
        {src, dst,
         resolve_expression(raw, file.compartments, param_names, array_names)});
  }
  require(!file.transitions.empty(), "model file: no transitions declared");
  require(have_initial_state, "model file: no initial_state");
  require(file.initial_state.cols() == file.compartments.size(),
          "initial_state has " + std::to_string(file.initial_state.cols()) +
              " columns for " + std::to_string(file.compartments.size()) +
              " compartments");

  if (integrator_kind == "continuous" || integrator_kind.empty())
    file.integrator = Integrator::continuous;
  else if (integrator_kind == "discrete")
    file.integrator = Integrator::discrete;
  else if (integrator_kind == "ode")
    file.integrator = Integrator::ode;
  else
    throw ValidationError("unknown integrator kind '" + integrator_kind + "'");

  auto setting = [&](const std::string& name, double fallback) {
    const auto it = integrator_settings.find(name);
    return it == integrator_settings.end() ? fallback : it->second;
  };
  file.num_steps = static_cast<std::size_t>(setting("num_steps", 0));
  file.initial_step = setting("initial_step", 0.0);
  file.time_delta = setting("time_delta", 0.0);
  file.substeps = static_cast<int>(setting("substeps", 10));
  if (file.integrator != Integrator::continuous)
    require(file.time_delta > 0.0, "integrator: time_delta must be positive");

  return file;
}

ModelFile load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_model_file(buffer.str(), path.parent_path());
}

Parameters default_parameters(const ModelFile& file) {
  Parameters params;
  for (const auto& [name, value] : file.parameters) params[name] = value;
  return params;
}

ModelSpec build_spec(const ModelFile& file, const Parameters& overrides) {
  Parameters params = default_parameters(file);
  for (const auto& [name, value] : overrides) {
    if (!params.count(name))
      throw ValidationError("override references undeclared parameter '" +
                            name + "'");
    params[name] = value;
  }

  ModelSpec spec;
  spec.integrator = file.integrator;
  spec.compartments.names = file.compartments;
  for (const auto& tr : file.transitions)
    spec.transitions.entries.emplace_back(
        spec.compartments.index_of(tr.source),
        spec.compartments.index_of(tr.destination));
  spec.incidence = IncidenceMatrix::from_transitions(
      spec.transitions, spec.compartments.size());
  spec.initial_state = file.initial_state;
  spec.num_steps = file.num_steps;
  spec.initial_step = file.initial_step;
  spec.time_delta = file.time_delta;
  spec.ode_substeps = file.substeps;

  // Shared immutable environment for all rate closures.
  auto shared_params = std::make_shared<const Parameters>(std::move(params));
  auto shared_arrays =
      std::make_shared<const std::map<std::string, Grid<double>>>(file.arrays);
  auto shared_compartments =
      std::make_shared<const CompartmentSet>(spec.compartments);

  for (const auto& tr : file.transitions) {
    ExprPtr rate = tr.rate;
    spec.rates.push_back([rate, shared_params, shared_arrays,
                          shared_compartments](double t,
                                               const StateMatrix& state) {
      EvalContext ctx;
      ctx.t = t;
      ctx.state = &state;
      ctx.params = shared_params.get();
      ctx.arrays = shared_arrays.get();
      ctx.compartments = shared_compartments.get();
      return evaluate(rate, ctx);
    });
  }

  if (const auto report = validate_model(spec); !report.empty())
    throw ValidationError("model file: " + report.front());
  return spec;
}

}  // namespace stm::dsl
