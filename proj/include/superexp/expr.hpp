#pragma once

// Expression language for generating processes X(t) = f(t, W(t)).
//
// Grammar (EBNF), also documented in the README:
//
//   process   = expr { "," expr } ;                (one expr per component)
//   expr      = term { ("+" | "-") term } ;
//   term      = unary { ("*" | "/") unary } ;
//   unary     = "-" unary | power ;
//   power     = primary [ "^" unary ] ;            (right associative)
//   primary   = number | "t" | "w" digits
//             | func "(" expr ")" | "(" expr ")" ;
//   func      = "sin" | "cos" | "exp" | "log" | "sqrt" | "abs" | "tanh" ;
//
// "^" binds tightest and is right-associative; unary minus binds looser
// than "^" (so -2^2 == -4). No implicit multiplication. Error positions
// are 0-based character offsets into the source text.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace superexp {

enum class UnaryOp { neg, sin, cos, exp, log, sqrt, abs, tanh };
enum class BinaryOp { add, sub, mul, div, pow };

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

// Immutable after parse; safe to share across threads.
struct ExprNode {
  enum class Kind { constant, scalar_var, brownian_var, unary, binary };

  Kind kind;
  double value = 0.0;    // constant
  char var_name = 't';   // scalar_var: 't' for processes, 'u' for G-expressions
  int w_index = 0;       // brownian_var: 1-based component index
  UnaryOp uop{};
  BinaryOp bop{};
  NodePtr lhs, rhs;      // unary uses lhs only
  std::size_t pos = 0;   // source offset of the token introducing this node
};

class ParseError : public std::runtime_error {
 public:
  enum class Kind { lexical, syntax, dimension };

  ParseError(Kind kind, std::size_t pos, const std::string& what)
      : std::runtime_error(what + " (at offset " + std::to_string(pos) + ")"),
        kind_(kind),
        pos_(pos) {}

  Kind kind() const { return kind_; }
  std::size_t pos() const { return pos_; }

 private:
  Kind kind_;
  std::size_t pos_;
};

class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& op, std::size_t pos, const std::string& what)
      : std::runtime_error("domain error in '" + op + "' at offset " +
                           std::to_string(pos) + ": " + what),
        op_(op),
        pos_(pos) {}

  const std::string& op() const { return op_; }
  std::size_t pos() const { return pos_; }

 private:
  std::string op_;
  std::size_t pos_;
};

namespace detail {

inline const char* unary_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::neg: return "neg";
    case UnaryOp::sin: return "sin";
    case UnaryOp::cos: return "cos";
    case UnaryOp::exp: return "exp";
    case UnaryOp::log: return "log";
    case UnaryOp::sqrt: return "sqrt";
    case UnaryOp::abs: return "abs";
    case UnaryOp::tanh: return "tanh";
  }
  return "?";
}

inline const char* binary_name(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "+";
    case BinaryOp::sub: return "-";
    case BinaryOp::mul: return "*";
    case BinaryOp::div: return "/";
    case BinaryOp::pow: return "^";
  }
  return "?";
}

}  // namespace detail

inline double eval_node(const ExprNode& n, double t, std::span<const double> w) {
  switch (n.kind) {
    case ExprNode::Kind::constant:
      return n.value;
    case ExprNode::Kind::scalar_var:
      return t;
    case ExprNode::Kind::brownian_var:
      return w[static_cast<std::size_t>(n.w_index - 1)];
    case ExprNode::Kind::unary: {
      const double a = eval_node(*n.lhs, t, w);
      switch (n.uop) {
        case UnaryOp::neg: return -a;
        case UnaryOp::sin: return std::sin(a);
        case UnaryOp::cos: return std::cos(a);
        case UnaryOp::exp: return std::exp(a);
        case UnaryOp::log:
          if (!(a > 0.0)) throw EvalError("log", n.pos, "argument not positive");
          return std::log(a);
        case UnaryOp::sqrt:
          if (a < 0.0) throw EvalError("sqrt", n.pos, "argument negative");
          return std::sqrt(a);
        case UnaryOp::abs: return std::fabs(a);
        case UnaryOp::tanh: return std::tanh(a);
      }
      return 0.0;
    }
    case ExprNode::Kind::binary: {
      const double a = eval_node(*n.lhs, t, w);
      const double b = eval_node(*n.rhs, t, w);
      switch (n.bop) {
        case BinaryOp::add: return a + b;
        case BinaryOp::sub: return a - b;
        case BinaryOp::mul: return a * b;
        case BinaryOp::div:
          if (b == 0.0) throw EvalError("/", n.pos, "division by zero");
          return a / b;
        case BinaryOp::pow:
          if (a == 0.0 && b < 0.0)
            throw EvalError("^", n.pos, "zero base with negative exponent");
          if (a < 0.0 && b != std::floor(b))
            throw EvalError("^", n.pos, "negative base with non-integer exponent");
          return std::pow(a, b);
      }
      return 0.0;
    }
  }
  return 0.0;
}

inline bool structurally_equal(const ExprNode& a, const ExprNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprNode::Kind::constant:
      return a.value == b.value;
    case ExprNode::Kind::scalar_var:
      return a.var_name == b.var_name;
    case ExprNode::Kind::brownian_var:
      return a.w_index == b.w_index;
    case ExprNode::Kind::unary:
      return a.uop == b.uop && structurally_equal(*a.lhs, *b.lhs);
    case ExprNode::Kind::binary:
      return a.bop == b.bop && structurally_equal(*a.lhs, *b.lhs) &&
             structurally_equal(*a.rhs, *b.rhs);
  }
  return false;
}

namespace detail {

// Precedence level of a node when printed: higher binds tighter.
inline int print_level(const ExprNode& n) {
  switch (n.kind) {
    case ExprNode::Kind::binary:
      switch (n.bop) {
        case BinaryOp::add:
        case BinaryOp::sub: return 1;
        case BinaryOp::mul:
        case BinaryOp::div: return 2;
        case BinaryOp::pow: return 4;
      }
      return 5;
    case ExprNode::Kind::unary:
      return n.uop == UnaryOp::neg ? 3 : 5;
    default:
      return 5;
  }
}

inline void print_node(const ExprNode& n, std::string& out);

inline void print_child(const ExprNode& n, int min_level, std::string& out) {
  if (print_level(n) < min_level) {
    out += '(';
    print_node(n, out);
    out += ')';
  } else {
    print_node(n, out);
  }
}

inline void print_node(const ExprNode& n, std::string& out) {
  switch (n.kind) {
    case ExprNode::Kind::constant: {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", n.value);
      out += buf;
      return;
    }
    case ExprNode::Kind::scalar_var:
      out += n.var_name;
      return;
    case ExprNode::Kind::brownian_var:
      out += 'w';
      out += std::to_string(n.w_index);
      return;
    case ExprNode::Kind::unary:
      if (n.uop == UnaryOp::neg) {
        out += '-';
        print_child(*n.lhs, 3, out);
      } else {
        out += unary_name(n.uop);
        out += '(';
        print_node(*n.lhs, out);
        out += ')';
      }
      return;
    case ExprNode::Kind::binary: {
      // Left-associative operators need the tighter level on the right;
      // '^' is right-associative and admits a unary-minus right operand.
      int left_min = 0, right_min = 0;
      switch (n.bop) {
        case BinaryOp::add: left_min = 1; right_min = 2; break;
        case BinaryOp::sub: left_min = 1; right_min = 2; break;
        case BinaryOp::mul: left_min = 2; right_min = 3; break;
        case BinaryOp::div: left_min = 2; right_min = 3; break;
        case BinaryOp::pow: left_min = 5; right_min = 3; break;
      }
      print_child(*n.lhs, left_min, out);
      out += binary_name(n.bop);
      print_child(*n.rhs, right_min, out);
      return;
    }
  }
}

}  // namespace detail

inline std::string to_string(const ExprNode& n) {
  std::string out;
  detail::print_node(n, out);
  return out;
}

inline bool references_brownian(const ExprNode& n) {
  switch (n.kind) {
    case ExprNode::Kind::brownian_var: return true;
    case ExprNode::Kind::unary: return references_brownian(*n.lhs);
    case ExprNode::Kind::binary:
      return references_brownian(*n.lhs) || references_brownian(*n.rhs);
    default: return false;
  }
}

namespace detail {

struct Lexer {
  enum class Tok { number, scalar_var, w_var, func, plus, minus, star, slash, caret, lparen, rparen, comma, end };

  const std::string& src;
  char scalar_name;     // 't' in process mode, 'u' in scalar mode
  bool allow_w;
  std::size_t pos = 0;  // next unread char

  Tok tok = Tok::end;
  std::size_t tok_pos = 0;
  double num_value = 0.0;
  int w_index = 0;
  UnaryOp func{};

  Lexer(const std::string& s, char scalar, bool w_ok)
      : src(s), scalar_name(scalar), allow_w(w_ok) {
    advance();
  }

  void advance() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    tok_pos = pos;
    if (pos >= src.size()) {
      tok = Tok::end;
      return;
    }
    const char c = src[pos];
    switch (c) {
      case '+': ++pos; tok = Tok::plus; return;
      case '-': ++pos; tok = Tok::minus; return;
      case '*': ++pos; tok = Tok::star; return;
      case '/': ++pos; tok = Tok::slash; return;
      case '^': ++pos; tok = Tok::caret; return;
      case '(': ++pos; tok = Tok::lparen; return;
      case ')': ++pos; tok = Tok::rparen; return;
      case ',': ++pos; tok = Tok::comma; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      lex_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      lex_identifier();
      return;
    }
    throw ParseError(ParseError::Kind::lexical, pos,
                     std::string("unknown token '") + c + "'");
  }

  void lex_number() {
    const std::size_t start = pos;
    while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
    if (pos < src.size() && src[pos] == '.') {
      ++pos;
      while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
    }
    if (pos - start == 1 && src[start] == '.')
      throw ParseError(ParseError::Kind::lexical, start, "malformed number");
    if (pos < src.size() && (src[pos] == 'e' || src[pos] == 'E')) {
      std::size_t mark = pos;
      ++pos;
      if (pos < src.size() && (src[pos] == '+' || src[pos] == '-')) ++pos;
      if (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) {
        while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
      } else {
        pos = mark;  // 'e' belongs to something else; not part of the number
      }
    }
    const auto res = std::from_chars(src.data() + start, src.data() + pos, num_value);
    if (res.ec != std::errc{})
      throw ParseError(ParseError::Kind::lexical, start, "malformed number");
    tok = Tok::number;
  }

  void lex_identifier() {
    const std::size_t start = pos;
    while (pos < src.size() &&
           (std::isalnum(static_cast<unsigned char>(src[pos])))) ++pos;
    const std::string id = src.substr(start, pos - start);
    if (id.size() == 1 && id[0] == scalar_name) {
      tok = Tok::scalar_var;
      return;
    }
    if (allow_w && id[0] == 'w' && id.size() > 1) {
      for (std::size_t k = 1; k < id.size(); ++k)
        if (!std::isdigit(static_cast<unsigned char>(id[k])))
          throw ParseError(ParseError::Kind::lexical, start, "unknown identifier '" + id + "'");
      w_index = std::atoi(id.c_str() + 1);
      tok = Tok::w_var;
      return;
    }
    if (id == "sin") { func = UnaryOp::sin; tok = Tok::func; return; }
    if (id == "cos") { func = UnaryOp::cos; tok = Tok::func; return; }
    if (id == "exp") { func = UnaryOp::exp; tok = Tok::func; return; }
    if (id == "log") { func = UnaryOp::log; tok = Tok::func; return; }
    if (id == "sqrt") { func = UnaryOp::sqrt; tok = Tok::func; return; }
    if (id == "abs") { func = UnaryOp::abs; tok = Tok::func; return; }
    if (id == "tanh") { func = UnaryOp::tanh; tok = Tok::func; return; }
    throw ParseError(ParseError::Kind::lexical, start, "unknown identifier '" + id + "'");
  }
};

class Parser {
 public:
  Parser(const std::string& src, char scalar_name, bool allow_w, int dim)
      : lex_(src, scalar_name, allow_w), dim_(dim) {}

  NodePtr parse_expr() {
    NodePtr node = parse_term();
    while (lex_.tok == Lexer::Tok::plus || lex_.tok == Lexer::Tok::minus) {
      const BinaryOp op = lex_.tok == Lexer::Tok::plus ? BinaryOp::add : BinaryOp::sub;
      const std::size_t at = lex_.tok_pos;
      lex_.advance();
      node = make_binary(op, at, node, parse_term());
    }
    return node;
  }

  bool at_comma() const { return lex_.tok == Lexer::Tok::comma; }
  bool at_end() const { return lex_.tok == Lexer::Tok::end; }
  std::size_t token_pos() const { return lex_.tok_pos; }
  void skip_comma() { lex_.advance(); }

  void expect_end() {
    if (lex_.tok != Lexer::Tok::end)
      throw ParseError(ParseError::Kind::syntax, lex_.tok_pos, "unexpected trailing input");
  }

 private:
  NodePtr parse_term() {
    NodePtr node = parse_unary();
    while (lex_.tok == Lexer::Tok::star || lex_.tok == Lexer::Tok::slash) {
      const BinaryOp op = lex_.tok == Lexer::Tok::star ? BinaryOp::mul : BinaryOp::div;
      const std::size_t at = lex_.tok_pos;
      lex_.advance();
      node = make_binary(op, at, node, parse_unary());
    }
    return node;
  }

  NodePtr parse_unary() {
    if (lex_.tok == Lexer::Tok::minus) {
      const std::size_t at = lex_.tok_pos;
      lex_.advance();
      return make_unary(UnaryOp::neg, at, parse_unary());
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (lex_.tok == Lexer::Tok::caret) {
      const std::size_t at = lex_.tok_pos;
      lex_.advance();
      return make_binary(BinaryOp::pow, at, base, parse_unary());
    }
    return base;
  }

  NodePtr parse_primary() {
    const std::size_t at = lex_.tok_pos;
    switch (lex_.tok) {
      case Lexer::Tok::number: {
        auto n = std::make_shared<ExprNode>();
        n->kind = ExprNode::Kind::constant;
        n->value = lex_.num_value;
        n->pos = at;
        lex_.advance();
        return n;
      }
      case Lexer::Tok::scalar_var: {
        auto n = std::make_shared<ExprNode>();
        n->kind = ExprNode::Kind::scalar_var;
        n->var_name = lex_.scalar_name;
        n->pos = at;
        lex_.advance();
        return n;
      }
      case Lexer::Tok::w_var: {
        if (lex_.w_index < 1 || lex_.w_index > dim_)
          throw ParseError(ParseError::Kind::dimension, at,
                           "w" + std::to_string(lex_.w_index) +
                               " out of range for dimension " + std::to_string(dim_));
        auto n = std::make_shared<ExprNode>();
        n->kind = ExprNode::Kind::brownian_var;
        n->w_index = lex_.w_index;
        n->pos = at;
        lex_.advance();
        return n;
      }
      case Lexer::Tok::func: {
        const UnaryOp op = lex_.func;
        lex_.advance();
        if (lex_.tok != Lexer::Tok::lparen)
          throw ParseError(ParseError::Kind::syntax, lex_.tok_pos,
                           "expected '(' after function name");
        lex_.advance();
        NodePtr arg = parse_expr();
        if (lex_.tok != Lexer::Tok::rparen)
          throw ParseError(ParseError::Kind::syntax, lex_.tok_pos, "expected ')'");
        lex_.advance();
        return make_unary(op, at, arg);
      }
      case Lexer::Tok::lparen: {
        lex_.advance();
        NodePtr inner = parse_expr();
        if (lex_.tok != Lexer::Tok::rparen)
          throw ParseError(ParseError::Kind::syntax, lex_.tok_pos, "expected ')'");
        lex_.advance();
        return inner;
      }
      default:
        throw ParseError(ParseError::Kind::syntax, at, "expected operand");
    }
  }

  static NodePtr make_unary(UnaryOp op, std::size_t pos, NodePtr a) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::unary;
    n->uop = op;
    n->lhs = std::move(a);
    n->pos = pos;
    return n;
  }

  static NodePtr make_binary(BinaryOp op, std::size_t pos, NodePtr a, NodePtr b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::binary;
    n->bop = op;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    n->pos = pos;
    return n;
  }

  Lexer lex_;
  int dim_;
};

}  // namespace detail

enum class ProcessKind { deterministic, markov_functional };

// The generating process X(t) = f(t, W(t)): one expression per component.
struct ProcessSpec {
  int dim = 1;
  std::vector<NodePtr> components;
  ProcessKind kind = ProcessKind::deterministic;
  std::string source;

  bool deterministic() const { return kind == ProcessKind::deterministic; }

  void eval(double t, std::span<const double> w, std::span<double> out) const {
    for (int j = 0; j < dim; ++j)
      out[static_cast<std::size_t>(j)] = eval_node(*components[static_cast<std::size_t>(j)], t, w);
  }
};

inline ProcessSpec parse_process(const std::string& source, int d) {
  if (d < 1)
    throw ParseError(ParseError::Kind::dimension, 0, "dimension must be positive");
  ProcessSpec spec;
  spec.dim = d;
  spec.source = source;
  detail::Parser parser(source, 't', /*allow_w=*/true, d);
  spec.components.push_back(parser.parse_expr());
  while (parser.at_comma()) {
    parser.skip_comma();
    spec.components.push_back(parser.parse_expr());
  }
  parser.expect_end();
  if (static_cast<int>(spec.components.size()) != d)
    throw ParseError(ParseError::Kind::dimension, parser.token_pos(),
                     "expected " + std::to_string(d) + " components, got " +
                         std::to_string(spec.components.size()));
  bool uses_w = false;
  for (const auto& c : spec.components) uses_w = uses_w || references_brownian(*c);
  spec.kind = uses_w ? ProcessKind::markov_functional : ProcessKind::deterministic;
  return spec;
}

// Single expression in one scalar variable (used for G(u) choices).
inline NodePtr parse_scalar_expr(const std::string& source, char var_name = 'u') {
  detail::Parser parser(source, var_name, /*allow_w=*/false, 0);
  NodePtr node = parser.parse_expr();
  parser.expect_end();
  return node;
}

inline double eval_scalar(const ExprNode& n, double u) {
  return eval_node(n, u, {});
}

inline std::string to_string(const ProcessSpec& spec) {
  std::string out;
  for (std::size_t j = 0; j < spec.components.size(); ++j) {
    if (j) out += ',';
    out += to_string(*spec.components[j]);
  }
  return out;
}

}  // namespace superexp
