#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "superexp/expr.hpp"

using namespace superexp;

namespace {

double eval1(const std::string& src, double t, double w1) {
  const ProcessSpec spec = parse_process(src, 1);
  const double w[1] = {w1};
  double out[1];
  spec.eval(t, w, out);
  return out[0];
}

}  // namespace

TEST_CASE("precedence golden suite") {
  CHECK(eval1("2+3*4", 0, 0) == 14.0);
  CHECK(eval1("2*3^2", 0, 0) == 18.0);
  CHECK(eval1("-2^2", 0, 0) == -4.0);  // unary minus binds looser than ^
  CHECK(eval1("(-2)^2", 0, 0) == 4.0);
  CHECK(eval1("2^3^2", 0, 0) == 512.0);  // right associative
  CHECK(eval1("2^-2", 0, 0) == 0.25);
  CHECK(eval1("2-3-4", 0, 0) == -5.0);
  CHECK(eval1("8/4/2", 0, 0) == 1.0);
  CHECK(eval1("1+2*3^2-4", 0, 0) == 15.0);
}

TEST_CASE("evaluation basics") {
  CHECK(eval1("cos(w1)", 0.0, 0.0) == 1.0);
  CHECK(eval1("t*t", 2.0, 0.0) == 4.0);
  CHECK(eval1("exp(w1)", 0.0, 0.0) == 1.0);
  CHECK(eval1("tanh(0)", 0.0, 0.0) == 0.0);
  CHECK(eval1("sqrt(4)", 0.0, 0.0) == 2.0);
  CHECK(eval1("abs(-3)", 0.0, 0.0) == 3.0);
  CHECK(eval1("log(exp(1))", 0.0, 0.0) == Catch::Approx(1.0));
  CHECK(eval1("1.5e2", 0.0, 0.0) == 150.0);
  CHECK(eval1(".5", 0.0, 0.0) == 0.5);
}

TEST_CASE("classification") {
  const ProcessSpec markov = parse_process("cos(w1)", 1);
  CHECK(markov.kind == ProcessKind::markov_functional);
  CHECK(markov.components.size() == 1);

  const ProcessSpec det = parse_process("1", 1);
  CHECK(det.kind == ProcessKind::deterministic);

  const ProcessSpec det_t = parse_process("1+t", 1);
  CHECK(det_t.kind == ProcessKind::deterministic);

  const ProcessSpec multi = parse_process("t, w2", 2);
  CHECK(multi.kind == ProcessKind::markov_functional);
  CHECK(multi.dim == 2);
}

TEST_CASE("deterministic specs ignore w") {
  const ProcessSpec spec = parse_process("1+t*t, 2", 2);
  REQUIRE(spec.deterministic());
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 50; ++rep) {
    const double t = std::abs(normal(gen));
    const double wa[2] = {normal(gen), normal(gen)};
    const double wb[2] = {normal(gen), normal(gen)};
    double oa[2], ob[2];
    spec.eval(t, wa, oa);
    spec.eval(t, wb, ob);
    CHECK(oa[0] == ob[0]);
    CHECK(oa[1] == ob[1]);
  }
}

TEST_CASE("parse errors carry 0-based offsets") {
  SECTION("syntax error: missing operand") {
    try {
      parse_process("cos(", 1);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::syntax);
      CHECK(e.pos() == 4);
    }
  }
  SECTION("unbalanced parenthesis") {
    try {
      parse_process("(1+2", 1);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::syntax);
      CHECK(e.pos() == 4);
    }
  }
  SECTION("lexical error: unknown character") {
    try {
      parse_process("2 $ 3", 1);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::lexical);
      CHECK(e.pos() == 2);
    }
  }
  SECTION("lexical error: unknown identifier") {
    try {
      parse_process("foo(1)", 1);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::lexical);
      CHECK(e.pos() == 0);
    }
  }
  SECTION("dimension error: w index out of range") {
    try {
      parse_process("w2", 1);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseError::Kind::dimension);
      CHECK(e.pos() == 0);
    }
  }
  SECTION("dimension error: w0") {
    CHECK_THROWS_AS(parse_process("w0", 1), ParseError);
  }
  SECTION("component count mismatch") {
    CHECK_THROWS_AS(parse_process("1,2", 1), ParseError);
    CHECK_THROWS_AS(parse_process("1", 2), ParseError);
  }
  SECTION("no implicit multiplication") {
    CHECK_THROWS_AS(parse_process("2 t", 1), ParseError);
    CHECK_THROWS_AS(parse_process("2(3)", 1), ParseError);
  }
  SECTION("trailing garbage") {
    CHECK_THROWS_AS(parse_process("1 2", 1), ParseError);
  }
}

TEST_CASE("evaluation domain errors name the node") {
  SECTION("log of non-positive") {
    try {
      eval1("log(0-1)", 0, 0);
      FAIL("expected EvalError");
    } catch (const EvalError& e) {
      CHECK(e.op() == "log");
      CHECK(e.pos() == 0);
    }
  }
  SECTION("division by zero") {
    try {
      eval1("1/(t-t)", 0, 0);
      FAIL("expected EvalError");
    } catch (const EvalError& e) {
      CHECK(e.op() == "/");
    }
  }
  SECTION("sqrt of negative") { CHECK_THROWS_AS(eval1("sqrt(-1)", 0, 0), EvalError); }
  SECTION("pow domain") {
    CHECK_THROWS_AS(eval1("(-2)^0.5", 0, 0), EvalError);
    CHECK_THROWS_AS(eval1("0^-1", 0, 0), EvalError);
  }
}

namespace {

NodePtr random_ast(std::mt19937_64& gen, int depth, int d) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 4);
  auto n = std::make_shared<ExprNode>();
  switch (pick(gen)) {
    case 0: {
      n->kind = ExprNode::Kind::constant;
      n->value = std::uniform_real_distribution<double>(0.0, 8.0)(gen);
      break;
    }
    case 1:
      n->kind = ExprNode::Kind::scalar_var;
      n->var_name = 't';
      break;
    case 2: {
      n->kind = ExprNode::Kind::brownian_var;
      n->w_index = std::uniform_int_distribution<int>(1, d)(gen);
      break;
    }
    case 3: {
      n->kind = ExprNode::Kind::unary;
      n->uop = static_cast<UnaryOp>(std::uniform_int_distribution<int>(0, 7)(gen));
      n->lhs = random_ast(gen, depth - 1, d);
      break;
    }
    default: {
      n->kind = ExprNode::Kind::binary;
      n->bop = static_cast<BinaryOp>(std::uniform_int_distribution<int>(0, 4)(gen));
      n->lhs = random_ast(gen, depth - 1, d);
      n->rhs = random_ast(gen, depth - 1, d);
      break;
    }
  }
  return n;
}

}  // namespace

TEST_CASE("pretty-print round trip is structurally identical") {
  SECTION("golden strings") {
    for (const char* src : {"2+3*4", "2*3^2", "-2^2", "2^-2", "cos(w1)", "1+t",
                            "(1+t)*w1", "t/(1+t)", "2^3^2", "-(t+1)", "sqrt(abs(w1))"}) {
      const ProcessSpec spec = parse_process(src, 1);
      const std::string printed = to_string(*spec.components[0]);
      const ProcessSpec again = parse_process(printed, 1);
      INFO(src << " -> " << printed);
      CHECK(structurally_equal(*spec.components[0], *again.components[0]));
    }
  }
  SECTION("random ASTs, two components") {
    std::mt19937_64 gen(20240811);
    for (int rep = 0; rep < 500; ++rep) {
      const NodePtr a = random_ast(gen, 4, 2);
      const NodePtr b = random_ast(gen, 3, 2);
      const std::string printed = to_string(*a) + "," + to_string(*b);
      ProcessSpec spec;
      INFO(printed);
      REQUIRE_NOTHROW(spec = parse_process(printed, 2));
      REQUIRE(spec.components.size() == 2);
      CHECK(structurally_equal(*a, *spec.components[0]));
      CHECK(structurally_equal(*b, *spec.components[1]));
    }
  }
}

TEST_CASE("G expression parsing uses variable u") {
  const NodePtr g = parse_scalar_expr("u*u+1", 'u');
  CHECK(eval_scalar(*g, 3.0) == 10.0);
  CHECK_THROWS_AS(parse_scalar_expr("w1", 'u'), ParseError);
  CHECK_THROWS_AS(parse_scalar_expr("t+1", 'u'), ParseError);
}
