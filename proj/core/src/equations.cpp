#include "duhamel/equations.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

namespace duhamel {

namespace {

Rat rat_ipow(const Rat& x, unsigned n) {
  Rat r(1), b = x;
  while (n) {
    if (n & 1u) r *= b;
    b *= b;
    n >>= 1u;
  }
  return r;
}

RatC ratc_upow(const RatC& x, unsigned n) {
  RatC r(1), b = x;
  while (n) {
    if (n & 1u) r *= b;
    b *= b;
    n >>= 1u;
  }
  return r;
}

RatC ratc_ipow(const RatC& x, long e) {
  if (e >= 0) return ratc_upow(x, static_cast<unsigned>(e));
  if (ScalarOps<RatC>::is_zero(x))
    throw std::domain_error("symbol expression: zero raised to a negative power");
  return RatC(1) / ratc_upow(x, static_cast<unsigned>(-e));
}

Cx cx_upow(Cx x, unsigned n) {
  Cx r(1.0, 0.0), b = x;
  while (n) {
    if (n & 1u) r *= b;
    b *= b;
    n >>= 1u;
  }
  return r;
}

Cx cx_ipow(const Cx& x, long e) {
  if (e >= 0) return cx_upow(x, static_cast<unsigned>(e));
  if (ScalarOps<Cx>::is_zero(x))
    throw std::domain_error("symbol expression: zero raised to a negative power");
  return Cx(1.0, 0.0) / cx_upow(x, static_cast<unsigned>(-e));
}

Rat sq_norm(const FreqPoint& xi) {
  Rat s(0);
  for (const Rat& x : xi) s += x * x;
  return s;
}

RatC conj_ratc(const RatC& a) { return RatC(a.re, -a.im); }

SupportSpec axis_support(unsigned d) {
  SupportSpec s;
  s.direction.assign(d, Rat(0));
  s.direction[0] = 1;
  s.min_level = 1;
  return s;
}

}  // namespace

CMat to_cmat(const RatMat& m) {
  CMat out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.a.size(); ++i) out.a[i] = to_cx(m.a[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Frequency expressions.

struct FreqExpr::Node {
  enum class Kind {
    constant,
    variable,
    normsq,
    add,
    sub,
    mul,
    div,
    neg,
    ipow,
    call
  };
  Kind kind = Kind::constant;
  RatC cval;
  unsigned var = 0;
  long exponent = 0;
  std::string fn;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const FreqExpr::Node>;
using NKind = FreqExpr::Node::Kind;

struct Tok {
  enum class K { num, ident, op, end } k = K::end;
  std::string s;
  std::size_t pos = 0;
};

[[noreturn]] void parse_fail(const std::string& what, std::size_t pos) {
  std::ostringstream os;
  os << "symbol expression: " << what << " at position " << pos;
  throw std::invalid_argument(os.str());
}

std::vector<Tok> lex(const std::string& text) {
  std::vector<Tok> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < n && (std::isdigit(static_cast<unsigned char>(text[j])) ||
                       text[j] == '.'))
        ++j;
      out.push_back({Tok::K::num, text.substr(i, j - i), i});
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < n && (std::isalnum(static_cast<unsigned char>(text[j])) ||
                       text[j] == '_'))
        ++j;
      out.push_back({Tok::K::ident, text.substr(i, j - i), i});
      i = j;
      continue;
    }
    if (std::string("+-*/^(),").find(c) != std::string::npos) {
      out.push_back({Tok::K::op, std::string(1, c), i});
      ++i;
      continue;
    }
    parse_fail(std::string("unexpected character '") + c + "'", i);
  }
  out.push_back({Tok::K::end, "", n});
  return out;
}

std::shared_ptr<FreqExpr::Node> make_node(NKind k) {
  auto n = std::make_shared<FreqExpr::Node>();
  n->kind = k;
  return n;
}

struct ExprParser {
  const std::vector<Tok>& t;
  std::size_t i = 0;
  unsigned dim;

  const Tok& peek() const { return t[i]; }
  Tok take() { return t[i++]; }
  bool accept_op(const char* s) {
    if (t[i].k == Tok::K::op && t[i].s == s) {
      ++i;
      return true;
    }
    return false;
  }
  void expect_op(const char* s) {
    if (!accept_op(s)) parse_fail(std::string("expected '") + s + "'", t[i].pos);
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept_op("+"))
        lhs = binary(NKind::add, lhs, parse_term());
      else if (accept_op("-"))
        lhs = binary(NKind::sub, lhs, parse_term());
      else
        return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept_op("*"))
        lhs = binary(NKind::mul, lhs, parse_unary());
      else if (accept_op("/"))
        lhs = binary(NKind::div, lhs, parse_unary());
      else
        return lhs;
    }
  }

  NodePtr parse_unary() {
    if (accept_op("-")) {
      auto n = make_node(NKind::neg);
      n->args = {parse_unary()};
      return n;
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (!accept_op("^")) return base;
    bool negative = accept_op("-");
    const Tok tok = take();
    if (tok.k != Tok::K::num || tok.s.find('.') != std::string::npos)
      parse_fail("expected an integer exponent", tok.pos);
    long e = 0;
    try {
      e = std::stol(tok.s);
    } catch (const std::exception&) {
      parse_fail("exponent out of range", tok.pos);
    }
    if (e > 64) parse_fail("exponent too large (limit 64)", tok.pos);
    auto n = make_node(NKind::ipow);
    n->exponent = negative ? -e : e;
    n->args = {base};
    return n;
  }

  NodePtr binary(NKind k, NodePtr a, NodePtr b) {
    auto n = make_node(k);
    n->args = {std::move(a), std::move(b)};
    return n;
  }

  NodePtr parse_primary() {
    const Tok tok = take();
    if (tok.k == Tok::K::num) {
      auto n = make_node(NKind::constant);
      try {
        n->cval = RatC(rat_from_string(tok.s));
      } catch (const std::invalid_argument&) {
        parse_fail("malformed number '" + tok.s + "'", tok.pos);
      }
      return n;
    }
    if (tok.k == Tok::K::op && tok.s == "(") {
      NodePtr inner = parse_expr();
      expect_op(")");
      return inner;
    }
    if (tok.k == Tok::K::ident) {
      if (peek().k == Tok::K::op && peek().s == "(") return parse_call(tok);
      if (tok.s == "i") {
        auto n = make_node(NKind::constant);
        n->cval = RatC(Rat(0), Rat(1));
        return n;
      }
      if (tok.s == "normsq") return make_node(NKind::normsq);
      return parse_variable(tok);
    }
    parse_fail("expected a value", tok.pos);
  }

  NodePtr parse_variable(const Tok& tok) {
    const std::string& s = tok.s;
    std::string rest;
    if (s == "x" || s == "xi") {
      if (dim != 1)
        parse_fail("bare '" + s + "' needs dimension one; use x1..x" +
                       std::to_string(dim),
                   tok.pos);
      rest = "1";
    } else if (s.size() > 2 && s.compare(0, 2, "xi") == 0) {
      rest = s.substr(2);
    } else if (s.size() > 1 && s[0] == 'x') {
      rest = s.substr(1);
    } else {
      parse_fail("unknown identifier '" + s + "'", tok.pos);
    }
    for (char c : rest)
      if (!std::isdigit(static_cast<unsigned char>(c)))
        parse_fail("unknown identifier '" + s + "'", tok.pos);
    unsigned long idx = 0;
    try {
      idx = std::stoul(rest);
    } catch (const std::exception&) {
      parse_fail("unknown identifier '" + s + "'", tok.pos);
    }
    if (idx < 1 || idx > dim)
      parse_fail("variable '" + s + "' out of range for dimension " +
                     std::to_string(dim),
                 tok.pos);
    auto n = make_node(NKind::variable);
    n->var = static_cast<unsigned>(idx - 1);
    return n;
  }

  NodePtr parse_call(const Tok& name) {
    expect_op("(");
    std::vector<NodePtr> args;
    args.push_back(parse_expr());
    while (accept_op(",")) args.push_back(parse_expr());
    expect_op(")");
    const std::string& f = name.s;
    const bool unary_fn =
        f == "sgn" || f == "abs" || f == "re" || f == "im" || f == "conj";
    if (unary_fn && args.size() != 1)
      parse_fail("'" + f + "' takes one argument", name.pos);
    if (f == "pow" && args.size() != 2)
      parse_fail("'pow' takes two arguments", name.pos);
    if (!unary_fn && f != "pow")
      parse_fail("unknown function '" + f + "'", name.pos);
    auto n = make_node(NKind::call);
    n->fn = f;
    n->args = std::move(args);
    return n;
  }
};

Cx eval_node(const FreqExpr::Node& n, const FreqPoint& xi);

Cx eval_call(const FreqExpr::Node& n, const FreqPoint& xi) {
  const Cx a = eval_node(*n.args[0], xi);
  if (n.fn == "sgn") {
    if (a.imag() != 0.0)
      throw std::domain_error("symbol expression: sgn of a nonreal value");
    return Cx(a.real() > 0.0 ? 1.0 : (a.real() < 0.0 ? -1.0 : 0.0), 0.0);
  }
  if (n.fn == "abs") return Cx(std::abs(a), 0.0);
  if (n.fn == "re") return Cx(a.real(), 0.0);
  if (n.fn == "im") return Cx(a.imag(), 0.0);
  if (n.fn == "conj") return std::conj(a);
  // pow
  const Cx b = eval_node(*n.args[1], xi);
  if (ScalarOps<Cx>::is_zero(a)) {
    if (ScalarOps<Cx>::is_zero(b)) return Cx(1.0, 0.0);
    if (b.real() > 0.0) return Cx(0.0, 0.0);
    throw std::domain_error(
        "symbol expression: zero base with nonpositive exponent");
  }
  return std::pow(a, b);
}

Cx eval_node(const FreqExpr::Node& n, const FreqPoint& xi) {
  using K = NKind;
  switch (n.kind) {
    case K::constant:
      return to_cx(n.cval);
    case K::variable:
      return Cx(static_cast<double>(xi[n.var]), 0.0);
    case K::normsq:
      return Cx(static_cast<double>(sq_norm(xi)), 0.0);
    case K::add:
      return eval_node(*n.args[0], xi) + eval_node(*n.args[1], xi);
    case K::sub:
      return eval_node(*n.args[0], xi) - eval_node(*n.args[1], xi);
    case K::mul:
      return eval_node(*n.args[0], xi) * eval_node(*n.args[1], xi);
    case K::div: {
      const Cx d = eval_node(*n.args[1], xi);
      if (ScalarOps<Cx>::is_zero(d))
        throw std::domain_error("symbol expression: division by zero");
      return eval_node(*n.args[0], xi) / d;
    }
    case K::neg:
      return -eval_node(*n.args[0], xi);
    case K::ipow:
      return cx_ipow(eval_node(*n.args[0], xi), n.exponent);
    case K::call:
      return eval_call(n, xi);
  }
  throw std::logic_error("symbol expression: corrupt node");
}

bool exact_node(const FreqExpr::Node& n, const FreqPoint& xi, RatC& out) {
  using K = NKind;
  switch (n.kind) {
    case K::constant:
      out = n.cval;
      return true;
    case K::variable:
      out = RatC(xi[n.var]);
      return true;
    case K::normsq:
      out = RatC(sq_norm(xi));
      return true;
    case K::add:
    case K::sub:
    case K::mul:
    case K::div: {
      RatC a, b;
      if (!exact_node(*n.args[0], xi, a) || !exact_node(*n.args[1], xi, b))
        return false;
      if (n.kind == K::add) out = a + b;
      else if (n.kind == K::sub) out = a - b;
      else if (n.kind == K::mul) out = a * b;
      else {
        if (ScalarOps<RatC>::is_zero(b))
          throw std::domain_error("symbol expression: division by zero");
        out = a / b;
      }
      return true;
    }
    case K::neg: {
      RatC a;
      if (!exact_node(*n.args[0], xi, a)) return false;
      out = -a;
      return true;
    }
    case K::ipow: {
      RatC a;
      if (!exact_node(*n.args[0], xi, a)) return false;
      out = ratc_ipow(a, n.exponent);
      return true;
    }
    case K::call: {
      RatC a;
      if (!exact_node(*n.args[0], xi, a)) return false;
      if (n.fn == "sgn") {
        if (a.im != 0) return false;
        out = RatC(Rat(a.re > 0 ? 1 : (a.re < 0 ? -1 : 0)));
        return true;
      }
      if (n.fn == "abs") {
        if (a.im != 0) return false;
        out = RatC(a.re < 0 ? Rat(-a.re) : a.re);
        return true;
      }
      if (n.fn == "re") {
        out = RatC(a.re);
        return true;
      }
      if (n.fn == "im") {
        out = RatC(a.im);
        return true;
      }
      if (n.fn == "conj") {
        out = conj_ratc(a);
        return true;
      }
      // pow: exact only for exact integer exponents of moderate size
      RatC e;
      if (!exact_node(*n.args[1], xi, e)) return false;
      if (e.im != 0 || denominator(e.re) != 1) return false;
      const Int num = numerator(e.re);
      if (num > 64 || num < -64) return false;
      out = ratc_ipow(a, static_cast<long>(num));
      return true;
    }
  }
  throw std::logic_error("symbol expression: corrupt node");
}

}  // namespace

FreqExpr FreqExpr::parse(const std::string& text, unsigned dim) {
  if (dim < 1 || dim > 9)
    throw std::invalid_argument("symbol expression: dimension must be 1..9");
  const std::vector<Tok> toks = lex(text);
  ExprParser p{toks, 0, dim};
  NodePtr root = p.parse_expr();
  if (p.peek().k != Tok::K::end) parse_fail("trailing input", p.peek().pos);
  FreqExpr e;
  e.root_ = std::move(root);
  e.text_ = text;
  e.dim_ = dim;
  return e;
}

Cx FreqExpr::eval(const FreqPoint& xi) const {
  if (!root_) throw std::logic_error("symbol expression: empty");
  if (xi.size() != dim_)
    throw std::invalid_argument("symbol expression: frequency dimension mismatch");
  return eval_node(*root_, xi);
}

bool FreqExpr::eval_exact(const FreqPoint& xi, RatC& out) const {
  if (!root_) throw std::logic_error("symbol expression: empty");
  if (xi.size() != dim_)
    throw std::invalid_argument("symbol expression: frequency dimension mismatch");
  return exact_node(*root_, xi, out);
}

// ---------------------------------------------------------------------------
// NonlinearSeries.

void NonlinearSeries::validate() const {
  if (n2 < 1 || n3 < 1)
    throw std::invalid_argument("nonlinear series: channel counts must be >= 1");
  if (k0 < 1) throw std::invalid_argument("nonlinear series: k0 must be >= 1");
  if (!(radius > 0))
    throw std::invalid_argument("nonlinear series: radius must be positive");
  for (const auto& [alpha, coeff] : table) {
    if (alpha.size() != n2)
      throw std::invalid_argument("nonlinear series: multi-index length != n2");
    if (coeff.size() != n3)
      throw std::invalid_argument("nonlinear series: coefficient length != n3");
    if (multi_order(alpha) < k0 + 1)
      throw std::invalid_argument(
          "nonlinear series: term of order <= k0 present");
  }
}

std::map<MultiIndex, std::vector<RatC>> NonlinearSeries::terms_up_to(
    unsigned max_order) const {
  validate();
  std::map<MultiIndex, std::vector<RatC>> out;
  for (const auto& [alpha, coeff] : table)
    if (multi_order(alpha) <= max_order) out.emplace(alpha, coeff);
  if (family) {
    for (auto& [alpha, coeff] : family(max_order)) {
      if (alpha.size() != n2 || coeff.size() != n3)
        throw std::logic_error("nonlinear series: generator shape mismatch");
      const unsigned o = multi_order(alpha);
      if (o < k0 + 1 || o > max_order)
        throw std::logic_error("nonlinear series: generator order out of range");
      if (!out.emplace(std::move(alpha), std::move(coeff)).second)
        throw std::logic_error("nonlinear series: generator duplicates a term");
    }
  }
  return out;
}

Majorants majorants(const NonlinearSeries& H, double r) {
  H.validate();
  if (!std::isfinite(r) || r < 0)
    throw std::invalid_argument("majorants: radius must be finite and >= 0");
  if (r >= H.radius)
    throw std::domain_error("majorants: argument outside the radius");

  Majorants m;
  m.partial = H.infinite();
  auto add_term = [&](const MultiIndex& alpha, const std::vector<RatC>& coeff) {
    double n2sum = 0.0;
    for (const RatC& c : coeff) n2sum += std::norm(to_cx(c));
    const double w = std::sqrt(n2sum);
    if (w == 0.0) return;
    const unsigned o = multi_order(alpha);
    const double p = ipow(r, o - 2);
    m.h += w * p;
    m.h1 += static_cast<double>(o) * w * p;
  };

  for (const auto& [alpha, coeff] : H.table) add_term(alpha, coeff);
  if (H.family) {
    // Partial sum: generate far enough that omitted orders contribute
    // below double precision when r < 1; otherwise a fixed horizon.
    unsigned cap = 64;
    if (r > 0.0 && r < 1.0) {
      const double need = 2.0 + std::log(1e-18) / std::log(r);
      if (need > static_cast<double>(cap))
        cap = need > static_cast<double>(1u << 24) ? (1u << 24)
                                                   : static_cast<unsigned>(need) + 1;
    } else if (r >= 1.0) {
      cap = 1u << 14;
    }
    for (const auto& [alpha, coeff] : H.family(cap)) add_term(alpha, coeff);
  }
  return m;
}

// ---------------------------------------------------------------------------
// SymbolTable / Equation.

void SymbolTable::validate() const {
  if (dim < 1) throw std::invalid_argument("symbol table: dimension must be >= 1");
  if (n1 < 1 || n2 < 1 || n3 < 1)
    throw std::invalid_argument("symbol table: sizes must be >= 1");
  if (!L_hat || !M_hat || !N_hat)
    throw std::invalid_argument("symbol table: missing symbol function");
  if (admissible.direction.size() != dim)
    throw std::invalid_argument(
        "symbol table: grading direction dimension mismatch");
  admissible.validate();

  FreqPoint probe = admissible.direction;
  auto check_shape = [](const CMat& m, unsigned r, unsigned c, const char* who) {
    if (m.rows != r || m.cols != c)
      throw std::logic_error(std::string("symbol table: ") + who +
                             " has the wrong shape");
  };
  check_shape(L_hat(probe), n1, n1, "L");
  check_shape(M_hat(probe), n2, n1, "M");
  check_shape(N_hat(probe), n1, n3, "N");
  auto check_exact = [&](const ExactSymbol& f, unsigned r, unsigned c,
                         const char* who) {
    if (!f) return;
    RatMat m;
    if (f(probe, m) && (m.rows != r || m.cols != c))
      throw std::logic_error(std::string("symbol table: exact ") + who +
                             " has the wrong shape");
  };
  check_exact(L_hat_exact, n1, n1, "L");
  check_exact(M_hat_exact, n2, n1, "M");
  check_exact(N_hat_exact, n1, n3, "N");
}

void Equation::validate() const {
  sym.validate();
  H.validate();
  if (H.n2 != sym.n2 || H.n3 != sym.n3)
    throw std::invalid_argument(
        "equation: nonlinearity channels disagree with the symbol table");
}

// ---------------------------------------------------------------------------
// Built-in catalogue.

namespace {

unsigned pick_dim(const BuiltinParams& p, unsigned fallback, unsigned fixed,
                  const char* name) {
  if (p.dim == 0) return fallback;
  if (fixed != 0 && p.dim != fixed)
    throw std::invalid_argument(std::string(name) +
                                ": dimension is fixed at " + std::to_string(fixed));
  return p.dim;
}

NonlinearSeries power_series(unsigned degree, RatC coeff) {
  NonlinearSeries H;
  H.n2 = 1;
  H.n3 = 1;
  H.k0 = degree - 1;
  H.table.emplace(MultiIndex{degree}, std::vector<RatC>{std::move(coeff)});
  return H;
}

SymbolTable::ExactSymbol scalar_exact(std::function<RatC(const FreqPoint&)> f) {
  return [f = std::move(f)](const FreqPoint& xi, RatMat& out) {
    out = RatMat::scalar(f(xi));
    return true;
  };
}

std::function<CMat(const FreqPoint&)> scalar_float(
    std::function<RatC(const FreqPoint&)> f) {
  return [f = std::move(f)](const FreqPoint& xi) {
    return CMat::scalar(to_cx(f(xi)));
  };
}

std::function<double(const FreqPoint&)> level_profile() {
  return [](const FreqPoint& xi) { return static_cast<double>(xi[0]); };
}

Equation make_ode_square(const BuiltinParams& p) {
  const unsigned d = pick_dim(p, 1, 0, "ode_square");
  Equation eq;
  eq.sym.name = "ode_square";
  eq.sym.dim = d;
  auto zero = [](const FreqPoint&) { return RatC(0); };
  auto one = [](const FreqPoint&) { return RatC(1); };
  eq.sym.L_hat = scalar_float(zero);
  eq.sym.M_hat = scalar_float(one);
  eq.sym.N_hat = scalar_float(one);
  eq.sym.L_hat_exact = scalar_exact(zero);
  eq.sym.M_hat_exact = scalar_exact(one);
  eq.sym.N_hat_exact = scalar_exact(one);
  eq.sym.admissible = axis_support(d);
  eq.H = power_series(2, RatC(1));
  return eq;
}

Equation make_burgers(const BuiltinParams& p) {
  pick_dim(p, 1, 1, "burgers");
  Equation eq;
  eq.sym.name = "burgers";
  eq.sym.dim = 1;
  auto L = [](const FreqPoint& xi) { return RatC(-(xi[0] * xi[0])); };
  auto M = [](const FreqPoint&) { return RatC(1); };
  auto N = [](const FreqPoint& xi) { return RatC(Rat(0), xi[0]); };
  eq.sym.L_hat = scalar_float(L);
  eq.sym.M_hat = scalar_float(M);
  eq.sym.N_hat = scalar_float(N);
  eq.sym.L_hat_exact = scalar_exact(L);
  eq.sym.M_hat_exact = scalar_exact(M);
  eq.sym.N_hat_exact = scalar_exact(N);
  eq.sym.admissible = axis_support(1);
  DecayClaim cl;
  cl.c0 = 0.5;
  cl.C0 = 1.5;
  cl.profile = level_profile();
  eq.sym.claim = cl;
  eq.H = power_series(2, RatC(1));
  return eq;
}

Equation make_complex_heat(const BuiltinParams& p) {
  pick_dim(p, 1, 1, "complex_heat");
  if (p.k < 2)
    throw std::invalid_argument("complex_heat: power degree must be >= 2");
  const RatC e = ratc_from_cx(p.eps);
  Equation eq;
  eq.sym.name = "complex_heat";
  eq.sym.dim = 1;
  auto L = [e](const FreqPoint& xi) { return -(e * RatC(xi[0] * xi[0])); };
  auto one = [](const FreqPoint&) { return RatC(1); };
  eq.sym.L_hat = scalar_float(L);
  eq.sym.M_hat = scalar_float(one);
  eq.sym.N_hat = scalar_float(one);
  eq.sym.L_hat_exact = scalar_exact(L);
  eq.sym.M_hat_exact = scalar_exact(one);
  eq.sym.N_hat_exact = scalar_exact(one);
  eq.sym.admissible = axis_support(1);
  if (p.eps.real() >= 0.0) {
    DecayClaim cl;
    cl.c0 = 0.5;
    cl.C0 = 2.0;
    cl.profile = level_profile();
    eq.sym.claim = cl;
  }
  eq.H = power_series(p.k, RatC(1));
  return eq;
}

Equation make_clm(const BuiltinParams& p) {
  pick_dim(p, 1, 1, "clm");
  const RatC e = ratc_from_cx(p.eps);
  Equation eq;
  eq.sym.name = "clm";
  eq.sym.dim = 1;
  eq.sym.n1 = 1;
  eq.sym.n2 = 2;
  eq.sym.n3 = 1;
  auto L = [e](const FreqPoint& xi) { return -(e * RatC(xi[0] * xi[0])); };
  auto one = [](const FreqPoint&) { return RatC(1); };
  auto Mq = [](const FreqPoint& xi) {
    RatMat m(2, 1);
    m(0, 0) = RatC(1);
    const int s = xi[0] > 0 ? 1 : (xi[0] < 0 ? -1 : 0);
    m(1, 0) = RatC(Rat(0), Rat(s));
    return m;
  };
  eq.sym.L_hat = scalar_float(L);
  eq.sym.M_hat = [Mq](const FreqPoint& xi) { return to_cmat(Mq(xi)); };
  eq.sym.N_hat = scalar_float(one);
  eq.sym.L_hat_exact = scalar_exact(L);
  eq.sym.M_hat_exact = [Mq](const FreqPoint& xi, RatMat& out) {
    out = Mq(xi);
    return true;
  };
  eq.sym.N_hat_exact = scalar_exact(one);
  eq.sym.admissible = axis_support(1);
  if (p.eps.real() >= 0.0) {
    DecayClaim cl;
    cl.c0 = 0.5;
    cl.C0 = 2.5;
    cl.profile = level_profile();
    eq.sym.claim = cl;
  }
  NonlinearSeries H;
  H.n2 = 2;
  H.n3 = 1;
  H.k0 = 1;
  H.table.emplace(MultiIndex{1, 1}, std::vector<RatC>{RatC(1)});
  eq.H = std::move(H);
  return eq;
}

Equation make_kdv(const BuiltinParams& p) {
  pick_dim(p, 1, 1, "kdv");
  Equation eq;
  eq.sym.name = "kdv";
  eq.sym.dim = 1;
  auto L = [](const FreqPoint& xi) {
    return RatC(Rat(0), xi[0] * xi[0] * xi[0]);
  };
  auto M = [](const FreqPoint&) { return RatC(1); };
  auto N = [](const FreqPoint& xi) { return RatC(Rat(0), xi[0]); };
  eq.sym.L_hat = scalar_float(L);
  eq.sym.M_hat = scalar_float(M);
  eq.sym.N_hat = scalar_float(N);
  eq.sym.L_hat_exact = scalar_exact(L);
  eq.sym.M_hat_exact = scalar_exact(M);
  eq.sym.N_hat_exact = scalar_exact(N);
  eq.sym.admissible = axis_support(1);
  DecayClaim cl;
  cl.c0 = 0.5;
  cl.C0 = 1.5;
  cl.profile = level_profile();
  eq.sym.claim = cl;
  eq.H = power_series(2, RatC(3));
  return eq;
}

Equation make_nls_star(const BuiltinParams& p) {
  pick_dim(p, 1, 1, "nls_star");
  const RatC a = ratc_from_cx(p.alpha);
  const RatC minus_i_a = RatC(Rat(0), Rat(-1)) * a;
  const RatC i_abar = RatC(Rat(0), Rat(1)) * conj_ratc(a);
  Equation eq;
  eq.sym.name = "nls_star";
  eq.sym.dim = 1;
  eq.sym.n1 = 2;
  eq.sym.n2 = 2;
  eq.sym.n3 = 2;
  auto Lq = [](const FreqPoint& xi) {
    RatMat m(2, 2);
    const Rat q = xi[0] * xi[0];
    m(0, 0) = RatC(Rat(0), -q);
    m(1, 1) = RatC(Rat(0), q);
    return m;
  };
  eq.sym.L_hat = [Lq](const FreqPoint& xi) { return to_cmat(Lq(xi)); };
  eq.sym.M_hat = [](const FreqPoint&) { return CMat::identity(2); };
  eq.sym.N_hat = [](const FreqPoint&) { return CMat::identity(2); };
  eq.sym.L_hat_exact = [Lq](const FreqPoint& xi, RatMat& out) {
    out = Lq(xi);
    return true;
  };
  auto id2 = [](const FreqPoint&, RatMat& out) {
    out = RatMat::identity(2);
    return true;
  };
  eq.sym.M_hat_exact = id2;
  eq.sym.N_hat_exact = id2;
  eq.sym.admissible = axis_support(1);
  DecayClaim cl;
  cl.c0 = 0.5;
  cl.C0 = 2.0;
  cl.profile = level_profile();
  eq.sym.claim = cl;
  NonlinearSeries H;
  H.n2 = 2;
  H.n3 = 2;
  H.k0 = 2;
  H.table.emplace(MultiIndex{2, 1}, std::vector<RatC>{minus_i_a, RatC(0)});
  H.table.emplace(MultiIndex{1, 2}, std::vector<RatC>{RatC(0), i_abar});
  eq.H = std::move(H);
  return eq;
}

Equation make_ns_incompressible(const BuiltinParams& p) {
  const unsigned d = pick_dim(p, 2, 0, "ns_incompressible");
  if (d < 2)
    throw std::invalid_argument("ns_incompressible: dimension must be >= 2");
  const RatC e1 = ratc_from_cx(p.eps1);
  const RatC ep = ratc_from_cx(p.eps_perp);
  Equation eq;
  eq.sym.name = "ns_incompressible";
  eq.sym.dim = d;
  eq.sym.n1 = d;
  eq.sym.n2 = d;
  eq.sym.n3 = d;
  auto Lq = [e1, ep, d](const FreqPoint& xi) {
    Rat perp(0);
    for (unsigned k = 1; k < d; ++k) perp += xi[k] * xi[k];
    const RatC lam = -(e1 * RatC(xi[0] * xi[0]) + ep * RatC(perp));
    RatMat m(d, d);
    for (unsigned i = 0; i < d; ++i) m(i, i) = lam;
    return m;
  };
  auto Nq = [d](const FreqPoint& xi) {
    RatMat m(d, d);
    for (unsigned j = 0; j < d; ++j)
      for (unsigned k = 0; k < d; ++k) m(j, k) = RatC(Rat(0), xi[k] - xi[j]);
    return m;
  };
  eq.sym.L_hat = [Lq](const FreqPoint& xi) { return to_cmat(Lq(xi)); };
  eq.sym.M_hat = [d](const FreqPoint&) { return CMat::identity(d); };
  eq.sym.N_hat = [Nq](const FreqPoint& xi) { return to_cmat(Nq(xi)); };
  eq.sym.L_hat_exact = [Lq](const FreqPoint& xi, RatMat& out) {
    out = Lq(xi);
    return true;
  };
  eq.sym.M_hat_exact = [d](const FreqPoint&, RatMat& out) {
    out = RatMat::identity(d);
    return true;
  };
  eq.sym.N_hat_exact = [Nq](const FreqPoint& xi, RatMat& out) {
    out = Nq(xi);
    return true;
  };
  eq.sym.admissible = axis_support(d);
  eq.sym.semilinear_orthogonal = p.eps_perp.real() > 0.0;
  if (p.eps1.real() >= 0.0 && p.eps_perp.real() >= 0.0) {
    DecayClaim cl;
    cl.c0 = 0.5;
    cl.C0 = 2.0;
    cl.cone_ratio = 2.0;
    cl.profile = [d](const FreqPoint& xi) {
      const double t = static_cast<double>(xi[0]);
      return 4.0 * static_cast<double>(d) * (t + t * t);
    };
    eq.sym.claim = cl;
  }
  NonlinearSeries H;
  H.n2 = d;
  H.n3 = d;
  H.k0 = 1;
  for (unsigned k = 0; k < d; ++k) {
    MultiIndex a(d, 0);
    a[k] = 2;
    std::vector<RatC> c(d);
    c[k] = RatC(1);
    H.table.emplace(std::move(a), std::move(c));
  }
  eq.H = std::move(H);
  return eq;
}

Equation make_heat_cascade(const BuiltinParams& p) {
  const unsigned d = pick_dim(p, 1, 0, "heat_cascade");
  const std::string expr = p.L_expr.empty() ? "normsq" : p.L_expr;
  const FreqExpr ex = FreqExpr::parse(expr, d);
  Equation eq;
  eq.sym.name = "heat_cascade";
  eq.sym.dim = d;
  auto one = [](const FreqPoint&) { return RatC(1); };
  eq.sym.L_hat = [ex](const FreqPoint& xi) { return CMat::scalar(ex.eval(xi)); };
  eq.sym.M_hat = scalar_float(one);
  eq.sym.N_hat = scalar_float(one);
  eq.sym.L_hat_exact = [ex](const FreqPoint& xi, RatMat& out) {
    RatC v;
    if (!ex.eval_exact(xi, v)) return false;
    out = RatMat::scalar(std::move(v));
    return true;
  };
  eq.sym.M_hat_exact = scalar_exact(one);
  eq.sym.N_hat_exact = scalar_exact(one);
  eq.sym.admissible = axis_support(d);
  eq.H = power_series(2, RatC(1));
  return eq;
}

Equation make_lacunary(const BuiltinParams& p) {
  pick_dim(p, 1, 1, "lacunary");
  Equation eq;
  eq.sym.name = "lacunary";
  eq.sym.dim = 1;
  auto one = [](const FreqPoint&) { return RatC(1); };
  eq.sym.L_hat = scalar_float(one);
  eq.sym.M_hat = scalar_float(one);
  eq.sym.N_hat = scalar_float(one);
  eq.sym.L_hat_exact = scalar_exact(one);
  eq.sym.M_hat_exact = scalar_exact(one);
  eq.sym.N_hat_exact = scalar_exact(one);
  eq.sym.admissible = axis_support(1);
  NonlinearSeries H;
  H.n2 = 1;
  H.n3 = 1;
  H.k0 = 1;
  H.radius = 1.0;
  H.family = [](unsigned max_order) {
    std::vector<std::pair<MultiIndex, std::vector<RatC>>> out;
    for (unsigned long long q = 2; q <= max_order; q *= 2)
      out.emplace_back(MultiIndex{static_cast<unsigned>(q)},
                       std::vector<RatC>{RatC(1)});
    return out;
  };
  eq.H = std::move(H);
  return eq;
}

Equation make_fractional_heat(const BuiltinParams& p) {
  std::vector<MultiIndex> alist = p.alist;
  if (alist.empty()) alist = {MultiIndex{1}, MultiIndex{0}};
  const unsigned m = static_cast<unsigned>(alist.size());
  if (m < 2)
    throw std::invalid_argument(
        "fractional_heat: need at least two derivative channels");
  const unsigned d = static_cast<unsigned>(alist[0].size());
  if (d < 1)
    throw std::invalid_argument("fractional_heat: empty derivative multi-index");
  for (const MultiIndex& a : alist)
    if (a.size() != d)
      throw std::invalid_argument(
          "fractional_heat: inconsistent derivative multi-index lengths");
  if (p.dim != 0 && p.dim != d)
    throw std::invalid_argument(
        "fractional_heat: dimension disagrees with the derivative list");
  if (!(p.s.real() >= 0.0))
    throw std::invalid_argument(
        "fractional_heat: dissipation exponent needs Re s >= 0");
  const Cx eps = p.eps;
  const Cx s = p.s;

  Equation eq;
  eq.sym.name = "fractional_heat";
  eq.sym.dim = d;
  eq.sym.n1 = 1;
  eq.sym.n2 = m;
  eq.sym.n3 = 1;
  eq.sym.L_hat = [eps, s](const FreqPoint& xi) {
    const Rat q = sq_norm(xi);
    if (q == 0) {
      const Cx v = ScalarOps<Cx>::is_zero(s) ? eps : Cx(0.0, 0.0);
      return CMat::scalar(v);
    }
    const Cx mag = std::pow(Cx(static_cast<double>(q), 0.0), s * 0.5);
    return CMat::scalar(eps * mag);
  };
  // Exact when |xi|^s is rational: s a nonnegative real integer that is
  // even, or any nonnegative real integer in dimension one.
  const bool s_int = s.imag() == 0.0 && s.real() >= 0.0 &&
                     s.real() == std::floor(s.real()) && s.real() <= 64.0;
  const long s_e = s_int ? static_cast<long>(s.real()) : 0;
  if (s_int && (s_e % 2 == 0 || d == 1)) {
    const RatC eq_eps = ratc_from_cx(eps);
    eq.sym.L_hat_exact = [eq_eps, s_e, d](const FreqPoint& xi, RatMat& out) {
      Rat mag;
      if (s_e % 2 == 0) {
        mag = rat_ipow(sq_norm(xi), static_cast<unsigned>(s_e / 2));
      } else {
        Rat ax = xi[0] < 0 ? Rat(-xi[0]) : xi[0];
        mag = rat_ipow(ax, static_cast<unsigned>(s_e));
      }
      out = RatMat::scalar(eq_eps * RatC(mag));
      return true;
    };
  }
  auto Mq = [alist, m, d](const FreqPoint& xi) {
    RatMat out(m, 1);
    for (unsigned j = 0; j < m; ++j) {
      RatC prod(1);
      for (unsigned k = 0; k < d; ++k)
        if (alist[j][k] > 0)
          prod *= ratc_upow(RatC(Rat(0), xi[k]), alist[j][k]);
      out(j, 0) = prod;
    }
    return out;
  };
  eq.sym.M_hat = [Mq](const FreqPoint& xi) { return to_cmat(Mq(xi)); };
  eq.sym.M_hat_exact = [Mq](const FreqPoint& xi, RatMat& out) {
    out = Mq(xi);
    return true;
  };
  auto one = [](const FreqPoint&) { return RatC(1); };
  eq.sym.N_hat = scalar_float(one);
  eq.sym.N_hat_exact = scalar_exact(one);
  eq.sym.admissible = axis_support(d);

  unsigned max_total = 0, max_orth = 0;
  for (const MultiIndex& a : alist) {
    max_total = std::max(max_total, multi_order(a));
    max_orth = std::max(max_orth, multi_order(a) - a[0]);
  }
  eq.sym.semilinear_orthogonal =
      s.real() > 0.0 && static_cast<double>(max_orth) < s.real();
  if (s.real() >= 1.0 && s.real() <= 2.0 && max_total <= 2) {
    DecayClaim cl;
    cl.c0 = 0.5;
    cl.C0 = 2.0 + std::sqrt(static_cast<double>(m));
    cl.cone_ratio = 2.0;
    const double scale =
        8.0 * static_cast<double>(d) * (1.0 + std::abs(eps));
    cl.profile = [scale](const FreqPoint& xi) {
      const double t = static_cast<double>(xi[0]);
      return scale * (t + t * t);
    };
    eq.sym.claim = cl;
  }

  NonlinearSeries H;
  H.n2 = m;
  H.n3 = 1;
  H.k0 = m - 1;
  H.table.emplace(MultiIndex(m, 1), std::vector<RatC>{RatC(1)});
  eq.H = std::move(H);
  return eq;
}

Equation make_nlkg(const BuiltinParams& p) {
  pick_dim(p, 1, 1, "nlkg");
  const Rat c2 = rat_from_double(p.c) * rat_from_double(p.c);
  Equation eq;
  eq.sym.name = "nlkg";
  eq.sym.dim = 1;
  eq.sym.n1 = 3;
  eq.sym.n2 = 1;
  eq.sym.n3 = 1;
  auto Lq = [c2](const FreqPoint& xi) {
    RatMat m(3, 3);
    m(0, 2) = RatC(1);
    m(1, 2) = RatC(Rat(0), xi[0]);
    m(2, 0) = RatC(-c2);
    m(2, 1) = RatC(Rat(0), xi[0]);
    return m;
  };
  eq.sym.L_hat = [Lq](const FreqPoint& xi) { return to_cmat(Lq(xi)); };
  eq.sym.L_hat_exact = [Lq](const FreqPoint& xi, RatMat& out) {
    out = Lq(xi);
    return true;
  };
  eq.sym.M_hat = [](const FreqPoint&) {
    CMat m(1, 3);
    m(0, 0) = Cx(1.0, 0.0);
    return m;
  };
  eq.sym.M_hat_exact = [](const FreqPoint&, RatMat& out) {
    out = RatMat(1, 3);
    out(0, 0) = RatC(1);
    return true;
  };
  eq.sym.N_hat = [](const FreqPoint&) {
    CMat m(3, 1);
    m(2, 0) = Cx(1.0, 0.0);
    return m;
  };
  eq.sym.N_hat_exact = [](const FreqPoint&, RatMat& out) {
    out = RatMat(3, 1);
    out(2, 0) = RatC(1);
    return true;
  };
  eq.sym.admissible = axis_support(1);
  eq.H = power_series(2, RatC(1));
  return eq;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"ode_square",      "burgers",   "complex_heat",
          "clm",             "kdv",       "nls_star",
          "ns_incompressible", "heat_cascade", "lacunary",
          "fractional_heat", "nlkg"};
}

Equation builtin(const std::string& name, const BuiltinParams& params) {
  Equation eq;
  if (name == "ode_square") eq = make_ode_square(params);
  else if (name == "burgers") eq = make_burgers(params);
  else if (name == "complex_heat") eq = make_complex_heat(params);
  else if (name == "clm") eq = make_clm(params);
  else if (name == "kdv") eq = make_kdv(params);
  else if (name == "nls_star") eq = make_nls_star(params);
  else if (name == "ns_incompressible") eq = make_ns_incompressible(params);
  else if (name == "heat_cascade") eq = make_heat_cascade(params);
  else if (name == "lacunary") eq = make_lacunary(params);
  else if (name == "fractional_heat") eq = make_fractional_heat(params);
  else if (name == "nlkg") eq = make_nlkg(params);
  else {
    std::ostringstream os;
    os << "unknown equation '" << name << "'; available:";
    for (const std::string& s : builtin_names()) os << ' ' << s;
    throw std::invalid_argument(os.str());
  }
  eq.validate();
  return eq;
}

// ---------------------------------------------------------------------------
// Claim spot check.

namespace {

Eigen::MatrixXcd to_eigen(const CMat& m) {
  Eigen::MatrixXcd e(m.rows, m.cols);
  for (unsigned i = 0; i < m.rows; ++i)
    for (unsigned j = 0; j < m.cols; ++j) e(i, j) = m(i, j);
  return e;
}

double operator_norm(const CMat& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(to_eigen(m));
  return svd.singularValues()(0);
}

double max_hermitian_eigenvalue(const CMat& m) {
  const Eigen::MatrixXcd e = to_eigen(m);
  const Eigen::MatrixXcd herm = 0.5 * (e + e.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm,
                                                     Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

ClaimCheck spot_check_claim(const SymbolTable& sym, std::uint64_t seed,
                            std::size_t samples, double radius) {
  sym.validate();
  ClaimCheck r;
  if (!sym.claim) return r;
  const DecayClaim& cl = *sym.claim;
  if (!(cl.c0 > 0.0 && cl.c0 <= 1.0) || !(cl.C0 > 0.0) || !cl.profile)
    throw std::invalid_argument("spot_check_claim: malformed claim");
  if (!(radius > 0.0) || samples == 0)
    throw std::invalid_argument("spot_check_claim: bad sampling parameters");

  std::size_t axis = sym.dim;
  for (std::size_t j = 0; j < sym.dim; ++j) {
    if (sym.admissible.direction[j] != 0) {
      if (axis != sym.dim)
        throw std::invalid_argument(
            "spot_check_claim: needs an axis-aligned grading direction");
      axis = j;
    }
  }

  r.checked = true;
  r.samples = samples;
  std::mt19937_64 g(seed);
  auto uniform = [&g]() {
    return static_cast<double>(g() >> 11) * 0x1p-53;
  };

  double worst_combined = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < samples; ++n) {
    // Level in (0, radius], lattice points with denominator 64.
    const long num = 1 + static_cast<long>(uniform() * (radius * 64.0 - 1.0));
    const Rat lvl(num, 64);
    FreqPoint xi(sym.dim, Rat(0));
    xi[axis] = lvl / sym.admissible.direction[axis];
    const double bound =
        cl.cone_ratio > 0.0 ? cl.cone_ratio * static_cast<double>(lvl) : radius;
    const long mb = static_cast<long>(std::floor(bound * 64.0));
    for (std::size_t j = 0; j < sym.dim; ++j) {
      if (j == axis) continue;
      long mj = std::lround((2.0 * uniform() - 1.0) * bound * 64.0);
      mj = std::clamp(mj, -mb, mb);
      xi[j] = Rat(mj, 64);
    }

    const double p = cl.profile(xi);
    double decay, size;
    if (!(p >= 0.0)) {
      decay = size = -std::numeric_limits<double>::infinity();
    } else {
      const double lam = max_hermitian_eigenvalue(sym.L_hat(xi));
      decay = (1.0 - cl.c0) * p - lam;
      const double mn = operator_norm(sym.M_hat(xi)) +
                        operator_norm(sym.N_hat(xi));
      size = cl.C0 * std::hypot(1.0, p) - mn;
    }
    r.worst_decay_margin = std::min(r.worst_decay_margin, decay);
    r.worst_size_margin = std::min(r.worst_size_margin, size);
    const double combined = std::min(decay, size);
    if (combined < worst_combined) {
      worst_combined = combined;
      r.worst_point = xi;
    }
    if (decay < 0.0 || size < 0.0) r.ok = false;
  }
  return r;
}

}  // namespace duhamel
