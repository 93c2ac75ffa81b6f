#pragma once

/*
 * Symbol tables and analytic nonlinearities.
 *
 * The library studies evolution equations written on the Fourier side as
 *
 *     d/dt uh(t, xi) = Lh(xi) uh + Nh(xi) [ H(Mh uh) ](t, xi),
 *
 * where Lh, Mh, Nh are matrix-valued frequency symbols of shapes n1 x n1,
 * n2 x n1 and n1 x n3, and H : C^{n2} -> C^{n3} is analytic near 0 with
 * neither constant nor linear part.  Applied to atomic spectra, every
 * product inside H becomes a convolution, so frequency levels only grow
 * and all computations below a level budget are finite and exact.
 *
 * - SymbolTable bundles the three symbols (with optional exact
 *   Gaussian-rational evaluation paths), the half-space grading
 *   convention, and an optional decay claim
 *       lambda_max((Lh + Lh^*)/2)(xi) <= (1 - c0) p(xi),
 *       ||Nh(xi)|| + ||Mh(xi)||      <= C0 <p(xi)>,
 *   which spot_check_claim verifies numerically on random admissible
 *   frequencies.
 * - NonlinearSeries stores the Taylor coefficients
 *       c_alpha = H^{(alpha)}(0) / alpha!   (|alpha| >= k0 + 1 >= 2)
 *   as exact Gaussian rationals, either in a finite table or through a
 *   generator for infinite families; majorants() sums the associated
 *   scalar dominating series.
 * - evaluate_nonlinearity applies H to an atomic spectrum exactly up to a
 *   level budget.
 * - builtin() constructs the catalogue of ready-made equations.
 * - FreqExpr is a tiny arithmetic expression language over the frequency
 *   variables, used for user-supplied symbols.
 */

#include <cstdint>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "duhamel/exppoly.hpp"
#include "duhamel/scalar.hpp"
#include "duhamel/spectral.hpp"

namespace duhamel {

// ---------------------------------------------------------------------------
// Small dense matrices (row major).  CMat carries floating complex entries,
// RatMat exact Gaussian-rational entries; both are deliberately minimal.

struct CMat {
  unsigned rows = 0, cols = 0;
  std::vector<Cx> a;

  CMat() = default;
  CMat(unsigned r, unsigned c) : rows(r), cols(c), a(std::size_t(r) * c) {}

  Cx& operator()(unsigned i, unsigned j) { return a[std::size_t(i) * cols + j]; }
  const Cx& operator()(unsigned i, unsigned j) const {
    return a[std::size_t(i) * cols + j];
  }

  static CMat identity(unsigned n) {
    CMat m(n, n);
    for (unsigned i = 0; i < n; ++i) m(i, i) = Cx(1.0, 0.0);
    return m;
  }
  static CMat scalar(Cx v) {
    CMat m(1, 1);
    m(0, 0) = v;
    return m;
  }
};

struct RatMat {
  unsigned rows = 0, cols = 0;
  std::vector<RatC> a;

  RatMat() = default;
  RatMat(unsigned r, unsigned c) : rows(r), cols(c), a(std::size_t(r) * c) {}

  RatC& operator()(unsigned i, unsigned j) { return a[std::size_t(i) * cols + j]; }
  const RatC& operator()(unsigned i, unsigned j) const {
    return a[std::size_t(i) * cols + j];
  }

  static RatMat identity(unsigned n) {
    RatMat m(n, n);
    for (unsigned i = 0; i < n; ++i) m(i, i) = RatC(1);
    return m;
  }
  static RatMat scalar(RatC v) {
    RatMat m(1, 1);
    m(0, 0) = std::move(v);
    return m;
  }

  bool is_diagonal() const {
    for (unsigned i = 0; i < rows; ++i)
      for (unsigned j = 0; j < cols; ++j)
        if (i != j && !ScalarOps<RatC>::is_zero((*this)(i, j))) return false;
    return true;
  }
};

CMat to_cmat(const RatMat& m);

// ---------------------------------------------------------------------------
// Frequency expressions: a tiny arithmetic language over xi used to describe
// user-supplied symbols.
//
//   expr    := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' ['-'] integer)?
//   primary := number | 'i' | variable | 'normsq'
//            | fn '(' expr [',' expr] ')' | '(' expr ')'
//
// Numbers are integers or finite decimals (parsed exactly); 'i' is the
// imaginary unit; variables are x1..x9 (xi1..xi9 also accepted, and a bare
// 'x'/'xi' when the dimension is one); 'normsq' is |xi|^2.  Functions:
// sgn, abs, re, im, conj (one argument) and pow (two arguments).
// Evaluation follows the exact Gaussian-rational path whenever every
// operation preserves exactness (integer powers, sgn/abs of real values,
// field operations); eval_exact reports whether it did.

class FreqExpr {
 public:
  FreqExpr() = default;

  static FreqExpr parse(const std::string& text, unsigned dim);

  bool empty() const { return !root_; }
  unsigned dim() const { return dim_; }
  const std::string& text() const { return text_; }

  Cx eval(const FreqPoint& xi) const;
  // True when the value is an exact Gaussian rational along this tree.
  bool eval_exact(const FreqPoint& xi, RatC& out) const;

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
  unsigned dim_ = 0;
};

// ---------------------------------------------------------------------------
// Analytic nonlinearity H as a Taylor coefficient table.

using MultiIndex = std::vector<unsigned>;

inline unsigned multi_order(const MultiIndex& a) {
  unsigned s = 0;
  for (unsigned x : a) s += x;
  return s;
}

struct NonlinearSeries {
  unsigned n2 = 1;  // input channels
  unsigned n3 = 1;  // output channels
  unsigned k0 = 1;  // every stored order is >= k0 + 1
  // Majorant radius: majorants() refuses r >= radius.
  double radius = std::numeric_limits<double>::infinity();

  // Finite part: multi-index alpha (length n2) -> coefficient in C^{n3}.
  std::map<MultiIndex, std::vector<RatC>> table;

  // Optional generator for infinite families: returns every term of order
  // <= max_order that is not already in the table.  Must be pure (same
  // output for the same argument).
  std::function<std::vector<std::pair<MultiIndex, std::vector<RatC>>>(unsigned)>
      family;

  bool infinite() const { return static_cast<bool>(family); }

  // Table plus generated terms of order <= max_order, validated.
  std::map<MultiIndex, std::vector<RatC>> terms_up_to(unsigned max_order) const;

  void validate() const;
};

// Dominating sums of the coefficient table at radius r:
//   h  = sum ||c_alpha||_2 r^{|alpha| - 2},
//   h1 = sum |alpha| ||c_alpha||_2 r^{|alpha| - 2}.
// For infinite families the values are partial sums and `partial` is set.
// Throws when r < 0 or r >= radius.
struct Majorants {
  double h = 0.0;
  double h1 = 0.0;
  bool partial = false;
};

Majorants majorants(const NonlinearSeries& H, double r);

// ---------------------------------------------------------------------------
// Symbol tables.

// Claimed decay/growth envelope for the symbols (see the header comment).
struct DecayClaim {
  double c0 = 0.5;  // in (0, 1]
  double C0 = 1.0;
  std::function<double(const FreqPoint&)> profile;  // p(xi) >= 0
  // Sampling region for the numerical check: when positive, transverse
  // coordinates are restricted to |xi_k| <= cone_ratio * level(xi).
  double cone_ratio = 0.0;
};

struct SymbolTable {
  std::string name;
  unsigned dim = 1;  // frequency dimension d
  unsigned n1 = 1, n2 = 1, n3 = 1;

  std::function<CMat(const FreqPoint&)> L_hat, M_hat, N_hat;

  // Optional exact evaluation paths; return false at points where the
  // symbol is not a Gaussian-rational matrix.
  using ExactSymbol = std::function<bool(const FreqPoint&, RatMat&)>;
  ExactSymbol L_hat_exact, M_hat_exact, N_hat_exact;

  // Half-space grading convention for admissible data (direction only;
  // callers adjust min_level to their data).
  SupportSpec admissible;

  // True when the nonlinear coupling is small in the directions orthogonal
  // to the grading direction.
  bool semilinear_orthogonal = false;

  std::optional<DecayClaim> claim;

  void validate() const;
};

struct Equation {
  SymbolTable sym;
  NonlinearSeries H;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Built-in catalogue.

struct BuiltinParams {
  Cx eps{1.0, 0.0};        // diffusion coefficient (complex allowed)
  unsigned k = 2;          // power nonlinearity degree
  Cx alpha{1.0, 0.0};      // cubic coupling coefficient
  unsigned dim = 0;        // frequency dimension; 0 = equation default
  Cx eps1{1.0, 0.0};       // dissipation along the grading direction
  Cx eps_perp{1.0, 0.0};   // dissipation in the transverse directions
  Cx s{2.0, 0.0};          // fractional dissipation exponent
  std::vector<MultiIndex> alist;  // derivative multi-indices of the channels
  double c = 1.0;          // dispersive mass parameter
  std::string L_expr;      // symbol expression for user-supplied growth
};

// Catalogue names: ode_square, burgers, complex_heat, clm, kdv, nls_star,
// ns_incompressible, heat_cascade, lacunary, fractional_heat, nlkg.
Equation builtin(const std::string& name, const BuiltinParams& params = {});
std::vector<std::string> builtin_names();

// ---------------------------------------------------------------------------
// Numerical spot check of a decay claim on random admissible frequencies
// (lattice points with denominator 64).  Requires an axis-aligned grading
// direction.  A table without a claim yields checked = false, ok = true.

struct ClaimCheck {
  bool checked = false;
  bool ok = true;
  std::size_t samples = 0;
  // Smallest observed slack of each inequality (negative = violation).
  double worst_decay_margin = std::numeric_limits<double>::infinity();
  double worst_size_margin = std::numeric_limits<double>::infinity();
  FreqPoint worst_point;  // attains the smaller of the two margins
};

ClaimCheck spot_check_claim(const SymbolTable& sym, std::uint64_t seed,
                            std::size_t samples = 256, double radius = 8.0);

// ---------------------------------------------------------------------------
// Applying H to atomic spectra.

namespace detail {

template <class>
inline constexpr bool always_false_v = false;

// Multiplies a coefficient of scalar type S by an exact Gaussian rational.
template <class S>
S ratc_scale(const S& a, const RatC& c) {
  if constexpr (std::is_same_v<S, RatC>)
    return a * c;
  else if constexpr (std::is_same_v<S, Cx>)
    return a * to_cx(c);
  else if constexpr (std::is_same_v<S, ExpPoly<RatC>>)
    return a.scaled(c);
  else if constexpr (std::is_same_v<S, ExpPoly<Cx>>)
    return a.scaled(to_cx(c));
  else
    static_assert(always_false_v<S>, "unsupported coefficient type");
}

}  // namespace detail

// H applied to an atomic spectrum v with n2 components per atom, truncated
// at the level budget.  Every atom of v must lie strictly inside the half
// space (level > 0); with delta_min the least input level, only terms of
// order <= budget / delta_min can reach the budget, so the result is exact:
// it agrees with the full series truncated at the budget.  Intermediate
// truncation is sound because convolution only increases levels.
template <class S>
VecSpectrum<S> evaluate_nonlinearity(const NonlinearSeries& H,
                                     const VecSpectrum<S>& v,
                                     const SupportSpec& spec,
                                     const Rat& budget) {
  H.validate();
  spec.validate();
  const std::size_t d = spec.direction.size();

  bool have_min = false;
  Rat delta_min(0);
  for (const auto& [xi, comps] : v) {
    if (xi.size() != d)
      throw std::invalid_argument(
          "evaluate_nonlinearity: frequency dimension mismatch");
    if (comps.size() != H.n2)
      throw std::invalid_argument(
          "evaluate_nonlinearity: atom has wrong channel count");
    const Rat l = level(xi, spec);
    if (!(l > 0))
      throw std::invalid_argument(
          "evaluate_nonlinearity: atom on or below the support boundary");
    if (!have_min || l < delta_min) {
      delta_min = l;
      have_min = true;
    }
  }
  if (!have_min || budget <= 0) return {};

  const Rat order_bound = budget / delta_min;
  if (order_bound < 2) return {};
  if (order_bound > Rat(1u << 24))
    throw std::invalid_argument(
        "evaluate_nonlinearity: level budget admits too many orders");
  const Int whole = numerator(order_bound) / denominator(order_bound);
  const unsigned max_order = static_cast<unsigned>(whole);

  // Channel spectra, truncated at the budget up front.
  std::vector<ScalarSpectrum<S>> chan(H.n2);
  for (const auto& [xi, comps] : v)
    for (unsigned j = 0; j < H.n2; ++j)
      if (!coeff_is_zero(comps[j])) chan[j].emplace(xi, comps[j]);
  for (auto& c : chan) c = truncate(c, spec, budget);

  // Lazy convolution powers per channel: powers[j][k] = chan[j]^{*k}.
  std::vector<std::vector<ScalarSpectrum<S>>> powers(H.n2);
  auto channel_power = [&](unsigned j, unsigned k) -> const ScalarSpectrum<S>& {
    auto& p = powers[j];
    if (p.empty()) p = {ScalarSpectrum<S>{}, chan[j]};
    while (p.size() <= k) {
      p.push_back(truncate(convolve(p.back(), chan[j]), spec, budget));
    }
    return p[k];
  };

  VecSpectrum<S> out;
  for (const auto& [alpha, coeff] : H.terms_up_to(max_order)) {
    ScalarSpectrum<S> prod;
    bool first = true, dead = false;
    for (unsigned j = 0; j < H.n2 && !dead; ++j) {
      if (alpha[j] == 0) continue;
      const auto& p = channel_power(j, alpha[j]);
      if (p.empty()) {
        dead = true;
        break;
      }
      if (first) {
        prod = p;
        first = false;
      } else {
        prod = truncate(convolve(prod, p), spec, budget);
      }
      if (prod.empty()) dead = true;
    }
    if (dead || first) continue;
    for (const auto& [xi, s] : prod) {
      auto [it, inserted] = out.try_emplace(xi, std::vector<S>(H.n3));
      for (unsigned m = 0; m < H.n3; ++m)
        if (!ScalarOps<RatC>::is_zero(coeff[m]))
          it->second[m] += detail::ratc_scale(s, coeff[m]);
    }
  }

  // Drop rows where every component cancelled.
  for (auto it = out.begin(); it != out.end();) {
    bool all_zero = true;
    for (const auto& s : it->second)
      if (!coeff_is_zero(s)) {
        all_zero = false;
        break;
      }
    it = all_zero ? out.erase(it) : std::next(it);
  }
  return out;
}

}  // namespace duhamel
