#pragma once

/*
 * Exponential polynomials: finite sums  sum_j c_j t^{m_j} e^{lambda_j t}
 * with coefficients and rates in a scalar field S (Cx or RatC).
 *
 * The class is closed under +, *, d/dt and under the Duhamel map
 *
 *     duhamel(lambda0, p)(t) = int_0^t e^{(t-s) lambda0} p(s) ds,
 *
 * which is again an exponential polynomial:
 *   - resonant term (lambda == lambda0):
 *         c s^m e^{lambda0 s}  ->  c t^{m+1} e^{lambda0 t} / (m+1)
 *   - otherwise, with beta = lambda - lambda0, integration by parts gives
 *         J(0) = (e^{beta t} - 1)/beta,
 *         J(m) = t^m e^{beta t}/beta - (m/beta) J(m-1),
 *     and the integral equals e^{lambda0 t} J(m).
 *
 * Terms are kept canonical: sorted by (rate, power), coefficients merged,
 * exact zeros dropped.  Over RatC all operations are exact.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "duhamel/scalar.hpp"

namespace duhamel {

enum class ResonancePolicy {
  exact,  // rates compare with ==
  fuzzy   // rates within rel_tol are merged before integrating (Cx only)
};

struct DuhamelOptions {
  ResonancePolicy policy = ResonancePolicy::exact;
  double rel_tol = 1e-13;
};

// Deterministic integer power (avoids libm cross-platform drift).
inline double ipow(double x, unsigned n) {
  double r = 1.0, b = x;
  while (n) {
    if (n & 1u) r *= b;
    b *= b;
    n >>= 1u;
  }
  return r;
}

template <class S>
struct ExpTerm {
  S rate;
  unsigned power = 0;
  S coeff;
};

template <class S>
class ExpPoly {
 public:
  using Term = ExpTerm<S>;

  ExpPoly() = default;
  explicit ExpPoly(std::vector<Term> terms) : terms_(std::move(terms)) {
    canonicalize();
  }

  static ExpPoly zero() { return ExpPoly(); }
  static ExpPoly constant(S c) {
    return ExpPoly({Term{ScalarOps<S>::zero(), 0, std::move(c)}});
  }
  // c * t^m * e^{rate t}
  static ExpPoly monomial(S rate, unsigned power, S coeff) {
    return ExpPoly({Term{std::move(rate), power, std::move(coeff)}});
  }

  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  unsigned max_power() const {
    unsigned m = 0;
    for (const auto& t : terms_) m = std::max(m, t.power);
    return m;
  }

  friend ExpPoly operator+(const ExpPoly& a, const ExpPoly& b) {
    std::vector<Term> out;
    out.reserve(a.terms_.size() + b.terms_.size());
    out.insert(out.end(), a.terms_.begin(), a.terms_.end());
    out.insert(out.end(), b.terms_.begin(), b.terms_.end());
    return ExpPoly(std::move(out));
  }
  friend ExpPoly operator-(const ExpPoly& a, const ExpPoly& b) {
    std::vector<Term> out;
    out.reserve(a.terms_.size() + b.terms_.size());
    out.insert(out.end(), a.terms_.begin(), a.terms_.end());
    for (const auto& t : b.terms_) out.push_back(Term{t.rate, t.power, -t.coeff});
    return ExpPoly(std::move(out));
  }
  friend ExpPoly operator-(const ExpPoly& a) {
    std::vector<Term> out = a.terms_;
    for (auto& t : out) t.coeff = -t.coeff;
    ExpPoly r;
    r.terms_ = std::move(out);  // negation preserves canonical order
    return r;
  }
  friend ExpPoly operator*(const ExpPoly& a, const ExpPoly& b) {
    std::vector<Term> out;
    out.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& x : a.terms_)
      for (const auto& y : b.terms_)
        out.push_back(Term{x.rate + y.rate, x.power + y.power, x.coeff * y.coeff});
    return ExpPoly(std::move(out));
  }
  friend ExpPoly operator*(const S& c, const ExpPoly& a) { return a.scaled(c); }
  friend ExpPoly operator*(const ExpPoly& a, const S& c) { return a.scaled(c); }
  ExpPoly& operator+=(const ExpPoly& b) { return *this = *this + b; }

  ExpPoly scaled(const S& c) const {
    if (ScalarOps<S>::is_zero(c)) return ExpPoly();
    std::vector<Term> out = terms_;
    for (auto& t : out) t.coeff = t.coeff * c;
    ExpPoly r;
    r.terms_ = std::move(out);
    return r;
  }

  ExpPoly derivative() const {
    std::vector<Term> out;
    out.reserve(2 * terms_.size());
    for (const auto& t : terms_) {
      if (!ScalarOps<S>::is_zero(t.rate))
        out.push_back(Term{t.rate, t.power, t.coeff * t.rate});
      if (t.power > 0)
        out.push_back(
            Term{t.rate, t.power - 1, t.coeff * ScalarOps<S>::from_int(t.power)});
    }
    return ExpPoly(std::move(out));
  }

  Cx eval(double t) const {
    Cx acc(0.0, 0.0);
    for (const auto& term : terms_)
      acc += to_cx(term.coeff) * ipow(t, term.power) * std::exp(to_cx(term.rate) * t);
    return acc;
  }

  friend bool operator==(const ExpPoly& a, const ExpPoly& b) {
    if (a.terms_.size() != b.terms_.size()) return false;
    for (std::size_t i = 0; i < a.terms_.size(); ++i) {
      const auto& x = a.terms_[i];
      const auto& y = b.terms_[i];
      if (x.power != y.power || !(x.rate == y.rate) || !(x.coeff == y.coeff))
        return false;
    }
    return true;
  }
  friend bool operator!=(const ExpPoly& a, const ExpPoly& b) { return !(a == b); }

  // Largest coefficient magnitude, for tolerance scaling.
  double coeff_linf() const {
    double m = 0.0;
    for (const auto& t : terms_) m = std::max(m, std::abs(to_cx(t.coeff)));
    return m;
  }

 private:
  static bool term_less(const Term& a, const Term& b) {
    if (!(a.rate == b.rate)) return ScalarOps<S>::less(a.rate, b.rate);
    return a.power < b.power;
  }

  void canonicalize() {
    std::sort(terms_.begin(), terms_.end(), term_less);
    std::vector<Term> out;
    out.reserve(terms_.size());
    for (auto& t : terms_) {
      if (!out.empty() && out.back().power == t.power && out.back().rate == t.rate)
        out.back().coeff += t.coeff;
      else
        out.push_back(std::move(t));
    }
    std::erase_if(out, [](const Term& t) { return ScalarOps<S>::is_zero(t.coeff); });
    terms_ = std::move(out);
  }

  std::vector<Term> terms_;
};

using ExpPolyC = ExpPoly<Cx>;
using ExpPolyQ = ExpPoly<RatC>;

// Accumulator for large sums of polynomials and pairwise products without
// repeated re-canonicalization.
template <class S>
class ExpAccum {
 public:
  void add_term(const S& rate, unsigned power, const S& coeff) {
    if (ScalarOps<S>::is_zero(coeff)) return;
    auto [it, inserted] = map_.try_emplace(Key{rate, power}, coeff);
    if (!inserted) it->second += coeff;
  }
  void add(const ExpPoly<S>& p) {
    for (const auto& t : p.terms()) add_term(t.rate, t.power, t.coeff);
  }
  void add_scaled(const ExpPoly<S>& p, const S& c) {
    for (const auto& t : p.terms()) add_term(t.rate, t.power, t.coeff * c);
  }
  void add_product(const ExpPoly<S>& a, const ExpPoly<S>& b) {
    for (const auto& x : a.terms())
      for (const auto& y : b.terms())
        add_term(x.rate + y.rate, x.power + y.power, x.coeff * y.coeff);
  }
  void add_product_scaled(const ExpPoly<S>& a, const ExpPoly<S>& b, const S& c) {
    if (ScalarOps<S>::is_zero(c)) return;
    for (const auto& x : a.terms())
      for (const auto& y : b.terms())
        add_term(x.rate + y.rate, x.power + y.power, x.coeff * y.coeff * c);
  }
  ExpPoly<S> take() {
    std::vector<ExpTerm<S>> out;
    out.reserve(map_.size());
    for (auto& [k, c] : map_)
      if (!ScalarOps<S>::is_zero(c)) out.push_back(ExpTerm<S>{k.rate, k.power, c});
    map_.clear();
    ExpPoly<S> p(std::move(out));
    return p;
  }

 private:
  struct Key {
    S rate;
    unsigned power;
  };
  struct KeyLess {
    bool operator()(const Key& a, const Key& b) const {
      if (!(a.rate == b.rate)) return ScalarOps<S>::less(a.rate, b.rate);
      return a.power < b.power;
    }
  };
  std::map<Key, S, KeyLess> map_;
};

namespace detail {

// Collapses rates that agree to within rel_tol of the largest magnitude seen,
// so near-resonant Cx integrations take the resonant branch.
inline Cx snap_rate(const Cx& lambda, const Cx& lambda0, double rel_tol) {
  double scale = std::max(std::abs(lambda), std::abs(lambda0));
  if (std::abs(lambda - lambda0) <= rel_tol * scale) return lambda0;
  return lambda;
}
inline RatC snap_rate(const RatC& lambda, const RatC&, double) { return lambda; }

}  // namespace detail

// (f * g)(t) = int_0^t f(s) g(t-s) ds on the half line, exactly.  Uses
// C_0 = duhamel_integral(mu, f) = f * e^{mu t} and the recursion
// C_n = f * (t^n e^{mu t}) = duhamel_integral(mu, n C_{n-1}), which follows
// from differentiating under the integral sign.
template <class S>
ExpPoly<S> halfline_convolve(const ExpPoly<S>& f, const ExpPoly<S>& g,
                             const DuhamelOptions& opt = {});

// int_0^t e^{(t-s) lambda0} p(s) ds, exactly.
template <class S>
ExpPoly<S> duhamel_integral(const S& lambda0, const ExpPoly<S>& p,
                   const DuhamelOptions& opt = {}) {
  ExpAccum<S> acc;
  for (const auto& term : p.terms()) {
    S lambda = term.rate;
    if (opt.policy == ResonancePolicy::fuzzy)
      lambda = detail::snap_rate(lambda, lambda0, opt.rel_tol);
    if (lambda == lambda0) {
      acc.add_term(lambda0, term.power + 1,
                   term.coeff / ScalarOps<S>::from_int(term.power + 1));
      continue;
    }
    const S beta = lambda - lambda0;
    const S inv_beta = ScalarOps<S>::reciprocal(beta);
    // J(m) = int_0^t s^m e^{beta s} ds = e^{beta t} * poly(t) + konst
    std::vector<S> poly{inv_beta};
    S konst = -inv_beta;
    for (unsigned m = 1; m <= term.power; ++m) {
      const S f = -ScalarOps<S>::from_int(m) * inv_beta;
      for (auto& c : poly) c = c * f;
      konst = konst * f;
      poly.push_back(inv_beta);  // new leading coefficient t^m / beta
    }
    for (unsigned j = 0; j < poly.size(); ++j)
      acc.add_term(lambda, j, term.coeff * poly[j]);
    acc.add_term(lambda0, 0, term.coeff * konst);
  }
  return acc.take();
}

template <class S>
ExpPoly<S> halfline_convolve(const ExpPoly<S>& f, const ExpPoly<S>& g,
                             const DuhamelOptions& opt) {
  ExpAccum<S> acc;
  // Cache C_0..C_n per distinct rate of g; terms are rate-sorted, so a
  // single running cache suffices.
  std::vector<ExpPoly<S>> cache;
  bool have_rate = false;
  S current_rate = ScalarOps<S>::zero();
  for (const auto& term : g.terms()) {
    if (!have_rate || !(term.rate == current_rate)) {
      cache.clear();
      cache.push_back(duhamel_integral(term.rate, f, opt));
      current_rate = term.rate;
      have_rate = true;
    }
    while (cache.size() <= term.power) {
      const S n = ScalarOps<S>::from_int(static_cast<long>(cache.size()));
      cache.push_back(duhamel_integral(current_rate, cache.back().scaled(n), opt));
    }
    acc.add_scaled(cache[term.power], term.coeff);
  }
  return acc.take();
}

}  // namespace duhamel
