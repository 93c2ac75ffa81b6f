#pragma once

/*
 * Piecewise-linear nondecreasing functions on [0, infinity), plus the
 * smooth-cutoff machinery built on top of them:
 *
 *   - MonotoneFn: breakpoints with values, linear between, linear tail.
 *   - chi_profile(): certified upper bounds on the sup-norms of the
 *     derivatives of a fixed smooth cutoff chi (chi = 1 on (-inf,1],
 *     chi = 0 on [2,inf)).
 *   - mchi(delta, m): the continuous increasing envelope M of the
 *     cutoff-derivative cost at scale delta: M(m) = 1 + m for m <= 1/2 and
 *     M(r) = sum_{k<=r} binom(r,k) delta^{-k} chi_k at integers r, where
 *     chi_k bounds |chi^(k)|_inf.
 *   - superadditive_envelope: R(l) = int_l^{2l} sup_{0<|y|<=t} R0(y)/|y| dt,
 *     a superadditive increasing majorant of R0.
 */

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace duhamel {

class MonotoneFn {
 public:
  // Constant zero.
  MonotoneFn();
  // Points must have strictly increasing nonnegative abscissae and
  // nondecreasing nonnegative values; tail_slope >= 0 extends past the last
  // breakpoint.  A breakpoint at 0 is prepended (flat) if absent.
  MonotoneFn(std::vector<std::pair<double, double>> points, double tail_slope);

  static MonotoneFn constant(double c);
  static MonotoneFn ramp(double slope);  // f(l) = slope * l
  // Samples f on [0, lmax] adaptively until the piecewise-linear
  // interpolation error is below rel_tol * max(|f|, floor); f must be
  // nondecreasing and nonnegative.  The tail slope is the last chord slope.
  static MonotoneFn from_function(const std::function<double(double)>& f,
                                  double lmax, double rel_tol = 1e-6,
                                  std::span<const double> required_knots = {});

  double operator()(double l) const;

  const std::vector<double>& knots() const { return xs_; }
  const std::vector<double>& values() const { return ys_; }
  double tail_slope() const { return tail_slope_; }
  double last_knot() const { return xs_.back(); }

  // f(0) == 0 and f(2 delta) <= 1/2: the admissibility condition for
  // weights entering the cutoff cost at scale delta.
  bool vanishes_at_zero() const;
  bool small_at(double two_delta) const;

  MonotoneFn scaled(double c) const;  // c >= 0
  // Returns a copy whose knot set additionally contains the given abscissae
  // (values interpolated; the function is unchanged pointwise).
  MonotoneFn with_knots(std::span<const double> extra) const;

  friend MonotoneFn pointwise_max(const MonotoneFn& a, const MonotoneFn& b);
  friend MonotoneFn pointwise_sum(const MonotoneFn& a, const MonotoneFn& b);

 private:
  std::vector<double> xs_;  // xs_[0] == 0
  std::vector<double> ys_;
  double tail_slope_ = 0.0;
};

// Nonincreasing weight kappa with 0 < kappa <= kappa(0) <= 1, stored as the
// nondecreasing drop l -> kappa(0) - kappa(l) to reuse MonotoneFn.
class Kappa {
 public:
  Kappa();  // constant 1
  Kappa(double at0, MonotoneFn drop);
  static Kappa constant(double c);
  double operator()(double l) const;
  double at0() const { return at0_; }
  const MonotoneFn& drop() const { return drop_; }
  // Least value on [0, l]; positive by the class invariant.
  double floor_on(double l) const;

 private:
  double at0_ = 1.0;
  MonotoneFn drop_;
};

// Upper bounds c_k >= sup |chi^(k)| for the bundled cutoff, k = 0..max_order.
struct CutoffProfile {
  std::vector<double> derivative_sup;  // index k
  std::string version;
  unsigned max_order() const { return static_cast<unsigned>(derivative_sup.size()) - 1; }
};

const CutoffProfile& chi_profile();

// The bundled cutoff itself (for plots and sanity checks): 1 on t <= 1,
// 0 on t >= 2, smooth and nonincreasing in between.
double chi_eval(double t);

// Continuous increasing envelope of the cutoff-derivative cost at scale
// delta > 0, defined at m <= 1/2 as 1 + m and at integers r >= 1 as
// sum_{k=0}^{r} binom(r,k) delta^{-k} c_k, linearly interpolated between
// anchors and clamped to be nondecreasing.  Throws if m exceeds the
// tabulated derivative order.
double mchi(double delta, double m);

struct SuperadditiveReport {
  bool ok = true;
  double a = 0.0, b = 0.0;       // first violating pair, if any
  double deficit = 0.0;          // f(a)+f(b) - f(a+b)(1+tol) at the violation
};

// Checks f(a) + f(b) <= f(a+b) * (1 + tol) for all pairs from the grid.
SuperadditiveReport is_superadditive(const MonotoneFn& f,
                                     std::span<const double> grid,
                                     double tol = 1e-12);

// Superadditive increasing envelope from point samples (xi, R0(xi)) with
// xi given by its Euclidean norm |xi| > 0 whenever R0(xi) > 0.
// R1(t) = max over samples with |xi| <= t of R0/|xi| (0 below the first
// sample), and R(l) = int_l^{2l} R1(t) dt, exact for the step function R1.
MonotoneFn superadditive_envelope(
    std::span<const std::pair<double, double>> radius_value_samples);

// Same construction for a scalar profile R0 (radial, nondecreasing),
// materialized on [0, lmax].
MonotoneFn superadditive_envelope(const MonotoneFn& r0, double lmax,
                                  double rel_tol = 1e-6);

}  // namespace duhamel
