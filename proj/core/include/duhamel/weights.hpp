#pragma once

/*
 * Monotone-weight calculus for convolution estimates on graded spectra.
 *
 * A weight pair (mu, nu) measures atomic spectra through the level-graded
 * dual norm rho_l; the central inequality is
 *
 *     rho_l^{mu~, nu~}(F * G)  <=  rho_l^{mu, nu}(F) * rho_l^{mu, nu}(G)
 *
 * valid once three pointwise conditions tie (mu, nu) to the enlarged pair
 * (mu~, nu~); check_conv_conditions verifies them on a grid:
 *   (1) mu <= mu~, and 2 mu(l - delta) <= mu~(l) for l > 4 delta;
 *   (2) some eps in (0, delta/2] has 9 nu(2 eps) nu(l) <= nu~(l) and,
 *       when 2 eps < l, also 9 nu(l - eps)^2 <= nu~(l);
 *   (3) for l > 4 delta, 3 [M(mu(l - delta)) nu(l - delta)]^2 <= nu~(l),
 * with M the cutoff-cost envelope mchi at scale delta.
 *
 * cmap2 builds, for an input triple (mu0, nu0, kappa), the minimal-growth
 * pair (mu1, nu1) with  nu0 <= kappa nu1  such that (mu0, mu1, nu1,
 * kappa nu1) satisfies the conditions: below a splice point l0 the value is
 * nu1 = nu0/kappa, and past it the recursion
 *     nu1(l) = m( nu0(l)/kappa(l), max(nu_L, nu_H) ),
 *     nu_L = 9 nu1(l - eps^(l))^2 / kappa(l),
 *     nu_H = [l > 3 delta] 3 (M(mu0(l - delta)) nu1(l - delta))^2 / kappa(l),
 * with m(a, b) = max(a, b, a b) and eps^ the pairing reach hat_epsilon.
 * Values grow doubly exponentially; construction stops at a value cap and
 * records where.  Constructed values carry a small uniform relative margin
 * so the certificate stays valid between its interpolation knots.
 */

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "duhamel/monofun.hpp"
#include "duhamel/spectral.hpp"

namespace duhamel {

struct WeightTriple {
  MonotoneFn mu0;  // mu0(0) = 0, mu0(2 delta) <= 1/2
  MonotoneFn nu0;  // nu0(0) = 0
  Kappa kappa;     // nonincreasing, values in (0, 1]
  double delta = 1.0;

  void validate() const;
};

struct CmapOptions {
  // Uniform relative inflation of constructed values; keeps the certificate
  // conditions satisfied between interpolation knots (the exact inflated
  // recursion has multiplicative slack 1 + margin, dominating the sampling
  // error).  Set to 0 for the bare recursion values.
  double margin = 1e-4;
  double value_cap = 1e150;
  double sample_rel_tol = 1e-6;
};

struct ConvCertificate {
  double delta = 0.0;
  double l0 = 0.0;       // nu1 = nu0/kappa on [0, l0]
  double horizon = 0.0;  // requested range
  double stop = 0.0;     // range actually certified (= horizon unless stopped)
  bool saturated = false;
  std::string stop_reason;  // "horizon", "value_cap" or "cutoff_order"
  std::vector<double> anchors;
  MonotoneFn mu1;
  MonotoneFn nu1;
  std::string chi_version;
};

// mu1(l) = 2^{max(l/delta - 3, 0)} mu0(l) on [0, horizon].
MonotoneFn cmap1(const MonotoneFn& mu0, double delta, double horizon,
                 std::span<const double> extra_knots = {},
                 const CmapOptions& opt = {});

// Largest eps in (0, delta/2] with 9 nuhat(2 eps) <= kappa(l)(1 - 2 eps /
// delta); the feasible set is an interval reaching 0, so bisection is exact
// up to relative tolerance 1e-12.
double hat_epsilon(const std::function<double(double)>& nuhat,
                   const Kappa& kappa, double delta, double l);

ConvCertificate cmap2(const WeightTriple& in, double horizon,
                      std::span<const double> extra_knots = {},
                      const CmapOptions& opt = {});

struct ConditionRow {
  double l = 0.0;
  bool growth_ok = true;   // condition (1)
  bool pairing_ok = true;  // condition (2)
  bool split_ok = true;    // condition (3)
  double eps_witness = 0.0;
  bool ok() const { return growth_ok && pairing_ok && split_ok; }
};

struct ConditionReport {
  bool all_ok = true;
  std::vector<ConditionRow> rows;
  const ConditionRow* first_failure() const {
    for (const auto& r : rows)
      if (!r.ok()) return &r;
    return nullptr;
  }
};

// Verifies conditions (1)-(3) at every grid point, with multiplicative
// slack on the right-hand sides.  A cmap2 certificate passes with
// (mu = in.mu0, mu~ = cert.mu1, nu = cert.nu1, nu~ = kappa * nu1) sampled so
// that the grid points are knots of nu~.
ConditionReport check_conv_conditions(const MonotoneFn& mu,
                                      const MonotoneFn& mu_tilde,
                                      const MonotoneFn& nu,
                                      const MonotoneFn& nu_tilde, double delta,
                                      std::span<const double> grid,
                                      double slack = 1e-12);

// Dual norm of an atomic snapshot under the trivial derivative weight:
// the level-graded restricted total variation
//     max over atom levels L of  (sum_{level(xi) <= L} |c_xi|) / nu(L),
// +infinity when some cumulative mass sits where nu vanishes.  Levels are
// graded by the support functional of spec.
double rho_norm_atomic(const SpectrumC& f, const SupportSpec& spec,
                       const std::function<double(double)>& nu);
double rho_norm_atomic(const SpectrumC& f, const SupportSpec& spec,
                       const MonotoneFn& nu);

}  // namespace duhamel
