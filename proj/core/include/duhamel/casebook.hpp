#pragma once

/*
 * Worked quantitative examples built on the exact Duhamel machinery:
 *
 *  - the single-mode viscous quadratic flow whose n-th Fourier coefficient
 *    is -i (a e^{-t})^n U_n(t), with U_n a polynomial in q = e^{-2t} obeying
 *        U_1 = 1,
 *        U_n(t) = int_0^t e^{-n(n-1)(t-s)} n sum_{k=1}^{n-1} U_k U_{n-k} ds;
 *    from the U_n data the critical-amplitude curve a_*(t), its minimum
 *    a_**, and the earliest norm-inflation time T_*(a) are estimated with
 *    rigorous two-sided brackets;
 *  - an independent cross-check that locates the first real zero of the
 *    generating function v(t,x) = sum_n a^n/n! e^{inx - n^2 t} (the exact
 *    linearizing substitution for that flow);
 *  - the zero-mode coefficient ladder of the cosine point-mass datum, whose
 *    odd coefficients are binom(2k,k)/4^k and whose partial sums diverge as
 *    t -> 1^-;
 *  - two-sided cascade envelopes f_n obtained by freezing dissipation and
 *    coupling constants between lower/upper values;
 *  - residuals of explicit stationary candidates for three dispersive /
 *    dissipative model equations, computed exactly on the Fourier half-line.
 *
 * Everything here is exact-rational first; floating estimates always travel
 * together with the interval that contains the true value.
 */

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "duhamel/exppoly.hpp"
#include "duhamel/scalar.hpp"
#include "duhamel/spectral.hpp"

namespace duhamel {

// Dense polynomial in q = e^{-2t} with exact rational coefficients:
// p(q) = sum_m coeffs[m] q^m.
using QPoly = std::vector<Rat>;

// ---------------------------------------------------------------------------
// Mode recursion
// ---------------------------------------------------------------------------

// U_1..U_N as exact q-polynomials (index 0 is unused and empty).  Each step
// assembles the quadratic source exactly and integrates it with
// duhamel_integral against the mode's decay rate -n(n-1).  Verifies the
// two-sided bound (1-q)^{n-1} <= U_n <= 1 exactly on an internal q-grid and
// the degree bound deg U_n <= n(n-1)/2.  Throws std::invalid_argument for
// N < 1 and std::logic_error if a verification fails.
std::vector<QPoly> burgers_un(unsigned N);

// Same recursion carried out entirely inside the exponential-polynomial
// algebra (every product is an ExpPoly product, every integral a
// duhamel_integral).  Quadratic cost in the term count; intended for
// cross-checks at small N.
std::vector<ExpPolyQ> burgers_un_exppoly(unsigned N);

// Exact evaluation of p at a rational point qhat.
Rat qpoly_eval_exact(const QPoly& p, const Rat& qhat);

// High-precision evaluation of p(e^{-2t}); exact coefficients, ~230 decimal
// digits of working precision, correct even where double arithmetic would
// cancel catastrophically.  Returns a double (the value is always in [0,1]
// for the polynomials produced here).
double qpoly_eval(const QPoly& p, double t);

// log p(e^{-2t}) under the same high-precision evaluation; throws
// std::domain_error if the value is not strictly positive.
double qpoly_eval_log(const QPoly& p, double t);

// Triangular ODE integration oracle:  W_n' = -n(n-1) W_n + n sum W_k W_{n-k}
// marched from W(0) = (1,0,...,0) to time t with a fourth-order
// integrating-factor Runge-Kutta scheme and step h.  Independent of the
// exact recursion; used to cross-check it.
std::vector<double> burgers_un_ode(unsigned N, double t, double h = 5e-4);

// ---------------------------------------------------------------------------
// Critical-amplitude estimates
// ---------------------------------------------------------------------------

// One sample of the critical-amplitude curve a_*(t).  The true value lies in
// [lower, upper] = [e^t, e^t/(1-e^{-2t})]; `estimate` extrapolates the mode
// growth rate rho(t) = lim U_n(t)^{1/n} by least squares on log U_n over the
// top third of computed modes and reports e^t / rho_fit.
struct AmplitudeThreshold {
  double t = 0.0;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool inside = false;             // estimate in [lower, upper]
  bool extrapolation_ok = false;   // fit produced a usable growth rate
};

AmplitudeThreshold burgers_astar(double t, const std::vector<QPoly>& Un);
AmplitudeThreshold burgers_astar(double t, unsigned N);

// Minimum of the critical-amplitude curve over a time grid.  The true
// minimum lies in [1, (3/2)sqrt(3)].  `refinement` records the estimate as
// the mode depth grows (N = 20, 30, ..., up to the given N).
struct CriticalAmplitude {
  double estimate = 0.0;
  double argmin_t = 0.0;
  double lower = 1.0;
  double upper = 0.0;              // (3/2) sqrt(3)
  bool inside = false;
  std::vector<std::pair<unsigned, double>> refinement;
};

CriticalAmplitude burgers_astarstar(const std::vector<double>& tgrid,
                                    unsigned N);

// Earliest norm-inflation time for amplitude a.  Estimate: the first t where
// |a| e^{-t} rho_fit(t) reaches 1 (scan + bisection).  The true time lies in
// (0, min(theta_root, log|a|)] where theta_root is the first solution of
// e^t/(1-e^{-2t}) = |a|.  Amplitudes below the critical window never inflate
// (`no_blowup`); amplitudes inside [1, (3/2)sqrt(3)] cannot be decided from
// the two-sided bounds alone (`undecidable`).
struct BlowupTime {
  double estimate = 0.0;
  double upper_log = 0.0;          // log |a|
  double upper_theta = 0.0;        // first root of the upper envelope
  bool no_blowup = false;          // |a| < 1
  bool undecidable = false;        // 1 <= |a| <= (3/2) sqrt(3)
  bool found = false;              // scan located the crossing
};

BlowupTime burgers_tstar(Cx a, const std::vector<QPoly>& Un);
BlowupTime burgers_tstar(Cx a, unsigned N);

// Bundle of the analysis for one amplitude.
struct BurgersAnalysis {
  Cx a{0.0, 0.0};
  unsigned N = 0;
  std::vector<QPoly> Un;
  std::vector<AmplitudeThreshold> astar_curve;
  BlowupTime Tstar;
};

BurgersAnalysis burgers_analyze(Cx a, unsigned N,
                                const std::vector<double>& astar_grid);

// ---------------------------------------------------------------------------
// First real zero of the generating function (independent cross-check)
// ---------------------------------------------------------------------------

// v(t,x) = sum_{n>=0} a^n/n! e^{inx - n^2 t} is zero-free for small t and
// first vanishes at a real x when the nearest zero of w |-> sum_n a^n/n!
// e^{-n^2 t} w^n reaches the unit circle.  The zero count inside |w| < 1 is
// measured as the winding number of x |-> v(t,x), scanned over `tsearch` and
// bisected at the first jump.
struct ColeHopfResult {
  bool found = false;
  double t_zero = 0.0;             // first time with a real zero
  double t_lower = 0.0;            // last scanned time with no zero
  unsigned truncation = 0;         // number of series terms used
  double truncation_shift = 0.0;   // |t_zero - t_zero(half truncation)|
};

ColeHopfResult colehopf_first_zero(Cx a, unsigned xgrid = 4096,
                                   std::pair<double, double> tsearch = {0.0,
                                                                        0.0});

// ---------------------------------------------------------------------------
// Cosine point-mass zero mode
// ---------------------------------------------------------------------------

// Odd zero-mode coefficients of the cosine point-mass datum: the coefficient
// of t^{2k-1} is binom(2k,k)/4^k, exactly.  Even-index coefficients vanish.
struct CosineZeroMode {
  unsigned K = 0;
  std::vector<Rat> odd_coeffs;     // odd_coeffs[k-1] multiplies t^{2k-1}
  bool ratio_law_exact = false;    // c_{k+1}/c_k == (2k+1)/(2k+2) for all k
  bool harmonic_minorant = false;  // c_k >= 1/(2k) for all k
};

CosineZeroMode cosine_zero_mode(unsigned K);

// Partial sum sum_{k<=K} c_k t^{2k-1} at |t| < 1 (double precision; the terms
// are positive and decreasing, no cancellation).
double cosine_partial_sum(const CosineZeroMode& mode, double t);

// ---------------------------------------------------------------------------
// Cascade envelopes
// ---------------------------------------------------------------------------

// Two-sided envelopes: with 0 < b_lo <= b_hi and 0 < c_lo <= c_hi,
//   lower_n(t) = c_lo int_0^t n e^{-b_hi^2 n(n-1)(t-s)} sum lower_k lower_{n-k} ds
// (strong dissipation, weak coupling) and upper_n with the roles swapped.
// Both recursions are exact; the result satisfies
//   (c_lo/b_hi^2 (1-e^{-2 b_hi^2 t}))^{n-1} <= lower_n(t) <= upper_n(t)
//        <= (c_hi/b_lo^2)^{n-1}.
// The parameters are converted to exact rationals (dyadic doubles) so both
// chains stay in the exponential-polynomial algebra.
struct CascadeBounds {
  unsigned N = 0;
  Rat b_lo, b_hi, c_lo, c_hi;
  std::vector<ExpPolyQ> lower;     // index n, 1..N (index 0 empty)
  std::vector<ExpPolyQ> upper;
  bool sandwich_checked = false;   // verified on the internal t-grid
  double max_violation = 0.0;      // worst signed defect observed (<= 0 ok)
};

CascadeBounds cascade_bounds(double b_lo, double b_hi, double c_lo,
                             double c_hi, unsigned N);

// High-precision evaluation of an envelope chain member at time t.
double cascade_eval(const ExpPolyQ& f, double t);

// ---------------------------------------------------------------------------
// Stationary-candidate residuals
// ---------------------------------------------------------------------------

// Catalogued stationary candidates, all with Fourier transform supported on
// the half line xi > 0 and of the form  A * xi^p * e^{-z xi}:
//
//   "nls_star":  focusing cubic Schroedinger with conjugate coupling;
//                candidate  u_hat = -i c e^{-z xi},
//                residual   R(c) = xi^2 u_hat + alpha (u_hat*u_hat*u_hat).
//   "kdv":       Korteweg-de Vries, u_t + u_xxx = 6 u u_x;
//                candidate  u_hat = -A xi e^{-z xi},
//                residual   R(A) = i xi^3 u_hat + 3 i xi (u_hat*u_hat).
//   "clm":       the quadratic Hilbert-transform flow v_t = eps v_xx + v Hv;
//                candidate  v_hat = -c xi e^{-z xi},
//                residual   R(c) = -eps xi^2 v_hat + i (v_hat*v_hat).
//
// The residual is assembled exactly (Gaussian-rational coefficients, dyadic
// parameters) and returned both split by homogeneity and combined.  The
// best-fit amplitude makes the combined residual vanish identically; it is
// reported next to the catalogued reference amplitude, which is treated as a
// candidate rather than ground truth.
struct StationaryParams {
  Cx amplitude{0.0, 0.0};          // 0 => use the reference amplitude
  double alpha = 1.0;              // cubic coupling ("nls_star")
  Cx eps{1.0, 0.0};                // dissipation strength ("clm")
};

struct StationaryResidual {
  std::string name;
  Cx amplitude{0.0, 0.0};          // amplitude actually used
  Cx reference_amplitude{0.0, 0.0};
  Cx best_fit_amplitude{0.0, 0.0};
  unsigned nonlinearity_order = 0; // 2 or 3
  ExpDensity candidate;            // the Fourier-side candidate density
  ExpDensity linear_part;          // residual contribution, degree 1 in A
  ExpDensity nonlinear_part;       // residual contribution, degree 2 or 3
  ExpDensity residual;             // linear_part + nonlinear_part
  ExpDensity residual_at_best_fit;
  bool exact_zero_at_best_fit = false;
  double residual_linf = 0.0;      // max |coeff| of `residual`
};

StationaryResidual stationary_residual(const std::string& name, double z,
                                       const StationaryParams& params = {});

}  // namespace duhamel
