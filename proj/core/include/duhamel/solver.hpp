#pragma once

/*
 * Exact lattice solver for the Fourier-side Cauchy problem
 *
 *     d/dt uh(t, xi) = Lh(xi) uh + Nh(xi) [ H(Mh uh) ](t, xi),
 *     uh(0) = u0,
 *
 * for atomic initial data supported strictly inside the grading half
 * space.  Because H has no constant or linear part, every nonlinear
 * contribution at frequency xi is a convolution of at least two atoms of
 * strictly lower level, so the lattice of reachable frequencies is solved
 * exactly in increasing level order: each atom is the linear flow of its
 * initial coefficient plus the Duhamel integral of its (already known)
 * source, evaluated eigencomponent-wise in the exponential-polynomial
 * algebra.
 *
 * Two coefficient fields are supported through overloads:
 *   - exact Gaussian rationals, available when the linear symbol has a
 *     diagonal rational evaluation path (and M, N rational paths);
 *   - floating complex, using a dense eigendecomposition of Lh per
 *     frequency; non-diagonalizable frequencies are reported as errors.
 *
 * picard_sequence exposes the underlying fixed-point iterates (v_0 the
 * linear flow, v_{j+1} the Duhamel map applied to v_j), and
 * select_contraction_params performs the deterministic parameter search
 * that certifies the weighted-norm contraction used by the grid solver.
 */

#include <cstddef>
#include <vector>

#include "duhamel/equations.hpp"
#include "duhamel/exppoly.hpp"
#include "duhamel/spectral.hpp"

namespace duhamel {

struct ResidualReport {
  bool exact = false;     // residual vanished identically in exact arithmetic
  double max_abs = 0.0;   // largest residual coefficient magnitude
  std::size_t atoms = 0;  // frequencies checked
};

template <class S>
struct LatticeSolution {
  VecSpectrum<ExpPoly<S>> spectrum;  // n1 time-dependent components per atom
  Rat budget{0};                     // truncation level
  ResidualReport residual;
};

struct LatticeOptions {
  DuhamelOptions duhamel{};
  bool compute_residual = true;
};

// Exact mode: requires diagonal rational Lh and rational M, N paths.
LatticeSolution<RatC> solve_lattice(const Equation& eq,
                                    const VecSpectrum<RatC>& u0,
                                    const Rat& budget,
                                    const LatticeOptions& opt = {});

// Floating mode: any equation with Lh diagonalizable at reachable
// frequencies.
LatticeSolution<Cx> solve_lattice(const Equation& eq,
                                  const VecSpectrum<Cx>& u0, const Rat& budget,
                                  const LatticeOptions& opt = {});

// Fixed-point iterates v_0 .. v_n of the Duhamel map (v_0 = linear flow).
std::vector<LatticeSolution<RatC>> picard_sequence(const Equation& eq,
                                                   const VecSpectrum<RatC>& u0,
                                                   const Rat& budget, unsigned n,
                                                   const LatticeOptions& opt = {});
std::vector<LatticeSolution<Cx>> picard_sequence(const Equation& eq,
                                                 const VecSpectrum<Cx>& u0,
                                                 const Rat& budget, unsigned n,
                                                 const LatticeOptions& opt = {});

// Scalar-mode iteration table for the quadratic ordinary equation
// v_n' = v_{n-1}^2, v_n(0) = u0: coefficients c(n, k) of
// v_n(t) = sum_k c(n,k) t^k u0^{k+1}, satisfying c(n, 0) = 1 and
// c(n, k) = (1/k) sum_{i+j=k-1} c(n-1, i) c(n-1, j), zero past 2^n - 1.
// Returns rows n = 0..nmax, columns k = 0..kmax, exact rationals.
std::vector<std::vector<Rat>> quadratic_iteration_coefficients(unsigned nmax,
                                                               unsigned kmax);

// Deterministic parameter search for the weighted-norm contraction: finds
// theta in (0,1] and b >= 1 such that for every k >= k0 + 1
//
//     theta^{-1/k + 1/k0} e^{-s theta} + <s> e^{(sigma - s) theta} <= eps,
//     sigma = b theta^{a-1} s,
//
// (the supremum over k sits at k = k0 + 1) and additionally
// (2 e^{-s})^{k0} / (c0 b) <= eps^{k0} so the Duhamel prefactor 1/(c0 b)
// absorbs the lowest-order constant.  theta is halved from 1 until the
// first term is <= eps/2, then b grows through powers of two; both scans
// are monotone, so smaller eps never yields a smaller b.
struct ContractionParams {
  double theta = 1.0;
  double b = 1.0;
};

ContractionParams select_contraction_params(double s, double c0, double eps,
                                            double a, unsigned k0);

}  // namespace duhamel
