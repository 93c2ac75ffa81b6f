#pragma once

/*
 * Atomic spectra on the rational frequency lattice.
 *
 * A spectrum is a finite sum of Dirac atoms  F = sum_xi c_xi delta_xi  with
 * frequencies xi in Q^d and coefficients in a scalar field or in the
 * exponential-polynomial algebra (time-dependent spectra).  Admissible data
 * live in the affine half space {xi : v . xi >= m0} for a direction v and a
 * positive threshold m0; the functional  level(xi) = v . xi  grades the
 * lattice, every convolution strictly increases it, and truncation at a
 * level budget keeps all computations finite.
 *
 * ExpDensity reuses the exponential-polynomial algebra for continuous
 * one-dimensional densities  sum c xi^p e^{-z xi}  on xi > 0 (rate = -z);
 * their half-line convolution is exact.
 */

#include <map>
#include <stdexcept>
#include <vector>

#include "duhamel/exppoly.hpp"
#include "duhamel/scalar.hpp"

namespace duhamel {

using FreqPoint = std::vector<Rat>;

template <class C>
using ScalarSpectrum = std::map<FreqPoint, C>;

template <class C>
using VecSpectrum = std::map<FreqPoint, std::vector<C>>;

using SpectrumQ = ScalarSpectrum<RatC>;
using SpectrumC = ScalarSpectrum<Cx>;

// Continuous density on the half line xi > 0; term (rate, power, coeff)
// stands for  coeff * xi^power * e^{rate * xi}  (decaying when Re rate < 0).
using ExpDensity = ExpPoly<Cx>;

inline bool coeff_is_zero(const Cx& c) { return ScalarOps<Cx>::is_zero(c); }
inline bool coeff_is_zero(const RatC& c) { return ScalarOps<RatC>::is_zero(c); }
template <class S>
bool coeff_is_zero(const ExpPoly<S>& c) {
  return c.is_zero();
}

struct SupportSpec {
  std::vector<Rat> direction;  // v, nonzero
  Rat min_level;               // m0 > 0

  void validate() const;
};

Rat level(const FreqPoint& xi, const SupportSpec& spec);

template <class C>
void check_dimension(const ScalarSpectrum<C>& f, std::size_t d) {
  for (const auto& [xi, c] : f)
    if (xi.size() != d)
      throw std::invalid_argument("spectrum: inconsistent frequency dimension");
}

// True when every atom lies in the half space v . xi >= m0.
template <class C>
bool check_support(const ScalarSpectrum<C>& f, const SupportSpec& spec) {
  spec.validate();
  for (const auto& [xi, c] : f) {
    if (xi.size() != spec.direction.size())
      throw std::invalid_argument("spectrum: frequency dimension mismatch");
    if (level(xi, spec) < spec.min_level) return false;
  }
  return true;
}

// Least level among atoms; empty spectra have no least level.
template <class C>
Rat min_level(const ScalarSpectrum<C>& f, const SupportSpec& spec) {
  spec.validate();
  bool first = true;
  Rat best(0);
  for (const auto& [xi, c] : f) {
    const Rat l = level(xi, spec);
    if (first || l < best) {
      best = l;
      first = false;
    }
  }
  if (first) throw std::invalid_argument("spectrum: empty, no least level");
  return best;
}

// Wraps a scalar spectrum as a vector spectrum with the given channel
// count, placing the coefficient in the chosen slot.
template <class C>
VecSpectrum<C> vec_spectrum(const ScalarSpectrum<C>& f,
                            std::size_t channels = 1, std::size_t slot = 0) {
  if (slot >= channels)
    throw std::invalid_argument("vec_spectrum: slot out of range");
  VecSpectrum<C> out;
  for (const auto& [xi, c] : f) {
    std::vector<C> row(channels);
    row[slot] = c;
    out.emplace(xi, std::move(row));
  }
  return out;
}

// Extracts one component of a vector spectrum (zero atoms dropped).
template <class C>
ScalarSpectrum<C> component(const VecSpectrum<C>& f, std::size_t slot) {
  ScalarSpectrum<C> out;
  for (const auto& [xi, row] : f) {
    if (slot >= row.size())
      throw std::invalid_argument("component: slot out of range");
    if (!coeff_is_zero(row[slot])) out.emplace(xi, row[slot]);
  }
  return out;
}

// Drops atoms with level above the budget.
template <class C>
ScalarSpectrum<C> truncate(const ScalarSpectrum<C>& f, const SupportSpec& spec,
                           const Rat& budget) {
  spec.validate();
  ScalarSpectrum<C> out;
  for (const auto& [xi, c] : f)
    if (!(level(xi, spec) > budget)) out.emplace(xi, c);
  return out;
}

// (F * G)(xi) = sum_{xi1 + xi2 = xi} F(xi1) G(xi2), exact atom bookkeeping.
template <class C>
ScalarSpectrum<C> convolve(const ScalarSpectrum<C>& f,
                           const ScalarSpectrum<C>& g) {
  ScalarSpectrum<C> out;
  for (const auto& [x1, c1] : f) {
    for (const auto& [x2, c2] : g) {
      if (x1.size() != x2.size())
        throw std::invalid_argument("convolve: frequency dimension mismatch");
      FreqPoint xi(x1.size());
      for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = x1[i] + x2[i];
      C prod = c1 * c2;
      if (coeff_is_zero(prod)) continue;
      auto [it, inserted] = out.try_emplace(std::move(xi), std::move(prod));
      if (!inserted) {
        it->second += prod;
        if (coeff_is_zero(it->second)) out.erase(it);
      }
    }
  }
  return out;
}

// Exact half-line convolution of continuous densities.
inline ExpDensity expdensity_convolve(const ExpDensity& f, const ExpDensity& g) {
  return halfline_convolve(f, g);
}

}  // namespace duhamel
