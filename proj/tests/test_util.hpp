#pragma once

// Shared test helpers: deterministic RNG, quadrature oracles, random
// generators for exact scalars and exponential polynomials.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>

#include "duhamel/exppoly.hpp"
#include "duhamel/scalar.hpp"

namespace testutil {

// mt19937_64 with hand-rolled mappings so streams are identical across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}

  double unif() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
  double unif(double a, double b) { return a + (b - a) * unif(); }
  // Inclusive bounds.
  long long unif_int(long long lo, long long hi) {
    const double u = unif();
    const long long span = hi - lo + 1;
    long long k = lo + static_cast<long long>(u * static_cast<double>(span));
    if (k > hi) k = hi;
    return k;
  }
  bool coin() { return (g_() & 1u) != 0; }

 private:
  std::mt19937_64 g_;
};

// Adaptive Simpson for complex-valued integrands.
inline std::complex<double> simpson_rec(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    std::complex<double> fa, std::complex<double> fm, std::complex<double> fb,
    double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const std::complex<double> flm = f(lm), frm = f(rm);
  const std::complex<double> whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const std::complex<double> left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const std::complex<double> right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const std::complex<double> err = left + right - whole;
  if (depth <= 0 || std::abs(err) <= 15.0 * tol)
    return left + right + err / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

inline std::complex<double> integrate_c(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    double tol = 1e-12) {
  if (b == a) return {0.0, 0.0};
  return simpson_rec(f, a, b, f(a), f(0.5 * (a + b)), f(b), tol, 40);
}

// Quadrature oracle for the Duhamel integral int_0^t e^{(t-s)l0} p(s) ds.
template <class S>
std::complex<double> duhamel_quadrature(const S& lambda0,
                                        const duhamel::ExpPoly<S>& p, double t,
                                        double tol = 1e-12) {
  const std::complex<double> l0 = duhamel::to_cx(lambda0);
  return integrate_c(
      [&](double s) { return std::exp((t - s) * l0) * p.eval(s); }, 0.0, t,
      tol);
}

inline duhamel::Rat random_rat(Rng& rng, long max_num = 6, long max_den = 4) {
  const long num = static_cast<long>(rng.unif_int(-max_num, max_num));
  const long den = static_cast<long>(rng.unif_int(1, max_den));
  return duhamel::Rat(num) / duhamel::Rat(den);
}

inline duhamel::RatC random_ratc(Rng& rng) {
  return duhamel::RatC(random_rat(rng), random_rat(rng));
}

inline duhamel::ExpPolyQ random_exppoly_q(Rng& rng, int max_terms = 4,
                                          unsigned max_power = 3) {
  std::vector<duhamel::ExpTerm<duhamel::RatC>> terms;
  const int n = static_cast<int>(rng.unif_int(1, max_terms));
  for (int i = 0; i < n; ++i) {
    duhamel::RatC rate(random_rat(rng, 3, 2), random_rat(rng, 3, 2));
    unsigned power = static_cast<unsigned>(rng.unif_int(0, max_power));
    duhamel::RatC coeff = random_ratc(rng);
    terms.push_back({rate, power, coeff});
  }
  return duhamel::ExpPolyQ(std::move(terms));
}

inline duhamel::ExpPolyC to_cx_poly(const duhamel::ExpPolyQ& p) {
  std::vector<duhamel::ExpTerm<duhamel::Cx>> terms;
  for (const auto& t : p.terms())
    terms.push_back({duhamel::to_cx(t.rate), t.power, duhamel::to_cx(t.coeff)});
  return duhamel::ExpPolyC(std::move(terms));
}

}  // namespace testutil
