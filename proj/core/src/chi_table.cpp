/*
 * Bundled smooth cutoff and certified-by-sampling bounds on its derivatives.
 *
 * The cutoff is chi(t) = Psi(t - 1) with
 *     Psi(x) = f(1-x) / (f(x) + f(1-x)),   f(x) = e^{-1/x} (x > 0), 0 else,
 * so chi = 1 on (-inf, 1], chi = 0 on [2, inf), chi smooth and nonincreasing.
 *
 * Derivatives use f^(k)(x) = f(x) P_k(1/x) with P_0 = 1 and
 * P_{k+1}(u) = u^2 (P_k(u) - P_k'(u)), then the quotient rule applied to
 * h = N/D, N(x) = f(1-x), D(x) = f(x) + f(1-x):
 *     h^(k) = (N^(k) - sum_{j=1..k} binom(k,j) D^(j) h^(k-j)) / D.
 *
 * Sup norms are taken over a dense uniform sample of (0,1) and inflated by a
 * 1.1 safety factor.  Outside [1e-3, 1 - 1e-3] every derivative is smaller
 * than 1e-8 (the factor e^{-1/x} dominates the polynomial), far below the
 * suprema, so the sampling window loses nothing.
 */

#include <cmath>
#include <stdexcept>
#include <vector>

#include "duhamel/monofun.hpp"
#include "duhamel/scalar.hpp"
#include "duhamel/version.hpp"

namespace duhamel {

namespace {

constexpr unsigned kMaxOrder = 32;
constexpr std::size_t kSamples = 100001;
constexpr double kSafety = 1.1;
// e^{-u} * P_k(u) is below 1e-8 for u >= 650 and k <= 32.
constexpr double kUnderflowU = 650.0;

std::vector<std::vector<double>> bump_poly_table() {
  // P_k as coefficient vectors in u, exact integers converted to double.
  std::vector<std::vector<Int>> exact(kMaxOrder + 1);
  exact[0] = {Int(1)};
  for (unsigned k = 0; k < kMaxOrder; ++k) {
    const auto& p = exact[k];
    std::vector<Int> next(p.size() + 2, Int(0));
    for (std::size_t j = 0; j < p.size(); ++j) {
      Int c = p[j];
      if (j + 1 < p.size()) c -= Int(static_cast<long>(j + 1)) * p[j + 1];
      next[j + 2] = c;
    }
    exact[k + 1] = std::move(next);
  }
  std::vector<std::vector<double>> table(exact.size());
  for (std::size_t k = 0; k < exact.size(); ++k) {
    table[k].reserve(exact[k].size());
    for (const Int& c : exact[k]) table[k].push_back(static_cast<double>(c));
  }
  return table;
}

double horner(const std::vector<double>& coeff, double u) {
  double r = 0.0;
  for (std::size_t j = coeff.size(); j-- > 0;) r = r * u + coeff[j];
  return r;
}

// f^(k)(x) for k = 0..kMaxOrder at one point x in (0,1).
void bump_derivatives(const std::vector<std::vector<double>>& polys, double x,
                      std::vector<double>& out) {
  const double u = 1.0 / x;
  if (u >= kUnderflowU) {
    out.assign(kMaxOrder + 1, 0.0);
    return;
  }
  const double fx = std::exp(-u);
  out.resize(kMaxOrder + 1);
  for (unsigned k = 0; k <= kMaxOrder; ++k) out[k] = fx * horner(polys[k], u);
}

std::vector<std::vector<double>> binom_table(unsigned n) {
  std::vector<std::vector<double>> b(n + 1);
  for (unsigned i = 0; i <= n; ++i) {
    b[i].assign(i + 1, 1.0);
    for (unsigned j = 1; j < i; ++j) b[i][j] = b[i - 1][j - 1] + b[i - 1][j];
  }
  return b;
}

CutoffProfile compute_profile() {
  const auto polys = bump_poly_table();
  const auto binom = binom_table(kMaxOrder);
  std::vector<double> sup(kMaxOrder + 1, 0.0);
  std::vector<double> fx(kMaxOrder + 1), fy(kMaxOrder + 1);
  std::vector<double> nk(kMaxOrder + 1), dk(kMaxOrder + 1), hk(kMaxOrder + 1);
  const double lo = 1e-3, hi = 1.0 - 1e-3;
  for (std::size_t i = 0; i < kSamples; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) /
                              static_cast<double>(kSamples - 1);
    bump_derivatives(polys, x, fx);
    bump_derivatives(polys, 1.0 - x, fy);
    for (unsigned k = 0; k <= kMaxOrder; ++k) {
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      nk[k] = sign * fy[k];
      dk[k] = fx[k] + sign * fy[k];
    }
    hk[0] = nk[0] / dk[0];
    for (unsigned k = 1; k <= kMaxOrder; ++k) {
      double s = nk[k];
      for (unsigned j = 1; j <= k; ++j) s -= binom[k][j] * dk[j] * hk[k - j];
      hk[k] = s / dk[0];
    }
    for (unsigned k = 0; k <= kMaxOrder; ++k)
      sup[k] = std::max(sup[k], std::abs(hk[k]));
  }
  for (unsigned k = 1; k <= kMaxOrder; ++k) sup[k] *= kSafety;
  sup[0] = 1.0;  // chi attains 1 exactly
  return CutoffProfile{std::move(sup), kChiTableVersion};
}

}  // namespace

const CutoffProfile& chi_profile() {
  static const CutoffProfile profile = compute_profile();
  return profile;
}

double chi_eval(double t) {
  const double x = t - 1.0;
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  const double fx = std::exp(-1.0 / x);
  const double fy = std::exp(-1.0 / (1.0 - x));
  return fy / (fx + fy);
}

double mchi(double delta, double m) {
  if (!(delta > 0.0)) throw std::domain_error("mchi: delta must be positive");
  if (!(m >= 0.0)) throw std::domain_error("mchi: order must be nonnegative");
  if (m <= 0.5) return 1.0 + m;
  const auto& prof = chi_profile();
  const unsigned kmax = prof.max_order();
  if (m > static_cast<double>(kmax))
    throw std::domain_error(
        "mchi: order exceeds the tabulated cutoff derivative range");
  // Anchor values at r = 1..ceil(m):  A(r) = sum_k binom(r,k) delta^-k c_k,
  // clamped to be nondecreasing (for delta <= 1 they already increase).
  const unsigned rtop = static_cast<unsigned>(std::ceil(m));
  std::vector<double> anchor(rtop + 1, 0.0);
  anchor[0] = 1.5;  // value at m = 1/2, the left end of the interpolation
  double binom_row[kMaxOrder + 2];
  for (unsigned r = 1; r <= rtop; ++r) {
    binom_row[0] = 1.0;
    for (unsigned k = 1; k <= r; ++k)
      binom_row[k] = binom_row[k - 1] * static_cast<double>(r - k + 1) /
                     static_cast<double>(k);
    double a = 0.0, dpow = 1.0;
    for (unsigned k = 0; k <= r; ++k) {
      a += binom_row[k] * dpow * prof.derivative_sup[k];
      dpow /= delta;
    }
    anchor[r] = std::max(a, anchor[r - 1]);
  }
  if (m <= 1.0) return anchor[0] + (m - 0.5) / 0.5 * (anchor[1] - anchor[0]);
  const unsigned r = static_cast<unsigned>(std::floor(m));
  if (static_cast<double>(r) == m) return anchor[r];
  return anchor[r] + (m - static_cast<double>(r)) * (anchor[r + 1] - anchor[r]);
}

}  // namespace duhamel
