/*
 * Worked quantitative examples: exact mode recursions, critical-amplitude
 * estimators with rigorous brackets, the generating-function zero tracker,
 * the cosine zero-mode ladder, cascade envelopes, and stationary residuals.
 *
 * Precision strategy.  Coefficients are exact rationals throughout; floating
 * values only appear at the outermost reporting layer.  Polynomial values at
 * q = e^{-2t} are computed with 240 decimal digits: the mode polynomials have
 * alternating coefficients and values as small as rho^N with rho ~ 1e-2, so
 * double (or even 200-bit) evaluation would lose every significant digit at
 * small t.  240 digits cover N = 60 down to rho ~ 1e-4 with a wide margin,
 * and a failed extrapolation is reported (or thrown), never silently skipped.
 */

#include "duhamel/casebook.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include <boost/multiprecision/mpfr.hpp>

namespace duhamel {

namespace {

using BigFloat =
    boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<240>,
                                  boost::multiprecision::et_off>;

BigFloat big_from_rat(const Rat& r) { return BigFloat(r); }

// ---------------------------------------------------------------------------
// Mode chain: the shared exact recursion
// ---------------------------------------------------------------------------

// chain[1] = 1;  chain[n] = duhamel_integral(-n(n-1), scale * n * sum_k
// chain[k] * chain[n-k]) expressed on q-polynomials (q = e^{-2t}; q-degree m
// corresponds to the rate -2m).  `scale` = 1 gives the plain mode chain;
// cascade envelopes inject their coupling/dissipation ratio here.
std::vector<QPoly> mode_chain(unsigned N, const Rat& scale) {
  if (N < 1) throw std::invalid_argument("mode chain needs N >= 1");
  std::vector<QPoly> U(N + 1);
  U[1] = QPoly{Rat(1)};
  for (unsigned n = 2; n <= N; ++n) {
    // Dense exact convolution of the lower modes.
    std::size_t deg_src = 0;
    for (unsigned k = 1; k < n; ++k)
      deg_src = std::max(deg_src, U[k].size() + U[n - k].size() - 2);
    QPoly src(deg_src + 1, Rat(0));
    for (unsigned k = 1; k <= n / 2; ++k) {
      const unsigned j = n - k;
      const int mult = (k == j) ? 1 : 2;
      const QPoly& A = U[k];
      const QPoly& B = U[j];
      for (std::size_t ia = 0; ia < A.size(); ++ia) {
        if (A[ia] == 0) continue;
        const Rat am = A[ia] * mult;
        for (std::size_t ib = 0; ib < B.size(); ++ib) {
          if (B[ib] == 0) continue;
          src[ia + ib] += am * B[ib];
        }
      }
    }
    const Rat factor = scale * Rat(static_cast<long>(n));
    std::vector<ExpTerm<RatC>> terms;
    terms.reserve(src.size());
    for (std::size_t m = 0; m < src.size(); ++m) {
      if (src[m] == 0) continue;
      terms.push_back(ExpTerm<RatC>{RatC(Rat(-2) * static_cast<long>(m)), 0,
                                    RatC(factor * src[m])});
    }
    const long lam = static_cast<long>(n) * (static_cast<long>(n) - 1);
    ExpPolyQ integrated =
        duhamel_integral(RatC(Rat(-lam)), ExpPolyQ(std::move(terms)));

    // The integral lives on the same rate lattice: rates -2m with
    // 0 <= m <= n(n-1)/2 and powers all zero (the decay rate -n(n-1) is
    // never hit by a source rate, since deg_src < n(n-1)/2).
    QPoly out(static_cast<std::size_t>(lam / 2) + 1, Rat(0));
    for (const auto& term : integrated.terms()) {
      if (term.power != 0)
        throw std::logic_error("mode chain: unexpected resonant term");
      if (!(term.rate.im == 0) || !(term.coeff.im == 0))
        throw std::logic_error("mode chain: complex leak in a real recursion");
      const Rat m2 = -term.rate.re / 2;
      if (denominator(m2) != 1 || m2 < 0 || m2 > lam / 2)
        throw std::logic_error("mode chain: rate off the q-lattice");
      out[static_cast<std::size_t>(numerator(m2).convert_to<long>())] +=
          term.coeff.re;
    }
    while (out.size() > 1 && out.back() == 0) out.pop_back();
    U[n] = std::move(out);
  }
  return U;
}

// Exact two-sided check (1-q)^{n-1} <= U_n(q) <= 1 at rational q.
void verify_mode_sandwich(const std::vector<QPoly>& U) {
  for (int num = 1; num <= 7; num += 2) {
    const Rat qhat(num, 8);
    Rat lower(1);
    const Rat one_minus = 1 - qhat;
    for (unsigned n = 1; n < U.size(); ++n) {
      if (n > 1) lower *= one_minus;  // (1-q)^{n-1}
      const Rat value = qpoly_eval_exact(U[n], qhat);
      if (value > 1 || value < lower) {
        std::ostringstream os;
        os << "mode chain: two-sided bound violated at n = " << n
           << ", q = " << rat_to_string(qhat);
        throw std::logic_error(os.str());
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Growth-rate extrapolation
// ---------------------------------------------------------------------------

// Coefficients converted once to 240-digit floats; every scan/bisection
// evaluation afterwards is pure mul-add.
using BigTable = std::vector<std::vector<BigFloat>>;

BigTable big_table(const std::vector<QPoly>& Un) {
  BigTable table(Un.size());
  for (std::size_t n = 1; n < Un.size(); ++n) {
    table[n].reserve(Un[n].size());
    for (const Rat& c : Un[n]) table[n].push_back(big_from_rat(c));
  }
  return table;
}

// log U_n(e^{-2t}) for n = 1..N; NaN marks a value that is not positive
// (which at this precision means the evaluation lost all digits).
std::vector<double> mode_logs(const BigTable& table, unsigned N, double t) {
  const BigFloat q = exp(BigFloat(-2.0) * BigFloat(t));
  std::vector<double> logs(N + 1, std::numeric_limits<double>::quiet_NaN());
  for (unsigned n = 1; n <= N; ++n) {
    BigFloat acc(0);
    for (auto it = table[n].rbegin(); it != table[n].rend(); ++it)
      acc = acc * q + *it;
    if (acc > 0) logs[n] = static_cast<double>(log(acc));
  }
  return logs;
}

struct RadiusFit {
  double rho = 0.0;
  bool ok = false;
};

// Least squares of log U_n against n over the top third of the mode range.
RadiusFit fit_growth_rate(const std::vector<double>& logs, unsigned N) {
  const unsigned n0 = std::max(2u, (2 * N) / 3);
  if (N < n0 + 2 || logs.size() <= N) return {};
  double sn = 0, sy = 0, snn = 0, sny = 0;
  unsigned count = 0;
  for (unsigned n = n0; n <= N; ++n) {
    const double y = logs[n];
    if (!std::isfinite(y)) return {};
    sn += n;
    sy += y;
    snn += static_cast<double>(n) * n;
    sny += n * y;
    ++count;
  }
  const double denom = count * snn - sn * sn;
  if (denom == 0) return {};
  const double slope = (count * sny - sn * sy) / denom;
  return {std::exp(slope), true};
}

constexpr double kUpperCritical = 2.598076211353316;  // (3/2) sqrt(3)
constexpr double kHalfLog3 = 0.5493061443340548;

double theta_envelope(double t) { return std::exp(t) / (-std::expm1(-2 * t)); }

// First root of theta_envelope(t) = A on (0, half log 3]; requires
// A >= (3/2) sqrt(3).  The envelope decreases there, so bisection works.
double theta_first_root(double A) {
  double lo = 1e-300, hi = kHalfLog3;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (theta_envelope(mid) > A ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

unsigned checked_depth(const std::vector<QPoly>& Un) {
  if (Un.size() < 2)
    throw std::invalid_argument("mode list must contain U_1..U_N");
  return static_cast<unsigned>(Un.size() - 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Public: recursion and evaluation
// ---------------------------------------------------------------------------

std::vector<QPoly> burgers_un(unsigned N) {
  auto U = mode_chain(N, Rat(1));
  for (unsigned n = 1; n <= N; ++n) {
    const std::size_t max_deg = static_cast<std::size_t>(n) * (n - 1) / 2;
    if (U[n].size() - 1 > max_deg)
      throw std::logic_error("mode chain: degree bound violated");
  }
  verify_mode_sandwich(U);
  return U;
}

std::vector<ExpPolyQ> burgers_un_exppoly(unsigned N) {
  if (N < 1) throw std::invalid_argument("mode chain needs N >= 1");
  std::vector<ExpPolyQ> U(N + 1);
  U[1] = ExpPolyQ::constant(RatC(1));
  for (unsigned n = 2; n <= N; ++n) {
    ExpPolyQ src;
    for (unsigned k = 1; k < n; ++k) src += U[k] * U[n - k];
    const long lam = static_cast<long>(n) * (static_cast<long>(n) - 1);
    U[n] = duhamel_integral(RatC(Rat(-lam)),
                            src.scaled(RatC(static_cast<long>(n))));
  }
  return U;
}

Rat qpoly_eval_exact(const QPoly& p, const Rat& qhat) {
  Rat acc(0);
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * qhat + *it;
  return acc;
}

double qpoly_eval(const QPoly& p, double t) {
  const BigFloat q = exp(BigFloat(-2.0) * BigFloat(t));
  BigFloat acc(0);
  for (auto it = p.rbegin(); it != p.rend(); ++it)
    acc = acc * q + big_from_rat(*it);
  return static_cast<double>(acc);
}

double qpoly_eval_log(const QPoly& p, double t) {
  const BigFloat q = exp(BigFloat(-2.0) * BigFloat(t));
  BigFloat acc(0);
  for (auto it = p.rbegin(); it != p.rend(); ++it)
    acc = acc * q + big_from_rat(*it);
  if (!(acc > 0))
    throw std::domain_error("qpoly_eval_log: value is not positive");
  return static_cast<double>(log(acc));
}

std::vector<double> burgers_un_ode(unsigned N, double t, double h) {
  if (N < 1) throw std::invalid_argument("mode chain needs N >= 1");
  if (!(t >= 0) || !(h > 0))
    throw std::invalid_argument("ode oracle needs t >= 0 and h > 0");
  std::vector<double> W(N + 1, 0.0);
  W[1] = 1.0;
  if (t == 0) return W;
  const auto rhs = [N](const std::vector<double>& w) {
    std::vector<double> g(N + 1, 0.0);
    for (unsigned n = 2; n <= N; ++n) {
      double s = 0;
      for (unsigned k = 1; k <= n / 2; ++k) {
        const unsigned j = n - k;
        s += (k == j ? 1.0 : 2.0) * w[k] * w[j];
      }
      g[n] = n * s;
    }
    return g;
  };
  const auto steps = static_cast<std::size_t>(std::ceil(t / h));
  const double hh = t / static_cast<double>(steps);
  std::vector<double> e_full(N + 1), e_half(N + 1);
  for (unsigned n = 0; n <= N; ++n) {
    const double lam = static_cast<double>(n) * (n - 1.0);
    e_full[n] = std::exp(-lam * hh);
    e_half[n] = std::exp(-lam * hh / 2);
  }
  // Integrating-factor Runge-Kutta: the substitution Y = e^{Lambda t} W
  // removes the stiff diagonal exactly, classical RK4 integrates the rest.
  std::vector<double> k1, k2, k3, k4, tmp(N + 1);
  for (std::size_t s = 0; s < steps; ++s) {
    k1 = rhs(W);
    for (unsigned n = 0; n <= N; ++n)
      tmp[n] = e_half[n] * (W[n] + 0.5 * hh * k1[n]);
    k2 = rhs(tmp);
    for (unsigned n = 0; n <= N; ++n)
      tmp[n] = e_half[n] * W[n] + 0.5 * hh * k2[n];
    k3 = rhs(tmp);
    for (unsigned n = 0; n <= N; ++n)
      tmp[n] = e_full[n] * W[n] + hh * e_half[n] * k3[n];
    k4 = rhs(tmp);
    for (unsigned n = 0; n <= N; ++n)
      W[n] = e_full[n] * W[n] +
             hh / 6.0 *
                 (e_full[n] * k1[n] + 2.0 * e_half[n] * (k2[n] + k3[n]) +
                  k4[n]);
  }
  return W;
}

// ---------------------------------------------------------------------------
// Public: critical-amplitude estimators
// ---------------------------------------------------------------------------

AmplitudeThreshold burgers_astar(double t, const std::vector<QPoly>& Un) {
  const unsigned N = checked_depth(Un);
  if (!(t > 0)) throw std::invalid_argument("burgers_astar needs t > 0");
  if (N < 20)
    throw std::invalid_argument("burgers_astar needs at least 20 modes");
  AmplitudeThreshold out;
  out.t = t;
  out.lower = std::exp(t);
  out.upper = theta_envelope(t);
  const auto table = big_table(Un);
  const RadiusFit fit = fit_growth_rate(mode_logs(table, N, t), N);
  out.extrapolation_ok = fit.ok && fit.rho > 0;
  out.estimate = out.extrapolation_ok ? std::exp(t) / fit.rho : 0.0;
  out.inside = out.extrapolation_ok && out.lower <= out.estimate &&
               out.estimate <= out.upper;
  return out;
}

AmplitudeThreshold burgers_astar(double t, unsigned N) {
  return burgers_astar(t, burgers_un(N));
}

CriticalAmplitude burgers_astarstar(const std::vector<double>& tgrid,
                                    unsigned N) {
  if (tgrid.empty())
    throw std::invalid_argument("burgers_astarstar needs a nonempty grid");
  if (N < 20)
    throw std::invalid_argument("burgers_astarstar needs at least 20 modes");
  const auto Un = burgers_un(N);
  const auto table = big_table(Un);
  CriticalAmplitude out;
  out.upper = kUpperCritical;

  // Convergence study: the minimum over the grid at increasing mode depth,
  // all depths sharing one high-precision evaluation per grid point.
  std::vector<unsigned> depths;
  for (unsigned d = 20; d < N; d += 10) depths.push_back(d);
  depths.push_back(N);

  std::vector<double> best(depths.size(),
                           std::numeric_limits<double>::infinity());
  std::vector<double> best_t(depths.size(), 0.0);
  for (const double t : tgrid) {
    const auto logs = mode_logs(table, N, t);
    for (std::size_t i = 0; i < depths.size(); ++i) {
      const RadiusFit fit = fit_growth_rate(logs, depths[i]);
      if (!fit.ok || !(fit.rho > 0)) continue;
      const double est = std::exp(t) / fit.rho;
      if (est < best[i]) {
        best[i] = est;
        best_t[i] = t;
      }
    }
  }
  for (std::size_t i = 0; i < depths.size(); ++i)
    out.refinement.emplace_back(depths[i], best[i]);
  out.estimate = best.back();
  out.argmin_t = best_t.back();
  out.inside = out.lower <= out.estimate && out.estimate <= out.upper;
  return out;
}

BlowupTime burgers_tstar(Cx a, const std::vector<QPoly>& Un) {
  const unsigned N = checked_depth(Un);
  const double A = std::abs(a);
  BlowupTime out;
  if (A < 1.0) {
    out.no_blowup = true;
    return out;
  }
  out.upper_log = std::log(A);
  if (A <= kUpperCritical + 1e-9) {
    out.undecidable = true;
    return out;
  }
  out.upper_theta = theta_first_root(A);

  // First time the extrapolated mode growth beats the decaying amplitude:
  // g(t) = log A - t + log rho_fit(t) crosses zero from below.
  const auto table = big_table(Un);
  const auto g = [&](double t) {
    const RadiusFit fit = fit_growth_rate(mode_logs(table, N, t), N);
    if (!fit.ok || !(fit.rho > 0))
      throw std::runtime_error(
          "burgers_tstar: growth-rate extrapolation failed (mode values "
          "below working precision)");
    return out.upper_log - t + std::log(fit.rho);
  };
  const int scan = 240;
  double prev = 0.0;
  for (int j = 1; j <= scan; ++j) {
    const double t = out.upper_log * j / scan;
    if (g(t) >= 0) {
      double lo = prev, hi = t;
      for (int i = 0; i < 60 && hi - lo >= 1e-12; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) >= 0 ? hi : lo) = mid;
      }
      out.estimate = 0.5 * (lo + hi);
      out.found = true;
      return out;
    }
    prev = t;
  }
  return out;  // found == false: no crossing inside (0, log A]
}

BlowupTime burgers_tstar(Cx a, unsigned N) {
  return burgers_tstar(a, burgers_un(N));
}

BurgersAnalysis burgers_analyze(Cx a, unsigned N,
                                const std::vector<double>& astar_grid) {
  BurgersAnalysis out;
  out.a = a;
  out.N = N;
  out.Un = burgers_un(N);
  out.astar_curve.reserve(astar_grid.size());
  for (const double t : astar_grid)
    out.astar_curve.push_back(burgers_astar(t, out.Un));
  out.Tstar = burgers_tstar(a, out.Un);
  return out;
}

// ---------------------------------------------------------------------------
// Public: generating-function first zero
// ---------------------------------------------------------------------------

namespace {

// Winding number of x -> sum_n c_n(t) e^{inx} around 0 over one period,
// equal to the number of zeros of the truncated power series inside the
// unit disk.  Returns -1 when the curve passes too close to the origin for
// double evaluation to decide.
int winding_number(double log_amp, double t, unsigned nmax, unsigned K) {
  // Log coefficient magnitudes, peak-normalized; drop the negligible tail.
  std::vector<double> lc(nmax + 1);
  double peak = -std::numeric_limits<double>::infinity();
  for (unsigned n = 0; n <= nmax; ++n) {
    lc[n] = n * log_amp - std::lgamma(n + 1.0) - static_cast<double>(n) * n * t;
    peak = std::max(peak, lc[n]);
  }
  unsigned last = nmax;
  while (last > 1 && lc[last] - peak < -600.0) --last;
  std::vector<double> c(last + 1);
  double scale = 0.0;
  for (unsigned n = 0; n <= last; ++n) {
    c[n] = std::exp(lc[n] - peak);
    scale += c[n];
  }
  const double pi = std::acos(-1.0);
  const double two_pi = 2.0 * pi;
  double total = 0.0;
  double min_abs = std::numeric_limits<double>::infinity();
  double prev_arg = 0.0, first_arg = 0.0;
  for (unsigned j = 0; j < K; ++j) {
    const double x = two_pi * j / K;
    const Cx w(std::cos(x), std::sin(x));
    Cx wp(1.0, 0.0);
    Cx v(c[0], 0.0);
    for (unsigned n = 1; n <= last; ++n) {
      wp *= w;
      v += c[n] * wp;
    }
    min_abs = std::min(min_abs, std::abs(v));
    const double arg = std::arg(v);
    if (j == 0) {
      first_arg = arg;
    } else {
      double d = arg - prev_arg;
      if (d > pi) d -= two_pi;
      if (d < -pi) d += two_pi;
      total += d;
    }
    prev_arg = arg;
  }
  double d = first_arg - prev_arg;
  if (d > pi) d -= two_pi;
  if (d < -pi) d += two_pi;
  total += d;
  if (min_abs < 1e-12 * scale) return -1;
  return static_cast<int>(std::lround(total / two_pi));
}

// Winding with grid refinement; -1 means unresolved even at the finest grid,
// i.e. the curve passes within double rounding of the origin at this t.
int winding_refined(double log_amp, double t, unsigned nmax, unsigned K) {
  for (unsigned grid = K; grid <= 16 * K; grid *= 4) {
    const int w = winding_number(log_amp, t, nmax, grid);
    if (w >= 0) return w;
  }
  return -1;
}

}  // namespace

ColeHopfResult colehopf_first_zero(Cx a, unsigned xgrid,
                                   std::pair<double, double> tsearch) {
  const double A = std::abs(a);
  if (!(A > 0)) throw std::invalid_argument("zero tracking needs a != 0");
  if (xgrid < 64) throw std::invalid_argument("x-grid too coarse");
  const double log_amp = std::log(A);
  // A phase on the amplitude only translates the curve; the zero count and
  // the crossing time depend on |a| alone.
  double lo = tsearch.first, hi = tsearch.second;
  if (!(hi > lo)) {
    lo = 0.0;
    hi = std::max(log_amp, 0.0) + 1.0;
  }

  const auto run = [&](unsigned nmax) {
    ColeHopfResult r;
    r.truncation = nmax;
    const int scan = 800;
    double prev = lo;
    for (int j = 1; j <= scan; ++j) {
      const double t = lo + (hi - lo) * j / scan;
      const int w = winding_refined(log_amp, t, nmax, xgrid);
      if (w < 0) {
        // A scan point this ambiguous means double evaluation cannot decide
        // the zero count anywhere near here; report rather than guess.
        std::ostringstream os;
        os << "generating-function winding unresolved at t = " << t
           << ": the curve passes within double rounding of the origin "
              "(amplitude too large for double evaluation)";
        throw std::runtime_error(os.str());
      }
      if (w >= 1) {
        double bl = prev, bh = t;
        double no_zero = prev;
        for (int i = 0; i < 60 && bh - bl >= 1e-13; ++i) {
          const double mid = 0.5 * (bl + bh);
          const int wm = winding_refined(log_amp, mid, nmax, xgrid);
          if (wm < 0) {
            // The crossing was already bracketed by resolved evaluations, so
            // an unresolvable midpoint sits on the crossing itself.
            bl = bh = mid;
            break;
          }
          if (wm >= 1)
            bh = mid;
          else
            no_zero = bl = mid;
        }
        r.found = true;
        r.t_zero = 0.5 * (bl + bh);
        r.t_lower = no_zero;
        return r;
      }
      prev = t;
    }
    r.t_lower = hi;
    return r;
  };

  ColeHopfResult full = run(400);
  if (full.found) {
    const ColeHopfResult half = run(200);
    full.truncation_shift =
        half.found ? std::abs(full.t_zero - half.t_zero)
                   : std::numeric_limits<double>::infinity();
  }
  return full;
}

// ---------------------------------------------------------------------------
// Public: cosine zero mode
// ---------------------------------------------------------------------------

CosineZeroMode cosine_zero_mode(unsigned K) {
  if (K < 1) throw std::invalid_argument("cosine_zero_mode needs K >= 1");
  CosineZeroMode out;
  out.K = K;
  out.odd_coeffs.reserve(K);
  // c_1 = 1/2 and c_{k+1} = c_k (2k+1)/(2k+2), exactly.
  Rat c(1, 2);
  out.odd_coeffs.push_back(c);
  for (unsigned k = 1; k < K; ++k) {
    c *= Rat(2 * static_cast<long>(k) + 1, 2 * static_cast<long>(k) + 2);
    out.odd_coeffs.push_back(c);
  }
  // Independent closed form: c_k equals the central binomial over 4^k, via
  // the integer recurrence  binom(2k+2, k+1) = binom(2k, k) * 2(2k+1)/(k+1).
  out.ratio_law_exact = true;
  out.harmonic_minorant = true;
  Int binom(2);  // binom(2, 1)
  Int pow4(4);
  for (unsigned k = 1; k <= K; ++k) {
    if (out.odd_coeffs[k - 1] != Rat(binom) / Rat(pow4))
      out.ratio_law_exact = false;
    if (out.odd_coeffs[k - 1] < Rat(1, 2 * static_cast<long>(k)))
      out.harmonic_minorant = false;
    binom = binom * 2 * (2 * static_cast<long>(k) + 1) /
            (static_cast<long>(k) + 1);
    pow4 *= 4;
  }
  return out;
}

double cosine_partial_sum(const CosineZeroMode& mode, double t) {
  double sum = 0.0;
  double tpow = t;  // t^{2k-1}
  const double t2 = t * t;
  for (unsigned k = 1; k <= mode.K; ++k) {
    sum += static_cast<double>(mode.odd_coeffs[k - 1]) * tpow;
    tpow *= t2;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Public: cascade envelopes
// ---------------------------------------------------------------------------

CascadeBounds cascade_bounds(double b_lo, double b_hi, double c_lo,
                             double c_hi, unsigned N) {
  if (!(0 < b_lo && b_lo <= b_hi) || !(0 < c_lo && c_lo <= c_hi))
    throw std::invalid_argument(
        "cascade_bounds: inconsistent parameters (need 0 < b_lo <= b_hi and "
        "0 < c_lo <= c_hi)");
  if (N < 1) throw std::invalid_argument("cascade_bounds needs N >= 1");
  CascadeBounds out;
  out.N = N;
  out.b_lo = rat_from_double(b_lo);
  out.b_hi = rat_from_double(b_hi);
  out.c_lo = rat_from_double(c_lo);
  out.c_hi = rat_from_double(c_hi);

  // Each envelope is the plain mode chain run in the rescaled time b^2 t
  // with the per-level factor c/b^2 injected; q-degree m maps back to the
  // rate -2 b^2 m.
  const auto to_exppoly = [](const std::vector<QPoly>& chain, const Rat& b2,
                             unsigned depth) {
    std::vector<ExpPolyQ> fs(depth + 1);
    for (unsigned n = 1; n <= depth; ++n) {
      std::vector<ExpTerm<RatC>> terms;
      terms.reserve(chain[n].size());
      for (std::size_t m = 0; m < chain[n].size(); ++m) {
        if (chain[n][m] == 0) continue;
        terms.push_back(ExpTerm<RatC>{
            RatC(Rat(-2) * b2 * static_cast<long>(m)), 0, RatC(chain[n][m])});
      }
      fs[n] = ExpPolyQ(std::move(terms));
    }
    return fs;
  };
  const Rat blo2 = out.b_lo * out.b_lo;
  const Rat bhi2 = out.b_hi * out.b_hi;
  // Lower: strongest dissipation with weakest coupling; upper: the reverse.
  const auto chain_lo = mode_chain(N, out.c_lo / bhi2);
  const auto chain_hi = mode_chain(N, out.c_hi / blo2);
  out.lower = to_exppoly(chain_lo, bhi2, N);
  out.upper = to_exppoly(chain_hi, blo2, N);

  // Verify the full sandwich
  //   base_lo^{n-1} <= lower_n(t) <= upper_n(t) <= base_hi^{n-1}
  // on an internal grid, evaluating each chain as a polynomial in its own
  // q_b = e^{-2 b^2 t}.
  const unsigned ncheck = std::min(N, 30u);
  const auto tbl_lo = big_table(chain_lo);
  const auto tbl_hi = big_table(chain_hi);
  const BigFloat blo2f = big_from_rat(blo2);
  const BigFloat bhi2f = big_from_rat(bhi2);
  const BigFloat base_hi = big_from_rat(out.c_hi / blo2);
  const auto horner = [](const std::vector<BigFloat>& coeffs,
                         const BigFloat& q) {
    BigFloat acc(0);
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
      acc = acc * q + *it;
    return acc;
  };
  double worst = -std::numeric_limits<double>::infinity();
  for (int j = 1; j <= 20; ++j) {
    const BigFloat t = BigFloat(j) / 10;
    const BigFloat q_lo = exp(-2 * bhi2f * t);
    const BigFloat q_hi = exp(-2 * blo2f * t);
    const BigFloat base_lo = big_from_rat(out.c_lo / bhi2) * (1 - q_lo);
    BigFloat pow_lo(1), pow_hi(1);
    for (unsigned n = 1; n <= ncheck; ++n) {
      if (n > 1) {
        pow_lo *= base_lo;
        pow_hi *= base_hi;
      }
      const BigFloat flo = horner(tbl_lo[n], q_lo);
      const BigFloat fhi = horner(tbl_hi[n], q_hi);
      worst = std::max(worst, static_cast<double>(pow_lo - flo));
      worst = std::max(worst, static_cast<double>(flo - fhi));
      worst = std::max(worst, static_cast<double>(fhi - pow_hi));
    }
  }
  out.max_violation = worst;
  out.sandwich_checked = worst <= 1e-10;
  return out;
}

double cascade_eval(const ExpPolyQ& f, double t) {
  const BigFloat tt(t);
  BigFloat acc(0);
  for (const auto& term : f.terms()) {
    if (term.power != 0 || !(term.coeff.im == 0) || !(term.rate.im == 0))
      throw std::invalid_argument(
          "cascade_eval expects a real pure-exponential chain member");
    acc += big_from_rat(term.coeff.re) * exp(big_from_rat(term.rate.re) * tt);
  }
  return static_cast<double>(acc);
}

// ---------------------------------------------------------------------------
// Public: stationary residuals
// ---------------------------------------------------------------------------

namespace {

ExpDensity density_to_cx(const ExpPolyQ& p) {
  std::vector<ExpTerm<Cx>> terms;
  terms.reserve(p.terms().size());
  for (const auto& term : p.terms())
    terms.push_back(
        ExpTerm<Cx>{to_cx(term.rate), term.power, to_cx(term.coeff)});
  return ExpDensity(std::move(terms));
}

double density_linf(const ExpPolyQ& p) {
  double m = 0.0;
  for (const auto& term : p.terms())
    m = std::max(m, std::abs(to_cx(term.coeff)));
  return m;
}

// The scalar of a density known to consist of a single monomial.
RatC single_coeff(const ExpPolyQ& p, const char* what) {
  if (p.terms().size() != 1)
    throw std::logic_error(std::string("stationary residual: ") + what +
                           " is not a single monomial");
  return p.terms().front().coeff;
}

}  // namespace

StationaryResidual stationary_residual(const std::string& name, double z,
                                       const StationaryParams& params) {
  if (!(z > 0))
    throw std::invalid_argument("stationary_residual needs z > 0");
  const RatC minus_z = RatC(-rat_from_double(z));
  const RatC I(Rat(0), Rat(1));

  StationaryResidual out;
  out.name = name;

  // Candidate density  A * base  with base a single xi-monomial; the residual
  // splits as  R(A) = A * lin_base + A^order * nl_base.
  ExpPolyQ base, lin_base, nl_base;
  unsigned order = 0;
  RatC reference;

  if (name == "nls_star") {
    if (params.alpha == 0)
      throw std::invalid_argument("nls_star needs alpha != 0");
    const Rat alpha = rat_from_double(params.alpha);
    base = ExpPolyQ::monomial(minus_z, 0, -I);  // -i e^{-z xi}
    lin_base = ExpPolyQ::monomial(RatC(0), 2, RatC(1)) * base;  // xi^2 .
    nl_base = halfline_convolve(halfline_convolve(base, base), base)
                  .scaled(RatC(alpha));
    order = 3;
  } else if (name == "kdv") {
    base = ExpPolyQ::monomial(minus_z, 1, RatC(-1));  // -xi e^{-z xi}
    lin_base = ExpPolyQ::monomial(RatC(0), 3, I) * base;        // i xi^3 .
    nl_base = (ExpPolyQ::monomial(RatC(0), 1, I) *
               halfline_convolve(base, base))
                  .scaled(RatC(3));                             // 3 i xi .
    order = 2;
    reference = RatC(1);
  } else if (name == "clm") {
    const RatC eps = ratc_from_cx(params.eps);
    base = ExpPolyQ::monomial(minus_z, 1, RatC(-1));  // -xi e^{-z xi}
    lin_base = (ExpPolyQ::monomial(RatC(0), 2, RatC(1)) * base).scaled(-eps);
    nl_base = halfline_convolve(base, base).scaled(I);
    order = 2;
    reference = RatC(6) * I * eps;
  } else {
    throw std::invalid_argument("unknown stationary candidate '" + name +
                                "' (catalogue: nls_star, kdv, clm)");
  }
  out.nonlinearity_order = order;

  // Best-fit amplitude from the measured scalar factors: the nontrivial
  // root of  lam_lin A + lam_nl A^order = 0, kept exact where possible.
  const RatC lam_lin = single_coeff(lin_base, "linear part");
  const RatC lam_nl = single_coeff(nl_base, "nonlinear part");
  const RatC ratio = -lam_lin / lam_nl;
  RatC best;
  if (order == 2) {
    best = ratio;
  } else {
    // Cube-free case: take the square root numerically, then keep the exact
    // value whenever the root happens to be exactly representable.
    best = ratc_from_cx(std::sqrt(to_cx(ratio)));
  }
  out.best_fit_amplitude = to_cx(best);
  if (order == 3) reference = best;
  out.reference_amplitude = to_cx(reference);

  const bool use_reference = params.amplitude == Cx(0.0, 0.0);
  const RatC A = use_reference ? reference : ratc_from_cx(params.amplitude);
  out.amplitude = to_cx(A);

  const auto assemble = [&](const RatC& amp) {
    RatC amp_pow = amp;
    for (unsigned i = 1; i < order; ++i) amp_pow = amp_pow * amp;
    return std::pair{lin_base.scaled(amp), nl_base.scaled(amp_pow)};
  };

  const auto [lin, nl] = assemble(A);
  out.candidate = density_to_cx(base.scaled(A));
  out.linear_part = density_to_cx(lin);
  out.nonlinear_part = density_to_cx(nl);
  const ExpPolyQ residual = lin + nl;
  out.residual = density_to_cx(residual);
  out.residual_linf = density_linf(residual);

  const auto [lin_b, nl_b] = assemble(best);
  const ExpPolyQ residual_best = lin_b + nl_b;
  out.residual_at_best_fit = density_to_cx(residual_best);
  out.exact_zero_at_best_fit = residual_best.is_zero();
  return out;
}

}  // namespace duhamel
