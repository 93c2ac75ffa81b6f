#include "duhamel/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace duhamel {
namespace {

std::string freq_string(const FreqPoint& xi) {
  std::string s = "(";
  for (std::size_t i = 0; i < xi.size(); ++i) {
    if (i) s += ", ";
    s += rat_to_string(xi[i]);
  }
  return s + ")";
}

using EMat = Eigen::MatrixXcd;
using EVec = Eigen::VectorXcd;

EMat to_eigen(const CMat& m) {
  EMat a(m.rows, m.cols);
  for (unsigned i = 0; i < m.rows; ++i)
    for (unsigned j = 0; j < m.cols; ++j) a(i, j) = m(i, j);
  return a;
}

// out_i = sum_j m(i, j) v_j for a vector of exponential polynomials; the
// matrix entries and the polynomial scalars share the coefficient field.
template <class S, class Mat>
std::vector<ExpPoly<S>> mat_apply(const Mat& m, const std::vector<ExpPoly<S>>& v) {
  if (m.cols != v.size())
    throw std::logic_error("solve_lattice: symbol shape disagrees with data");
  std::vector<ExpPoly<S>> out(m.rows);
  for (unsigned i = 0; i < m.rows; ++i) {
    ExpAccum<S> acc;
    for (unsigned j = 0; j < m.cols; ++j) acc.add_scaled(v[j], m(i, j));
    out[i] = acc.take();
  }
  return out;
}

template <class S>
bool all_zero(const std::vector<ExpPoly<S>>& v) {
  for (const auto& p : v)
    if (!p.is_zero()) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Arithmetic policies.  Each policy fetches the three symbols in its
// coefficient field and turns the linear symbol at a frequency into a form
// the exponential-polynomial Duhamel map can consume.

struct ExactPolicy {
  using S = RatC;
  using Mat = RatMat;

  // Diagonal rational linear symbol: one rate per component.
  struct Decomp {
    std::vector<RatC> rates;
  };

  static Mat fetch(const SymbolTable::ExactSymbol& f, const FreqPoint& xi,
                   unsigned rows, unsigned cols, const char* who) {
    RatMat m;
    if (!f || !f(xi, m))
      throw std::invalid_argument(
          std::string("solve_lattice: no exact rational ") + who +
          " symbol at frequency " + freq_string(xi) +
          "; use the floating solver");
    if (m.rows != rows || m.cols != cols)
      throw std::logic_error(std::string("solve_lattice: exact ") + who +
                             " symbol has the wrong shape");
    return m;
  }
  static Mat fetch_L(const SymbolTable& sym, const FreqPoint& xi) {
    return fetch(sym.L_hat_exact, xi, sym.n1, sym.n1, "linear");
  }
  static Mat fetch_M(const SymbolTable& sym, const FreqPoint& xi) {
    return fetch(sym.M_hat_exact, xi, sym.n2, sym.n1, "inner");
  }
  static Mat fetch_N(const SymbolTable& sym, const FreqPoint& xi) {
    return fetch(sym.N_hat_exact, xi, sym.n1, sym.n3, "outer");
  }

  static Decomp decompose(const SymbolTable& sym, const FreqPoint& xi) {
    const Mat L = fetch_L(sym, xi);
    if (!L.is_diagonal())
      throw std::invalid_argument(
          "solve_lattice: exact arithmetic needs a diagonal linear symbol, "
          "got a non-diagonal matrix at frequency " +
          freq_string(xi) + "; use the floating solver");
    Decomp d;
    d.rates.reserve(L.rows);
    for (unsigned i = 0; i < L.rows; ++i) d.rates.push_back(L(i, i));
    return d;
  }

  static std::vector<ExpPoly<S>> linear_flow(const Decomp& d,
                                             const std::vector<S>& coef) {
    std::vector<ExpPoly<S>> out(d.rates.size());
    for (std::size_t i = 0; i < d.rates.size(); ++i)
      out[i] = ExpPoly<S>::monomial(d.rates[i], 0, coef[i]);
    return out;
  }

  static std::vector<ExpPoly<S>> duhamel_map(const Decomp& d,
                                             const std::vector<ExpPoly<S>>& src,
                                             const DuhamelOptions& opt) {
    std::vector<ExpPoly<S>> out(d.rates.size());
    for (std::size_t i = 0; i < d.rates.size(); ++i)
      out[i] = duhamel_integral(d.rates[i], src[i], opt);
    return out;
  }
};

struct FloatPolicy {
  using S = Cx;
  using Mat = CMat;

  // Dense eigendecomposition Lh = V diag(eigs) V^{-1}.
  struct Decomp {
    EMat V, Vinv;
    std::vector<Cx> eigs;
  };

  static Mat fetch(const std::function<CMat(const FreqPoint&)>& f,
                   const FreqPoint& xi, unsigned rows, unsigned cols,
                   const char* who) {
    CMat m = f(xi);
    if (m.rows != rows || m.cols != cols)
      throw std::logic_error(std::string("solve_lattice: ") + who +
                             " symbol has the wrong shape");
    return m;
  }
  static Mat fetch_L(const SymbolTable& sym, const FreqPoint& xi) {
    return fetch(sym.L_hat, xi, sym.n1, sym.n1, "linear");
  }
  static Mat fetch_M(const SymbolTable& sym, const FreqPoint& xi) {
    return fetch(sym.M_hat, xi, sym.n2, sym.n1, "inner");
  }
  static Mat fetch_N(const SymbolTable& sym, const FreqPoint& xi) {
    return fetch(sym.N_hat, xi, sym.n1, sym.n3, "outer");
  }

  static Decomp decompose(const SymbolTable& sym, const FreqPoint& xi) {
    const EMat a = to_eigen(fetch_L(sym, xi));
    Decomp d;
    if (a.rows() == 1) {
      d.V = EMat::Identity(1, 1);
      d.Vinv = d.V;
      d.eigs = {a(0, 0)};
      return d;
    }
    Eigen::ComplexEigenSolver<EMat> es(a);
    if (es.info() != Eigen::Success)
      throw std::runtime_error(
          "solve_lattice: eigendecomposition failed at frequency " +
          freq_string(xi));
    const EMat v = es.eigenvectors();
    Eigen::FullPivLU<EMat> lu(v);
    if (!lu.isInvertible())
      throw std::invalid_argument(
          "solve_lattice: non-diagonalizable linear symbol at frequency " +
          freq_string(xi));
    d.V = v;
    d.Vinv = lu.inverse();
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    const EMat recon = d.V * es.eigenvalues().asDiagonal() * d.Vinv;
    if ((recon - a).cwiseAbs().maxCoeff() > 1e-8 * scale)
      throw std::invalid_argument(
          "solve_lattice: non-diagonalizable linear symbol at frequency " +
          freq_string(xi));
    d.eigs.assign(es.eigenvalues().data(),
                  es.eigenvalues().data() + es.eigenvalues().size());
    return d;
  }

  static std::vector<ExpPoly<S>> linear_flow(const Decomp& d,
                                             const std::vector<S>& coef) {
    const std::size_t n = d.eigs.size();
    EVec c(n);
    for (std::size_t j = 0; j < n; ++j) c(static_cast<Eigen::Index>(j)) = coef[j];
    const EVec w = d.Vinv * c;
    std::vector<ExpPoly<S>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      ExpAccum<S> acc;
      for (std::size_t k = 0; k < n; ++k)
        acc.add_term(d.eigs[k], 0,
                     d.V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) *
                         w(static_cast<Eigen::Index>(k)));
      out[i] = acc.take();
    }
    return out;
  }

  static std::vector<ExpPoly<S>> duhamel_map(const Decomp& d,
                                             const std::vector<ExpPoly<S>>& src,
                                             const DuhamelOptions& opt) {
    const std::size_t n = d.eigs.size();
    std::vector<ExpPoly<S>> y(n);
    for (std::size_t k = 0; k < n; ++k) {
      ExpAccum<S> acc;
      for (std::size_t j = 0; j < n; ++j)
        acc.add_scaled(src[j], d.Vinv(static_cast<Eigen::Index>(k),
                                      static_cast<Eigen::Index>(j)));
      y[k] = duhamel_integral(d.eigs[k], acc.take(), opt);
    }
    std::vector<ExpPoly<S>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      ExpAccum<S> acc;
      for (std::size_t k = 0; k < n; ++k)
        acc.add_scaled(y[k], d.V(static_cast<Eigen::Index>(i),
                                 static_cast<Eigen::Index>(k)));
      out[i] = acc.take();
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Shared driver machinery.

template <class P>
struct Ctx {
  const SymbolTable& sym;
  const NonlinearSeries& H;
  SupportSpec spec;  // grading direction; min_level = least datum level
  DuhamelOptions duh;

  std::map<FreqPoint, typename P::Decomp> decomps;
  std::map<FreqPoint, typename P::Mat> msym, nsym;

  const typename P::Decomp& decomp(const FreqPoint& xi) {
    auto it = decomps.find(xi);
    if (it == decomps.end())
      it = decomps.emplace(xi, P::decompose(sym, xi)).first;
    return it->second;
  }
  const typename P::Mat& M(const FreqPoint& xi) {
    auto it = msym.find(xi);
    if (it == msym.end()) it = msym.emplace(xi, P::fetch_M(sym, xi)).first;
    return it->second;
  }
  const typename P::Mat& N(const FreqPoint& xi) {
    auto it = nsym.find(xi);
    if (it == nsym.end()) it = nsym.emplace(xi, P::fetch_N(sym, xi)).first;
    return it->second;
  }
};

// Validates the datum and keeps the atoms within the level budget.
template <class S>
VecSpectrum<S> prepare(const SymbolTable& sym, const VecSpectrum<S>& u0,
                       const Rat& budget, SupportSpec& spec) {
  spec = sym.admissible;
  VecSpectrum<S> base;
  bool have = false;
  Rat dmin(0);
  for (const auto& [xi, row] : u0) {
    if (xi.size() != sym.dim)
      throw std::invalid_argument("solve_lattice: frequency dimension mismatch");
    if (row.size() != sym.n1)
      throw std::invalid_argument(
          "solve_lattice: datum component count disagrees with the symbol "
          "table");
    const Rat l = level(xi, spec);
    if (!(l > 0))
      throw std::invalid_argument(
          "solve_lattice: atom on or below the support boundary at frequency " +
          freq_string(xi));
    if (l > budget) continue;
    if (!have || l < dmin) {
      dmin = l;
      have = true;
    }
    base.emplace(xi, row);
  }
  if (!have)
    throw std::invalid_argument(
        "solve_lattice: empty reachable set below the level budget");
  spec.min_level = dmin;
  return base;
}

// Residual d/dt u - Lh u - Nh src over supp(u) union supp(src), with src
// the already-evaluated nonlinearity at the full budget.
template <class P>
ResidualReport residual_from(Ctx<P>& ctx,
                             const VecSpectrum<ExpPoly<typename P::S>>& u,
                             const VecSpectrum<ExpPoly<typename P::S>>& src) {
  using S = typename P::S;
  ResidualReport rep;
  std::set<FreqPoint> domain;
  for (const auto& [xi, row] : u) domain.insert(xi);
  for (const auto& [xi, row] : src) domain.insert(xi);
  rep.atoms = domain.size();
  rep.exact = true;
  for (const auto& xi : domain) {
    std::vector<ExpPoly<S>> r(ctx.sym.n1);
    if (auto it = u.find(xi); it != u.end()) {
      const auto lu = mat_apply(P::fetch_L(ctx.sym, xi), it->second);
      for (unsigned i = 0; i < ctx.sym.n1; ++i)
        r[i] = it->second[i].derivative() - lu[i];
    }
    if (auto it = src.find(xi); it != src.end()) {
      const auto ns = mat_apply(ctx.N(xi), it->second);
      for (unsigned i = 0; i < ctx.sym.n1; ++i) r[i] = r[i] - ns[i];
    }
    for (const auto& p : r)
      if (!p.is_zero()) {
        rep.exact = false;
        rep.max_abs = std::max(rep.max_abs, p.coeff_linf());
      }
  }
  return rep;
}

template <class P>
LatticeSolution<typename P::S> solve_impl(const Equation& eq,
                                          const VecSpectrum<typename P::S>& u0,
                                          const Rat& budget,
                                          const LatticeOptions& opt) {
  using S = typename P::S;
  eq.validate();
  Ctx<P> ctx{eq.sym, eq.H, {}, opt.duhamel, {}, {}, {}};
  const VecSpectrum<S> base = prepare(eq.sym, u0, budget, ctx.spec);

  // Reachable frequencies: closure of the datum support under addition,
  // within the budget, grouped by level.  Every sum of k datum points has
  // all its prefix sums at strictly smaller levels, so closing against the
  // datum support alone is complete.
  std::map<Rat, std::vector<FreqPoint>> groups;
  {
    std::set<FreqPoint> seen;
    std::vector<FreqPoint> queue;
    for (const auto& [xi, row] : base) {
      seen.insert(xi);
      queue.push_back(xi);
      groups[level(xi, ctx.spec)].push_back(xi);
    }
    while (!queue.empty()) {
      const FreqPoint x = std::move(queue.back());
      queue.pop_back();
      for (const auto& [b, row] : base) {
        FreqPoint y(x.size());
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + b[i];
        const Rat ly = level(y, ctx.spec);
        if (ly > budget) continue;
        if (seen.insert(y).second) {
          groups[ly].push_back(y);
          queue.push_back(y);
        }
      }
    }
    for (auto& [l, pts] : groups) std::sort(pts.begin(), pts.end());
  }

  // Increasing level order: at level l the source is a convolution of at
  // least two atoms of positive level, hence involves levels < l only.
  VecSpectrum<ExpPoly<S>> u, mu;
  for (const auto& [lvl, pts] : groups) {
    const auto src = evaluate_nonlinearity(ctx.H, mu, ctx.spec, lvl);
    for (const auto& xi : pts) {
      const auto bit = base.find(xi);
      const auto sit = src.find(xi);
      if (bit == base.end() && sit == src.end()) continue;
      const auto& dec = ctx.decomp(xi);
      std::vector<ExpPoly<S>> atom =
          bit != base.end() ? P::linear_flow(dec, bit->second)
                            : std::vector<ExpPoly<S>>(eq.sym.n1);
      if (sit != src.end()) {
        const auto duh =
            P::duhamel_map(dec, mat_apply(ctx.N(xi), sit->second), ctx.duh);
        for (unsigned i = 0; i < eq.sym.n1; ++i) atom[i] += duh[i];
      }
      if (all_zero(atom)) continue;
      mu.emplace(xi, mat_apply(ctx.M(xi), atom));
      u.emplace(xi, std::move(atom));
    }
  }

  LatticeSolution<S> sol;
  sol.budget = budget;
  if (opt.compute_residual) {
    const auto src = evaluate_nonlinearity(ctx.H, mu, ctx.spec, budget);
    sol.residual = residual_from(ctx, u, src);
  }
  sol.spectrum = std::move(u);
  return sol;
}

template <class P>
std::vector<LatticeSolution<typename P::S>> picard_impl(
    const Equation& eq, const VecSpectrum<typename P::S>& u0, const Rat& budget,
    unsigned n, const LatticeOptions& opt) {
  using S = typename P::S;
  eq.validate();
  Ctx<P> ctx{eq.sym, eq.H, {}, opt.duhamel, {}, {}, {}};
  const VecSpectrum<S> base = prepare(eq.sym, u0, budget, ctx.spec);

  // v = linear flow of the datum.
  VecSpectrum<ExpPoly<S>> v;
  for (const auto& [xi, row] : base) {
    auto lf = P::linear_flow(ctx.decomp(xi), row);
    if (!all_zero(lf)) v.emplace(xi, std::move(lf));
  }

  std::vector<LatticeSolution<S>> out;
  out.reserve(n + 1);
  for (unsigned j = 0; j <= n; ++j) {
    VecSpectrum<ExpPoly<S>> src;
    if (opt.compute_residual || j < n) {
      VecSpectrum<ExpPoly<S>> mv;
      for (const auto& [xi, row] : v) mv.emplace(xi, mat_apply(ctx.M(xi), row));
      src = evaluate_nonlinearity(ctx.H, mv, ctx.spec, budget);
    }
    LatticeSolution<S> it;
    it.budget = budget;
    if (opt.compute_residual) it.residual = residual_from(ctx, v, src);
    it.spectrum = v;
    out.push_back(std::move(it));
    if (j == n) break;

    // Duhamel map applied to the current iterate.
    VecSpectrum<ExpPoly<S>> next;
    for (const auto& [xi, row] : base) {
      auto lf = P::linear_flow(ctx.decomp(xi), row);
      if (!all_zero(lf)) next.emplace(xi, std::move(lf));
    }
    for (const auto& [xi, srow] : src) {
      const auto duh = P::duhamel_map(ctx.decomp(xi),
                                      mat_apply(ctx.N(xi), srow), ctx.duh);
      auto [slot, inserted] =
          next.try_emplace(xi, std::vector<ExpPoly<S>>(eq.sym.n1));
      for (unsigned i = 0; i < eq.sym.n1; ++i) slot->second[i] += duh[i];
    }
    for (auto it2 = next.begin(); it2 != next.end();) {
      it2 = all_zero(it2->second) ? next.erase(it2) : std::next(it2);
    }
    v = std::move(next);
  }
  return out;
}

}  // namespace

LatticeSolution<RatC> solve_lattice(const Equation& eq,
                                    const VecSpectrum<RatC>& u0,
                                    const Rat& budget,
                                    const LatticeOptions& opt) {
  return solve_impl<ExactPolicy>(eq, u0, budget, opt);
}

LatticeSolution<Cx> solve_lattice(const Equation& eq, const VecSpectrum<Cx>& u0,
                                  const Rat& budget, const LatticeOptions& opt) {
  return solve_impl<FloatPolicy>(eq, u0, budget, opt);
}

std::vector<LatticeSolution<RatC>> picard_sequence(const Equation& eq,
                                                   const VecSpectrum<RatC>& u0,
                                                   const Rat& budget, unsigned n,
                                                   const LatticeOptions& opt) {
  return picard_impl<ExactPolicy>(eq, u0, budget, n, opt);
}

std::vector<LatticeSolution<Cx>> picard_sequence(const Equation& eq,
                                                 const VecSpectrum<Cx>& u0,
                                                 const Rat& budget, unsigned n,
                                                 const LatticeOptions& opt) {
  return picard_impl<FloatPolicy>(eq, u0, budget, n, opt);
}

std::vector<std::vector<Rat>> quadratic_iteration_coefficients(unsigned nmax,
                                                               unsigned kmax) {
  std::vector<std::vector<Rat>> c(nmax + 1, std::vector<Rat>(kmax + 1, Rat(0)));
  for (unsigned n = 0; n <= nmax; ++n) c[n][0] = 1;
  for (unsigned n = 1; n <= nmax; ++n)
    for (unsigned k = 1; k <= kmax; ++k) {
      Rat acc(0);
      for (unsigned i = 0; i < k; ++i) acc += c[n - 1][i] * c[n - 1][k - 1 - i];
      c[n][k] = acc / k;
    }
  return c;
}

ContractionParams select_contraction_params(double s, double c0, double eps,
                                            double a, unsigned k0) {
  if (!(std::isfinite(s) && s < 0.0))
    throw std::invalid_argument(
        "select_contraction_params: s must be finite and negative");
  if (!(c0 > 0.0 && c0 < 1.0))
    throw std::invalid_argument("select_contraction_params: c0 must lie in (0,1)");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument(
        "select_contraction_params: eps must lie in (0,1)");
  if (!(std::isfinite(a) && a >= 2.0))
    throw std::invalid_argument("select_contraction_params: a must be >= 2");
  if (k0 < 1)
    throw std::invalid_argument("select_contraction_params: k0 must be >= 1");

  // First term theta^{-1/k + 1/k0} e^{-s theta}: over k >= k0 + 1 and
  // theta <= 1 the supremum sits at k = k0 + 1, with exponent
  // 1/k0 - 1/(k0+1) = 1/(k0 (k0+1)).
  const double w = 1.0 / (static_cast<double>(k0) * (static_cast<double>(k0) + 1.0));
  double theta = 1.0;
  while (std::pow(theta, w) * std::exp(-s * theta) > 0.5 * eps) {
    theta *= 0.5;
    if (theta == 0.0)
      throw std::overflow_error(
          "select_contraction_params: theta fell below the floating range");
  }

  // Second term <s> e^{(sigma - s) theta}, sigma = b theta^{a-1} s < 0:
  // growing b drives the exponent to -infinity.
  const double sbar = std::hypot(1.0, s);
  const auto second_term = [&](double b) {
    const double sigma = b * std::pow(theta, a - 1.0) * s;
    return sbar * std::exp((sigma - s) * theta);
  };
  double b = 1.0;
  while (second_term(b) > 0.5 * eps) {
    b *= 2.0;
    if (std::isinf(b))
      throw std::overflow_error(
          "select_contraction_params: b exceeded the floating range");
  }

  // Absorb the k = k0 constant: (2 e^{-s})^{k0} / (c0 b) <= eps^{k0},
  // i.e. log2 b >= k0 (1 - s log2(e) - log2(eps)) - log2(c0).
  const double log2_need =
      static_cast<double>(k0) * (1.0 - s / std::log(2.0) - std::log2(eps)) -
      std::log2(c0);
  if (log2_need > 1020.0)
    throw std::overflow_error(
        "select_contraction_params: b exceeded the floating range");
  const double need = std::exp2(log2_need);
  while (b < need) b *= 2.0;

  return ContractionParams{theta, b};
}

}  // namespace duhamel
