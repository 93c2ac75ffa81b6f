#include <duhamel/gridsolver.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace duhamel {

namespace {

std::string point_string(const std::vector<double>& xi) {
  std::ostringstream os;
  os << '(';
  for (std::size_t j = 0; j < xi.size(); ++j) {
    if (j) os << ", ";
    os << xi[j];
  }
  os << ')';
  return os.str();
}

std::string series_string(const std::vector<double>& v, std::size_t cap = 16) {
  std::ostringstream os;
  os.setf(std::ios::scientific, std::ios::floatfield);
  os.precision(3);
  const std::size_t m = std::min(cap, v.size());
  for (std::size_t i = 0; i < m; ++i) {
    if (i) os << ' ';
    os << v[i];
  }
  if (v.size() > cap) os << " ... (" << v.size() << " values)";
  return os.str();
}

FreqPoint to_freq(const std::vector<double>& xi) {
  FreqPoint p(xi.size());
  for (std::size_t j = 0; j < xi.size(); ++j) p[j] = rat_from_double(xi[j]);
  return p;
}

Eigen::MatrixXcd to_eigen(const CMat& m) {
  Eigen::MatrixXcd e(m.rows, m.cols);
  for (unsigned i = 0; i < m.rows; ++i)
    for (unsigned j = 0; j < m.cols; ++j) e(i, j) = m(i, j);
  return e;
}

double operator_norm(const CMat& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(to_eigen(m));
  return svd.singularValues()(0);
}

double max_hermitian_eigenvalue(const CMat& m) {
  const Eigen::MatrixXcd e = to_eigen(m);
  const Eigen::MatrixXcd herm = 0.5 * (e + e.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm,
                                                     Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// Per-cell multiplicative weight of the solution norm at time t.
std::vector<double> node_weights(const GridState& g, double t) {
  const GridWeights& w = g.weights;
  std::vector<double> out(g.level.size());
  for (std::size_t c = 0; c < g.level.size(); ++c) {
    const double p = g.level[c];
    out[c] = std::exp(w.b * (w.s * std::pow(p, w.a) - t * p));
  }
  return out;
}

double vec_abs(const std::vector<Cx>& a, const std::vector<Cx>* b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Cx v = b ? a[i] - (*b)[i] : a[i];
    s += std::norm(v);
  }
  return std::sqrt(s);
}

// Z-norm of x (or of x - y when y is given) under per-cell weights cellw;
// cellw may be null for weight one.
double weighted_z_norm(const GridState& g, const CellDensity& x,
                       const CellDensity* y, const std::vector<double>* cellw) {
  const std::size_t n = g.cell_count();
  const double vol = g.cell_volume();
  if (g.zspace.kind == ZSpaceKind::weighted_l1) {
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double m = vec_abs(x[c], y ? &(*y)[c] : nullptr);
      if (m == 0.0) continue;
      total += weight_w(g.weights.s, g.weights.k0, g.level[c]) *
               (cellw ? (*cellw)[c] : 1.0) * m * vol;
    }
    return total;
  }
  // Anisotropic: inner L1 over the transverse coordinates per axis-0 slice
  // (axis 0 is the slowest index, so slices are contiguous), outer L^r.
  const std::size_t slices = g.axes[0].cells;
  const std::size_t block = n / slices;
  const double w0 = g.axes[0].width();
  const double tvol = vol / w0;
  double sum_r = 0.0;
  for (std::size_t i = 0; i < slices; ++i) {
    double inner = 0.0;
    for (std::size_t c = i * block; c < (i + 1) * block; ++c) {
      const double m = vec_abs(x[c], y ? &(*y)[c] : nullptr);
      if (m == 0.0) continue;
      inner += (std::pow(g.level[c], -g.zspace.sigma) + 1.0) *
               (cellw ? (*cellw)[c] : 1.0) * m * tvol;
    }
    sum_r += std::pow(inner, g.zspace.r) * w0;
  }
  return std::pow(sum_r, 1.0 / g.zspace.r) / g.zspace.scale;
}

void require_levels(const GridState& g, const char* who) {
  if (g.level.size() != g.cell_count())
    throw std::invalid_argument(std::string(who) +
                                ": cell levels are not attached (see "
                                "attach_levels)");
}

struct Term {
  std::vector<unsigned> factors;  // channel index repeated by multiplicity
  std::vector<Cx> coeff;          // length n3
  unsigned order = 0;
};

}  // namespace

// ---------------------------------------------------------------------------
// GridState geometry.

std::size_t GridState::cell_count() const {
  std::size_t n = 1;
  for (const GridAxis& ax : axes) n *= ax.cells;
  return n;
}

double GridState::cell_volume() const {
  double v = 1.0;
  for (const GridAxis& ax : axes) v *= ax.width();
  return v;
}

std::vector<double> GridState::midpoint(std::size_t cell) const {
  std::vector<double> m(axes.size());
  std::size_t rem = cell;
  for (std::size_t j = axes.size(); j-- > 0;) {
    const std::size_t i = rem % axes[j].cells;
    rem /= axes[j].cells;
    m[j] = axes[j].midpoint(i);
  }
  return m;
}

std::size_t GridState::cell_at(const std::vector<double>& xi) const {
  if (xi.size() != axes.size())
    throw std::invalid_argument("cell_at: point dimension mismatch");
  std::size_t flat = 0;
  for (std::size_t j = 0; j < axes.size(); ++j) {
    const GridAxis& ax = axes[j];
    if (!(xi[j] >= ax.lo) || !(xi[j] < ax.hi))
      throw std::invalid_argument("cell_at: frequency " + point_string(xi) +
                                  " lies outside the grid");
    const auto i = std::min<std::size_t>(
        ax.cells - 1,
        static_cast<std::size_t>(std::floor((xi[j] - ax.lo) / ax.width())));
    flat = flat * ax.cells + i;
  }
  return flat;
}

void GridState::validate() const {
  if (axes.empty()) throw std::invalid_argument("GridState: no axes");
  for (std::size_t j = 0; j < axes.size(); ++j) {
    const GridAxis& ax = axes[j];
    if (ax.cells < 1 || !(ax.hi > ax.lo) || !std::isfinite(ax.lo) ||
        !std::isfinite(ax.hi))
      throw std::invalid_argument("GridState: axis " + std::to_string(j) +
                                  " must have hi > lo and at least one cell");
  }
  if (axes[0].lo < 0.0)
    throw std::invalid_argument(
        "GridState: axis 0 must lie in the positive half space");
  if (components < 1)
    throw std::invalid_argument("GridState: needs at least one component");
  const std::size_t n = cell_count();
  if (density.size() != n)
    throw std::invalid_argument("GridState: density has " +
                                std::to_string(density.size()) +
                                " cells, the grid has " + std::to_string(n));
  for (const auto& row : density)
    if (row.size() != components)
      throw std::invalid_argument(
          "GridState: density row does not match the component count");
  if (!level.empty()) {
    if (level.size() != n)
      throw std::invalid_argument(
          "GridState: level table does not match the cell count");
    for (double p : level)
      if (!(p > 0.0) || !std::isfinite(p))
        throw std::invalid_argument(
            "GridState: cell levels must be positive and finite");
  }
  const GridWeights& w = weights;
  if (!(w.s < 0.0)) throw std::invalid_argument("GridState: requires s < 0");
  if (!(w.a >= 2.0)) throw std::invalid_argument("GridState: requires a >= 2");
  if (w.k0 < 1) throw std::invalid_argument("GridState: requires k0 >= 1");
  if (!(w.b >= 1.0)) throw std::invalid_argument("GridState: requires b >= 1");
  if (!(w.theta >= 0.0 && w.theta < 1.0))
    throw std::invalid_argument("GridState: requires theta in [0, 1)");
  if (zspace.kind == ZSpaceKind::anisotropic) {
    if (!(zspace.r >= 1.0) || !std::isfinite(zspace.r) || !(zspace.scale > 0.0))
      throw std::invalid_argument(
          "GridState: anisotropic norm needs r >= 1 and a positive scale");
    const double holder = (1.0 - 1.0 / zspace.r) + zspace.sigma;
    if (!(holder > 1.0 / static_cast<double>(w.k0)))
      throw std::invalid_argument(
          "GridState: anisotropic norm requires 1/r' + sigma > 1/k0");
  }
}

GridState make_grid(std::vector<GridAxis> axes, unsigned components,
                    GridWeights weights, ZSpaceSpec zspace) {
  GridState g;
  g.axes = std::move(axes);
  g.components = components;
  g.weights = weights;
  g.zspace = zspace;
  g.density.assign(g.cell_count(), std::vector<Cx>(components, Cx(0.0, 0.0)));
  g.validate();
  return g;
}

void attach_levels(GridState& g, const Equation& eq) {
  if (!eq.sym.claim || !eq.sym.claim->profile)
    throw std::invalid_argument(
        "attach_levels: the equation carries no decay claim (cell levels "
        "need its growth profile)");
  const std::size_t n = g.cell_count();
  g.level.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const std::vector<double> mid = g.midpoint(c);
    const double p = eq.sym.claim->profile(to_freq(mid));
    if (!(p > 0.0) || !std::isfinite(p))
      throw std::invalid_argument(
          "attach_levels: the growth profile is not positive at frequency " +
          point_string(mid));
    g.level[c] = p;
  }
}

void add_bump(GridState& g, const std::vector<std::pair<double, double>>& box,
              Cx mass, unsigned component) {
  if (box.size() != g.dim())
    throw std::invalid_argument("add_bump: box dimension mismatch");
  if (component >= g.components)
    throw std::invalid_argument("add_bump: component out of range");
  double boxvol = 1.0;
  for (std::size_t j = 0; j < box.size(); ++j) {
    const auto [blo, bhi] = box[j];
    const GridAxis& ax = g.axes[j];
    const double tol = 1e-9 * ax.width();
    if (!(bhi > blo))
      throw std::invalid_argument("add_bump: empty box interval");
    if (blo < ax.lo - tol || bhi > ax.hi + tol)
      throw std::invalid_argument("add_bump: box must lie within the grid");
    boxvol *= bhi - blo;
  }
  // Per-axis overlap candidates, then their tensor products.
  std::vector<std::vector<std::pair<std::size_t, double>>> cand(g.dim());
  for (std::size_t j = 0; j < g.dim(); ++j) {
    const GridAxis& ax = g.axes[j];
    const auto [blo, bhi] = box[j];
    const double w = ax.width();
    const auto i0 = static_cast<std::size_t>(
        std::max(0.0, std::floor((blo - ax.lo) / w)));
    for (std::size_t i = i0; i < ax.cells; ++i) {
      const double clo = ax.lo + static_cast<double>(i) * w;
      if (clo >= bhi) break;
      const double len = std::min(clo + w, bhi) - std::max(clo, blo);
      if (len > 0.0) cand[j].emplace_back(i, len);
    }
    if (cand[j].empty()) return;  // box misses the grid (within tolerance)
  }
  const double cellvol = g.cell_volume();
  std::vector<std::size_t> pick(g.dim(), 0);
  for (;;) {
    std::size_t flat = 0;
    double overlap = 1.0;
    for (std::size_t j = 0; j < g.dim(); ++j) {
      flat = flat * g.axes[j].cells + cand[j][pick[j]].first;
      overlap *= cand[j][pick[j]].second;
    }
    g.density[flat][component] += mass * (overlap / (boxvol * cellvol));
    std::size_t j = g.dim();
    while (j-- > 0) {
      if (++pick[j] < cand[j].size()) break;
      pick[j] = 0;
      if (j == 0) return;
    }
  }
}

void add_bump(GridState& g, double lo, double hi, Cx mass,
              unsigned component) {
  add_bump(g, std::vector<std::pair<double, double>>{{lo, hi}}, mass,
           component);
}

// ---------------------------------------------------------------------------
// Norms.

double weight_w(double s, unsigned k0, double rho) {
  if (!(s < 0.0) || k0 < 1 || !(rho > 0.0))
    throw std::invalid_argument("weight_w: needs s < 0, k0 >= 1, rho > 0");
  return std::max(std::pow(rho, -1.0 / static_cast<double>(k0)),
                  rho - 1.0 / s) *
         std::exp(s * rho);
}

double z_norm(const GridState& g) {
  g.validate();
  require_levels(g, "z_norm");
  return weighted_z_norm(g, g.density, nullptr, nullptr);
}

double datum_norm(const GridState& g) {
  g.validate();
  require_levels(g, "datum_norm");
  std::vector<double> cw(g.level.size());
  for (std::size_t c = 0; c < g.level.size(); ++c)
    cw[c] = std::exp(g.weights.s * std::pow(g.level[c], g.weights.a));
  return weighted_z_norm(g, g.density, nullptr, &cw);
}

double solution_norm(const GridState& g, double t) {
  g.validate();
  require_levels(g, "solution_norm");
  const std::vector<double> cw = node_weights(g, t);
  return weighted_z_norm(g, g.density, nullptr, &cw);
}

// ---------------------------------------------------------------------------
// Convolution.

std::vector<Cx> grid_convolve(const GridState& g, const std::vector<Cx>& f,
                              const std::vector<Cx>& h) {
  const std::size_t n = g.cell_count();
  if (f.size() != n || h.size() != n)
    throw std::invalid_argument("grid_convolve: density size mismatch");
  const std::size_t d = g.dim();

  // Flat index -> per-axis indices, computed once.
  std::vector<std::vector<std::uint32_t>> idx(d,
                                              std::vector<std::uint32_t>(n));
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t rem = c;
    for (std::size_t j = d; j-- > 0;) {
      idx[j][c] = static_cast<std::uint32_t>(rem % g.axes[j].cells);
      rem /= g.axes[j].cells;
    }
  }

  std::vector<Cx> out(n, Cx(0.0, 0.0));
  const double vol = g.cell_volume();
  // Candidate (cell, length-fraction) pairs per axis for one (target, k).
  std::vector<std::array<std::pair<long, double>, 2>> cand(d);
  std::vector<int> ncand(d);
  for (std::size_t c = 0; c < n; ++c) {
    Cx acc(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      if (h[k] == Cx(0.0, 0.0)) continue;
      // Per axis, the interval m_c - B_k covers at most two f-cells.
      bool miss = false;
      for (std::size_t j = 0; j < d; ++j) {
        const GridAxis& ax = g.axes[j];
        const double q = ax.lo / ax.width();
        // Start of (mid_c - B_k) in cell units measured from ax.lo.
        const double base = static_cast<double>(idx[j][c]) -
                            static_cast<double>(idx[j][k]) - 0.5 - q;
        const long jb = static_cast<long>(std::floor(base));
        int m = 0;
        for (long jj = jb; jj <= jb + 1; ++jj) {
          if (jj < 0 || jj >= static_cast<long>(ax.cells)) continue;
          const double len = std::min(static_cast<double>(jj) + 1.0,
                                      base + 1.0) -
                             std::max(static_cast<double>(jj), base);
          if (len > 0.0) cand[j][m++] = {jj, len};
        }
        if (m == 0) {
          miss = true;
          break;
        }
        ncand[j] = m;
      }
      if (miss) continue;
      // Tensor products of the per-axis candidates.
      Cx pair(0.0, 0.0);
      std::vector<int> pick(d, 0);
      for (;;) {
        std::size_t flat = 0;
        double frac = 1.0;
        for (std::size_t j = 0; j < d; ++j) {
          flat = flat * g.axes[j].cells +
                 static_cast<std::size_t>(cand[j][pick[j]].first);
          frac *= cand[j][pick[j]].second;
        }
        pair += f[flat] * frac;
        std::size_t j = d;
        bool done = true;
        while (j-- > 0) {
          if (++pick[j] < ncand[j]) {
            done = false;
            break;
          }
          pick[j] = 0;
        }
        if (done) break;
      }
      acc += h[k] * pair;
    }
    out[c] = acc * vol;
  }
  return out;
}

// ---------------------------------------------------------------------------
// The Picard solve.

GridTrajectory solve_grid(const Equation& eq, const GridState& u0, double T,
                          double dt, int max_iters, double tol,
                          const GridOptions& opt) {
  eq.validate();
  u0.validate();
  const SymbolTable& sym = eq.sym;
  if (u0.dim() != sym.dim)
    throw std::invalid_argument("solve_grid: grid dimension " +
                                std::to_string(u0.dim()) +
                                " does not match the equation dimension " +
                                std::to_string(sym.dim));
  if (u0.components != sym.n1)
    throw std::invalid_argument(
        "solve_grid: grid component count does not match the equation");
  if (!(T > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("solve_grid: needs T > 0 and dt > 0");
  if (max_iters < 1 || !(tol > 0.0))
    throw std::invalid_argument("solve_grid: needs max_iters >= 1, tol > 0");
  if (!(opt.eps > 0.0 && opt.eps < 1.0))
    throw std::invalid_argument("solve_grid: needs eps in (0, 1)");
  if (!sym.claim)
    throw std::invalid_argument(
        "solve_grid: the equation carries no decay claim");

  GridState g = u0;
  if (g.level.empty()) attach_levels(g, eq);
  require_levels(g, "solve_grid");

  const std::size_t n = g.cell_count();
  const unsigned n1 = sym.n1, n2 = sym.n2, n3 = sym.n3;

  // --- per-cell symbols, diagonality, and the claim check on the grid ----
  const DecayClaim& cl = *sym.claim;
  std::vector<std::vector<Cx>> ldiag(n, std::vector<Cx>(n1));
  std::vector<CMat> msym(n), nsym(n);
  for (std::size_t c = 0; c < n; ++c) {
    const std::vector<double> mid = g.midpoint(c);
    const FreqPoint xi = to_freq(mid);
    const CMat L = sym.L_hat(xi);
    if (L.rows != n1 || L.cols != n1)
      throw std::invalid_argument(
          "solve_grid: linear symbol shape mismatch at frequency " +
          point_string(mid));
    double lmax = 0.0;
    for (const Cx& v : L.a) lmax = std::max(lmax, std::abs(v));
    for (unsigned i = 0; i < n1; ++i)
      for (unsigned j = 0; j < n1; ++j)
        if (i != j && std::abs(L(i, j)) > 1e-12 * std::max(1.0, lmax))
          throw std::invalid_argument(
              "solve_grid: needs a diagonal linear symbol on the grid, got "
              "a non-diagonal matrix at frequency " +
              point_string(mid));
    for (unsigned i = 0; i < n1; ++i) ldiag[c][i] = L(i, i);

    const double p = g.level[c];
    const double lam = max_hermitian_eigenvalue(L);
    if (lam > (1.0 - cl.c0) * p + opt.slack * (1.0 + std::abs(lam))) {
      std::ostringstream os;
      os << "solve_grid: the decay claim fails on the grid at frequency "
         << point_string(mid) << ": spectral bound " << lam << " > (1 - c0) p = "
         << (1.0 - cl.c0) * p;
      throw std::invalid_argument(os.str());
    }
    CMat M = sym.M_hat(xi), N = sym.N_hat(xi);
    if (M.rows != n2 || M.cols != n1 || N.rows != n1 || N.cols != n3)
      throw std::invalid_argument(
          "solve_grid: coupling symbol shape mismatch at frequency " +
          point_string(mid));
    const double mn = operator_norm(M) + operator_norm(N);
    const double cap = cl.C0 * std::hypot(1.0, p);
    if (mn > cap * (1.0 + opt.slack) + opt.slack) {
      std::ostringstream os;
      os << "solve_grid: the decay claim fails on the grid at frequency "
         << point_string(mid) << ": coupling size " << mn << " > C0 <p> = "
         << cap;
      throw std::invalid_argument(os.str());
    }
    msym[c] = std::move(M);
    nsym[c] = std::move(N);
  }

  // --- nonlinearity terms --------------------------------------------------
  // A product of r factors supported at axis-0 coordinate >= lo starts at
  // r * lo, so orders beyond hi / lo cannot reach the grid.
  const double lo0 = g.axes[0].lo, hi0 = g.axes[0].hi;
  const double order_cap =
      lo0 > 0.0 ? std::floor(hi0 / lo0) : std::numeric_limits<double>::infinity();
  if (eq.H.infinite() && !(order_cap < 1e7))
    throw std::invalid_argument(
        "solve_grid: a family nonlinearity needs a grid bounded away from "
        "level zero (axis 0 must start above 0)");
  std::map<MultiIndex, std::vector<RatC>> term_map =
      eq.H.infinite()
          ? eq.H.terms_up_to(static_cast<unsigned>(order_cap))
          : eq.H.table;
  std::vector<Term> terms;
  for (const auto& [alpha, coeff] : term_map) {
    Term t;
    t.order = multi_order(alpha);
    if (static_cast<double>(t.order) > order_cap) continue;
    for (unsigned ch = 0; ch < alpha.size(); ++ch)
      for (unsigned rep = 0; rep < alpha[ch]; ++rep) t.factors.push_back(ch);
    t.coeff.resize(coeff.size());
    bool nonzero = false;
    for (std::size_t i = 0; i < coeff.size(); ++i) {
      t.coeff[i] = to_cx(coeff[i]);
      nonzero = nonzero || t.coeff[i] != Cx(0.0, 0.0);
    }
    if (nonzero) terms.push_back(std::move(t));
  }

  // nsource(u) = Nhat H(Mhat u) per cell.
  auto nsource = [&](const CellDensity& u) -> CellDensity {
    CellDensity F(n, std::vector<Cx>(n1, Cx(0.0, 0.0)));
    if (terms.empty()) return F;
    std::vector<std::vector<Cx>> wch(n2, std::vector<Cx>(n, Cx(0.0, 0.0)));
    for (std::size_t c = 0; c < n; ++c)
      for (unsigned ch = 0; ch < n2; ++ch) {
        Cx s(0.0, 0.0);
        for (unsigned i = 0; i < n1; ++i) s += msym[c](ch, i) * u[c][i];
        wch[ch][c] = s;
      }
    std::vector<std::vector<Cx>> hval(n3, std::vector<Cx>(n, Cx(0.0, 0.0)));
    for (const Term& t : terms) {
      std::vector<Cx> cur = wch[t.factors[0]];
      for (std::size_t f = 1; f < t.factors.size(); ++f)
        cur = grid_convolve(g, cur, wch[t.factors[f]]);
      for (unsigned m3 = 0; m3 < n3; ++m3) {
        if (t.coeff[m3] == Cx(0.0, 0.0)) continue;
        for (std::size_t c = 0; c < n; ++c)
          hval[m3][c] += t.coeff[m3] * cur[c];
      }
    }
    for (std::size_t c = 0; c < n; ++c)
      for (unsigned i = 0; i < n1; ++i) {
        Cx s(0.0, 0.0);
        for (unsigned m3 = 0; m3 < n3; ++m3) s += nsym[c](i, m3) * hval[m3][c];
        F[c][i] = s;
      }
    return F;
  };

  // --- time nodes and the panel quadrature layout -------------------------
  const int steps = std::max(1, static_cast<int>(std::lround(T / dt)));
  const double h = T / steps;
  std::vector<double> times(steps + 1);
  for (int m = 0; m <= steps; ++m) times[m] = h * m;

  // Lag breakpoints 0 = tau_0 < ... < tau_J = h inside one step, graded
  // toward the kernel endpoint tau = 0 when theta > 0.
  std::vector<double> tau;
  if (g.weights.theta > 0.0) {
    const int J = std::max(1, opt.graded_panels);
    tau.resize(J + 1);
    for (int j = 0; j <= J; ++j)
      tau[j] = h * std::pow(static_cast<double>(j) / J,
                            1.0 / (1.0 - g.weights.theta));
  } else {
    tau = {0.0, h};
  }
  const std::size_t J = tau.size() - 1;
  // Trapezoid weights per breakpoint, split into the coefficients of F at
  // the step end (alpha, tau = 0) and the step start (beta, tau = h).
  std::vector<double> alpha(J + 1), beta(J + 1);
  for (std::size_t j = 0; j <= J; ++j) {
    const double left = j > 0 ? tau[j] - tau[j - 1] : 0.0;
    const double right = j < J ? tau[j + 1] - tau[j] : 0.0;
    const double w = 0.5 * (left + right);
    alpha[j] = w * (1.0 - tau[j] / h);
    beta[j] = w * (tau[j] / h);
  }
  // Kernel exponentials at each breakpoint: ker[j][c][i] = e^{tau_j L_ii(c)}.
  std::vector<std::vector<std::vector<Cx>>> ker(
      J + 1, std::vector<std::vector<Cx>>(n, std::vector<Cx>(n1)));
  for (std::size_t j = 0; j <= J; ++j)
    for (std::size_t c = 0; c < n; ++c)
      for (unsigned i = 0; i < n1; ++i)
        ker[j][c][i] = std::exp(tau[j] * ldiag[c][i]);
  const std::vector<std::vector<Cx>>& estep = ker[J];  // tau = h

  // --- datum bound ---------------------------------------------------------
  const double measured = datum_norm(g);
  const double B =
      std::isnan(opt.datum_bound) ? measured : opt.datum_bound;
  if (!(B > 0.0))
    throw std::invalid_argument("solve_grid: the datum bound B must be positive");
  if (measured > B * (1.0 + opt.slack)) {
    std::ostringstream os;
    os << "solve_grid: the datum norm " << measured
       << " exceeds the asserted bound B = " << B;
    throw std::invalid_argument(os.str());
  }

  // --- Picard sweeps -------------------------------------------------------
  std::vector<std::vector<double>> wnode(steps + 1);
  for (int m = 0; m <= steps; ++m) wnode[m] = node_weights(g, times[m]);

  // Iterate 0: the pure linear flow.
  std::vector<CellDensity> cur(steps + 1);
  cur[0] = g.density;
  for (int m = 1; m <= steps; ++m) {
    cur[m] = cur[m - 1];
    for (std::size_t c = 0; c < n; ++c)
      for (unsigned i = 0; i < n1; ++i) cur[m][c][i] *= estep[c][i];
  }

  auto trace_of = [&](const std::vector<CellDensity>& v) {
    std::vector<double> tr(steps + 1);
    for (int m = 0; m <= steps; ++m)
      tr[m] = weighted_z_norm(g, v[m], nullptr, &wnode[m]);
    return tr;
  };

  std::vector<double> distances;
  int sweeps = 0;
  bool converged = false;
  for (int it = 0; it < max_iters && !converged; ++it) {
    std::vector<CellDensity> src(steps + 1);
    for (int m = 0; m <= steps; ++m) src[m] = nsource(cur[m]);
    std::vector<CellDensity> nxt(steps + 1);
    nxt[0] = g.density;
    for (int m = 1; m <= steps; ++m) {
      CellDensity& out = nxt[m];
      out.assign(n, std::vector<Cx>(n1, Cx(0.0, 0.0)));
      for (std::size_t c = 0; c < n; ++c)
        for (unsigned i = 0; i < n1; ++i) {
          Cx acc = estep[c][i] * nxt[m - 1][c][i];
          for (std::size_t j = 0; j <= J; ++j) {
            if (alpha[j] == 0.0 && beta[j] == 0.0) continue;
            acc += ker[j][c][i] * (alpha[j] * src[m][c][i] +
                                   beta[j] * src[m - 1][c][i]);
          }
          out[c][i] = acc;
        }
    }
    double dist = 0.0;
    double scale = 0.0;
    for (int m = 0; m <= steps; ++m) {
      dist = std::max(dist, weighted_z_norm(g, nxt[m], &cur[m], &wnode[m]));
      scale = std::max(scale, weighted_z_norm(g, nxt[m], nullptr, &wnode[m]));
    }
    distances.push_back(dist);
    cur.swap(nxt);
    sweeps = it + 1;
    if (!std::isfinite(dist) || dist > 1e150) {
      std::ostringstream os;
      os << "solve_grid: Picard iteration diverged at sweep " << sweeps
         << "; successive distances: " << series_string(distances)
         << "; norm trace: " << series_string(trace_of(cur));
      throw std::runtime_error(os.str());
    }
    const double threshold = scale > 0.0 ? tol * scale : tol;
    if (dist <= threshold) converged = true;
  }
  if (!converged) {
    std::ostringstream os;
    os << "solve_grid: Picard iteration did not converge within " << max_iters
       << " sweeps; successive distances: " << series_string(distances)
       << "; norm trace: " << series_string(trace_of(cur));
    throw std::runtime_error(os.str());
  }

  // --- assemble ------------------------------------------------------------
  GridTrajectory out;
  out.times = std::move(times);
  out.norm_trace = trace_of(cur);
  out.sweep_distances = std::move(distances);
  out.sweeps = sweeps;
  out.grid = std::move(g);
  out.grid.density = cur[steps];
  out.states = std::move(cur);

  BallCertificate& cert = out.certificate;
  cert.datum_bound = B;
  cert.ball_radius = 2.0 * B;
  cert.eps = opt.eps;
  cert.gamma = std::tgamma(1.0 - out.grid.weights.theta);
  cert.radius_lhs = cert.ball_radius * opt.eps;
  if (cert.radius_lhs < eq.H.radius) {
    const Majorants maj = majorants(eq.H, cert.radius_lhs);
    cert.quad_lhs = cert.radius_lhs * maj.h * cert.gamma;
    cert.diff_lhs = cert.radius_lhs * maj.h1 * cert.gamma;
    cert.inequalities_hold = cert.quad_lhs <= 0.5 && cert.diff_lhs <= 0.5;
  }
  cert.max_norm = *std::max_element(out.norm_trace.begin(),
                                    out.norm_trace.end());
  cert.within_ball = cert.max_norm <= cert.ball_radius * (1.0 + opt.slack);
  cert.certified = cert.inequalities_hold && cert.within_ball;
  return out;
}

GridWeights weights_from_contraction(double s, double a, unsigned k0,
                                     double c0, double eps, double theta) {
  if (!(theta >= 0.0 && theta < 1.0))
    throw std::invalid_argument(
        "weights_from_contraction: requires theta in [0, 1)");
  const ContractionParams p = select_contraction_params(s, c0, eps, a, k0);
  GridWeights w;
  w.s = s;
  w.a = a;
  w.k0 = k0;
  w.b = p.b;
  w.theta = theta;
  return w;
}

}  // namespace duhamel
