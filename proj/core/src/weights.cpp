#include "duhamel/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "duhamel/version.hpp"

namespace duhamel {

namespace {

constexpr double kEpsRelTol = 1e-12;
constexpr double kMaxCutoffOrder = 32.0;

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double sq(double x) { return x * x; }

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

void WeightTriple::validate() const {
  require(delta > 0.0 && std::isfinite(delta), "weights: delta must be positive");
  require(mu0.vanishes_at_zero(), "weights: mu0 must vanish at 0");
  require(mu0(2.0 * delta) <= 0.5, "weights: mu0(2 delta) must be <= 1/2");
  require(nu0.vanishes_at_zero(), "weights: nu0 must vanish at 0");
}

MonotoneFn cmap1(const MonotoneFn& mu0, double delta, double horizon,
                 std::span<const double> extra_knots, const CmapOptions& opt) {
  require(delta > 0.0, "cmap1: delta must be positive");
  require(horizon > 0.0 && std::isfinite(horizon),
          "cmap1: horizon must be positive and finite");
  auto f = [&](double l) {
    const double e = std::max(l / delta - 3.0, 0.0);
    return std::min(std::exp2(e) * mu0(l), opt.value_cap);
  };
  std::vector<double> req(extra_knots.begin(), extra_knots.end());
  for (double k : mu0.knots())
    if (k <= horizon) req.push_back(k);
  if (3.0 * delta <= horizon) req.push_back(3.0 * delta);
  return MonotoneFn::from_function(f, horizon, opt.sample_rel_tol, req);
}

double hat_epsilon(const std::function<double(double)>& nuhat,
                   const Kappa& kappa, double delta, double l) {
  require(delta > 0.0, "hat_epsilon: delta must be positive");
  const double kl = kappa(l);
  auto feasible = [&](double eps) {
    return 9.0 * nuhat(2.0 * eps) <= kl * (1.0 - 2.0 * eps / delta);
  };
  double hi = 0.5 * delta;
  if (feasible(hi)) return hi;
  double lo = 0.0;
  for (int it = 0; it < 128 && (hi - lo) > kEpsRelTol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

namespace {

// Piecewise-linear table under construction; reads may only touch the part
// already written.
class PartialTable {
 public:
  void emit(double x, double y) {
    if (!xs_.empty() && x <= xs_.back()) return;
    ys_.push_back(ys_.empty() ? y : std::max(y, ys_.back()));
    xs_.push_back(x);
  }
  double operator()(double x) const {
    if (x >= xs_.back()) {
      if (x > xs_.back() * (1.0 + 1e-12) + 1e-300)
        throw std::logic_error("weights: read past the constructed range");
      return ys_.back();
    }
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
    if (xs_[i] == x) return ys_[i];
    const double w = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
    return ys_[i] + w * (ys_[i + 1] - ys_[i]);
  }
  bool empty() const { return xs_.empty(); }
  double back_x() const { return xs_.back(); }
  double back_y() const { return ys_.back(); }
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }

 private:
  std::vector<double> xs_, ys_;
};

// Adaptive midpoint refinement of f over [x0, x1], emitting in order.
void sample_region(PartialTable& table, const std::function<double(double)>& f,
                   double x0, double x1, std::span<const double> required,
                   double rel_tol, double min_dx) {
  std::vector<double> seeds{x0, x1};
  for (double r : required)
    if (r > x0 && r < x1) seeds.push_back(r);
  seeds = sorted_unique(std::move(seeds));
  std::vector<double> vals(seeds.size());
  double fmax = 0.0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    vals[i] = f(seeds[i]);
    fmax = std::max(fmax, std::abs(vals[i]));
  }
  const double floor = 1e-9 * fmax + 1e-300;
  std::function<void(double, double, double, double, int)> refine =
      [&](double a, double fa, double b, double fb, int depth) {
        if (b - a <= min_dx || depth >= 36) return;
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (std::abs(0.5 * (fa + fb) - fm) >
            std::max(rel_tol * std::abs(fm), floor)) {
          refine(a, fa, m, fm, depth + 1);
          table.emit(m, fm);
          refine(m, fm, b, fb, depth + 1);
        }
      };
  for (std::size_t i = 0; i + 1 < seeds.size(); ++i) {
    table.emit(seeds[i], vals[i]);
    refine(seeds[i], vals[i], seeds[i + 1], vals[i + 1], 0);
  }
  table.emit(seeds.back(), vals.back());
}

}  // namespace

ConvCertificate cmap2(const WeightTriple& in, double horizon,
                      std::span<const double> extra_knots,
                      const CmapOptions& opt) {
  in.validate();
  require(horizon > 0.0 && std::isfinite(horizon),
          "cmap2: horizon must be positive and finite");
  const double delta = in.delta;
  in.kappa(horizon);  // throws when kappa is not positive on the range

  ConvCertificate cert;
  cert.delta = delta;
  cert.horizon = horizon;
  cert.chi_version = chi_profile().version;
  cert.stop_reason = "horizon";
  cert.stop = horizon;

  // The split condition needs the cutoff cost at order mu0(l - delta);
  // shrink the certified range if that exceeds the tabulated orders.
  if (horizon > 3.0 * delta && in.mu0(horizon - delta) > kMaxCutoffOrder) {
    double lo = 3.0 * delta, hi = horizon;
    for (int it = 0; it < 128 && (hi - lo) > 1e-13 * horizon; ++it) {
      const double mid = 0.5 * (lo + hi);
      (in.mu0(mid - delta) <= kMaxCutoffOrder ? lo : hi) = mid;
    }
    cert.stop = lo;
    cert.saturated = true;
    cert.stop_reason = "cutoff_order";
  }
  const double range = cert.stop;

  const double margin_f = 1.0 + opt.margin;
  auto nuhat = [&](double l) { return in.nu0(l) / in.kappa(l); };
  // The reach is computed for the inflated value margin_f * nuhat, so the
  // pairing condition holds at the witness with the (1 - 2 eps / delta)
  // headroom intact even after inflation.
  const std::function<double(double)> nuhat_infl = [margin_f, &in](double l) {
    return margin_f * in.nu0(l) / in.kappa(l);
  };
  auto epsh = [&](double l) {
    return hat_epsilon(nuhat_infl, in.kappa, delta, l);
  };

  // Splice point l0: unique root of l = 2 hat_epsilon(l) in (0, delta].
  {
    double lo = 1e-12 * delta;
    require(2.0 * epsh(lo) >= lo,
            "cmap2: pairing reach vanishes near zero level");
    double hi = delta;
    for (int it = 0; it < 128 && (hi - lo) > 1e-14 * delta; ++it) {
      const double mid = 0.5 * (lo + hi);
      (2.0 * epsh(mid) >= mid ? lo : hi) = mid;
    }
    cert.l0 = lo;
  }
  const double l0 = std::min(cert.l0, range);

  const double min_dx = 1e-12 * range;
  PartialTable table;

  std::vector<double> req(extra_knots.begin(), extra_knots.end());
  for (double k : in.nu0.knots()) req.push_back(k);
  for (double k : in.kappa.drop().knots()) req.push_back(k);
  req.push_back(3.0 * delta);
  req = sorted_unique(std::move(req));

  auto base_fn = [&](double l) {
    return std::min(margin_f * nuhat(l), opt.value_cap);
  };
  sample_region(table, base_fn, 0.0, l0, req, opt.sample_rel_tol, min_dx);

  cert.anchors.push_back(l0);
  bool capped = false;
  while (!capped && cert.anchors.back() < range) {
    const double a_prev = cert.anchors.back();
    // Next anchor: gamma(a) = a - hat_epsilon(a) = a_prev; gamma increases,
    // so bisection brackets the root; the lower end keeps reads inside the
    // constructed table.
    double alo = a_prev, ahi = a_prev + 0.5 * delta;
    for (int it = 0; it < 128 && (ahi - alo) > 1e-13 * delta; ++it) {
      const double mid = 0.5 * (alo + ahi);
      (mid - epsh(mid) <= a_prev ? alo : ahi) = mid;
    }
    const double a_next = alo;
    if (!(a_next > a_prev))
      throw std::runtime_error("cmap2: anchor recursion stalled");
    cert.anchors.push_back(a_next);

    auto val = [&](double l) {
      const double kl = in.kappa(l);
      const double nu_low = 9.0 * sq(table(l - epsh(l))) / kl;
      double nu_high = 0.0;
      if (l > 3.0 * delta) {
        const double m = mchi(delta, in.mu0(l - delta));
        nu_high = 3.0 * sq(m * table(l - delta)) / kl;
      }
      const double base = nuhat(l);
      const double grow = std::max(nu_low, nu_high);
      const double v = std::max({base, grow, base * grow});
      return std::min(margin_f * v, opt.value_cap);
    };
    sample_region(table, val, a_prev, std::min(a_next, range), req,
                  opt.sample_rel_tol, min_dx);
    if (table.back_y() >= opt.value_cap) capped = true;
  }

  if (capped) {
    // Report the first capped abscissa as the certified stop.
    const auto& ys = table.ys();
    const auto& xs = table.xs();
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (ys[i] >= opt.value_cap) {
        cert.stop = std::min(cert.stop, xs[i]);
        break;
      }
    }
    cert.saturated = true;
    cert.stop_reason = "value_cap";
  }

  std::vector<std::pair<double, double>> pts;
  pts.reserve(table.xs().size());
  for (std::size_t i = 0; i < table.xs().size(); ++i)
    pts.emplace_back(table.xs()[i], table.ys()[i]);
  double tail = 0.0;
  if (pts.size() >= 2) {
    const auto& a = pts[pts.size() - 2];
    const auto& b = pts.back();
    if (b.first > a.first) tail = std::max(0.0, (b.second - a.second) / (b.first - a.first));
  }
  cert.nu1 = MonotoneFn(std::move(pts), tail);
  cert.mu1 = cmap1(in.mu0, delta, std::max(table.back_x(), range), extra_knots, opt);
  return cert;
}

ConditionReport check_conv_conditions(const MonotoneFn& mu,
                                      const MonotoneFn& mu_tilde,
                                      const MonotoneFn& nu,
                                      const MonotoneFn& nu_tilde, double delta,
                                      std::span<const double> grid,
                                      double slack) {
  require(delta > 0.0, "check_conv_conditions: delta must be positive");
  ConditionReport rep;
  rep.rows.reserve(grid.size());
  const double sl = 1.0 + slack;
  for (double l : grid) {
    require(l > 0.0 && std::isfinite(l),
            "check_conv_conditions: grid points must be positive");
    ConditionRow row;
    row.l = l;

    row.growth_ok = mu(l) <= mu_tilde(l) * sl;
    if (l > 4.0 * delta)
      row.growth_ok =
          row.growth_ok && 2.0 * mu(l - delta) <= mu_tilde(l) * sl;

    const double bound = nu_tilde(l) * sl;
    const double nl = nu(l);
    auto feasible = [&](double eps) { return 9.0 * nu(2.0 * eps) * nl <= bound; };
    double elo = 0.0, ehi = 0.5 * delta;
    if (feasible(ehi)) {
      elo = ehi;
    } else {
      for (int it = 0; it < 128 && (ehi - elo) > 1e-13 * delta; ++it) {
        const double mid = 0.5 * (elo + ehi);
        (feasible(mid) ? elo : ehi) = mid;
      }
    }
    row.eps_witness = elo;
    if (!(elo > 0.0))
      row.pairing_ok = false;
    else if (2.0 * elo >= l * (1.0 - 1e-12))
      row.pairing_ok = true;  // the squared branch is implied at eps ~ l/2
    else
      row.pairing_ok = 9.0 * sq(nu(l - elo)) <= bound;

    if (l > 4.0 * delta)
      row.split_ok = 3.0 * sq(mchi(delta, mu(l - delta)) * nu(l - delta)) <= bound;

    rep.all_ok = rep.all_ok && row.ok();
    rep.rows.push_back(row);
  }
  return rep;
}

double rho_norm_atomic(const SpectrumC& f, const SupportSpec& spec,
                       const std::function<double(double)>& nu) {
  spec.validate();
  std::map<Rat, double> mass;
  for (const auto& [xi, c] : f) {
    const Rat lv = level(xi, spec);
    if (!(lv > 0))
      throw std::invalid_argument(
          "rho_norm_atomic: atom level must be positive");
    mass[lv] += std::abs(c);
  }
  double cum = 0.0, best = 0.0;
  for (const auto& [lv, m] : mass) {
    cum += m;
    const double w = nu(static_cast<double>(lv));
    if (w <= 0.0) {
      if (cum > 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    best = std::max(best, cum / w);
  }
  return best;
}

double rho_norm_atomic(const SpectrumC& f, const SupportSpec& spec,
                       const MonotoneFn& nu) {
  return rho_norm_atomic(f, spec, [&](double l) { return nu(l); });
}

}  // namespace duhamel
