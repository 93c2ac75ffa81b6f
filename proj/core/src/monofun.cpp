#include "duhamel/monofun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace duhamel {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

MonotoneFn::MonotoneFn() : xs_{0.0}, ys_{0.0}, tail_slope_(0.0) {}

MonotoneFn::MonotoneFn(std::vector<std::pair<double, double>> points,
                       double tail_slope)
    : tail_slope_(tail_slope) {
  require(!points.empty(), "MonotoneFn: empty breakpoint list");
  require(tail_slope >= 0.0, "MonotoneFn: negative tail slope");
  xs_.reserve(points.size() + 1);
  ys_.reserve(points.size() + 1);
  if (points.front().first > 0.0) {
    xs_.push_back(0.0);
    ys_.push_back(points.front().second);
  }
  for (const auto& [x, y] : points) {
    require(std::isfinite(x) && std::isfinite(y), "MonotoneFn: non-finite point");
    require(x >= 0.0, "MonotoneFn: negative abscissa");
    require(y >= 0.0, "MonotoneFn: negative value");
    if (!xs_.empty()) {
      if (x == xs_.back() && y == ys_.back()) continue;
      require(x > xs_.back(), "MonotoneFn: abscissae not strictly increasing");
      require(y >= ys_.back(), "MonotoneFn: values not nondecreasing");
    }
    xs_.push_back(x);
    ys_.push_back(y);
  }
}

MonotoneFn MonotoneFn::constant(double c) {
  return MonotoneFn({{0.0, c}}, 0.0);
}

MonotoneFn MonotoneFn::ramp(double slope) {
  return MonotoneFn({{0.0, 0.0}}, slope);
}

double MonotoneFn::operator()(double l) const {
  if (!(l >= 0.0)) throw std::domain_error("MonotoneFn: negative argument");
  if (l >= xs_.back()) return ys_.back() + tail_slope_ * (l - xs_.back());
  auto it = std::upper_bound(xs_.begin(), xs_.end(), l);
  const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
  if (xs_[i] == l) return ys_[i];
  const double w = (l - xs_[i]) / (xs_[i + 1] - xs_[i]);
  return ys_[i] + w * (ys_[i + 1] - ys_[i]);
}

bool MonotoneFn::vanishes_at_zero() const { return ys_.front() == 0.0; }

bool MonotoneFn::small_at(double two_delta) const {
  return vanishes_at_zero() && (*this)(two_delta) <= 0.5;
}

MonotoneFn MonotoneFn::scaled(double c) const {
  require(c >= 0.0, "MonotoneFn: negative scale");
  MonotoneFn out = *this;
  for (auto& y : out.ys_) y *= c;
  out.tail_slope_ *= c;
  return out;
}

MonotoneFn MonotoneFn::with_knots(std::span<const double> extra) const {
  std::vector<double> ks(xs_.begin(), xs_.end());
  for (double x : extra)
    if (x >= 0.0 && std::isfinite(x)) ks.push_back(x);
  ks = sorted_unique(std::move(ks));
  MonotoneFn out;
  out.xs_.clear();
  out.ys_.clear();
  for (double x : ks) {
    out.xs_.push_back(x);
    out.ys_.push_back((*this)(x));
  }
  out.tail_slope_ = tail_slope_;
  return out;
}

MonotoneFn MonotoneFn::from_function(const std::function<double(double)>& f,
                                     double lmax, double rel_tol,
                                     std::span<const double> required_knots) {
  require(lmax > 0.0, "MonotoneFn: lmax must be positive");
  require(rel_tol > 0.0, "MonotoneFn: rel_tol must be positive");
  std::vector<double> seed{0.0, lmax};
  for (double x : required_knots)
    if (x >= 0.0 && x <= lmax) seed.push_back(x);
  seed = sorted_unique(std::move(seed));

  struct Sample {
    double x, y;
  };
  std::vector<Sample> out;
  const double min_dx = 1e-12 * lmax;

  std::vector<double> seed_vals(seed.size());
  double fmax = 0.0;
  for (std::size_t i = 0; i < seed.size(); ++i) {
    seed_vals[i] = f(seed[i]);
    fmax = std::max(fmax, std::abs(seed_vals[i]));
  }
  const double tol_floor = 1e-9 * fmax + 1e-300;

  // Depth-first refinement emits interior points; deterministic order.
  std::function<void(double, double, double, double, int)> refine =
      [&](double x0, double y0, double x1, double y1, int depth) {
        if (x1 - x0 <= min_dx || depth >= 40) return;
        const double xm = 0.5 * (x0 + x1);
        const double ym = f(xm);
        const double interp = 0.5 * (y0 + y1);
        if (std::abs(interp - ym) > std::max(rel_tol * std::abs(ym), tol_floor)) {
          refine(x0, y0, xm, ym, depth + 1);
          out.push_back({xm, ym});
          refine(xm, ym, x1, y1, depth + 1);
        }
      };

  for (std::size_t i = 0; i + 1 < seed.size(); ++i) {
    out.push_back({seed[i], seed_vals[i]});
    refine(seed[i], seed_vals[i], seed[i + 1], seed_vals[i + 1], 0);
  }
  out.push_back({lmax, seed_vals.back()});

  std::sort(out.begin(), out.end(),
            [](const Sample& a, const Sample& b) { return a.x < b.x; });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Sample& a, const Sample& b) { return a.x == b.x; }),
            out.end());

  std::vector<std::pair<double, double>> pts;
  pts.reserve(out.size());
  double running = 0.0;
  for (const auto& s : out) {
    running = std::max(running, s.y);  // clamp float dips in monotone inputs
    pts.emplace_back(s.x, running);
  }
  double tail = 0.0;
  if (pts.size() >= 2) {
    const auto& a = pts[pts.size() - 2];
    const auto& b = pts.back();
    if (b.first > a.first) tail = (b.second - a.second) / (b.first - a.first);
  }
  return MonotoneFn(std::move(pts), std::max(tail, 0.0));
}

namespace {

// Union knot grid of two functions plus intersection points of their chords.
std::vector<double> merge_knots(const MonotoneFn& a, const MonotoneFn& b,
                                bool with_crossings) {
  std::vector<double> ks;
  ks.insert(ks.end(), a.knots().begin(), a.knots().end());
  ks.insert(ks.end(), b.knots().begin(), b.knots().end());
  ks = sorted_unique(std::move(ks));
  if (!with_crossings) return ks;
  std::vector<double> cross;
  for (std::size_t i = 0; i + 1 < ks.size(); ++i) {
    const double x0 = ks[i], x1 = ks[i + 1];
    const double d0 = a(x0) - b(x0), d1 = a(x1) - b(x1);
    if ((d0 > 0.0 && d1 < 0.0) || (d0 < 0.0 && d1 > 0.0)) {
      const double t = d0 / (d0 - d1);
      cross.push_back(x0 + t * (x1 - x0));
    }
  }
  // Tail crossing beyond the last shared knot.
  const double xl = ks.back();
  const double d = a(xl) - b(xl);
  const double sd = a.tail_slope() - b.tail_slope();
  if (d != 0.0 && sd != 0.0 && (d > 0.0) != (sd > 0.0))
    cross.push_back(xl - d / sd);
  ks.insert(ks.end(), cross.begin(), cross.end());
  return sorted_unique(std::move(ks));
}

}  // namespace

MonotoneFn pointwise_max(const MonotoneFn& a, const MonotoneFn& b) {
  const auto ks = merge_knots(a, b, true);
  std::vector<std::pair<double, double>> pts;
  pts.reserve(ks.size());
  for (double x : ks) pts.emplace_back(x, std::max(a(x), b(x)));
  // Any tail crossing was added as a knot, so past the last knot one branch
  // stays on top; near-ties (the crossing knot itself, up to roundoff) take
  // the faster-growing branch.
  const double xl = ks.back();
  const double da = a(xl) - b(xl);
  const double tie = 1e-9 * (std::abs(a(xl)) + std::abs(b(xl)) + 1.0);
  double tail;
  if (da > tie)
    tail = a.tail_slope();
  else if (da < -tie)
    tail = b.tail_slope();
  else
    tail = std::max(a.tail_slope(), b.tail_slope());
  return MonotoneFn(std::move(pts), tail);
}

MonotoneFn pointwise_sum(const MonotoneFn& a, const MonotoneFn& b) {
  const auto ks = merge_knots(a, b, false);
  std::vector<std::pair<double, double>> pts;
  pts.reserve(ks.size());
  for (double x : ks) pts.emplace_back(x, a(x) + b(x));
  return MonotoneFn(std::move(pts), a.tail_slope() + b.tail_slope());
}

Kappa::Kappa() : at0_(1.0), drop_() {}

Kappa::Kappa(double at0, MonotoneFn drop) : at0_(at0), drop_(std::move(drop)) {
  require(at0_ > 0.0 && at0_ <= 1.0, "Kappa: kappa(0) must lie in (0, 1]");
  require(drop_.vanishes_at_zero(), "Kappa: drop must vanish at 0");
}

Kappa Kappa::constant(double c) { return Kappa(c, MonotoneFn()); }

double Kappa::operator()(double l) const {
  const double v = at0_ - drop_(l);
  if (!(v > 0.0))
    throw std::domain_error("Kappa: weight not positive at requested point");
  return v;
}

double Kappa::floor_on(double l) const { return (*this)(l); }

SuperadditiveReport is_superadditive(const MonotoneFn& f,
                                     std::span<const double> grid, double tol) {
  SuperadditiveReport rep;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i; j < grid.size(); ++j) {
      const double a = grid[i], b = grid[j];
      if (a < 0.0 || b < 0.0) continue;
      const double lhs = f(a) + f(b);
      const double rhs = f(a + b) * (1.0 + tol);
      if (lhs > rhs) {
        rep.ok = false;
        rep.a = a;
        rep.b = b;
        rep.deficit = lhs - rhs;
        return rep;
      }
    }
  }
  return rep;
}

MonotoneFn superadditive_envelope(
    std::span<const std::pair<double, double>> radius_value_samples) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [r, v] : radius_value_samples) {
    require(std::isfinite(r) && std::isfinite(v),
            "superadditive_envelope: non-finite sample");
    require(v >= 0.0, "superadditive_envelope: negative value");
    if (r == 0.0) {
      require(v == 0.0,
              "superadditive_envelope: positive value at zero frequency has "
              "unbounded ratio");
      continue;
    }
    require(r > 0.0, "superadditive_envelope: negative radius");
    pts.emplace_back(r, v / r);
  }
  require(!pts.empty(), "superadditive_envelope: no usable samples");
  std::sort(pts.begin(), pts.end());
  // Collapse duplicate radii to the larger ratio, then prefix-max.
  std::vector<double> rad, ratio;
  for (const auto& [r, q] : pts) {
    if (!rad.empty() && rad.back() == r)
      ratio.back() = std::max(ratio.back(), q);
    else {
      rad.push_back(r);
      ratio.push_back(q);
    }
  }
  for (std::size_t i = 1; i < ratio.size(); ++i)
    ratio[i] = std::max(ratio[i], ratio[i - 1]);

  // C(x) = int_0^x R1, piecewise linear with slope ratio[i] on
  // [rad[i], rad[i+1]) and slope ratio.back() past rad.back().
  auto cumulative = [&](double x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rad.size(); ++i) {
      if (x <= rad[i]) break;
      const double hi = (i + 1 < rad.size())
                            ? std::min(x, rad[i + 1])
                            : x;
      acc += ratio[i] * (hi - rad[i]);
    }
    return acc;
  };

  std::vector<double> ks{0.0};
  for (double r : rad) {
    ks.push_back(r);
    ks.push_back(0.5 * r);
  }
  ks = sorted_unique(std::move(ks));
  std::vector<std::pair<double, double>> out;
  out.reserve(ks.size());
  for (double l : ks) out.emplace_back(l, cumulative(2.0 * l) - cumulative(l));
  return MonotoneFn(std::move(out), ratio.back());
}

namespace {

// R1(t) = sup_{0 < s <= t} r0(s)/s for a piecewise-linear nondecreasing r0
// with r0(0) = 0.  On each linear segment the ratio is monotone, so segment
// suprema sit at endpoints; a prefix-max over knots plus the ratio at t
// itself gives the supremum exactly.
class RatioSup {
 public:
  explicit RatioSup(const MonotoneFn& r0) : r0_(r0) {
    const auto& xs = r0.knots();
    const auto& ys = r0.values();
    prefix_.assign(xs.size(), 0.0);
    // Limit s->0 of r0(s)/s is the first chord slope (r0(0) = 0), or the
    // tail slope when there is only the knot at 0.
    double run = (xs.size() >= 2) ? (ys[1] - ys[0]) / (xs[1] - xs[0])
                                  : r0.tail_slope();
    prefix_[0] = run;
    for (std::size_t i = 1; i < xs.size(); ++i) {
      run = std::max(run, ys[i] / xs[i]);
      prefix_[i] = run;
    }
  }

  double operator()(double t) const {
    const auto& xs = r0_.knots();
    if (t <= 0.0) return 0.0;
    double best = r0_(t) / t;
    auto it = std::upper_bound(xs.begin(), xs.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - xs.begin());
    if (i > 0) best = std::max(best, prefix_[std::min(i - 1, prefix_.size() - 1)]);
    return best;
  }

 private:
  const MonotoneFn& r0_;
  std::vector<double> prefix_;
};

// Adaptive Simpson on [a, b].
double simpson(const std::function<double(double)>& g, double a, double b,
               double fa, double fm, double fb, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = g(lm), frm = g(rm);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double err = left + right - whole;
  if (depth <= 0 || std::abs(err) <= 15.0 * tol) return left + right + err / 15.0;
  return simpson(g, a, m, fa, flm, fm, 0.5 * tol, depth - 1) +
         simpson(g, m, b, fm, frm, fb, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& g, double a, double b,
                 double tol) {
  if (b <= a) return 0.0;
  const double fa = g(a), fb = g(b), fm = g(0.5 * (a + b));
  return simpson(g, a, b, fa, fm, fb, tol, 48);
}

}  // namespace

MonotoneFn superadditive_envelope(const MonotoneFn& r0, double lmax,
                                  double rel_tol) {
  require(r0.vanishes_at_zero(),
          "superadditive_envelope: profile must vanish at zero");
  RatioSup r1(r0);
  std::function<double(double)> r1fn = [&](double t) { return r1(t); };
  auto envelope = [&](double l) {
    if (l <= 0.0) return 0.0;
    const double scale = std::max(r1(2.0 * l) * l, 1e-300);
    return integrate(r1fn, l, 2.0 * l, 1e-10 * scale);
  };
  std::vector<double> req;
  for (double x : r0.knots()) {
    if (x <= lmax) req.push_back(x);
    if (0.5 * x <= lmax) req.push_back(0.5 * x);
  }
  return MonotoneFn::from_function(envelope, lmax, rel_tol, req);
}

}  // namespace duhamel
