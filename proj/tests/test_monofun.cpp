// Piecewise-linear monotone functions, the bundled cutoff profile, and the
// superadditive envelope construction.
//
// Frozen oracle values (high-precision independent computation):
//   sup |chi'|  = 2.0 exactly, attained mid-plateau;
//   sup |chi''| = 9.8410422...;
//   chi(1.5) = 1/2 by symmetry, chi(1.25) = 0.9350308309...
// The tabulated bounds carry a 1.1 safety factor on top of these.

#include <cmath>
#include <vector>

#include "doctest.h"
#include "duhamel/monofun.hpp"
#include "test_util.hpp"

using namespace duhamel;
using testutil::Rng;

TEST_CASE("evaluation: knots exact, interpolation, tail") {
  MonotoneFn f({{0.0, 1.0}, {1.0, 2.0}, {3.0, 2.5}}, 0.25);
  CHECK(f(0.0) == 1.0);
  CHECK(f(1.0) == 2.0);
  CHECK(f(3.0) == 2.5);
  CHECK(f(0.5) == doctest::Approx(1.5));
  CHECK(f(2.0) == doctest::Approx(2.25));
  CHECK(f(5.0) == doctest::Approx(3.0));
  CHECK_THROWS(f(-0.1));
}

TEST_CASE("validation rejects bad inputs") {
  CHECK_THROWS(MonotoneFn({{0.0, 1.0}, {1.0, 0.5}}, 0.0));   // decreasing
  CHECK_THROWS(MonotoneFn({{1.0, 1.0}, {0.5, 2.0}}, 0.0));   // unsorted
  CHECK_THROWS(MonotoneFn({{0.0, -1.0}}, 0.0));              // negative value
  CHECK_THROWS(MonotoneFn({{0.0, 0.0}}, -1.0));              // negative tail
}

TEST_CASE("from_function reproduces a smooth profile") {
  auto sq = [](double t) { return t * t; };
  MonotoneFn f = MonotoneFn::from_function(sq, 4.0, 1e-6);
  for (double t : {0.1, 0.37, 1.0, 2.2, 3.9})
    CHECK(f(t) == doctest::Approx(t * t).epsilon(5e-6));
  std::vector<double> req{1.25};
  MonotoneFn g = MonotoneFn::from_function(sq, 4.0, 1e-6, req);
  CHECK(g(1.25) == 1.25 * 1.25);  // required knots hold exact samples
}

TEST_CASE("with_knots preserves the function") {
  MonotoneFn f({{0.0, 0.0}, {1.0, 1.0}, {2.0, 3.0}}, 1.5);
  std::vector<double> extra{0.25, 1.7, 5.0};
  MonotoneFn g = f.with_knots(extra);
  for (double t : {0.0, 0.25, 0.9, 1.7, 2.0, 5.0, 7.0})
    CHECK(g(t) == doctest::Approx(f(t)).epsilon(1e-15));
  CHECK(g.knots().size() == 6);
}

TEST_CASE("pointwise max and sum agree with elementwise evaluation") {
  Rng rng(0xB001);
  for (int trial = 0; trial < 30; ++trial) {
    auto mk = [&](double scale) {
      std::vector<std::pair<double, double>> pts;
      double x = 0.0, y = rng.unif(0.0, scale);
      for (int i = 0; i < 5; ++i) {
        pts.emplace_back(x, y);
        x += rng.unif(0.1, 1.0);
        y += rng.unif(0.0, scale);
      }
      return MonotoneFn(pts, rng.unif(0.0, 2.0));
    };
    MonotoneFn a = mk(1.0), b = mk(2.0);
    MonotoneFn mx = pointwise_max(a, b);
    MonotoneFn sm = pointwise_sum(a, b);
    for (int i = 0; i < 50; ++i) {
      const double t = rng.unif(0.0, 8.0);
      CHECK(mx(t) == doctest::Approx(std::max(a(t), b(t))).epsilon(1e-12));
      CHECK(sm(t) == doctest::Approx(a(t) + b(t)).epsilon(1e-12));
    }
  }
}

TEST_CASE("cutoff values") {
  CHECK(chi_eval(0.5) == 1.0);
  CHECK(chi_eval(1.0) == 1.0);
  CHECK(chi_eval(2.0) == 0.0);
  CHECK(chi_eval(2.5) == 0.0);
  CHECK(chi_eval(1.5) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(chi_eval(1.25) == doctest::Approx(0.9350308309).epsilon(1e-9));
  for (double t = 1.0; t < 2.0; t += 0.01)
    CHECK(chi_eval(t) >= chi_eval(t + 0.01));
}

TEST_CASE("cutoff derivative bounds match the frozen suprema") {
  const CutoffProfile& prof = chi_profile();
  CHECK(prof.version == std::string("chi-v1"));
  REQUIRE(prof.max_order() == 32);
  CHECK(prof.derivative_sup[0] == 1.0);
  // 1.1 safety factor on the true suprema.
  CHECK(prof.derivative_sup[1] == doctest::Approx(2.2).epsilon(1e-6));
  CHECK(prof.derivative_sup[2] == doctest::Approx(10.8251).epsilon(1e-4));
  for (unsigned k = 2; k <= 32; ++k)
    CHECK(prof.derivative_sup[k] > prof.derivative_sup[k - 1]);
}

TEST_CASE("cutoff-cost envelope") {
  CHECK(mchi(0.5, 0.0) == 1.0);
  CHECK(mchi(0.5, 0.25) == 1.25);
  CHECK(mchi(0.5, 0.5) == 1.5);
  // Integer anchor r = 1: 1 + c1 / delta.
  const double c1 = chi_profile().derivative_sup[1];
  CHECK(mchi(0.5, 1.0) == doctest::Approx(1.0 + 2.0 * c1).epsilon(1e-12));
  CHECK(mchi(0.25, 1.0) == doctest::Approx(1.0 + 4.0 * c1).epsilon(1e-12));
  // Continuity across the splice at m = 1/2 and increase in m.
  CHECK(mchi(0.5, 0.5 + 1e-9) == doctest::Approx(1.5).epsilon(1e-6));
  double prev = 0.0;
  for (double m = 0.0; m <= 32.0; m += 0.125) {
    const double v = mchi(0.7, m);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK_THROWS(mchi(0.5, 32.5));
  CHECK_THROWS(mchi(0.0, 1.0));
}

TEST_CASE("superadditive envelope from samples") {
  // R0(xi) = |xi| sampled at three radii: ratio 1, so R(l) = l once the
  // smallest radius is passed, and R is superadditive with equality at the
  // sample radii.
  std::vector<std::pair<double, double>> samples{{1.0, 1.0}, {2.0, 2.0},
                                                 {0.5, 0.5}};
  MonotoneFn r = superadditive_envelope(samples);
  CHECK(r(0.25) == doctest::Approx(0.0));
  CHECK(r(0.5) == doctest::Approx(0.5));
  CHECK(r(1.0) == doctest::Approx(1.0));
  CHECK(r(3.0) == doctest::Approx(3.0));
  for (const auto& [rad, val] : samples) CHECK(r(rad) >= val - 1e-12);

  std::vector<double> grid;
  for (int i = 1; i <= 40; ++i) grid.push_back(0.1 * i);
  CHECK(is_superadditive(r, grid).ok);

  // Positive mass at zero frequency is rejected.
  std::vector<std::pair<double, double>> bad{{0.0, 1.0}};
  CHECK_THROWS(superadditive_envelope(bad));
}

TEST_CASE("superadditive envelope from a scalar profile") {
  // R0(l) = l^2 gives R1(t) = t and R(l) = 3 l^2 / 2.
  MonotoneFn r0 = MonotoneFn::from_function([](double t) { return t * t; }, 4.0,
                                            1e-7);
  MonotoneFn r = superadditive_envelope(r0, 2.0, 1e-6);
  for (double l : {0.3, 0.7, 1.0, 1.9})
    CHECK(r(l) == doctest::Approx(1.5 * l * l).epsilon(1e-4));
  // R0(l) = l gives R(l) = l exactly.
  MonotoneFn lin = superadditive_envelope(MonotoneFn::ramp(1.0), 2.0, 1e-6);
  for (double l : {0.2, 0.9, 1.7}) CHECK(lin(l) == doctest::Approx(l).epsilon(1e-9));
  // Dominance R(l) >= R0(l) on the construction range.
  for (double l = 0.05; l <= 2.0; l += 0.05) CHECK(r(l) >= r0(l) * (1.0 - 1e-6));
  std::vector<double> grid;
  for (int i = 1; i <= 30; ++i) grid.push_back(0.06 * i);
  CHECK(is_superadditive(r, grid, 1e-5).ok);
}

TEST_CASE("superadditivity checker flags concave profiles") {
  MonotoneFn sqrtfn =
      MonotoneFn::from_function([](double t) { return std::sqrt(t); }, 4.0, 1e-6);
  std::vector<double> grid{0.5, 1.0, 1.5, 2.0};
  auto rep = is_superadditive(sqrtfn, grid);
  CHECK_FALSE(rep.ok);
  CHECK(rep.deficit > 0.0);
}

TEST_CASE("kappa wrapper") {
  Kappa one;
  CHECK(one(0.0) == 1.0);
  CHECK(one(10.0) == 1.0);
  Kappa k(1.0, MonotoneFn({{0.0, 0.0}, {1.0, 0.5}}, 0.0));
  CHECK(k(1.0) == doctest::Approx(0.5));
  CHECK(k(4.0) == doctest::Approx(0.5));
  CHECK_THROWS(Kappa(1.5, MonotoneFn()));
  Kappa bad(0.2, MonotoneFn({{0.0, 0.0}, {1.0, 0.5}}, 0.0));
  CHECK_THROWS(bad(1.0));
}
