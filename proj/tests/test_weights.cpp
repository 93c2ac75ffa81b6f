#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "duhamel/weights.hpp"
#include "test_util.hpp"

using namespace duhamel;

namespace {

MonotoneFn ramp(double slope) { return MonotoneFn::ramp(slope); }

WeightTriple hand_triple() {
  WeightTriple t;
  t.mu0 = ramp(0.125);
  t.nu0 = ramp(1.0);
  t.kappa = Kappa();  // constant 1
  t.delta = 1.0;
  return t;
}

}  // namespace

TEST_CASE("weight triple validation") {
  WeightTriple t = hand_triple();
  CHECK_NOTHROW(t.validate());
  t.mu0 = ramp(0.3);  // mu0(2 delta) = 0.6 > 1/2
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t = hand_triple();
  t.delta = 0.0;
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  t = hand_triple();
  t.nu0 = MonotoneFn::constant(0.2);
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}

TEST_CASE("order map doubles per scale step past three scales") {
  const MonotoneFn mu1 = cmap1(ramp(0.125), 1.0, 8.0);
  CHECK(mu1(2.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(mu1(3.0) == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(mu1(5.0) == doctest::Approx(4.0 * 0.625).epsilon(2e-6));
  CHECK(mu1(8.0) == doctest::Approx(32.0).epsilon(1e-12));
  // nondecreasing on a sweep
  double prev = 0.0;
  for (int i = 0; i <= 160; ++i) {
    const double v = mu1(8.0 * i / 160.0);
    CHECK(v >= prev - 1e-15);
    prev = v;
  }
}

TEST_CASE("pairing reach closed forms") {
  // nuhat(s) = s, kappa = 1: largest eps with 18 eps <= 1 - 2 eps.
  const Kappa one;
  auto id = [](double s) { return s; };
  CHECK(hat_epsilon(id, one, 1.0, 0.5) == doctest::Approx(0.05).epsilon(1e-9));

  // kappa = 1 - l/10: eps = kappa(l) / (18 + 2 kappa(l)).
  const Kappa drooping(1.0, ramp(0.1));
  CHECK(hat_epsilon(id, drooping, 1.0, 1.0) ==
        doctest::Approx(0.9 / 19.8).epsilon(1e-9));
  CHECK(hat_epsilon(id, drooping, 1.0, 5.0) ==
        doctest::Approx(0.5 / 19.0).epsilon(1e-9));

  // Vanishing weight saturates the reach at delta / 2.
  auto zero = [](double) { return 0.0; };
  CHECK(hat_epsilon(zero, one, 1.0, 0.5) == 0.5);
}

TEST_CASE("weight recursion hand values with zero margin") {
  WeightTriple t = hand_triple();
  CmapOptions opt;
  opt.margin = 0.0;
  const ConvCertificate cert = cmap2(t, 0.26, {}, opt);

  CHECK(cert.stop_reason == "horizon");
  CHECK_FALSE(cert.saturated);
  CHECK(cert.stop == doctest::Approx(0.26));
  CHECK(cert.delta == 1.0);
  CHECK(cert.chi_version == chi_profile().version);

  // Splice point solves l = 2 eps^(l) with eps^ = 1/20 identically.
  CHECK(cert.l0 == doctest::Approx(0.1).epsilon(1e-9));
  REQUIRE(cert.anchors.size() >= 4);
  CHECK(cert.anchors[0] == doctest::Approx(0.10).epsilon(1e-9));
  CHECK(cert.anchors[1] == doctest::Approx(0.15).epsilon(1e-9));
  CHECK(cert.anchors[2] == doctest::Approx(0.20).epsilon(1e-9));
  CHECK(cert.anchors[3] == doctest::Approx(0.25).epsilon(1e-9));

  // Base region equals the input weight; past the splice the squared read
  // at l - 1/20 takes over once 9 nu1(l - 1/20)^2 > l.
  CHECK(cert.nu1(0.05) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(cert.nu1(0.10) == doctest::Approx(0.10).epsilon(1e-9));
  CHECK(cert.nu1(0.15) == doctest::Approx(0.15).epsilon(1e-9));
  CHECK(cert.nu1(0.19) == doctest::Approx(0.19).epsilon(1e-6));
  CHECK(cert.nu1(0.20) == doctest::Approx(0.2025).epsilon(1e-9));
  CHECK(cert.nu1(0.25) == doctest::Approx(0.36905625).epsilon(1e-9));

  // Continuity across the splice point.
  CHECK(std::abs(cert.nu1(0.1 + 1e-9) - cert.nu1(0.1 - 1e-9)) < 1e-6);

  // Deterministic reconstruction.
  const ConvCertificate again = cmap2(t, 0.26, {}, opt);
  CHECK(again.nu1.knots() == cert.nu1.knots());
  CHECK(again.nu1.values() == cert.nu1.values());
}

TEST_CASE("value cap stops the recursion and is reported") {
  WeightTriple t = hand_triple();
  t.nu0 = ramp(5.0);
  CmapOptions opt;
  opt.value_cap = 1e6;
  const ConvCertificate cert = cmap2(t, 5.0, {}, opt);
  CHECK(cert.saturated);
  CHECK(cert.stop_reason == "value_cap");
  CHECK(cert.stop < 5.0);
  CHECK(cert.nu1(cert.stop) == doctest::Approx(1e6).epsilon(1e-12));
  // Certified range still starts as usual.
  CHECK(cert.l0 > 0.0);
  CHECK(cert.nu1(0.5 * cert.l0) > 0.0);
}

TEST_CASE("cutoff order limit shrinks the certified range") {
  WeightTriple t;
  t.mu0 = MonotoneFn(
      std::vector<std::pair<double, double>>{{0.0, 0.0}, {2.0, 0.5}, {2.5, 32.0}},
      80.0);
  t.nu0 = ramp(1e-45);
  t.kappa = Kappa();
  t.delta = 1.0;
  const ConvCertificate cert = cmap2(t, 4.0, {});
  CHECK(cert.saturated);
  CHECK(cert.stop_reason == "cutoff_order");
  CHECK(cert.stop == doctest::Approx(3.5).epsilon(1e-6));
  CHECK(t.mu0(cert.stop - t.delta) <= 32.0 + 1e-9);
}

TEST_CASE("certificate passes the convolution conditions on a grid") {
  WeightTriple t;
  t.mu0 = ramp(0.05);
  t.nu0 = ramp(0.03);
  t.kappa = Kappa(1.0, ramp(0.05));
  t.delta = 1.0;
  const double horizon = 6.0;

  std::vector<double> grid;
  for (int j = 1; j <= 200; ++j) grid.push_back(horizon * j / 200.0);

  const ConvCertificate cert = cmap2(t, horizon, grid);
  std::vector<double> checked;
  for (double g : grid)
    if (g <= cert.stop) checked.push_back(g);
  REQUIRE(checked.size() >= 50);  // a usable certified range

  // Materialize nu~ = kappa * nu1 with the checked points as knots so the
  // bound is the exact product there.
  std::vector<double> req = checked;
  for (double k : cert.nu1.knots())
    if (k <= cert.stop) req.push_back(k);
  for (double k : t.kappa.drop().knots())
    if (k <= cert.stop) req.push_back(k);
  const MonotoneFn nu_tilde = MonotoneFn::from_function(
      [&](double l) { return t.kappa(l) * cert.nu1(l); }, cert.stop, 1e-6, req);

  const ConditionReport rep = check_conv_conditions(
      t.mu0, cert.mu1, cert.nu1, nu_tilde, t.delta, checked, 1e-9);
  if (const ConditionRow* f = rep.first_failure()) {
    MESSAGE("first failure at l=" << f->l << " growth=" << f->growth_ok
                                  << " pairing=" << f->pairing_ok
                                  << " split=" << f->split_ok
                                  << " eps=" << f->eps_witness);
  }
  CHECK(rep.all_ok);
  // The grid reaches past 4 delta so the split condition was exercised.
  CHECK(checked.back() > 4.0 * t.delta);
}

TEST_CASE("constant weights fail the pairing condition") {
  const MonotoneFn one = MonotoneFn::constant(1.0);
  std::vector<double> grid{0.5, 1.0, 2.0, 4.5, 6.0};
  const ConditionReport rep =
      check_conv_conditions(MonotoneFn::constant(0.0), MonotoneFn::constant(0.0),
                            one, one, 1.0, grid);
  CHECK_FALSE(rep.all_ok);
  const ConditionRow* f = rep.first_failure();
  REQUIRE(f != nullptr);
  CHECK_FALSE(f->pairing_ok);
  CHECK(f->eps_witness == 0.0);
  for (const auto& r : rep.rows) CHECK_FALSE(r.pairing_ok);
}

TEST_CASE("superlinear response to scaling the input weight") {
  WeightTriple t;
  t.mu0 = ramp(0.05);
  t.nu0 = ramp(0.03);
  t.kappa = Kappa(1.0, ramp(0.05));
  t.delta = 1.0;
  const double horizon = 6.0;
  std::vector<double> grid;
  for (int j = 1; j <= 40; ++j) grid.push_back(horizon * j / 40.0);

  const ConvCertificate base = cmap2(t, horizon, grid);
  WeightTriple tb = t;
  const double b = 3.0;
  tb.nu0 = t.nu0.scaled(b);
  const ConvCertificate scaled = cmap2(tb, horizon, grid);

  const double reach = std::min(base.stop, scaled.stop);
  int compared = 0;
  for (double g : grid) {
    if (g > reach) continue;
    CHECK(scaled.nu1(g) >= b * base.nu1(g) * (1.0 - 1e-12));
    ++compared;
  }
  CHECK(compared >= 10);
}

TEST_CASE("atomic graded norm hand values") {
  SupportSpec spec;
  spec.direction = {Rat(1)};
  spec.min_level = Rat(1);

  SpectrumC f;
  f[{Rat(1)}] = Cx(2.0, 0.0);
  f[{Rat(2)}] = Cx(-1.0, 0.0);
  f[{Rat(3)}] = Cx(0.0, 0.5);

  CHECK(rho_norm_atomic(f, spec, ramp(1.0)) == doctest::Approx(2.0).epsilon(1e-12));
  // Cumulative masses: 2 / 1, 3 / 2, 3.5 / 3 -> the first level dominates.

  // A weight vanishing under mass yields +infinity.
  const MonotoneFn late(
      std::vector<std::pair<double, double>>{{0.0, 0.0}, {2.5, 0.0}}, 1.0);
  CHECK(std::isinf(rho_norm_atomic(f, spec, late)));

  // Atoms at nonpositive level are rejected.
  SpectrumC bad;
  bad[{Rat(0)}] = Cx(1.0, 0.0);
  CHECK_THROWS_AS(rho_norm_atomic(bad, spec, ramp(1.0)), std::invalid_argument);

  CHECK(rho_norm_atomic(SpectrumC{}, spec, ramp(1.0)) == 0.0);
}

TEST_CASE("graded norm is submultiplicative under a certificate") {
  WeightTriple t;
  t.mu0 = ramp(0.05);
  t.nu0 = ramp(0.03);
  t.kappa = Kappa(1.0, ramp(0.05));
  t.delta = 1.0;
  const ConvCertificate cert = cmap2(t, 6.0, {});

  SupportSpec spec;
  spec.direction = {Rat(1)};
  spec.min_level = Rat(1, 100);

  auto nu = [&](double l) { return cert.nu1(l); };
  auto nu_tilde = [&](double l) { return t.kappa(l) * cert.nu1(l); };

  testutil::Rng rng(20260814);
  const Rat half_stop = rat_from_string("1/2") * Rat(static_cast<long>(
                            std::floor(cert.stop * 64.0))) / 64;
  for (int trial = 0; trial < 60; ++trial) {
    SpectrumC F, G;
    const int na = rng.unif_int(1, 5), nb = rng.unif_int(1, 5);
    for (int i = 0; i < na; ++i) {
      Rat lv = Rat(rng.unif_int(1, 63)) / 64 * half_stop / 2;
      if (lv == 0) lv = half_stop / 64;
      F[{lv}] += Cx(rng.unif(-2.0, 2.0), rng.unif(-2.0, 2.0));
    }
    for (int i = 0; i < nb; ++i) {
      Rat lv = Rat(rng.unif_int(1, 63)) / 64 * half_stop / 2;
      if (lv == 0) lv = half_stop / 64;
      G[{lv}] += Cx(rng.unif(-2.0, 2.0), rng.unif(-2.0, 2.0));
    }
    const SpectrumC FG = convolve(F, G);
    const double lhs = rho_norm_atomic(FG, spec, nu_tilde);
    const double rhs =
        rho_norm_atomic(F, spec, nu) * rho_norm_atomic(G, spec, nu);
    CHECK(lhs <= rhs * (1.0 + 1e-9));
  }
}
