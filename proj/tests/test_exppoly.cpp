// Exponential-polynomial algebra and the exact Duhamel integral.
//
// Oracle: adaptive Simpson quadrature of int_0^t e^{(t-s)l0} p(s) ds,
// compared against the closed form at several times.  Exact-field checks
// use the derivative identity  d/dt duhamel_integral(l0, p) = l0 * it + p,
// which holds term by term with rational complex coefficients.

#include <complex>

#include "doctest.h"
#include "duhamel/exppoly.hpp"
#include "test_util.hpp"

using namespace duhamel;
using testutil::Rng;

namespace {

ExpPolyQ q_monomial(long rate_num, long rate_den, unsigned power, long coeff_num,
                    long coeff_den = 1) {
  return ExpPolyQ::monomial(RatC(Rat(rate_num) / Rat(rate_den)), power,
                            RatC(Rat(coeff_num) / Rat(coeff_den)));
}

}  // namespace

TEST_CASE("canonical form merges and drops zeros") {
  ExpPolyQ a = q_monomial(1, 2, 1, 3);
  ExpPolyQ b = q_monomial(1, 2, 1, -3);
  CHECK((a + b).is_zero());
  ExpPolyQ c = a + a;
  REQUIRE(c.size() == 1);
  CHECK(c.terms()[0].coeff == RatC(6));
  CHECK(c.terms()[0].power == 1);
}

TEST_CASE("ring identities over exact scalars") {
  Rng rng(0xA001);
  for (int trial = 0; trial < 60; ++trial) {
    ExpPolyQ a = testutil::random_exppoly_q(rng);
    ExpPolyQ b = testutil::random_exppoly_q(rng);
    ExpPolyQ c = testutil::random_exppoly_q(rng);
    CHECK((a + b) * c == a * c + b * c);
    CHECK(a * b == b * a);
    CHECK((a - a).is_zero());
  }
}

TEST_CASE("derivative of products and evaluation consistency") {
  Rng rng(0xA002);
  for (int trial = 0; trial < 40; ++trial) {
    ExpPolyQ a = testutil::random_exppoly_q(rng);
    ExpPolyQ b = testutil::random_exppoly_q(rng);
    ExpPolyQ lhs = (a * b).derivative();
    ExpPolyQ rhs = a.derivative() * b + a * b.derivative();
    CHECK(lhs == rhs);
    const double t = rng.unif(0.0, 2.0);
    const Cx direct = (a * b).eval(t);
    const Cx split = a.eval(t) * b.eval(t);
    CHECK(std::abs(direct - split) <=
          1e-12 * (1.0 + std::abs(direct) + std::abs(split)));
  }
}

TEST_CASE("duhamel closed forms") {
  // int_0^t e^{-2(t-s)} * 2 ds = 1 - e^{-2t}
  ExpPolyQ out = duhamel_integral(RatC(-2), ExpPolyQ::constant(RatC(2)));
  ExpPolyQ expect = ExpPolyQ::constant(RatC(1)) +
                    ExpPolyQ::monomial(RatC(-2), 0, RatC(-1));
  CHECK(out == expect);

  // resonant: int_0^t e^{l(t-s)} e^{ls} ds = t e^{lt}
  RatC l(Rat(3), Rat(-1));
  ExpPolyQ res = duhamel_integral(l, ExpPolyQ::monomial(l, 0, RatC(1)));
  CHECK(res == ExpPolyQ::monomial(l, 1, RatC(1)));

  // int_0^t s ds = t^2/2
  ExpPolyQ lin = duhamel_integral(RatC(0), ExpPolyQ::monomial(RatC(0), 1, RatC(1)));
  CHECK(lin == ExpPolyQ::monomial(RatC(0), 2, RatC(Rat(1) / Rat(2))));
}

TEST_CASE("duhamel satisfies its defining differential identity exactly") {
  Rng rng(0xA003);
  for (int trial = 0; trial < 120; ++trial) {
    ExpPolyQ p = testutil::random_exppoly_q(rng);
    RatC l0 = testutil::random_ratc(rng);
    ExpPolyQ u = duhamel_integral(l0, p);
    CHECK(u.derivative() == u.scaled(l0) + p);
    // u(0) = 0 exactly: the power-0 coefficients cancel in the rationals.
    RatC at0;
    for (const auto& term : u.terms())
      if (term.power == 0) at0 += term.coeff;
    CHECK(at0 == RatC(0));
  }
}

TEST_CASE("duhamel matches quadrature") {
  Rng rng(0xA004);
  for (int trial = 0; trial < 50; ++trial) {
    ExpPolyQ p = testutil::random_exppoly_q(rng);
    RatC l0 = testutil::random_ratc(rng);
    ExpPolyQ u = duhamel_integral(l0, p);
    for (double t : {0.3, 1.0, 2.5}) {
      const Cx oracle = testutil::duhamel_quadrature(l0, p, t);
      const Cx got = u.eval(t);
      CHECK(std::abs(got - oracle) <= 1e-10 * (1.0 + std::abs(oracle)));
    }
  }
}

TEST_CASE("fuzzy resonance policy merges nearby rates") {
  const Cx l0(1.0, 0.0);
  const Cx l(1.0 + 1e-15, 0.0);
  ExpPolyC p = ExpPolyC::monomial(l, 0, Cx(1.0, 0.0));
  DuhamelOptions exact;
  DuhamelOptions fuzzy{ResonancePolicy::fuzzy, 1e-13};
  ExpPolyC u_exact = duhamel_integral(l0, p, exact);
  ExpPolyC u_fuzzy = duhamel_integral(l0, p, fuzzy);
  // Exact policy produces a huge-coefficient cancellation pair whose
  // floating evaluation is unusable; fuzzy takes the stable resonant branch
  // t e^{t}, which quadrature confirms.
  CHECK(u_exact.size() == 2);
  CHECK(u_exact.coeff_linf() > 1e13);
  CHECK(u_fuzzy == ExpPolyC::monomial(l0, 1, Cx(1.0, 0.0)));
  for (double t : {0.5, 1.5}) {
    const Cx oracle = testutil::duhamel_quadrature(l0, p, t);
    CHECK(std::abs(u_fuzzy.eval(t) - oracle) <= 1e-10 * std::abs(oracle));
  }
}
