// Symbol tables, the built-in equation catalogue, frequency expressions,
// analytic nonlinearities and their majorant sums.
//
// Oracles: hand-evaluated expression values; the identity H(u) = u * u for
// the quadratic series; a brute-force Taylor sum without intermediate
// truncation; closed-form geometric sums for the lacunary family; explicit
// symbol matrices at sample frequencies.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "duhamel/equations.hpp"
#include "duhamel/spectral.hpp"
#include "test_util.hpp"

using namespace duhamel;
using testutil::Rng;

namespace {

FreqPoint fp(std::initializer_list<long> coords) {
  FreqPoint p;
  for (long c : coords) p.push_back(Rat(c));
  return p;
}

FreqPoint fq(long num, long den) { return {Rat(num, den)}; }

SupportSpec half_line() {
  SupportSpec s;
  s.direction = {Rat(1)};
  s.min_level = Rat(1);
  return s;
}

RatC rc(long re, long im = 0) { return RatC(Rat(re), Rat(im)); }

// Reference evaluation: full convolution powers, no intermediate
// truncation, every series term up to a generous order cap.
VecSpectrum<RatC> taylor_brute_force(const NonlinearSeries& H,
                                     const VecSpectrum<RatC>& v,
                                     const SupportSpec& spec, const Rat& budget,
                                     unsigned order_cap) {
  std::vector<ScalarSpectrum<RatC>> chan(H.n2);
  for (const auto& [xi, comps] : v)
    for (unsigned j = 0; j < H.n2; ++j)
      if (!coeff_is_zero(comps[j])) chan[j].emplace(xi, comps[j]);

  VecSpectrum<RatC> acc;
  for (const auto& [alpha, coeff] : H.terms_up_to(order_cap)) {
    ScalarSpectrum<RatC> prod;
    bool first = true;
    for (unsigned j = 0; j < H.n2; ++j) {
      for (unsigned rep = 0; rep < alpha[j]; ++rep) {
        prod = first ? chan[j] : convolve(prod, chan[j]);
        first = false;
      }
    }
    if (first) continue;
    for (const auto& [xi, s] : prod) {
      auto [it, inserted] = acc.try_emplace(xi, std::vector<RatC>(H.n3));
      for (unsigned m = 0; m < H.n3; ++m) it->second[m] += s * coeff[m];
    }
  }
  VecSpectrum<RatC> out;
  for (const auto& [xi, comps] : acc) {
    if (level(xi, spec) > budget) continue;
    bool all_zero = true;
    for (const auto& c : comps)
      if (!coeff_is_zero(c)) all_zero = false;
    if (!all_zero) out.emplace(xi, comps);
  }
  return out;
}

}  // namespace

TEST_CASE("frequency expressions evaluate exactly") {
  const FreqExpr nsq = FreqExpr::parse("normsq", 2);
  FreqPoint p{Rat(3, 2), Rat(1, 4)};
  RatC v;
  REQUIRE(nsq.eval_exact(p, v));
  CHECK(v == RatC(Rat(37, 16)));
  CHECK(nsq.eval(p).real() == doctest::Approx(37.0 / 16.0).epsilon(1e-15));

  const FreqExpr sq = FreqExpr::parse("-x1^2", 1);
  REQUIRE(sq.eval_exact(fp({3}), v));
  CHECK(v == rc(-9));

  const FreqExpr cubic = FreqExpr::parse("i*x1^3", 1);
  REQUIRE(cubic.eval_exact(fp({2}), v));
  CHECK(v == rc(0, 8));

  const FreqExpr inv = FreqExpr::parse("1/x1", 1);
  REQUIRE(inv.eval_exact(fq(1, 2), v));
  CHECK(v == rc(2));
  CHECK_THROWS_AS(inv.eval(fp({0})), std::domain_error);

  const FreqExpr signed_abs = FreqExpr::parse("sgn(x1)*abs(x1)", 1);
  REQUIRE(signed_abs.eval_exact(fq(-5, 4), v));
  CHECK(v == RatC(Rat(-5, 4)));

  const FreqExpr pow4 = FreqExpr::parse("pow(normsq, 2)", 2);
  REQUIRE(pow4.eval_exact(fp({1, 1}), v));
  CHECK(v == rc(4));

  const FreqExpr sqrt4 = FreqExpr::parse("pow(x1, 0.5)", 1);
  CHECK_FALSE(sqrt4.eval_exact(fp({4}), v));
  CHECK(sqrt4.eval(fp({4})).real() == doctest::Approx(2.0).epsilon(1e-14));

  const FreqExpr mixed = FreqExpr::parse("(1 + 2*i) * x2 - 0.5", 2);
  REQUIRE(mixed.eval_exact(fp({0, 3}), v));
  CHECK(v == RatC(Rat(5, 2), Rat(6)));

  CHECK_THROWS_AS(FreqExpr::parse("x3", 2), std::invalid_argument);
  CHECK_THROWS_AS(FreqExpr::parse("2 +", 1), std::invalid_argument);
  CHECK_THROWS_AS(FreqExpr::parse("foo(x1)", 1), std::invalid_argument);
  CHECK_THROWS_AS(FreqExpr::parse("x1 ^ 2.5", 1), std::invalid_argument);
  CHECK_THROWS_AS(FreqExpr::parse("x", 2), std::invalid_argument);
  CHECK_THROWS_AS(FreqExpr::parse("", 1), std::invalid_argument);
}

TEST_CASE("majorant sums of small coefficient tables") {
  NonlinearSeries sq;
  sq.table.emplace(MultiIndex{2}, std::vector<RatC>{rc(1)});
  Majorants m = majorants(sq, 0.5);
  CHECK(m.h == 1.0);
  CHECK(m.h1 == 2.0);
  CHECK_FALSE(m.partial);

  NonlinearSeries cube;
  cube.k0 = 2;
  cube.table.emplace(MultiIndex{3}, std::vector<RatC>{rc(1)});
  m = majorants(cube, 0.5);
  CHECK(m.h == 0.5);
  CHECK(m.h1 == 1.5);

  NonlinearSeries empty;
  m = majorants(empty, 0.25);
  CHECK(m.h == 0.0);
  CHECK(m.h1 == 0.0);

  // Vector coefficients enter through their Euclidean length.
  NonlinearSeries vec;
  vec.n2 = 2;
  vec.n3 = 2;
  vec.table.emplace(MultiIndex{1, 1}, std::vector<RatC>{rc(3), rc(4)});
  m = majorants(vec, 0.75);
  CHECK(m.h == 5.0);
  CHECK(m.h1 == 10.0);

  CHECK_THROWS_AS(majorants(sq, -0.1), std::invalid_argument);
}

TEST_CASE("lacunary family majorants are flagged partial sums") {
  const NonlinearSeries H = builtin("lacunary").H;
  const double r = 0.5;
  double want_h = 0.0, want_h1 = 0.0;
  for (unsigned long long q = 2; q <= (1u << 24); q *= 2) {
    const double term = std::pow(r, static_cast<double>(q - 2));
    if (term == 0.0) break;
    want_h += term;
    want_h1 += static_cast<double>(q) * term;
  }
  const Majorants m = majorants(H, r);
  CHECK(m.partial);
  CHECK(m.h == doctest::Approx(want_h).epsilon(1e-14));
  CHECK(m.h1 == doctest::Approx(want_h1).epsilon(1e-14));
  CHECK_THROWS_AS(majorants(H, 1.0), std::domain_error);
}

TEST_CASE("quadratic series acts as self convolution") {
  const NonlinearSeries H = builtin("ode_square").H;
  const SupportSpec spec = half_line();
  Rng rng(0x5EED);
  for (int trial = 0; trial < 30; ++trial) {
    ScalarSpectrum<RatC> u;
    const int n = static_cast<int>(rng.unif_int(1, 5));
    for (int i = 0; i < n; ++i) {
      const long num = rng.unif_int(1, 24);
      u[{Rat(num, 4)}] = RatC(Rat(rng.unif_int(-5, 5)), Rat(rng.unif_int(-5, 5)));
    }
    VecSpectrum<RatC> v;
    for (const auto& [xi, c] : u) v.emplace(xi, std::vector<RatC>{c});
    const Rat budget(rng.unif_int(1, 10));

    const VecSpectrum<RatC> got = evaluate_nonlinearity(H, v, spec, budget);
    const ScalarSpectrum<RatC> want = truncate(convolve(u, u), spec, budget);

    REQUIRE(got.size() == want.size());
    for (const auto& [xi, c] : want) {
      REQUIRE(got.count(xi) == 1);
      REQUIRE(got.at(xi).size() == 1);
      CHECK(got.at(xi)[0] == c);
    }
  }
}

TEST_CASE("series evaluation matches brute force below the budget") {
  NonlinearSeries H;
  H.n2 = 2;
  H.n3 = 2;
  H.k0 = 1;
  H.table.emplace(MultiIndex{1, 1}, std::vector<RatC>{rc(2), rc(0, 1)});
  H.table.emplace(MultiIndex{3, 0}, std::vector<RatC>{rc(-1), rc(0)});
  H.table.emplace(MultiIndex{0, 2}, std::vector<RatC>{rc(0), rc(5)});
  H.table.emplace(MultiIndex{2, 2}, std::vector<RatC>{rc(1, 1), rc(-3)});

  const SupportSpec spec = half_line();
  Rng rng(0xBEEF);
  for (int trial = 0; trial < 20; ++trial) {
    VecSpectrum<RatC> v;
    const int n = static_cast<int>(rng.unif_int(1, 4));
    for (int i = 0; i < n; ++i) {
      const long num = rng.unif_int(2, 10);
      v[{Rat(num, 4)}] = {RatC(Rat(rng.unif_int(-3, 3))),
                          RatC(Rat(rng.unif_int(-3, 3)))};
    }
    const Rat budget(rng.unif_int(2, 6));

    // Least level is at least 1/2, so order 2 * budget + 2 is past reach.
    const unsigned cap = static_cast<unsigned>(2 * rng.unif_int(2, 6)) + 14;
    const VecSpectrum<RatC> got = evaluate_nonlinearity(H, v, spec, budget);
    const VecSpectrum<RatC> want =
        taylor_brute_force(H, v, spec, budget, cap);
    CHECK(got == want);
  }
}

TEST_CASE("lacunary series keeps exactly the reachable powers") {
  const NonlinearSeries H = builtin("lacunary").H;
  const SupportSpec spec = half_line();
  const RatC a(Rat(1), Rat(1));  // 1 + i
  VecSpectrum<RatC> v{{fp({2}), {a}}};

  // Budget 20, base level 2: orders up to 10, so powers 2, 4, 8 survive.
  const VecSpectrum<RatC> out = evaluate_nonlinearity(H, v, spec, Rat(20));
  REQUIRE(out.size() == 3);
  CHECK(out.at(fp({4}))[0] == rc(0, 2));    // (1+i)^2
  CHECK(out.at(fp({8}))[0] == rc(-4));      // (1+i)^4
  CHECK(out.at(fp({16}))[0] == rc(16));     // (1+i)^8

  // A tighter budget removes the highest power.
  CHECK(evaluate_nonlinearity(H, v, spec, Rat(15)).size() == 2);
  // Below twice the base level nothing is reachable.
  CHECK(evaluate_nonlinearity(H, v, spec, Rat(3)).empty());
}

TEST_CASE("nonlinearity evaluation rejects malformed input") {
  const NonlinearSeries H = builtin("ode_square").H;
  const SupportSpec spec = half_line();

  VecSpectrum<RatC> boundary{{fp({0}), {rc(1)}}};
  CHECK_THROWS_AS(evaluate_nonlinearity(H, boundary, spec, Rat(4)),
                  std::invalid_argument);
  VecSpectrum<RatC> below{{fp({-1}), {rc(1)}}};
  CHECK_THROWS_AS(evaluate_nonlinearity(H, below, spec, Rat(4)),
                  std::invalid_argument);
  VecSpectrum<RatC> wide{{fp({1}), {rc(1), rc(2)}}};
  CHECK_THROWS_AS(evaluate_nonlinearity(H, wide, spec, Rat(4)),
                  std::invalid_argument);
  VecSpectrum<RatC> wrongdim{{fp({1, 1}), {rc(1)}}};
  CHECK_THROWS_AS(evaluate_nonlinearity(H, wrongdim, spec, Rat(4)),
                  std::invalid_argument);

  NonlinearSeries bad;
  bad.table.emplace(MultiIndex{1}, std::vector<RatC>{rc(1)});
  VecSpectrum<RatC> ok{{fp({1}), {rc(1)}}};
  CHECK_THROWS_AS(evaluate_nonlinearity(bad, ok, spec, Rat(4)),
                  std::invalid_argument);
}

TEST_CASE("exponential polynomial coefficients flow through the series") {
  const NonlinearSeries H = builtin("ode_square").H;
  const SupportSpec spec = half_line();
  using PQ = ExpPoly<RatC>;
  VecSpectrum<PQ> v{{fp({1}), {PQ::monomial(rc(-1), 0, rc(1))}}};
  const VecSpectrum<PQ> out = evaluate_nonlinearity(H, v, spec, Rat(4));
  REQUIRE(out.size() == 1);
  CHECK(out.at(fp({2}))[0] == PQ::monomial(rc(-2), 0, rc(1)));
}

TEST_CASE("catalogue shapes and symbol values at sample frequencies") {
  struct Dims {
    unsigned d, n1, n2, n3;
  };
  const std::map<std::string, Dims> want = {
      {"ode_square", {1, 1, 1, 1}},      {"burgers", {1, 1, 1, 1}},
      {"complex_heat", {1, 1, 1, 1}},    {"clm", {1, 1, 2, 1}},
      {"kdv", {1, 1, 1, 1}},             {"nls_star", {1, 2, 2, 2}},
      {"ns_incompressible", {2, 2, 2, 2}}, {"heat_cascade", {1, 1, 1, 1}},
      {"lacunary", {1, 1, 1, 1}},        {"fractional_heat", {1, 1, 2, 1}},
      {"nlkg", {1, 3, 1, 1}}};

  for (const std::string& name : builtin_names()) {
    CAPTURE(name);
    const Equation eq = builtin(name);
    REQUIRE(want.count(name) == 1);
    const Dims d = want.at(name);
    CHECK(eq.sym.dim == d.d);
    CHECK(eq.sym.n1 == d.n1);
    CHECK(eq.sym.n2 == d.n2);
    CHECK(eq.sym.n3 == d.n3);
    CHECK(eq.sym.name == name);
  }

  const Equation burgers = builtin("burgers");
  CHECK(burgers.sym.L_hat(fp({3}))(0, 0) == Cx(-9.0, 0.0));
  CHECK(burgers.sym.N_hat(fp({3}))(0, 0) == Cx(0.0, 3.0));

  const Equation kdv = builtin("kdv");
  CHECK(kdv.sym.L_hat(fp({2}))(0, 0) == Cx(0.0, 8.0));
  CHECK(kdv.H.table.at(MultiIndex{2})[0] == rc(3));

  const Equation clm = builtin("clm");
  const CMat mneg = clm.sym.M_hat(fq(-5, 4));
  CHECK(mneg(0, 0) == Cx(1.0, 0.0));
  CHECK(mneg(1, 0) == Cx(0.0, -1.0));
  const CMat mpos = clm.sym.M_hat(fq(5, 4));
  CHECK(mpos(1, 0) == Cx(0.0, 1.0));

  const Equation nls = builtin("nls_star");
  const CMat lnls = nls.sym.L_hat(fp({2}));
  CHECK(lnls(0, 0) == Cx(0.0, -4.0));
  CHECK(lnls(1, 1) == Cx(0.0, 4.0));
  CHECK(lnls(0, 1) == Cx(0.0, 0.0));

  const Equation ns = builtin("ns_incompressible");
  const CMat lns = ns.sym.L_hat(fp({1, 2}));
  CHECK(lns(0, 0) == Cx(-5.0, 0.0));
  CHECK(lns(1, 1) == Cx(-5.0, 0.0));
  const CMat nns = ns.sym.N_hat(fp({1, 2}));
  CHECK(nns(0, 1) == Cx(0.0, 1.0));
  CHECK(nns(1, 0) == Cx(0.0, -1.0));
  CHECK(nns(0, 0) == Cx(0.0, 0.0));

  const Equation frac = builtin("fractional_heat");
  CHECK(frac.sym.L_hat(fp({3}))(0, 0).real() == doctest::Approx(9.0).epsilon(1e-12));
  const CMat mfrac = frac.sym.M_hat(fp({3}));
  CHECK(mfrac(0, 0) == Cx(0.0, 3.0));
  CHECK(mfrac(1, 0) == Cx(1.0, 0.0));

  const Equation casc = builtin("heat_cascade", {.dim = 2});
  CHECK(casc.sym.L_hat(fp({1, 2}))(0, 0) == Cx(5.0, 0.0));
  BuiltinParams cp;
  cp.dim = 1;
  cp.L_expr = "1+x1^2";
  const Equation casc2 = builtin("heat_cascade", cp);
  CHECK(casc2.sym.L_hat(fp({3}))(0, 0) == Cx(10.0, 0.0));

  const Equation nlkg = builtin("nlkg");
  const CMat lkg = nlkg.sym.L_hat(fp({2}));
  CHECK(lkg(0, 2) == Cx(1.0, 0.0));
  CHECK(lkg(1, 2) == Cx(0.0, 2.0));
  CHECK(lkg(2, 0) == Cx(-1.0, 0.0));
  CHECK(lkg(2, 1) == Cx(0.0, 2.0));
  CHECK(lkg(0, 0) == Cx(0.0, 0.0));

  const Equation lac = builtin("lacunary");
  CHECK(lac.sym.L_hat(fp({1}))(0, 0) == Cx(1.0, 0.0));
  CHECK(lac.H.radius == 1.0);
}

TEST_CASE("exact symbol paths agree with the floating symbols") {
  Rng rng(0xA11CE);
  for (const std::string& name : builtin_names()) {
    CAPTURE(name);
    const Equation eq = builtin(name);
    for (int trial = 0; trial < 20; ++trial) {
      FreqPoint xi(eq.sym.dim);
      xi[0] = Rat(rng.unif_int(1, 512), 64);
      for (unsigned j = 1; j < eq.sym.dim; ++j)
        xi[j] = Rat(rng.unif_int(-512, 512), 64);
      auto agree = [&](const SymbolTable::ExactSymbol& exact,
                       const std::function<CMat(const FreqPoint&)>& fl) {
        if (!exact) return;
        RatMat q;
        if (!exact(xi, q)) return;
        const CMat a = to_cmat(q);
        const CMat b = fl(xi);
        REQUIRE(a.rows == b.rows);
        REQUIRE(a.cols == b.cols);
        for (std::size_t k = 0; k < a.a.size(); ++k) {
          const double scale = 1.0 + std::abs(b.a[k]);
          CHECK(std::abs(a.a[k] - b.a[k]) <= 1e-12 * scale);
        }
      };
      agree(eq.sym.L_hat_exact, eq.sym.L_hat);
      agree(eq.sym.M_hat_exact, eq.sym.M_hat);
      agree(eq.sym.N_hat_exact, eq.sym.N_hat);
    }
  }
}

TEST_CASE("cubic coupling stores conjugated coefficients") {
  BuiltinParams p;
  p.alpha = Cx(0.5, 0.25);
  const Equation eq = builtin("nls_star", p);
  const auto& c21 = eq.H.table.at(MultiIndex{2, 1});
  CHECK(c21[0] == RatC(Rat(1, 4), Rat(-1, 2)));
  CHECK(c21[1] == rc(0));
  const auto& c12 = eq.H.table.at(MultiIndex{1, 2});
  CHECK(c12[0] == rc(0));
  CHECK(c12[1] == RatC(Rat(1, 4), Rat(1, 2)));
  CHECK(eq.H.k0 == 2);
}

TEST_CASE("decay claims hold on random admissible frequencies") {
  const std::vector<std::string> claimed = {
      "burgers", "complex_heat", "clm", "kdv", "nls_star",
      "ns_incompressible", "fractional_heat"};
  for (const std::string& name : builtin_names()) {
    CAPTURE(name);
    const Equation eq = builtin(name);
    const ClaimCheck r = spot_check_claim(eq.sym, 20260814, 256);
    const bool expect_claim =
        std::find(claimed.begin(), claimed.end(), name) != claimed.end();
    CHECK(r.checked == expect_claim);
    CHECK(r.ok);
    if (r.checked) {
      CHECK(r.worst_decay_margin >= 0.0);
      CHECK(r.worst_size_margin >= 0.0);
    }
  }

  BuiltinParams p3;
  p3.dim = 3;
  const ClaimCheck ns3 = spot_check_claim(
      builtin("ns_incompressible", p3).sym, 7, 256);
  CHECK(ns3.checked);
  CHECK(ns3.ok);

  // Anti-dissipative diffusion forfeits the claim.
  BuiltinParams pneg;
  pneg.eps = Cx(-1.0, 0.0);
  CHECK_FALSE(spot_check_claim(builtin("complex_heat", pneg).sym, 7).checked);

  // A bounded non-decaying symbol fails near the support boundary.
  SymbolTable bad = builtin("complex_heat").sym;
  bad.L_hat = [](const FreqPoint&) { return CMat::scalar(Cx(1.0, 0.0)); };
  bad.L_hat_exact = nullptr;
  const ClaimCheck fail = spot_check_claim(bad, 7, 64, 1.0);
  CHECK(fail.checked);
  CHECK_FALSE(fail.ok);
  CHECK(fail.worst_decay_margin < 0.0);
}

TEST_CASE("catalogue rejects malformed parameters") {
  BuiltinParams p;
  p.k = 1;
  CHECK_THROWS_AS(builtin("complex_heat", p), std::invalid_argument);
  BuiltinParams q;
  q.dim = 1;
  CHECK_THROWS_AS(builtin("ns_incompressible", q), std::invalid_argument);
  BuiltinParams r;
  r.s = Cx(-1.0, 0.0);
  CHECK_THROWS_AS(builtin("fractional_heat", r), std::invalid_argument);
  BuiltinParams t;
  t.alist = {MultiIndex{1, 0}, MultiIndex{2}};
  CHECK_THROWS_AS(builtin("fractional_heat", t), std::invalid_argument);
  BuiltinParams u;
  u.dim = 2;
  CHECK_THROWS_AS(builtin("burgers", u), std::invalid_argument);
  CHECK_THROWS_WITH_AS(builtin("unknown_equation"),
                       doctest::Contains("available"), std::invalid_argument);
}
