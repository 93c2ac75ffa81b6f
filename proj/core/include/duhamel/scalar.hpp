#pragma once

/*
 * Scalar coefficient types used throughout the library.
 *
 * Two coefficient fields are supported:
 *   - Cx   = std::complex<double>, the default floating field;
 *   - RatC = Gaussian rationals (exact complex numbers with rational real
 *            and imaginary parts, GMP-backed).
 *
 * ScalarOps<S> provides the small uniform interface (zero/one, exact zero
 * test, total order for canonical sorting, conversion to Cx) that the
 * templated algebra layers need.
 */

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/gmp.hpp>

namespace duhamel {

using Cx = std::complex<double>;
using Rat = boost::multiprecision::mpq_rational;
using Int = boost::multiprecision::mpz_int;

// Exact complex number over the rationals.
struct RatC {
  Rat re;
  Rat im;

  RatC() : re(0), im(0) {}
  RatC(Rat r) : re(std::move(r)), im(0) {}
  RatC(Rat r, Rat i) : re(std::move(r)), im(std::move(i)) {}
  RatC(long r) : re(r), im(0) {}
  RatC(long r, long i) : re(r), im(i) {}

  friend RatC operator+(const RatC& a, const RatC& b) {
    return RatC(a.re + b.re, a.im + b.im);
  }
  friend RatC operator-(const RatC& a, const RatC& b) {
    return RatC(a.re - b.re, a.im - b.im);
  }
  friend RatC operator-(const RatC& a) { return RatC(-a.re, -a.im); }
  friend RatC operator*(const RatC& a, const RatC& b) {
    return RatC(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re);
  }
  friend RatC operator/(const RatC& a, const RatC& b) {
    Rat n = b.re * b.re + b.im * b.im;
    if (n == 0) throw std::domain_error("RatC: division by zero");
    return RatC((a.re * b.re + a.im * b.im) / n,
                (a.im * b.re - a.re * b.im) / n);
  }
  RatC& operator+=(const RatC& b) {
    re += b.re;
    im += b.im;
    return *this;
  }
  RatC& operator-=(const RatC& b) {
    re -= b.re;
    im -= b.im;
    return *this;
  }
  RatC& operator*=(const RatC& b) { return *this = *this * b; }
  friend bool operator==(const RatC& a, const RatC& b) {
    return a.re == b.re && a.im == b.im;
  }
  friend bool operator!=(const RatC& a, const RatC& b) { return !(a == b); }
};

inline Cx to_cx(const RatC& a) {
  return Cx(static_cast<double>(a.re), static_cast<double>(a.im));
}
inline Cx to_cx(const Cx& a) { return a; }

inline std::string rat_to_string(const Rat& r) { return r.str(); }

// Parses "p", "-p/q" or a decimal literal such as "0.25" (exactly, since
// finite decimals are rationals).
Rat rat_from_string(const std::string& s);

// Exact conversions: binary floating point values are dyadic rationals,
// so no rounding occurs.  Throws on non-finite input.
Rat rat_from_double(double x);
RatC ratc_from_cx(const Cx& z);

template <class S>
struct ScalarOps;

template <>
struct ScalarOps<Cx> {
  static Cx zero() { return Cx(0.0, 0.0); }
  static Cx one() { return Cx(1.0, 0.0); }
  static Cx from_int(long n) { return Cx(static_cast<double>(n), 0.0); }
  static bool is_zero(const Cx& a) { return a.real() == 0.0 && a.imag() == 0.0; }
  // Lexicographic on (re, im); used only for canonical term ordering.
  static bool less(const Cx& a, const Cx& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  }
  static Cx reciprocal(const Cx& a) {
    if (is_zero(a)) throw std::domain_error("reciprocal of zero");
    return Cx(1.0, 0.0) / a;
  }
};

template <>
struct ScalarOps<RatC> {
  static RatC zero() { return RatC(); }
  static RatC one() { return RatC(1); }
  static RatC from_int(long n) { return RatC(n); }
  static bool is_zero(const RatC& a) { return a.re == 0 && a.im == 0; }
  static bool less(const RatC& a, const RatC& b) {
    if (a.re != b.re) return a.re < b.re;
    return a.im < b.im;
  }
  static RatC reciprocal(const RatC& a) { return RatC(1) / a; }
};

}  // namespace duhamel
