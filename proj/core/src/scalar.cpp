#include "duhamel/scalar.hpp"

#include <cctype>
#include <cmath>
#include <cstddef>

namespace duhamel {

Rat rat_from_double(double x) {
  if (!std::isfinite(x))
    throw std::invalid_argument("rat_from_double: value is not finite");
  return Rat(x);  // mpq construction from double is exact
}

RatC ratc_from_cx(const Cx& z) {
  return RatC(rat_from_double(z.real()), rat_from_double(z.imag()));
}

Rat rat_from_string(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("rational: empty string");
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    Rat num(Int(s.substr(0, slash)));
    Int den(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("rational: zero denominator");
    return num / Rat(den);
  }
  const auto dot = s.find('.');
  if (dot == std::string::npos) return Rat(Int(s));
  std::string digits = s.substr(0, dot) + s.substr(dot + 1);
  const std::size_t frac_len = s.size() - dot - 1;
  if (frac_len == 0 || digits.empty())
    throw std::invalid_argument("rational: malformed decimal");
  for (std::size_t i = 0; i < frac_len; ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[dot + 1 + i])))
      throw std::invalid_argument("rational: malformed decimal");
  Int den(1);
  for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
  return Rat(Int(digits)) / Rat(den);
}

}  // namespace duhamel
