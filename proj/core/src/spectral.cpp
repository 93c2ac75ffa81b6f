#include "duhamel/spectral.hpp"

namespace duhamel {

void SupportSpec::validate() const {
  if (direction.empty())
    throw std::invalid_argument("support: empty direction vector");
  bool nonzero = false;
  for (const Rat& v : direction)
    if (v != 0) nonzero = true;
  if (!nonzero) throw std::invalid_argument("support: zero direction vector");
  if (!(min_level > 0))
    throw std::invalid_argument("support: threshold must be positive");
}

Rat level(const FreqPoint& xi, const SupportSpec& spec) {
  if (xi.size() != spec.direction.size())
    throw std::invalid_argument("level: frequency dimension mismatch");
  Rat acc(0);
  for (std::size_t i = 0; i < xi.size(); ++i) acc += spec.direction[i] * xi[i];
  return acc;
}

}  // namespace duhamel
