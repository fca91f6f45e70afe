#include "wes/pcg.hpp"

#include <cmath>

namespace wes {

double Pcg32::next_gaussian() {
  // Box-Muller, first component only. Two fresh uniforms per call keeps the
  // draw count predictable.
  double u1 = next_double();
  double u2 = next_double();
  while (u1 <= 0.0) u1 = next_double();
  const double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace wes
