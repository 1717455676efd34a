#include "vectrisk/random.hpp"

#include <cmath>
#include <numbers>

namespace vectrisk {

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::int64_t Rng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  std::int64_t total = 0;
  // Sum of independent Poisson pieces keeps exp(-piece) far from underflow.
  while (mean > 0.0) {
    const double piece = mean > 30.0 ? 30.0 : mean;
    mean -= piece;
    const double floor_p = std::exp(-piece);
    double prod = uniform();
    std::int64_t k = 0;
    while (prod > floor_p) {
      ++k;
      prod *= uniform();
    }
    total += k;
  }
  return total;
}

}  // namespace vectrisk
