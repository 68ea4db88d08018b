#include "dcl/specialfn.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dcl::special {

namespace {

// Arguments are shifted up to this point before the asymptotic series.
constexpr double kShift = 12.0;

void check_domain(double x, const char* fn) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw std::domain_error(std::string(fn) + ": argument must be finite and > 0, got " +
                            std::to_string(x));
  }
}

// Stirling series, valid for x >= kShift.
// Coefficients are B_{2k} / (2k (2k - 1)).
double lgamma_stirling(double x) {
  static constexpr double c[] = {
      1.0 / 12.0,         -1.0 / 360.0,     1.0 / 1260.0,  -1.0 / 1680.0,
      1.0 / 1188.0,       -691.0 / 360360.0, 1.0 / 156.0,  -3617.0 / 122400.0,
  };
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  for (int k = 7; k >= 0; --k) series = series * inv2 + c[k];
  series *= inv;
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return (x - 0.5) * std::log(x) - x + half_log_two_pi + series;
}

}  // namespace

double lgamma(double x) {
  check_domain(x, "lgamma");
  if (x >= kShift) return lgamma_stirling(x);
  // Gamma(x) = Gamma(x + n) / (x (x+1) ... (x+n-1))
  double prod = 1.0;
  double y = x;
  while (y < kShift) {
    prod *= y;
    y += 1.0;
  }
  return lgamma_stirling(y) - std::log(prod);
}

double digamma(double x) {
  check_domain(x, "digamma");
  double acc = 0.0;
  while (x < kShift) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  // ln x - 1/(2x) - sum B_{2k} / (2k x^{2k})
  static constexpr double c[] = {
      1.0 / 12.0,  -1.0 / 120.0,        1.0 / 252.0, -1.0 / 240.0,
      1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0,
  };
  const double inv2 = 1.0 / (x * x);
  double series = 0.0;
  for (int k = 6; k >= 0; --k) series = series * inv2 + c[k];
  series *= inv2;
  return acc + std::log(x) - 0.5 / x - series;
}

double trigamma(double x) {
  check_domain(x, "trigamma");
  double acc = 0.0;
  while (x < kShift) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  // 1/x + 1/(2x^2) + sum B_{2k} / x^{2k+1}
  static constexpr double c[] = {
      1.0 / 6.0,  -1.0 / 30.0,        1.0 / 42.0, -1.0 / 30.0,
      5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0,
  };
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  for (int k = 6; k >= 0; --k) series = series * inv2 + c[k];
  series *= inv2 * inv;
  return acc + inv + 0.5 * inv2 + series;
}

}  // namespace dcl::special
