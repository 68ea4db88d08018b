#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dcl/specialfn.hpp"
#include "support/mpfr_oracle.hpp"

using namespace dcl;

TEST_CASE("lgamma reference points") {
  CHECK(std::abs(special::lgamma(1.0)) < 1e-13);
  CHECK(std::abs(special::lgamma(2.0)) < 1e-13);
  CHECK(std::abs(special::lgamma(0.5) - 0.5723649429247001) < 1e-14);
}

TEST_CASE("digamma reference points") {
  CHECK(std::abs(special::digamma(1.0) + 0.5772156649015329) < 1e-14);
  CHECK(std::abs(special::digamma(0.5) + 1.9635100260214235) < 1e-14);
}

TEST_CASE("agreement with 256-bit MPFR") {
  testing::MpfrOracle oracle;
  for (int i = 0; i < 400; ++i) {
    const double x = 1e-3 * std::pow(1e9, i / 399.0);
    const double ref_lg = oracle.lgamma(x);
    CHECK(std::abs(special::lgamma(x) - ref_lg) <= 1e-12 * std::max(1.0, std::abs(ref_lg)));
    CHECK(std::abs(special::digamma(x) - oracle.digamma(x)) <= 1e-10);
  }
}

TEST_CASE("recurrences") {
  for (int i = 0; i < 300; ++i) {
    const double x = 0.01 * std::pow(1e4, i / 299.0);
    CHECK(std::abs(special::lgamma(x + 1.0) - special::lgamma(x) - std::log(x)) < 1e-10);
    CHECK(std::abs(special::digamma(x + 1.0) - special::digamma(x) - 1.0 / x) < 1e-10);
  }
}

TEST_CASE("digamma is the derivative of lgamma") {
  const double h = 1e-5;
  for (int i = 0; i < 200; ++i) {
    const double x = 0.1 * std::pow(1e3, i / 199.0);
    const double fd = (special::lgamma(x + h) - special::lgamma(x - h)) / (2 * h);
    CHECK(std::abs(special::digamma(x) - fd) < 1e-6);
  }
}

TEST_CASE("trigamma is the derivative of digamma") {
  for (double x : {0.05, 0.3, 1.0, 2.5, 9.0, 40.0, 1e3}) {
    const double h = 1e-5 * std::max(1.0, x);
    const double fd = (special::digamma(x + h) - special::digamma(x - h)) / (2 * h);
    CHECK(special::trigamma(x) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("digamma strictly increasing") {
  double prev = special::digamma(1e-3);
  for (int i = 1; i < 2000; ++i) {
    const double x = 1e-3 * std::pow(1e9, i / 1999.0);
    const double v = special::digamma(x);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(special::lgamma(0.0), std::domain_error);
  CHECK_THROWS_AS(special::lgamma(-1.5), std::domain_error);
  CHECK_THROWS_AS(special::digamma(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
  CHECK_THROWS_AS(special::digamma(std::numeric_limits<double>::infinity()), std::domain_error);
}
