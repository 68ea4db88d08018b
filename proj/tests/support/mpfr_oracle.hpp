#ifndef DCL_TESTS_MPFR_ORACLE_HPP
#define DCL_TESTS_MPFR_ORACLE_HPP

#include <mpfr.h>

namespace dcl::testing {

/// ln Gamma(x) and psi(x) evaluated with 256-bit MPFR arithmetic, rounded once to double.
class MpfrOracle {
 public:
  MpfrOracle() {
    mpfr_init2(x_, 256);
    mpfr_init2(y_, 256);
  }
  ~MpfrOracle() {
    mpfr_clear(x_);
    mpfr_clear(y_);
  }
  MpfrOracle(const MpfrOracle&) = delete;
  MpfrOracle& operator=(const MpfrOracle&) = delete;

  double lgamma(double x) {
    mpfr_set_d(x_, x, MPFR_RNDN);
    int sign = 0;
    mpfr_lgamma(y_, &sign, x_, MPFR_RNDN);
    return mpfr_get_d(y_, MPFR_RNDN);
  }

  double digamma(double x) {
    mpfr_set_d(x_, x, MPFR_RNDN);
    mpfr_digamma(y_, x_, MPFR_RNDN);
    return mpfr_get_d(y_, MPFR_RNDN);
  }

 private:
  mpfr_t x_;
  mpfr_t y_;
};

}  // namespace dcl::testing

#endif  // DCL_TESTS_MPFR_ORACLE_HPP
