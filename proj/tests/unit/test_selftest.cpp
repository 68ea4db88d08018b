#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dcl/selftest.hpp"

using namespace dcl;

TEST_CASE("clean build passes every check") {
  const auto results = selftest::run_all();
  CHECK(results.size() > 10);
  CHECK(selftest::all_passed(results));
  const auto report = selftest::format_report(results);
  for (const auto& r : results) CHECK(report.find(r.name) != std::string::npos);
}

TEST_CASE("a perturbed digamma is caught") {
  auto fns = selftest::Functions::builtin();
  const auto real = fns.digamma;
  fns.digamma = [real](double x) { return real(x) + 1e-3; };
  const auto results = selftest::run_all(fns);
  CHECK_FALSE(selftest::all_passed(results));
  std::size_t failed = 0;
  for (const auto& r : results) failed += !r.passed;
  CHECK(failed >= 2);
}

TEST_CASE("a perturbed lgamma is caught") {
  auto fns = selftest::Functions::builtin();
  const auto real = fns.lgamma;
  fns.lgamma = [real](double x) { return real(x) * (1.0 + 1e-9); };
  CHECK_FALSE(selftest::all_passed(selftest::run_all(fns)));
}
