#ifndef DCL_SELFTEST_HPP
#define DCL_SELFTEST_HPP

#include <functional>
#include <string>
#include <vector>

namespace dcl::selftest {

struct CheckResult {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

using ScalarFn = std::function<double(double)>;

/// Functions under test; swapped out to confirm the checks catch perturbations.
struct Functions {
  ScalarFn lgamma;
  ScalarFn digamma;

  static Functions builtin();
};

std::vector<CheckResult> check_special_functions(const Functions& fns);
/// Closed-form Dirichlet KL (through fns) against a Monte-Carlo estimate.
std::vector<CheckResult> check_dirichlet_kl(const Functions& fns, std::size_t samples);
std::vector<CheckResult> check_js_divergence(std::size_t pairs);
std::vector<CheckResult> check_metrics();

std::vector<CheckResult> run_all(const Functions& fns = Functions::builtin());
bool all_passed(const std::vector<CheckResult>& results);
std::string format_report(const std::vector<CheckResult>& results);

}  // namespace dcl::selftest

#endif  // DCL_SELFTEST_HPP
