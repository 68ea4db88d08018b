#ifndef DCL_TESTS_GRADCHECK_HPP
#define DCL_TESTS_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "dcl/autodiff.hpp"

namespace dcl::testing {

/// Worst relative error between tape gradients and central differences of a
/// scalar function of several inputs.
inline double gradcheck(const std::function<ad::Tensor(const std::vector<ad::Tensor>&)>& f,
                        std::vector<ad::Tensor> inputs, double h = 1e-6) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  ad::backward(f(inputs));
  std::vector<std::vector<double>> analytic;
  for (const auto& t : inputs) analytic.push_back(t.grad());
  double worst = 0.0;
  ad::NoGradGuard guard;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto data = inputs[k].mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double base = data[i];
      const double step = h * std::max(1.0, std::abs(base));
      data[i] = base + step;
      const double up = f(inputs).item();
      data[i] = base - step;
      const double down = f(inputs).item();
      data[i] = base;
      const double fd = (up - down) / (2.0 * step);
      worst = std::max(worst, std::abs(analytic[k][i] - fd) / std::max(1e-3, std::abs(fd)));
    }
  }
  return worst;
}

}  // namespace dcl::testing

#endif  // DCL_TESTS_GRADCHECK_HPP
