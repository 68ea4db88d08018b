#ifndef DCL_OPTIM_HPP
#define DCL_OPTIM_HPP

#include <vector>

#include "dcl/autodiff.hpp"

namespace dcl::ad {

/// Plain gradient descent. Grads are zeroed after each step; parameters that
/// received no gradient are left untouched.
void sgd_step(std::vector<Tensor>& params, double lr);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are keyed by parameter position,
/// so the parameter list must keep a stable order between steps.
class Adam {
 public:
  explicit Adam(AdamOptions opts = {}) : opts_(opts) {}

  void step(std::vector<Tensor>& params, double lr);
  long steps() const { return t_; }
  void reset();

 private:
  AdamOptions opts_;
  long t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace dcl::ad

#endif  // DCL_OPTIM_HPP
