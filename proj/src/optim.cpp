#include "dcl/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace dcl::ad {

namespace {

void require_grads(const std::vector<Tensor>& params) {
  for (const auto& p : params) {
    if (!p.requires_grad()) {
      throw std::logic_error("optimizer: parameter does not require gradients");
    }
  }
}

}  // namespace

void sgd_step(std::vector<Tensor>& params, double lr) {
  require_grads(params);
  for (auto& p : params) {
    if (!p.has_grad()) continue;
    auto w = p.mutable_data();
    auto g = p.mutable_grad();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
    p.zero_grad();
  }
}

void Adam::step(std::vector<Tensor>& params, double lr) {
  require_grads(params);
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) {
    throw std::logic_error("Adam: parameter list changed size between steps");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].has_grad()) continue;
    auto w = params[k].mutable_data();
    auto g = params[k].mutable_grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g[i];
      v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + opts_.eps);
    }
    params[k].zero_grad();
  }
}

void Adam::reset() {
  t_ = 0;
  m_.clear();
  v_.clear();
}

}  // namespace dcl::ad
