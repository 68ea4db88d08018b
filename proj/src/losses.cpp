#include "dcl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dcl::loss {

namespace {

void check_same_shape(const ad::Tensor& a, const ad::Tensor& b, const char* op) {
  if (a.shape() != b.shape()) throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

// Weighted mean of a rows x 1 column.
ad::Tensor weighted_row_mean(const ad::Tensor& per_row, std::span<const double> row_weights) {
  if (row_weights.empty()) return ad::mean(per_row);
  if (row_weights.size() != per_row.rows()) {
    throw std::invalid_argument("row weights: expected " + std::to_string(per_row.rows()) +
                                " entries, got " + std::to_string(row_weights.size()));
  }
  double total = 0.0;
  for (double w : row_weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("row weights: nothing selected");
  const ad::Tensor w = ad::Tensor::from(per_row.shape(), {row_weights.begin(), row_weights.end()});
  return ad::scale(ad::sum(ad::mul(per_row, w)), 1.0 / total);
}

ad::Tensor tempered_softmax(const ad::Tensor& logits, double tau) {
  return ad::softmax(tau == 1.0 ? logits : ad::scale(logits, 1.0 / tau));
}

ad::Tensor floored_log(const ad::Tensor& p) { return ad::log(ad::add_scalar(p, kProbFloor)); }

}  // namespace

void LossWeights::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  if (!(kd_alpha >= 0.0 && kd_alpha <= 1.0)) {
    throw std::invalid_argument("kd_alpha must lie in [0, 1]");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
}

void AnnealSchedule::validate() const {
  if (warmup_steps < 1) throw std::invalid_argument("anneal warmup_steps must be >= 1");
  if (mode == AnnealMode::cyclical && cycle_steps < 1) {
    throw std::invalid_argument("anneal cycle_steps must be >= 1");
  }
  if (!(max_lambda > 0.0 && max_lambda <= 1.0)) {
    throw std::invalid_argument("anneal max_lambda must lie in (0, 1]");
  }
}

double lambda_at(const AnnealSchedule& schedule, long step) {
  schedule.validate();
  if (step < 0) throw std::invalid_argument("lambda_at: negative step");
  const long pos = schedule.mode == AnnealMode::cyclical ? step % schedule.cycle_steps : step;
  const double ramp = std::min(static_cast<double>(pos) / static_cast<double>(schedule.warmup_steps), 1.0);
  return ramp * schedule.max_lambda;
}

ad::Tensor cvae_loss(const ad::Tensor& recon_nll, const ad::Tensor& kl, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("cvae_loss: negative lambda");
  if (kl.item() < -1e-9) throw std::invalid_argument("cvae_loss: negative KL term");
  if (lambda == 0.0) return recon_nll;
  return ad::add(recon_nll, ad::scale(kl, lambda));
}

ad::Tensor lm_loss(const ad::Tensor& joint_nll, const ad::Tensor& cond_nll) {
  return ad::add(joint_nll, cond_nll);
}

std::vector<double> target_weights(std::span<const std::size_t> targets) {
  std::vector<double> w(targets.size());
  std::transform(targets.begin(), targets.end(), w.begin(),
                 [](std::size_t t) { return t == kIgnore ? 0.0 : 1.0; });
  return w;
}

ad::Tensor cross_entropy(const ad::Tensor& logits, std::span<const std::size_t> targets) {
  if (targets.size() != logits.rows()) {
    throw std::invalid_argument("cross_entropy: need one target per row");
  }
  std::vector<std::size_t> idx(targets.begin(), targets.end());
  for (std::size_t& t : idx) {
    if (t == kIgnore) {
      t = 0;
    } else if (t >= logits.cols()) {
      throw std::out_of_range("cross_entropy: target " + std::to_string(t) +
                              " outside vocabulary of " + std::to_string(logits.cols()));
    }
  }
  const ad::Tensor picked = ad::pick(ad::log_softmax(logits), idx);
  const std::vector<double> w = target_weights(targets);
  return ad::neg(weighted_row_mean(picked, w));
}

ad::Tensor js_divergence(const ad::Tensor& p_logits, const ad::Tensor& q_logits, double tau,
                         std::span<const double> row_weights) {
  check_same_shape(p_logits, q_logits, "js_divergence");
  const ad::Tensor p = tempered_softmax(p_logits, tau);
  const ad::Tensor q = tempered_softmax(q_logits, tau);
  const ad::Tensor m = ad::scale(ad::add(p, q), 0.5);
  const ad::Tensor log_m = floored_log(m);
  const ad::Tensor kl_pm = ad::row_sum(ad::mul(p, ad::sub(floored_log(p), log_m)));
  const ad::Tensor kl_qm = ad::row_sum(ad::mul(q, ad::sub(floored_log(q), log_m)));
  // Non-negative analytically; relu removes rounding below zero.
  const ad::Tensor per_row = ad::relu(ad::scale(ad::add(kl_pm, kl_qm), 0.5));
  return weighted_row_mean(per_row, row_weights);
}

ad::Tensor kl_divergence(const ad::Tensor& p_logits, const ad::Tensor& q_logits, double tau,
                         std::span<const double> row_weights) {
  check_same_shape(p_logits, q_logits, "kl_divergence");
  const ad::Tensor p = tempered_softmax(p_logits, tau);
  const ad::Tensor q = tempered_softmax(q_logits, tau);
  const ad::Tensor per_row = ad::row_sum(ad::mul(p, ad::sub(floored_log(p), floored_log(q))));
  return weighted_row_mean(per_row, row_weights);
}

ad::Tensor distill(const ad::Tensor& soft, const ad::Tensor& hard, const LossWeights& w) {
  w.validate();
  if (w.kd_alpha == 0.0) return hard;
  const ad::Tensor soft_term = ad::scale(soft, w.kd_alpha * w.tau * w.tau);
  if (w.kd_alpha == 1.0) return soft_term;
  return ad::add(soft_term, ad::scale(hard, 1.0 - w.kd_alpha));
}

ad::Tensor jskd_loss(const ad::Tensor& student_logits, const ad::Tensor& teacher_logits,
                     std::span<const std::size_t> targets, const LossWeights& w) {
  check_same_shape(student_logits, teacher_logits, "jskd_loss");
  const ad::Tensor hard = cross_entropy(student_logits, targets);
  if (w.kd_alpha == 0.0) return distill({}, hard, w);
  const std::vector<double> rows = target_weights(targets);
  return distill(js_divergence(student_logits, teacher_logits.detach(), w.tau, rows), hard, w);
}

ad::Tensor klkd_loss(const ad::Tensor& student_logits, const ad::Tensor& teacher_logits,
                     std::span<const std::size_t> targets, const LossWeights& w) {
  check_same_shape(student_logits, teacher_logits, "klkd_loss");
  const ad::Tensor hard = cross_entropy(student_logits, targets);
  if (w.kd_alpha == 0.0) return distill({}, hard, w);
  const std::vector<double> rows = target_weights(targets);
  return distill(kl_divergence(student_logits, teacher_logits.detach(), w.tau, rows), hard, w);
}

}  // namespace dcl::loss
