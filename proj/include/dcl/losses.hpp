#ifndef DCL_LOSSES_HPP
#define DCL_LOSSES_HPP

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dcl/autodiff.hpp"

namespace dcl::loss {

/// Target id marking a position that does not contribute to a loss.
inline constexpr std::size_t kIgnore = std::numeric_limits<std::size_t>::max();

/// Probability floor inside every log of the JS and KL soft terms.
inline constexpr double kProbFloor = 1e-8;

struct LossWeights {
  double lambda = 1.0;    // KL annealing weight, [0, 1]
  double kd_alpha = 0.5;  // soft/hard target mix, [0, 1]
  double tau = 2.0;       // distillation temperature, > 0

  void validate() const;
};

enum class AnnealMode { linear, cyclical };

struct AnnealSchedule {
  AnnealMode mode = AnnealMode::linear;
  long warmup_steps = 1;
  long cycle_steps = 1;  // cyclical only
  double max_lambda = 1.0;

  void validate() const;
};

double lambda_at(const AnnealSchedule& schedule, long step);

/// recon_nll + lambda * kl
ad::Tensor cvae_loss(const ad::Tensor& recon_nll, const ad::Tensor& kl, double lambda);

/// joint_nll + cond_nll: the two negative log-likelihood terms of the LM
/// objective, each already a per-token mean.
ad::Tensor lm_loss(const ad::Tensor& joint_nll, const ad::Tensor& cond_nll);

/// Mean over active rows of the token cross-entropy -log softmax(logits)[y].
/// Rows whose target is kIgnore are skipped.
ad::Tensor cross_entropy(const ad::Tensor& logits, std::span<const std::size_t> targets);

/// Jensen-Shannon divergence in nats between softmax(p/tau) and softmax(q/tau),
/// per row, averaged over rows. `row_weights` (optional, one per row)
/// selects which rows count.
ad::Tensor js_divergence(const ad::Tensor& p_logits, const ad::Tensor& q_logits,
                         double tau = 1.0, std::span<const double> row_weights = {});

/// KL(softmax(p/tau) || softmax(q/tau)) averaged over rows.
ad::Tensor kl_divergence(const ad::Tensor& p_logits, const ad::Tensor& q_logits,
                         double tau = 1.0, std::span<const double> row_weights = {});

/// kd_alpha * soft * tau^2 + (1 - kd_alpha) * hard. With kd_alpha == 0 the
/// result is exactly `hard` and `soft` may be undefined.
ad::Tensor distill(const ad::Tensor& soft, const ad::Tensor& hard, const LossWeights& w);

/// Distillation with a JS soft term. Teacher logits are detached.
ad::Tensor jskd_loss(const ad::Tensor& student_logits, const ad::Tensor& teacher_logits,
                     std::span<const std::size_t> targets, const LossWeights& w);

/// Same with KL(student || teacher) as the soft term.
ad::Tensor klkd_loss(const ad::Tensor& student_logits, const ad::Tensor& teacher_logits,
                     std::span<const std::size_t> targets, const LossWeights& w);

/// 1.0 for rows with a real target, 0.0 for kIgnore rows.
std::vector<double> target_weights(std::span<const std::size_t> targets);

}  // namespace dcl::loss

#endif  // DCL_LOSSES_HPP
