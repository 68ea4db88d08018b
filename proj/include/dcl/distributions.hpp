#ifndef DCL_DISTRIBUTIONS_HPP
#define DCL_DISTRIBUTIONS_HPP

#include <cstddef>

#include "dcl/autodiff.hpp"
#include "dcl/rng.hpp"

namespace dcl::dist {

inline constexpr double kMinConcentration = 1e-4;
inline constexpr double kMaxConcentration = 1e4;
inline constexpr double kMinLogVariance = -20.0;
inline constexpr double kMaxLogVariance = 20.0;

/// softplus(raw) + 1e-4, clamped to [1e-4, 1e4]. Maps network outputs to
/// valid concentrations.
ad::Tensor positive_concentration(const ad::Tensor& raw);

/// Inverse of the positivity map on its interior; used to initialize raw
/// parameters so that they map to a chosen concentration.
double raw_for_concentration(double concentration);

/// Concentrations of one or more Dirichlet distributions: a rows x K tensor,
/// one distribution per row. Every entry > 0, K >= 2.
class DirichletParams {
 public:
  explicit DirichletParams(ad::Tensor concentration);

  const ad::Tensor& concentration() const { return alpha_; }
  std::size_t dim() const { return alpha_.cols(); }
  std::size_t batch() const { return alpha_.rows(); }
  /// alpha_k / sum(alpha), row-wise.
  ad::Tensor mean() const;

 private:
  ad::Tensor alpha_;
};

/// Diagonal Gaussians, rows x K for both mean and log-variance.
class GaussianParams {
 public:
  GaussianParams(ad::Tensor mean, ad::Tensor log_variance);

  const ad::Tensor& mean() const { return mean_; }
  const ad::Tensor& log_variance() const { return log_variance_; }
  std::size_t dim() const { return mean_.cols(); }
  std::size_t batch() const { return mean_.rows(); }

 private:
  ad::Tensor mean_;
  ad::Tensor log_variance_;
};

/// Closed-form KL(q || p) per row, as a rows x 1 column. A single-row p is
/// broadcast against every row of q.
ad::Tensor dirichlet_kl_rows(const DirichletParams& q, const DirichletParams& p);
/// Mean over rows of dirichlet_kl_rows: a scalar.
ad::Tensor dirichlet_kl(const DirichletParams& q, const DirichletParams& p);

ad::Tensor gaussian_kl_rows(const GaussianParams& q, const GaussianParams& p);
ad::Tensor gaussian_kl(const GaussianParams& q, const GaussianParams& p);

/// One Gamma(shape, 1) draw and its pathwise derivative with respect to shape.
struct GammaDraw {
  double value;
  double dshape;
};

/// Marsaglia-Tsang squeeze sampler. Shapes below 1 are boosted to shape + 1
/// and scaled by U^(1/shape). The derivative holds the accepted proposal
/// noise fixed.
GammaDraw sample_gamma(double shape, Rng& rng);

/// Reparametrized Dirichlet draw: normalized Gamma variates. Returns a
/// rows x K tensor on the open simplex with gradients to the concentrations.
ad::Tensor dirichlet_rsample(const DirichletParams& params, Rng& rng);

/// Location-scale draw mean + exp(logvar / 2) * eps, logvar clamped to
/// [-20, 20].
ad::Tensor gaussian_rsample(const GaussianParams& params, Rng& rng);

}  // namespace dcl::dist

#endif  // DCL_DISTRIBUTIONS_HPP
