#include "dcl/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcl::dist {

namespace {

// Relative floor on Gamma variates, keeps draws strictly inside the simplex
// when a concentration is tiny.
constexpr double kRelativeFloor = 1e-14;

ad::Tensor broadcast_rows(const ad::Tensor& t, std::size_t rows) {
  if (t.rows() == rows) return t;
  if (t.rows() != 1) {
    throw std::invalid_argument("distribution batch mismatch: " + std::to_string(t.rows()) +
                                " vs " + std::to_string(rows));
  }
  std::vector<std::size_t> idx(rows, 0);
  return ad::gather_rows(t, idx);
}

GammaDraw marsaglia_tsang(double shape, Rng& rng) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    const double base = 1.0 + c * x;
    if (base <= 0.0) continue;
    const double v = base * base * base;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2 ||
        std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
      // h(x, a) = d * (1 + c x)^3 with d = a - 1/3, c = (9d)^(-1/2)
      return {d * v, v - 1.5 * c * x * base * base};
    }
  }
}

}  // namespace

ad::Tensor positive_concentration(const ad::Tensor& raw) {
  return ad::clamp(ad::add_scalar(ad::softplus(raw), kMinConcentration), kMinConcentration,
                   kMaxConcentration);
}

double raw_for_concentration(double concentration) {
  const double s = concentration - kMinConcentration;
  if (!(s > 0.0)) throw std::domain_error("raw_for_concentration: target must exceed 1e-4");
  return s > 30.0 ? s : std::log(std::expm1(s));
}

DirichletParams::DirichletParams(ad::Tensor concentration) : alpha_(std::move(concentration)) {
  if (!alpha_.defined()) throw std::invalid_argument("DirichletParams: undefined tensor");
  if (alpha_.cols() < 2) {
    throw std::invalid_argument("DirichletParams: need K >= 2, got " +
                                std::to_string(alpha_.cols()));
  }
  for (double a : alpha_.data()) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw std::domain_error("DirichletParams: concentration must be finite and > 0, got " +
                              std::to_string(a));
    }
  }
}

ad::Tensor DirichletParams::mean() const {
  return ad::div(alpha_, ad::expand_cols(ad::row_sum(alpha_), dim()));
}

GaussianParams::GaussianParams(ad::Tensor mean, ad::Tensor log_variance)
    : mean_(std::move(mean)), log_variance_(std::move(log_variance)) {
  if (mean_.shape() != log_variance_.shape()) {
    throw std::invalid_argument("GaussianParams: mean and log_variance shapes differ");
  }
  for (double v : mean_.data()) {
    if (!std::isfinite(v)) throw std::domain_error("GaussianParams: non-finite mean");
  }
  for (double v : log_variance_.data()) {
    if (!std::isfinite(v)) throw std::domain_error("GaussianParams: non-finite log_variance");
  }
}

ad::Tensor dirichlet_kl_rows(const DirichletParams& q, const DirichletParams& p) {
  if (q.dim() != p.dim()) {
    throw std::invalid_argument("dirichlet_kl: dimension mismatch " + std::to_string(q.dim()) +
                                " vs " + std::to_string(p.dim()));
  }
  const std::size_t K = q.dim();
  const ad::Tensor& alpha = q.concentration();
  const ad::Tensor beta = broadcast_rows(p.concentration(), q.batch());
  const ad::Tensor alpha0 = ad::row_sum(alpha);
  const ad::Tensor beta0 = ad::row_sum(beta);
  // lnG(a0) - sum lnG(a_k) - lnG(b0) + sum lnG(b_k)
  ad::Tensor kl = ad::sub(ad::lgamma(alpha0), ad::row_sum(ad::lgamma(alpha)));
  kl = ad::sub(kl, ad::lgamma(beta0));
  kl = ad::add(kl, ad::row_sum(ad::lgamma(beta)));
  // + sum (a_k - b_k)(psi(a_k) - psi(a0))
  const ad::Tensor dpsi =
      ad::sub(ad::digamma(alpha), ad::expand_cols(ad::digamma(alpha0), K));
  return ad::add(kl, ad::row_sum(ad::mul(ad::sub(alpha, beta), dpsi)));
}

ad::Tensor dirichlet_kl(const DirichletParams& q, const DirichletParams& p) {
  return ad::mean(dirichlet_kl_rows(q, p));
}

ad::Tensor gaussian_kl_rows(const GaussianParams& q, const GaussianParams& p) {
  if (q.dim() != p.dim()) {
    throw std::invalid_argument("gaussian_kl: dimension mismatch " + std::to_string(q.dim()) +
                                " vs " + std::to_string(p.dim()));
  }
  const std::size_t rows = q.batch();
  const ad::Tensor mu_p = broadcast_rows(p.mean(), rows);
  const ad::Tensor lv_p = broadcast_rows(p.log_variance(), rows);
  const ad::Tensor& mu_q = q.mean();
  const ad::Tensor& lv_q = q.log_variance();
  // 0.5 * (lv_p - lv_q + (exp(lv_q) + (mu_q - mu_p)^2) / exp(lv_p) - 1)
  const ad::Tensor diff = ad::sub(mu_q, mu_p);
  const ad::Tensor ratio = ad::div(ad::add(ad::exp(lv_q), ad::mul(diff, diff)), ad::exp(lv_p));
  const ad::Tensor per_dim = ad::scale(ad::add_scalar(ad::add(ad::sub(lv_p, lv_q), ratio), -1.0), 0.5);
  return ad::row_sum(per_dim);
}

ad::Tensor gaussian_kl(const GaussianParams& q, const GaussianParams& p) {
  return ad::mean(gaussian_kl_rows(q, p));
}

GammaDraw sample_gamma(double shape, Rng& rng) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw std::domain_error("sample_gamma: shape must be finite and > 0");
  }
  if (shape >= 1.0) return marsaglia_tsang(shape, rng);
  const GammaDraw boosted = marsaglia_tsang(shape + 1.0, rng);
  const double u = rng.uniform();
  const double scale = std::pow(u, 1.0 / shape);
  const double value = boosted.value * scale;
  const double dscale = scale * (-std::log(u) / (shape * shape));
  return {value, boosted.dshape * scale + boosted.value * dscale};
}

ad::Tensor dirichlet_rsample(const DirichletParams& params, Rng& rng) {
  const ad::Tensor& alpha = params.concentration();
  const std::size_t R = params.batch(), K = params.dim();
  std::vector<double> values(R * K), grads(R * K);
  for (std::size_t r = 0; r < R; ++r) {
    double top = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const GammaDraw g = sample_gamma(alpha.data()[r * K + k], rng);
      values[r * K + k] = g.value;
      grads[r * K + k] = g.dshape;
      top = std::max(top, g.value);
    }
    const double floor = top * kRelativeFloor;
    for (std::size_t k = 0; k < K; ++k) {
      if (values[r * K + k] < floor) {
        values[r * K + k] = floor;
        grads[r * K + k] = 0.0;
      }
    }
  }
  const ad::Tensor gammas = ad::custom_unary(alpha, std::move(values), std::move(grads),
                                             "gamma_rsample");
  return ad::div(gammas, ad::expand_cols(ad::row_sum(gammas), K));
}

ad::Tensor gaussian_rsample(const GaussianParams& params, Rng& rng) {
  const ad::Tensor& mu = params.mean();
  std::vector<double> eps(mu.size());
  for (double& e : eps) e = rng.normal();
  const ad::Tensor noise = ad::Tensor::from(mu.shape(), std::move(eps));
  const ad::Tensor lv = ad::clamp(params.log_variance(), kMinLogVariance, kMaxLogVariance);
  const ad::Tensor stddev = ad::exp(ad::scale(lv, 0.5));
  return ad::add(mu, ad::mul(stddev, noise));
}

}  // namespace dcl::dist
