#include "dcl/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dcl/autodiff.hpp"
#include "dcl/distributions.hpp"
#include "dcl/losses.hpp"
#include "dcl/metrics.hpp"
#include "dcl/rng.hpp"
#include "dcl/specialfn.hpp"

namespace dcl::selftest {

namespace {

struct Reference {
  double x, lgamma, digamma;
};

// 25-digit values, rounded to double.
constexpr Reference kReferences[] = {
    {1e-3, 6.907178885383853682512345, -1000.575571931810300471473},
    {0.5, 0.5723649429247000870717137, -1.963510026021423479440976},
    {1.0, 0.0, -0.5772156649015328606065121},
    {1.5, -0.1207822376352452223455184, 0.03648997397857652055902367},
    {2.0, 0.0, 0.4227843350984671393934879},
    {3.7, 1.428072326665387921872381, 1.167153539361511385873864},
    {10.0, 12.80182748008146961120772, 2.251752589066721107647456},
    {123.456, 469.6055471299294687300692, 4.811829323828985387322188},
    {1e4, 82099.71749644237727264896, 9.210290371142849403571966},
    {1e6, 12815504.56914761165997697, 13.81551005796419077077462},
};

CheckResult make(std::string name, double error, double tolerance) {
  return {std::move(name), error, tolerance, error <= tolerance};
}

double closed_form_kl(const Functions& f, const std::vector<double>& a, const std::vector<double>& b) {
  double a0 = 0.0, b0 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    a0 += a[k];
    b0 += b[k];
  }
  double kl = f.lgamma(a0) - f.lgamma(b0);
  for (std::size_t k = 0; k < a.size(); ++k) {
    kl += f.lgamma(b[k]) - f.lgamma(a[k]) + (a[k] - b[k]) * (f.digamma(a[k]) - f.digamma(a0));
  }
  return kl;
}

double log_density(const Functions& f, const std::vector<double>& a, const std::vector<double>& z) {
  double a0 = 0.0, out = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    a0 += a[k];
    out += (a[k] - 1.0) * std::log(z[k]) - f.lgamma(a[k]);
  }
  return out + f.lgamma(a0);
}

}  // namespace

Functions Functions::builtin() {
  return {[](double x) { return special::lgamma(x); },
          [](double x) { return special::digamma(x); }};
}

std::vector<CheckResult> check_special_functions(const Functions& f) {
  std::vector<CheckResult> out;
  double lg_err = 0.0, dg_err = 0.0;
  for (const auto& r : kReferences) {
    lg_err = std::max(lg_err, std::abs(f.lgamma(r.x) - r.lgamma) / std::max(1.0, std::abs(r.lgamma)));
    dg_err = std::max(dg_err, std::abs(f.digamma(r.x) - r.digamma));
  }
  out.push_back(make("lgamma reference values (scaled abs error)", lg_err, 1e-12));
  out.push_back(make("digamma reference values (abs error)", dg_err, 1e-10));

  double lrec = 0.0, drec = 0.0, fd = 0.0;
  bool monotone = true;
  double prev = -INFINITY;
  for (int i = 0; i <= 200; ++i) {
    const double x = 0.01 * std::pow(1e4, i / 200.0);  // 0.01 .. 100
    lrec = std::max(lrec, std::abs(f.lgamma(x + 1.0) - f.lgamma(x) - std::log(x)));
    drec = std::max(drec, std::abs(f.digamma(x + 1.0) - f.digamma(x) - 1.0 / x));
    const double d = f.digamma(x);
    monotone = monotone && d > prev;
    prev = d;
    if (x >= 0.1) {
      const double h = 1e-5;
      fd = std::max(fd, std::abs((f.lgamma(x + h) - f.lgamma(x - h)) / (2.0 * h) - d));
    }
  }
  out.push_back(make("lgamma recurrence", lrec, 1e-10));
  out.push_back(make("digamma recurrence", drec, 1e-10));
  out.push_back(make("digamma vs lgamma central difference", fd, 1e-6));
  out.push_back(make("digamma monotone on grid", monotone ? 0.0 : 1.0, 0.0));
  return out;
}

std::vector<CheckResult> check_dirichlet_kl(const Functions& f, std::size_t samples) {
  std::vector<CheckResult> out;
  Rng rng(20240607);
  const std::vector<std::pair<std::vector<double>, std::vector<double>>> cases = {
      {{2.0, 3.0}, {1.0, 1.0}},
      {{0.7, 1.4, 2.5}, {1.2, 0.9, 3.0}},
      {{4.0, 0.5, 1.0, 2.0, 1.5, 0.8, 3.0, 2.2}, {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0}},
  };
  for (const auto& [a, b] : cases) {
    const double exact = closed_form_kl(f, a, b);
    double sum = 0.0, sum_sq = 0.0;
    std::vector<double> z(a.size());
    for (std::size_t s = 0; s < samples; ++s) {
      double total = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) total += (z[k] = dist::sample_gamma(a[k], rng).value);
      for (double& v : z) v = std::max(v / total, 1e-300);
      const double w = log_density(f, a, z) - log_density(f, b, z);
      sum += w;
      sum_sq += w * w;
    }
    const double n = static_cast<double>(samples);
    const double mean = sum / n;
    const double se = std::sqrt(std::max(sum_sq / n - mean * mean, 0.0) / n);
    out.push_back(make("dirichlet KL vs Monte Carlo, K=" + std::to_string(a.size()) +
                           " (error in standard errors)",
                       std::abs(exact - mean) / se, 4.0));
  }
  return out;
}

std::vector<CheckResult> check_js_divergence(std::size_t pairs) {
  Rng rng(7);
  double sym = 0.0, range = 0.0, self = 0.0;
  const std::size_t V = 6;
  std::vector<double> p(pairs * V), q(pairs * V);
  for (auto& v : p) v = 3.0 * rng.normal();
  for (auto& v : q) v = 3.0 * rng.normal();
  ad::NoGradGuard guard;
  const ad::Tensor tp = ad::Tensor::matrix(pairs, V, p);
  const ad::Tensor tq = ad::Tensor::matrix(pairs, V, q);
  for (std::size_t i = 0; i < pairs; ++i) {
    const ad::Tensor a = ad::slice_rows(tp, i, i + 1);
    const ad::Tensor b = ad::slice_rows(tq, i, i + 1);
    const double ab = loss::js_divergence(a, b).item();
    const double ba = loss::js_divergence(b, a).item();
    sym = std::max(sym, std::abs(ab - ba));
    range = std::max({range, -ab, ab - std::log(2.0)});
    self = std::max(self, loss::js_divergence(a, a).item());
  }
  return {make("JS symmetry", sym, 1e-12),
          make("JS range violation beyond [0, ln 2]", std::max(range, 0.0), 1e-9),
          make("JS of identical distributions", self, 1e-12)};
}

std::vector<CheckResult> check_metrics() {
  std::vector<CheckResult> out;
  metrics::ResultMatrix r(2);
  r.set(0, 0, 0.9);
  r.set(1, 0, 0.9);
  r.set(1, 1, 0.8);
  out.push_back(make("avg_jga final row [0.9, 0.8]", std::abs(metrics::avg_jga(r) - 0.85), 1e-12));
  out.push_back(make("lca constant 0.8",
                     std::abs(metrics::lca({{0, 0.8}, {5, 0.8}, {10, 0.8}}) - 0.8), 1e-12));
  out.push_back(make("lca ramp", std::abs(metrics::lca({{0, 0.0}, {10, 1.0}}) - 0.5), 1e-12));
  out.push_back(make("lca tent", std::abs(metrics::lca({{0, 0.0}, {1, 1.0}, {2, 0.0}}) - 0.5), 1e-12));
  out.push_back(make("dist-1 [a b, a c]",
                     std::abs(metrics::dist_n({{"a", "b"}, {"a", "c"}}, 1) - 0.75), 1e-12));
  out.push_back(make("dist-2 [a b, a b]",
                     std::abs(metrics::dist_n({{"a", "b"}, {"a", "b"}}, 2) - 0.5), 1e-12));
  out.push_back(make("span_f1 {a:x} vs {a:x, b:y}",
                     std::abs(metrics::span_f1({{"a:x"}}, {{"a:x", "b:y"}}) - 2.0 / 3.0), 1e-12));
  out.push_back(make("span_f1 empty vs empty", std::abs(metrics::span_f1({{}}, {{}}) - 1.0), 1e-12));
  out.push_back(make("accuracy 3 of 4",
                     std::abs(metrics::accuracy({"a", "b", "c", "d"}, {"a", "b", "c", "x"}) - 0.75),
                     1e-12));
  return out;
}

std::vector<CheckResult> run_all(const Functions& fns) {
  std::vector<CheckResult> out = check_special_functions(fns);
  for (auto&& part : {check_dirichlet_kl(fns, 20000), check_js_divergence(2000), check_metrics()}) {
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
}

std::string format_report(const std::vector<CheckResult>& results) {
  std::size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  std::ostringstream out;
  std::size_t failed = 0;
  for (const auto& r : results) {
    char line[512];
    std::snprintf(line, sizeof line, "%s  %-*s  error %.3e  tol %.1e\n", r.passed ? "PASS" : "FAIL",
                  static_cast<int>(width), r.name.c_str(), r.error, r.tolerance);
    out << line;
    failed += !r.passed;
  }
  out << results.size() - failed << "/" << results.size() << " checks passed\n";
  return out.str();
}

}  // namespace dcl::selftest
