#ifndef DCL_METRICS_HPP
#define DCL_METRICS_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dcl::metrics {

/// R(i, j): metric on task j after training through task i. Entries that
/// were never evaluated stay empty.
class ResultMatrix {
 public:
  explicit ResultMatrix(std::size_t tasks = 0);

  std::size_t tasks() const { return n_; }
  void set(std::size_t i, std::size_t j, double value);
  std::optional<double> get(std::size_t i, std::size_t j) const;
  double at(std::size_t i, std::size_t j) const;
  bool row_complete(std::size_t i) const;
  std::vector<double> row(std::size_t i) const;

 private:
  std::size_t n_;
  std::vector<std::optional<double>> cells_;
};

struct CurvePoint {
  double step;
  double value;
};

/// P(t): mean metric over the tasks learnt so far, sampled at increasing steps.
using LearningCurve = std::vector<CurvePoint>;

/// Exact string match rate.
double accuracy(const std::vector<std::string>& preds, const std::vector<std::string>& golds);

/// One set of slot:value pairs per example.
using PairSet = std::vector<std::string>;

/// Splits a space-joined target into well-formed "slot:value" pairs.
/// Tokens without exactly one interior ':' are kept as-is and never match.
PairSet parse_pairs(const std::string& target);

/// Micro-averaged F1 over exact (slot, value) matches. 1.0 when both sides are
/// empty everywhere.
double span_f1(const std::vector<PairSet>& preds, const std::vector<PairSet>& golds);

/// Mean of the final row.
double avg_jga(const ResultMatrix& r);

/// Trapezoidal area under the curve divided by its step span, in [0, 1]
/// for a curve bounded in [0, 1].
double lca(const LearningCurve& curve);

/// Distinct n-grams over total n-grams across all sequences.
double dist_n(const std::vector<std::vector<std::string>>& corpus, std::size_t n);

}  // namespace dcl::metrics

#endif  // DCL_METRICS_HPP
