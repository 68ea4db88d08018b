#include "dcl/metrics.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "dcl/io.hpp"

namespace dcl::metrics {

ResultMatrix::ResultMatrix(std::size_t tasks) : n_(tasks), cells_(tasks * tasks) {}

void ResultMatrix::set(std::size_t i, std::size_t j, double value) {
  if (i >= n_ || j >= n_) throw std::out_of_range("ResultMatrix: index out of range");
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::invalid_argument("ResultMatrix: entries must lie in [0, 1]");
  }
  cells_[i * n_ + j] = value;
}

std::optional<double> ResultMatrix::get(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) throw std::out_of_range("ResultMatrix: index out of range");
  return cells_[i * n_ + j];
}

double ResultMatrix::at(std::size_t i, std::size_t j) const {
  const auto v = get(i, j);
  if (!v) throw std::logic_error("ResultMatrix: entry (" + std::to_string(i) + ", " +
                                 std::to_string(j) + ") was never evaluated");
  return *v;
}

bool ResultMatrix::row_complete(std::size_t i) const {
  for (std::size_t j = 0; j < n_; ++j) {
    if (!cells_[i * n_ + j]) return false;
  }
  return true;
}

std::vector<double> ResultMatrix::row(std::size_t i) const {
  std::vector<double> out;
  for (std::size_t j = 0; j < n_; ++j) out.push_back(at(i, j));
  return out;
}

double accuracy(const std::vector<std::string>& preds, const std::vector<std::string>& golds) {
  if (preds.size() != golds.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (preds.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == golds[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

PairSet parse_pairs(const std::string& target) { return io::split_whitespace(target); }

namespace {

bool well_formed(const std::string& pair) {
  const auto colon = pair.find(':');
  return colon != std::string::npos && colon > 0 && colon + 1 < pair.size() &&
         pair.find(':', colon + 1) == std::string::npos;
}

}  // namespace

double span_f1(const std::vector<PairSet>& preds, const std::vector<PairSet>& golds) {
  if (preds.size() != golds.size()) throw std::invalid_argument("span_f1: length mismatch");
  std::size_t tp = 0, n_pred = 0, n_gold = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    std::multiset<std::string> gold(golds[i].begin(), golds[i].end());
    n_gold += golds[i].size();
    n_pred += preds[i].size();
    for (const auto& p : preds[i]) {
      if (!well_formed(p)) continue;
      auto it = gold.find(p);
      if (it != gold.end()) {
        ++tp;
        gold.erase(it);
      }
    }
  }
  if (n_pred == 0 && n_gold == 0) return 1.0;
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(n_pred);
  const double recall = static_cast<double>(tp) / static_cast<double>(n_gold);
  return 2.0 * precision * recall / (precision + recall);
}

double avg_jga(const ResultMatrix& r) {
  if (r.tasks() == 0) throw std::invalid_argument("avg_jga: empty matrix");
  const std::size_t last = r.tasks() - 1;
  if (!r.row_complete(last)) throw std::invalid_argument("avg_jga: final row is incomplete");
  double total = 0.0;
  for (double v : r.row(last)) total += v;
  return total / static_cast<double>(r.tasks());
}

double lca(const LearningCurve& curve) {
  if (curve.size() < 2) throw std::invalid_argument("lca: need at least two points");
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (!(curve[i].step > curve[i - 1].step)) {
      throw std::invalid_argument("lca: steps must be strictly increasing");
    }
  }
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += 0.5 * (curve[i].value + curve[i - 1].value) * (curve[i].step - curve[i - 1].step);
  }
  return area / (curve.back().step - curve.front().step);
}

double dist_n(const std::vector<std::vector<std::string>>& corpus, std::size_t n) {
  if (n < 1) throw std::invalid_argument("dist_n: n must be >= 1");
  std::set<std::vector<std::string>> unique;
  std::size_t total = 0;
  for (const auto& seq : corpus) {
    if (seq.size() < n) continue;
    for (std::size_t i = 0; i + n <= seq.size(); ++i) {
      unique.emplace(seq.begin() + static_cast<std::ptrdiff_t>(i),
                     seq.begin() + static_cast<std::ptrdiff_t>(i + n));
      ++total;
    }
  }
  if (total == 0) return 0.0;
  return static_cast<double>(unique.size()) / static_cast<double>(total);
}

}  // namespace dcl::metrics
