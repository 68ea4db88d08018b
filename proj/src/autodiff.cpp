#include "dcl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dcl/specialfn.hpp"

namespace dcl::ad {

namespace {

thread_local Tape g_tape;
thread_local bool g_grad_enabled = true;

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

void ensure_grad(Node& n) {
  if (n.grad.empty()) n.grad.assign(n.data.size(), 0.0);
}

bool track(std::initializer_list<const Tensor*> inputs) {
  if (!g_grad_enabled) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

Tensor result(Shape shape, std::vector<double> values, const char* op, bool tracked) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericalError(std::string(op) + ": non-finite output");
  }
  return make_tensor(std::move(shape), std::move(values), tracked);
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void require_2d(const Tensor& t, const char* op) {
  require(t.shape().size() == 2, std::string(op) + ": expected a 2-D tensor, got shape " +
                                     shape_str(t.shape()));
}

enum class Bcast { same, scalar_a, scalar_b, row_b };

Bcast broadcast_kind(const Tensor& a, const Tensor& b, bool allow_row, const char* op) {
  if (a.shape() == b.shape()) return Bcast::same;
  if (b.size() == 1) return Bcast::scalar_b;
  if (a.size() == 1) return Bcast::scalar_a;
  if (allow_row && b.shape().size() == 2 && b.shape()[0] == 1 && b.cols() == a.cols() &&
      a.shape().size() >= 1) {
    return Bcast::row_b;
  }
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                              " vs " + shape_str(b.shape()));
}

struct Index {
  Bcast kind;
  std::size_t cols;
  std::size_t a(std::size_t i) const { return kind == Bcast::scalar_a ? 0 : i; }
  std::size_t b(std::size_t i) const {
    switch (kind) {
      case Bcast::scalar_b: return 0;
      case Bcast::row_b: return i % cols;
      default: return i;
    }
  }
};

template <typename Fwd, typename DA, typename DB>
Tensor binary(const Tensor& a, const Tensor& b, bool allow_row, const char* op, Fwd fwd,
              DA da, DB db) {
  const Bcast kind = broadcast_kind(a, b, allow_row, op);
  const Index idx{kind, a.cols()};
  const Shape out_shape = kind == Bcast::scalar_a ? b.shape() : a.shape();
  const std::size_t n = shape_size(out_shape);
  std::vector<double> out(n);
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(ad[idx.a(i)], bd[idx.b(i)]);
  const bool tracked = track({&a, &b});
  Tensor res = result(out_shape, std::move(out), op, tracked);
  if (tracked) {
    current_tape().record([on = res.node(), an = a.node(), bn = b.node(), idx, n, da, db] {
      if (on->grad.empty()) return;
      if (an->requires_grad) ensure_grad(*an);
      if (bn->requires_grad) ensure_grad(*bn);
      for (std::size_t i = 0; i < n; ++i) {
        const double g = on->grad[i];
        const double x = an->data[idx.a(i)];
        const double y = bn->data[idx.b(i)];
        if (an->requires_grad) an->grad[idx.a(i)] += g * da(x, y, on->data[i]);
        if (bn->requires_grad) bn->grad[idx.b(i)] += g * db(x, y, on->data[i]);
      }
    });
  }
  return res;
}

// f(x) with local derivative df(x, f(x)).
template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& a, const char* op, Fwd fwd, Deriv deriv) {
  const auto ad = a.data();
  std::vector<double> out(ad.size());
  for (std::size_t i = 0; i < ad.size(); ++i) out[i] = fwd(ad[i]);
  const bool tracked = track({&a});
  Tensor res = result(a.shape(), std::move(out), op, tracked);
  if (tracked) {
    current_tape().record([on = res.node(), an = a.node(), deriv] {
      if (on->grad.empty()) return;
      ensure_grad(*an);
      for (std::size_t i = 0; i < on->data.size(); ++i) {
        an->grad[i] += on->grad[i] * deriv(an->data[i], on->data[i]);
      }
    });
  }
  return res;
}

void require_positive(const Tensor& a, const char* op) {
  for (double v : a.data()) {
    if (!(v > 0.0)) {
      throw std::domain_error(std::string(op) + ": argument must be > 0, got " +
                              std::to_string(v));
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor make_tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw std::invalid_argument("tensor: shape " + shape_str(shape) + " needs " +
                                std::to_string(shape_size(shape)) + " values, got " +
                                std::to_string(values.size()));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return make_tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return make_tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  return make_tensor(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return make_tensor({}, {value}, requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                      bool requires_grad) {
  return make_tensor({rows, cols}, std::move(values), requires_grad);
}

std::size_t Tensor::rows() const {
  const auto& s = node_->shape;
  if (s.empty()) return 1;
  return std::accumulate(s.begin(), s.end() - 1, std::size_t{1}, std::multiplies<>());
}

std::size_t Tensor::cols() const {
  const auto& s = node_->shape;
  return s.empty() ? 1 : s.back();
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("item: tensor has " + std::to_string(size()) +
                                               " elements");
  return node_->data[0];
}

void Tensor::set_requires_grad(bool on) { node_->requires_grad = on; }

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(node_->data.size(), 0.0);
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  ensure_grad(*node_);
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return make_tensor(node_->shape, node_->data, false); }

// ---------------------------------------------------------------------------
// Tape

void Tape::record(std::function<void()> backward_fn) { entries_.push_back(std::move(backward_fn)); }

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got " +
                                std::to_string(loss.size()) + " elements");
  }
  if (!loss.requires_grad()) {
    throw std::invalid_argument("backward: loss is not on the tape");
  }
  auto& node = *loss.node();
  ensure_grad(node);
  node.grad[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  entries_.clear();
}

Tape& current_tape() { return g_tape; }
bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void backward(const Tensor& loss) { current_tape().backward(loss); }

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, true, "add", [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, true, "sub", [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, false, "mul", [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; }, [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, false, "div", [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double out) { return -out / y; });
}

Tensor scale(const Tensor& a, double k) {
  return unary(a, "scale", [k](double x) { return k * x; }, [k](double, double) { return k; });
}

Tensor add_scalar(const Tensor& a, double k) {
  return unary(a, "add_scalar", [k](double x) { return x + k; },
               [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor exp(const Tensor& a) {
  return unary(a, "exp", [](double x) { return std::exp(x); },
               [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  require_positive(a, "log");
  return unary(a, "log", [](double x) { return std::log(x); },
               [](double x, double) { return 1.0 / x; });
}

Tensor lgamma(const Tensor& a) {
  require_positive(a, "lgamma");
  return unary(a, "lgamma", [](double x) { return special::lgamma(x); },
               [](double x, double) { return special::digamma(x); });
}

Tensor digamma(const Tensor& a) {
  require_positive(a, "digamma");
  return unary(a, "digamma", [](double x) { return special::digamma(x); },
               [](double x, double) { return special::trigamma(x); });
}

Tensor tanh(const Tensor& a) {
  return unary(a, "tanh", [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return unary(a, "relu", [](double x) { return x > 0 ? x : 0.0; },
               [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor softplus(const Tensor& a) {
  return unary(
      a, "softplus",
      [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
      [](double x, double) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary(a, "clamp", [lo, hi](double x) { return std::clamp(x, lo, hi); },
               [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor custom_unary(const Tensor& a, std::vector<double> values, std::vector<double> local_grad,
                    const char* name) {
  require(values.size() == a.size() && local_grad.size() == a.size(),
          std::string(name) + ": value/grad length mismatch");
  const bool tracked = track({&a});
  Tensor res = result(a.shape(), std::move(values), name, tracked);
  if (tracked) {
    current_tape().record([on = res.node(), an = a.node(), lg = std::move(local_grad)] {
      if (on->grad.empty()) return;
      ensure_grad(*an);
      for (std::size_t i = 0; i < lg.size(); ++i) an->grad[i] += on->grad[i] * lg[i];
    });
  }
  return res;
}

// ---------------------------------------------------------------------------
// Linear algebra and reductions

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  require(b.shape()[0] == k, "matmul: inner dimensions differ " + shape_str(a.shape()) + " x " +
                                 shape_str(b.shape()));
  std::vector<double> out(m * n, 0.0);
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  const bool tracked = track({&a, &b});
  Tensor res = result({m, n}, std::move(out), "matmul", tracked);
  if (tracked) {
    current_tape().record([on = res.node(), an = a.node(), bn = b.node(), m, k, n] {
      if (on->grad.empty()) return;
      const double* G = on->grad.data();
      if (an->requires_grad) {
        ensure_grad(*an);
        const double* B = bn->data.data();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double* brow = B + p * n;
            const double* grow = G + i * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            an->grad[i * k + p] += acc;
          }
        }
      }
      if (bn->requires_grad) {
        ensure_grad(*bn);
        const double* A = an->data.data();
        double* GB = bn->grad.data();
        for (std::size_t i = 0; i < m; ++i) {
          const double* grow = G + i * n;
          for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            if (av == 0.0) continue;
            double* gb = GB + p * n;
            for (std::size_t j = 0; j < n; ++j) gb[j] += av * grow[j];
          }
        }
      }
    });
  }
  return res;
}

Tensor softmax(const Tensor& a) {
  const std::size_t R = a.rows(), C = a.cols();
  std::vector<double> out(a.size());
  const auto x = a.data();
  for (std::size_t r = 0; r < R; ++r) {
    const double* xr = x.data() + r * C;
    double* yr = out.data() + r * C;
    const double mx = *std::max_element(xr, xr + C);
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) z += (yr[c] = std::exp(xr[c] - mx));
    for (std::size_t c = 0; c < C; ++c) yr[c] /= z;
  }
  const bool tracked = track({&a});
  Tensor res = result(a.shape(), std::move(out), "softmax", tracked);
  if (tracked) {
    current_tape().record([on = res.node(), an = a.node(), R, C] {
      if (on->grad.empty()) return;
      ensure_grad(*an);
      for (std::size_t r = 0; r < R; ++r) {
        const double* y = on->data.data() + r * C;
        const double* g = on->grad.data() + r * C;
        double dot = 0.0;
        for (std::size_t c = 0; c < C; ++c) dot += g[c] * y[c];
        for (std::size_t c = 0; c < C; ++c) an->grad[r * C + c] += y[c] * (g[c] - dot);
      }
    });
  }
  return res;
}

Tensor log_softmax(const Tensor& a) {
  const std::size_t R = a.rows(), C = a.cols();
  std::vector<double> out(a.size());
  const auto x = a.data();
  for (std::size_t r = 0; r < R; ++r) {
    const double* xr = x.data() + r * C;
    double* yr = out.data() + r * C;
    const double mx = *std::max_element(xr, xr + C);
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) z += std::exp(xr[c] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < C; ++c) yr[c] = xr[c] - lse;
  }
  const bool tracked = track({&a});
  Tensor res = result(a.shape(), std::move(out), "log_softmax", tracked);
  if (tracked) {
    current_tape().record([on = res.node(), an = a.node(), R, C] {
      if (on->grad.empty()) return;
      ensure_grad(*an);
      for (std::size_t r = 0; r < R; ++r) {
        const double* y = on->data.data() + r * C;
        const double* g = on->grad.data() + r * C;
        double gsum = 0.0;
        for (std::size_t c = 0; c < C; ++c) gsum += g[c];
        for (std::size_t c = 0; c < C; ++c) an->grad[r * C + c] += g[c] - std::exp(y[c]) * gsum;
      }
    });
  }
  return res;
}

Tensor sum(const Tensor& a) {
  const auto d = a.data();
  const double s = std::accumulate(d.begin(), d.end(), 0.0);
  const bool tracked = track({&a});
  Tensor res = result({}, {s}, "sum", tracked);
  if (tracked) {
    current_tape().record([on = res.node(), an = a.node()] {
      if (on->grad.empty()) return;
      ensure_grad(*an);
      for (double& g : an->grad) g += on->grad[0];
    });
  }
  return res;
}

Tensor mean(const Tensor& a) {
  require(a.size() > 0, "mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor row_sum(const Tensor& a) {
  const std::size_t R = a.rows(), C = a.cols();
  std::vector<double> out(R, 0.0);
  const auto d = a.data();
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) out[r] += d[r * C + c];
  }
  const bool tracked = track({&a});
  Tensor res = result({R, 1}, std::move(out), "row_sum", tracked);
  if (tracked) {
    current_tape().record([on = res.node(), an = a.node(), R, C] {
      if (on->grad.empty()) return;
      ensure_grad(*an);
      for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < C; ++c) an->grad[r * C + c] += on->grad[r];
      }
    });
  }
  return res;
}

Tensor expand_cols(const Tensor& column, std::size_t n) {
  require(column.cols() == 1, "expand_cols: expected a column vector, got " +
                                  shape_str(column.shape()));
  const std::size_t R = column.rows();
  std::vector<double> out(R * n);
  for (std::size_t r = 0; r < R; ++r) {
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(r * n), n, column.data()[r]);
  }
  const bool tracked = track({&column});
  Tensor res = result({R, n}, std::move(out), "expand_cols", tracked);
  if (tracked) {
    current_tape().record([on = res.node(), cn = column.node(), R, n] {
      if (on->grad.empty()) return;
      ensure_grad(*cn);
      for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < n; ++c) cn->grad[r] += on->grad[r * n + c];
      }
    });
  }
  return res;
}

// ---------------------------------------------------------------------------
// Structural

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  require(!parts.empty(), "concat: no inputs");
  require(axis == 0 || axis == 1, "concat: axis must be 0 or 1");
  for (const auto& p : parts) require_2d(p, "concat");
  std::vector<double> out;
  std::size_t R = 0, C = 0;
  if (axis == 0) {
    C = parts[0].cols();
    for (const auto& p : parts) {
      require(p.cols() == C, "concat: column mismatch");
      R += p.rows();
      out.insert(out.end(), p.data().begin(), p.data().end());
    }
  } else {
    R = parts[0].rows();
    for (const auto& p : parts) {
      require(p.rows() == R, "concat: row mismatch");
      C += p.cols();
    }
    out.resize(R * C);
    std::size_t off = 0;
    for (const auto& p : parts) {
      const std::size_t pc = p.cols();
      for (std::size_t r = 0; r < R; ++r) {
        std::copy_n(p.data().data() + r * pc, pc, out.data() + r * C + off);
      }
      off += pc;
    }
  }
  bool tracked = false;
  if (g_grad_enabled) {
    for (const auto& p : parts) tracked = tracked || p.requires_grad();
  }
  Tensor res = result({R, C}, std::move(out), "concat", tracked);
  if (tracked) {
    std::vector<std::shared_ptr<Node>> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    current_tape().record([on = res.node(), nodes = std::move(nodes), axis, C] {
      if (on->grad.empty()) return;
      std::size_t off = 0;
      for (const auto& pn : nodes) {
        const std::size_t pc = pn->shape[1], pr = pn->shape[0];
        if (pn->requires_grad) {
          ensure_grad(*pn);
          for (std::size_t r = 0; r < pr; ++r) {
            for (std::size_t c = 0; c < pc; ++c) {
              const std::size_t src = axis == 0 ? (off + r) * C + c : r * C + off + c;
              pn->grad[r * pc + c] += on->grad[src];
            }
          }
        }
        off += axis == 0 ? pr : pc;
      }
    });
  }
  return res;
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  require_2d(a, "slice_rows");
  require(begin <= end && end <= a.rows(), "slice_rows: range out of bounds");
  const std::size_t C = a.cols();
  std::vector<double> out(a.data().begin() + static_cast<std::ptrdiff_t>(begin * C),
                          a.data().begin() + static_cast<std::ptrdiff_t>(end * C));
  const bool tracked = track({&a});
  Tensor res = result({end - begin, C}, std::move(out), "slice_rows", tracked);
  if (tracked) {
    current_tape().record([on = res.node(), an = a.node(), begin, C] {
      if (on->grad.empty()) return;
      ensure_grad(*an);
      for (std::size_t i = 0; i < on->grad.size(); ++i) an->grad[begin * C + i] += on->grad[i];
    });
  }
  return res;
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  require_2d(a, "slice_cols");
  require(begin <= end && end <= a.cols(), "slice_cols: range out of bounds");
  const std::size_t R = a.rows(), C = a.cols(), W = end - begin;
  std::vector<double> out(R * W);
  for (std::size_t r = 0; r < R; ++r) {
    std::copy_n(a.data().data() + r * C + begin, W, out.data() + r * W);
  }
  const bool tracked = track({&a});
  Tensor res = result({R, W}, std::move(out), "slice_cols", tracked);
  if (tracked) {
    current_tape().record([on = res.node(), an = a.node(), R, C, W, begin] {
      if (on->grad.empty()) return;
      ensure_grad(*an);
      for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < W; ++c) an->grad[r * C + begin + c] += on->grad[r * W + c];
      }
    });
  }
  return res;
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices) {
  require_2d(table, "gather_rows");
  const std::size_t C = table.cols(), V = table.rows();
  std::vector<double> out(indices.size() * C);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= V) {
      throw std::out_of_range("gather_rows: index " + std::to_string(indices[i]) +
                              " out of range for " + std::to_string(V) + " rows");
    }
    std::copy_n(table.data().data() + indices[i] * C, C, out.data() + i * C);
  }
  const bool tracked = track({&table});
  Tensor res = result({indices.size(), C}, std::move(out), "gather_rows", tracked);
  if (tracked) {
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    current_tape().record([on = res.node(), tn = table.node(), idx = std::move(idx), C] {
      if (on->grad.empty()) return;
      ensure_grad(*tn);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t c = 0; c < C; ++c) tn->grad[idx[i] * C + c] += on->grad[i * C + c];
      }
    });
  }
  return res;
}

Tensor pick(const Tensor& a, std::span<const std::size_t> indices) {
  const std::size_t R = a.rows(), C = a.cols();
  require(indices.size() == R, "pick: need one index per row");
  std::vector<double> out(R);
  for (std::size_t r = 0; r < R; ++r) {
    if (indices[r] >= C) {
      throw std::out_of_range("pick: index " + std::to_string(indices[r]) +
                              " out of range for " + std::to_string(C) + " columns");
    }
    out[r] = a.data()[r * C + indices[r]];
  }
  const bool tracked = track({&a});
  Tensor res = result({R, 1}, std::move(out), "pick", tracked);
  if (tracked) {
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    current_tape().record([on = res.node(), an = a.node(), idx = std::move(idx), C] {
      if (on->grad.empty()) return;
      ensure_grad(*an);
      for (std::size_t r = 0; r < idx.size(); ++r) an->grad[r * C + idx[r]] += on->grad[r];
    });
  }
  return res;
}

}  // namespace dcl::ad
