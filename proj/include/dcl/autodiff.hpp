#ifndef DCL_AUTODIFF_HPP
#define DCL_AUTODIFF_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcl::ad {

using Shape = std::vector<std::size_t>;

/// Raised when a forward op produces NaN or Inf.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first written
  bool requires_grad = false;
};

/// Dense row-major double tensor that participates in the gradient tape.
///
/// A Tensor is a shared handle: copies alias the same storage. Ops treat a
/// tensor of rank r as a matrix of rows() x cols(), where cols() is the last
/// extent. A rank-0 tensor is a scalar with one element.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->data.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node_->data; }
  /// Direct write access; only for initializers and optimizers (bypasses the tape).
  std::span<double> mutable_data() { return node_->data; }
  double item() const;
  double at(std::size_t i) const { return node_->data.at(i); }
  double at(std::size_t r, std::size_t c) const { return node_->data.at(r * cols() + c); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on);
  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient values; zeros when nothing has been accumulated.
  std::vector<double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  /// Value copy, detached from the tape.
  Tensor detach() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
  friend Tensor make_tensor(Shape, std::vector<double>, bool);
};

Tensor make_tensor(Shape shape, std::vector<double> values, bool requires_grad);

/// Ordered record of differentiable ops for one training context.
/// Each thread owns one tape (see current_tape()).
class Tape {
 public:
  void record(std::function<void()> backward_fn);
  /// Runs recorded closures in exact reverse recording order, then clears.
  void backward(const Tensor& loss);
  void clear() { entries_.clear(); }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<std::function<void()>> entries_;
};

Tape& current_tape();
bool grad_enabled();

/// Disables recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Backpropagates from a scalar loss through the current thread's tape.
void backward(const Tensor& loss);

// Elementwise binary ops. Shapes must match, or one side is a scalar, or
// (add/sub only) the right side is a 1 x cols row vector broadcast over rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double k);
Tensor add_scalar(const Tensor& a, double k);
Tensor neg(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor lgamma(const Tensor& a);
Tensor digamma(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor softplus(const Tensor& a);
/// Gradient passes only where lo <= a <= hi.
Tensor clamp(const Tensor& a, double lo, double hi);

Tensor softmax(const Tensor& a);
Tensor log_softmax(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Sum over the last axis: rows x 1.
Tensor row_sum(const Tensor& a);
/// Repeats a rows x 1 column into rows x n.
Tensor expand_cols(const Tensor& column, std::size_t n);

/// axis 0 stacks rows, axis 1 joins columns. 2-D inputs only.
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);

/// Row lookup: out[i] = table[indices[i]]. Also the embedding lookup.
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices);
/// out[r] = a[r, indices[r]] as a rows x 1 column.
Tensor pick(const Tensor& a, std::span<const std::size_t> indices);

/// Elementwise op with caller-supplied values and local derivatives
/// (d out_i / d a_i). Used by pathwise samplers.
Tensor custom_unary(const Tensor& a, std::vector<double> values,
                    std::vector<double> local_grad, const char* name);

}  // namespace dcl::ad

#endif  // DCL_AUTODIFF_HPP
