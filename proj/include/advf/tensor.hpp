// SPDX-License-Identifier: Apache-2.0
//
// Dense tensors with define-by-run reverse-mode differentiation.
//
// Every op that consumes at least one tensor with requires_grad (while grad
// mode is on) records its inputs and a backward rule on the output node and
// stamps it with a monotonically increasing tape index. backward() walks the
// reachable nodes in decreasing tape index, which is a reverse topological
// order because inputs always exist before their consumers.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace advf {

using Shape = std::vector<std::size_t>;
using TokenId = std::int32_t;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty means "no gradient yet"
  bool requires_grad = false;
  std::uint64_t tape_index = 0;  // 0 for leaves
  std::vector<std::shared_ptr<TensorNode>> inputs;
  std::function<void(TensorNode&)> backward;

  /// Gradient buffer of this node, zero-allocated on first use.
  std::vector<T>& grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

template <typename T>
class Tensor {
 public:
  using Node = TensorNode<T>;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values,
                     bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  /// Output of a recorded op. Records `inputs` and `backward` only when grad
  /// mode is on and some input requires a gradient.
  static Tensor make_op(Shape shape, std::vector<T> values,
                        const std::vector<Tensor>& inputs,
                        std::function<void(Node&)> backward);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->value.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }

  std::span<const T> values() const { return node_->value; }
  std::span<T> mutable_values() { return node_->value; }
  T item() const;
  T operator[](std::size_t i) const { return node_->value[i]; }

  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  std::span<const T> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.assign(node_->value.size(), T(0)); }
  void clear_grad() { node_->grad.clear(); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool is_leaf() const { return !node_->backward; }

  /// Deep copy of the values into a fresh leaf.
  Tensor clone() const;
  void assign(std::span<const T> values);

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

// --- ops --------------------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
/// a[m,k] * b[n,k]^T
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);

/// Exact shapes, or either side holding a single element.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
/// x[m,n] + bias[n] on every row.
template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias);
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);
template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> sum(const Tensor<T>& x);

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x);
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain,
                     const Tensor<T>& bias, T eps);

/// Mean token negative log-likelihood over positions whose target is not
/// `ignore_id`. Zero (with zero gradient) when every position is ignored.
template <typename T>
Tensor<T> cross_entropy_logits(const Tensor<T>& logits,
                               std::span<const TokenId> targets,
                               TokenId ignore_id);

/// Rows of `table` selected by `ids`.
template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const TokenId> ids);

/// Scaled dot-product attention over `n_heads` column groups.
/// q: [T,h], k and v: [S,h]. With `causal`, query t only sees keys <= t.
template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& q, const Tensor<T>& k,
                               const Tensor<T>& v, std::size_t n_heads,
                               bool causal);

/// out[t, n] = <q[t,:], keys[n][t,:]>
template <typename T>
Tensor<T> row_dots(const Tensor<T>& q, const std::vector<Tensor<T>>& keys);
/// out[t, :] = sum_n weights[t, n] * values[n][t, :]
template <typename T>
Tensor<T> mix_rows(const Tensor<T>& weights,
                   const std::vector<Tensor<T>>& values);

// --- differentiation ----------------------------------------------------------

/// Accumulates d(loss)/d(leaf) into every reachable leaf with requires_grad.
/// Intermediate gradients are reset on each call, leaf gradients add up.
template <typename T>
void backward(const Tensor<T>& loss);

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  std::size_t samples = 0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares analytic gradients of `loss_fn` w.r.t. `params` with central
/// differences on `n_samples` randomly chosen coordinates. Relative error is
/// |a - n| / max(|a|, |n|, floor); the floor bounds the error of gradients
/// below the finite-difference noise level by an absolute tolerance.
FiniteDiffReport finite_diff_check(
    const std::function<Tensor<double>()>& loss_fn,
    const std::vector<Tensor<double>>& params, std::size_t n_samples,
    double h = 1e-5, std::uint64_t seed = 0, double floor = 1e-12);

/// Order-sensitive FNV-1a over the raw bytes of a buffer.
template <typename T>
std::uint64_t checksum(std::span<const T> values);

}  // namespace advf
