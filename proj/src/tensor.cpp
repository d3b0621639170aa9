// SPDX-License-Identifier: Apache-2.0
#include "advf/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "advf/error.hpp"
#include "advf/rng.hpp"

namespace advf {
namespace {

thread_local bool t_grad_mode = true;
std::atomic<std::uint64_t> g_tape_counter{0};

}  // namespace

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

NoGradGuard::NoGradGuard() : previous_(t_grad_mode) { t_grad_mode = false; }
NoGradGuard::~NoGradGuard() { t_grad_mode = previous_; }
bool grad_mode_enabled() { return t_grad_mode; }

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return filled(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::filled(Shape shape, T value, bool requires_grad) {
  for (auto d : shape)
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_str(shape));
  auto node = std::make_shared<Node>();
  node->value.assign(advf::numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values,
                          bool requires_grad) {
  for (auto d : shape)
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_str(shape));
  if (advf::numel(shape) != values.size())
    throw DimensionError("shape " + shape_str(shape) + " does not hold " +
                         std::to_string(values.size()) + " values");
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::make_op(Shape shape, std::vector<T> values,
                             const std::vector<Tensor>& inputs,
                             std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  const bool track =
      t_grad_mode && std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) {
        return t.requires_grad();
      });
  if (track) {
    node->requires_grad = true;
    node->tape_index = ++g_tape_counter;
    node->inputs.reserve(inputs.size());
    for (const auto& t : inputs) node->inputs.push_back(t.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1)
    throw UsageError("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  return from(shape(), node_->value, false);
}

template <typename T>
void Tensor<T>::assign(std::span<const T> values) {
  if (values.size() != numel())
    throw DimensionError("assign: expected " + std::to_string(numel()) +
                         " values for " + shape_str(shape()) + ", got " +
                         std::to_string(values.size()));
  std::copy(values.begin(), values.end(), node_->value.begin());
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw UsageError("backward() needs a scalar loss, got shape " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  if (!loss.requires_grad())
    throw UsageError("backward() on a loss that was not recorded on a tape");

  using Node = TensorNode<T>;
  std::vector<Node*> order;
  std::vector<Node*> stack{loss.node()};
  std::unordered_set<Node*> seen;
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    order.push_back(n);
    for (const auto& in : n->inputs)
      if (in->requires_grad) stack.push_back(in.get());
  }
  std::sort(order.begin(), order.end(),
            [](const Node* a, const Node* b) { return a->tape_index > b->tape_index; });

  for (Node* n : order)
    if (n->backward) n->grad.assign(n->value.size(), T(0));
  loss.node()->grad.assign(1, T(1));
  for (Node* n : order)
    if (n->backward) n->backward(*n);
}

FiniteDiffReport finite_diff_check(
    const std::function<Tensor<double>()>& loss_fn,
    const std::vector<Tensor<double>>& params, std::size_t n_samples, double h,
    std::uint64_t seed, double floor) {
  if (!(h > 0.0) || !std::isfinite(h))
    throw UsageError("finite_diff_check: step h must be positive and finite");
  if (params.empty()) throw UsageError("finite_diff_check: no parameters");
  if (!(floor > 0.0)) throw UsageError("finite_diff_check: floor must be positive");

  for (auto p : params) p.clear_grad();

  const Tensor<double> loss = loss_fn();
  if (!std::isfinite(loss.item()))
    throw NumericError("finite_diff_check: loss is not finite");
  if (loss.requires_grad()) backward(loss);

  std::vector<std::size_t> offsets{0};
  for (const auto& p : params) offsets.push_back(offsets.back() + p.numel());
  const std::size_t total = offsets.back();

  Rng rng(seed, "finite_diff_check");
  std::vector<std::size_t> coords(total);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  const std::size_t n = std::min(n_samples, total);
  // Partial Fisher-Yates: the first n entries become a uniform sample.
  for (std::size_t i = 0; i < n; ++i)
    std::swap(coords[i], coords[i + rng.below(total - i)]);

  auto eval = [&]() {
    NoGradGuard guard;
    const double v = loss_fn().item();
    if (!std::isfinite(v))
      throw NumericError("finite_diff_check: perturbed loss is not finite");
    return v;
  };

  FiniteDiffReport report;
  report.samples = n;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t flat = coords[s];
    const std::size_t pi =
        static_cast<std::size_t>(std::upper_bound(offsets.begin(), offsets.end(), flat) -
                                 offsets.begin()) - 1;
    const std::size_t idx = flat - offsets[pi];
    auto p = params[pi];
    auto vals = p.mutable_values();
    const double original = vals[idx];
    vals[idx] = original + h;
    const double fp = eval();
    vals[idx] = original - h;
    const double fm = eval();
    vals[idx] = original;
    const double numeric = (fp - fm) / (2.0 * h);
    const double analytic = p.has_grad() ? p.grad()[idx] : 0.0;
    const double rel = std::abs(analytic - numeric) /
                       std::max({std::abs(analytic), std::abs(numeric), floor});
    if (rel > report.max_rel_error || s == 0) {
      report.max_rel_error = rel;
      report.worst_param = pi;
      report.worst_index = idx;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

template <typename T>
std::uint64_t checksum(std::span<const T> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  for (std::size_t i = 0; i < values.size_bytes(); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template class Tensor<float>;
template class Tensor<double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);
template std::uint64_t checksum<float>(std::span<const float>);
template std::uint64_t checksum<double>(std::span<const double>);

}  // namespace advf
