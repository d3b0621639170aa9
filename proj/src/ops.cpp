// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>

#include "advf/error.hpp"
#include "advf/kernels.hpp"
#include "advf/tensor.hpp"

namespace advf {
namespace {

template <typename T>
void require_rank2(const Tensor<T>& t, const char* op, const char* arg) {
  if (t.rank() != 2)
    throw DimensionError(std::string(op) + ": " + arg + " must be 2-D, got " +
                         shape_str(t.shape()));
}

template <typename T>
using Node = TensorNode<T>;

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank2(a, "matmul", "a");
  require_rank2(b, "matmul", "b");
  const std::size_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
  if (b.dim(0) != K)
    throw DimensionError("matmul: inner dimensions differ: " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()));
  const auto& kt = kernels::active<T>();
  std::vector<T> out(M * N);
  kt.gemm_nn(M, N, K, a.values().data(), K, b.values().data(), N, out.data(), N, false);
  return Tensor<T>::make_op({M, N}, std::move(out), {a, b}, [M, N, K](Node<T>& self) {
    const auto& kt = kernels::active<T>();
    auto& A = *self.inputs[0];
    auto& B = *self.inputs[1];
    if (A.requires_grad)  // dA = dC * B^T
      kt.gemm_nt(M, K, N, self.grad.data(), N, B.value.data(), N,
                 A.grad_buffer().data(), K, true);
    if (B.requires_grad)  // dB = A^T * dC
      kt.gemm_tn(K, N, M, A.value.data(), K, self.grad.data(), N,
                 B.grad_buffer().data(), N, true);
  });
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank2(a, "matmul_nt", "a");
  require_rank2(b, "matmul_nt", "b");
  const std::size_t M = a.dim(0), K = a.dim(1), N = b.dim(0);
  if (b.dim(1) != K)
    throw DimensionError("matmul_nt: inner dimensions differ: " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()) + "^T");
  const auto& kt = kernels::active<T>();
  std::vector<T> out(M * N);
  kt.gemm_nt(M, N, K, a.values().data(), K, b.values().data(), K, out.data(), N, false);
  return Tensor<T>::make_op({M, N}, std::move(out), {a, b}, [M, N, K](Node<T>& self) {
    const auto& kt = kernels::active<T>();
    auto& A = *self.inputs[0];
    auto& B = *self.inputs[1];
    if (A.requires_grad)  // dA = dC * B
      kt.gemm_nn(M, K, N, self.grad.data(), N, B.value.data(), K,
                 A.grad_buffer().data(), K, true);
    if (B.requires_grad)  // dB = dC^T * A
      kt.gemm_tn(N, K, M, self.grad.data(), N, A.value.data(), K,
                 B.grad_buffer().data(), K, true);
  });
}

namespace {

// Resolves exact-shape or single-element broadcasting for binary ops.
template <typename T>
Shape binary_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() == b.shape()) return a.shape();
  if (b.numel() == 1) return a.shape();
  if (a.numel() == 1) return b.shape();
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) +
                       " and " + shape_str(b.shape()));
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  Shape shape = binary_shape(a, b, "add");
  const std::size_t n = numel(shape);
  const std::size_t sa = a.numel() == n ? 1 : 0;
  const std::size_t sb = b.numel() == n ? 1 : 0;
  std::vector<T> out(n);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < n; ++i) out[i] = av[i * sa] + bv[i * sb];
  return Tensor<T>::make_op(std::move(shape), std::move(out), {a, b}, [n, sa, sb](Node<T>& self) {
    for (int side = 0; side < 2; ++side) {
      auto& in = *self.inputs[side];
      if (!in.requires_grad) continue;
      auto& g = in.grad_buffer();
      const std::size_t stride = side == 0 ? sa : sb;
      for (std::size_t i = 0; i < n; ++i) g[i * stride] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  Shape shape = binary_shape(a, b, "mul");
  const std::size_t n = numel(shape);
  const std::size_t sa = a.numel() == n ? 1 : 0;
  const std::size_t sb = b.numel() == n ? 1 : 0;
  std::vector<T> out(n);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < n; ++i) out[i] = av[i * sa] * bv[i * sb];
  return Tensor<T>::make_op(std::move(shape), std::move(out), {a, b}, [n, sa, sb](Node<T>& self) {
    auto& A = *self.inputs[0];
    auto& B = *self.inputs[1];
    if (A.requires_grad) {
      auto& g = A.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) g[i * sa] += self.grad[i] * B.value[i * sb];
    }
    if (B.requires_grad) {
      auto& g = B.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) g[i * sb] += self.grad[i] * A.value[i * sa];
    }
  });
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  require_rank2(x, "add_bias", "x");
  const std::size_t M = x.dim(0), N = x.dim(1);
  if (bias.numel() != N)
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) +
                         " does not match rows of " + shape_str(x.shape()));
  std::vector<T> out(x.values().begin(), x.values().end());
  auto bv = bias.values();
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < N; ++j) out[i * N + j] += bv[j];
  return Tensor<T>::make_op(x.shape(), std::move(out), {x, bias}, [M, N](Node<T>& self) {
    auto& X = *self.inputs[0];
    auto& B = *self.inputs[1];
    if (X.requires_grad) {
      auto& g = X.grad_buffer();
      for (std::size_t i = 0; i < M * N; ++i) g[i] += self.grad[i];
    }
    if (B.requires_grad) {
      auto& g = B.grad_buffer();
      for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < N; ++j) g[j] += self.grad[i * N + j];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  std::vector<T> out(x.values().begin(), x.values().end());
  for (auto& v : out) v *= factor;
  return Tensor<T>::make_op(x.shape(), std::move(out), {x}, [factor](Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(x.values().begin(), x.values().end());
  for (auto& v : out) v = v > T(0) ? v : T(0);
  return Tensor<T>::make_op(x.shape(), std::move(out), {x}, [](Node<T>& self) {
    auto& in = *self.inputs[0];
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (in.value[i] > T(0)) g[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T s(0);
  for (T v : x.values()) s += v;
  return Tensor<T>::make_op({1}, {s}, {x}, [](Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    const T d = self.grad[0];
    for (auto& v : g) v += d;
  });
}

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& x) {
  if (x.rank() == 0 || x.shape().back() == 0)
    throw DimensionError("softmax_lastdim: empty last dimension in " + shape_str(x.shape()));
  const std::size_t N = x.shape().back();
  const std::size_t M = x.numel() / N;
  std::vector<T> out(x.numel());
  auto xv = x.values();
  for (std::size_t i = 0; i < M; ++i) {
    const T* r = xv.data() + i * N;
    T* o = out.data() + i * N;
    const T mx = *std::max_element(r, r + N);
    T z(0);
    for (std::size_t j = 0; j < N; ++j) z += (o[j] = std::exp(r[j] - mx));
    for (std::size_t j = 0; j < N; ++j) o[j] /= z;
  }
  return Tensor<T>::make_op(x.shape(), std::move(out), {x}, [M, N](Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < M; ++i) {
      const T* y = self.value.data() + i * N;
      const T* dy = self.grad.data() + i * N;
      T dotp(0);
      for (std::size_t j = 0; j < N; ++j) dotp += y[j] * dy[j];
      for (std::size_t j = 0; j < N; ++j) g[i * N + j] += y[j] * (dy[j] - dotp);
    }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  if (!(eps > T(0))) throw UsageError("layer_norm: eps must be positive");
  if (x.rank() == 0) throw DimensionError("layer_norm: scalar input");
  const std::size_t N = x.shape().back();
  const std::size_t M = x.numel() / N;
  if (gain.numel() != N || bias.numel() != N)
    throw DimensionError("layer_norm: gain " + shape_str(gain.shape()) + " / bias " +
                         shape_str(bias.shape()) + " do not match last dim of " +
                         shape_str(x.shape()));
  std::vector<T> out(x.numel());
  std::vector<T> xhat(x.numel());
  std::vector<T> rstd(M);
  auto xv = x.values();
  auto gv = gain.values();
  auto bv = bias.values();
  for (std::size_t i = 0; i < M; ++i) {
    const T* r = xv.data() + i * N;
    T mean(0);
    for (std::size_t j = 0; j < N; ++j) mean += r[j];
    mean /= T(N);
    T var(0);
    for (std::size_t j = 0; j < N; ++j) var += (r[j] - mean) * (r[j] - mean);
    var /= T(N);
    rstd[i] = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < N; ++j) {
      const T xh = (r[j] - mean) * rstd[i];
      xhat[i * N + j] = xh;
      out[i * N + j] = xh * gv[j] + bv[j];
    }
  }
  return Tensor<T>::make_op(
      x.shape(), std::move(out), {x, gain, bias},
      [M, N, xhat = std::move(xhat), rstd = std::move(rstd)](Node<T>& self) {
        auto& X = *self.inputs[0];
        auto& G = *self.inputs[1];
        auto& B = *self.inputs[2];
        if (G.requires_grad) {
          auto& g = G.grad_buffer();
          for (std::size_t i = 0; i < M; ++i)
            for (std::size_t j = 0; j < N; ++j) g[j] += self.grad[i * N + j] * xhat[i * N + j];
        }
        if (B.requires_grad) {
          auto& g = B.grad_buffer();
          for (std::size_t i = 0; i < M; ++i)
            for (std::size_t j = 0; j < N; ++j) g[j] += self.grad[i * N + j];
        }
        if (X.requires_grad) {
          auto& g = X.grad_buffer();
          std::vector<T> dxh(N);
          for (std::size_t i = 0; i < M; ++i) {
            T s1(0), s2(0);
            for (std::size_t j = 0; j < N; ++j) {
              dxh[j] = self.grad[i * N + j] * G.value[j];
              s1 += dxh[j];
              s2 += dxh[j] * xhat[i * N + j];
            }
            const T k = rstd[i] / T(N);
            for (std::size_t j = 0; j < N; ++j)
              g[i * N + j] += k * (T(N) * dxh[j] - s1 - xhat[i * N + j] * s2);
          }
        }
      });
}

template <typename T>
Tensor<T> cross_entropy_logits(const Tensor<T>& logits, std::span<const TokenId> targets,
                               TokenId ignore_id) {
  require_rank2(logits, "cross_entropy_logits", "logits");
  const std::size_t R = logits.dim(0), V = logits.dim(1);
  if (targets.size() != R)
    throw DimensionError("cross_entropy_logits: " + std::to_string(targets.size()) +
                         " targets for logits " + shape_str(logits.shape()));
  std::size_t counted = 0;
  for (std::size_t i = 0; i < R; ++i) {
    const TokenId t = targets[i];
    if (t == ignore_id) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= V)
      throw DataError("cross_entropy_logits: target " + std::to_string(t) + " at position " +
                      std::to_string(i) + " outside [0, " + std::to_string(V) + ")");
    ++counted;
  }
  // Softmax rows are kept for the backward pass.
  std::vector<T> probs(counted ? R * V : 0);
  T total(0);
  auto lv = logits.values();
  for (std::size_t i = 0; i < R && counted; ++i) {
    if (targets[i] == ignore_id) continue;
    const T* r = lv.data() + i * V;
    const T mx = *std::max_element(r, r + V);
    T z(0);
    for (std::size_t j = 0; j < V; ++j) z += (probs[i * V + j] = std::exp(r[j] - mx));
    for (std::size_t j = 0; j < V; ++j) probs[i * V + j] /= z;
    total += (std::log(z) + mx) - r[targets[i]];
  }
  const T loss = counted ? total / T(counted) : T(0);
  std::vector<TokenId> tgt(targets.begin(), targets.end());
  return Tensor<T>::make_op(
      {1}, {loss}, {logits},
      [R, V, counted, ignore_id, probs = std::move(probs), tgt = std::move(tgt)](Node<T>& self) {
        auto& g = self.inputs[0]->grad_buffer();
        if (!counted) return;
        const T d = self.grad[0] / T(counted);
        for (std::size_t i = 0; i < R; ++i) {
          if (tgt[i] == ignore_id) continue;
          for (std::size_t j = 0; j < V; ++j) g[i * V + j] += d * probs[i * V + j];
          g[i * V + static_cast<std::size_t>(tgt[i])] -= d;
        }
      });
}

template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const TokenId> ids) {
  require_rank2(table, "embedding", "table");
  const std::size_t V = table.dim(0), H = table.dim(1), L = ids.size();
  if (L == 0) throw DimensionError("embedding: empty id sequence");
  std::vector<T> out(L * H);
  auto tv = table.values();
  for (std::size_t i = 0; i < L; ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= V)
      throw DataError("embedding: id " + std::to_string(ids[i]) + " at position " +
                      std::to_string(i) + " outside [0, " + std::to_string(V) + ")");
    std::copy_n(tv.data() + static_cast<std::size_t>(ids[i]) * H, H, out.data() + i * H);
  }
  std::vector<TokenId> idv(ids.begin(), ids.end());
  return Tensor<T>::make_op({L, H}, std::move(out), {table}, [H, idv = std::move(idv)](Node<T>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < idv.size(); ++i) {
      T* row = g.data() + static_cast<std::size_t>(idv[i]) * H;
      for (std::size_t j = 0; j < H; ++j) row[j] += self.grad[i * H + j];
    }
  });
}

template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                               std::size_t n_heads, bool causal) {
  require_rank2(q, "multi_head_attention", "q");
  require_rank2(k, "multi_head_attention", "k");
  require_rank2(v, "multi_head_attention", "v");
  const std::size_t Tq = q.dim(0), S = k.dim(0), H = q.dim(1);
  if (k.dim(1) != H || v.shape() != k.shape())
    throw DimensionError("multi_head_attention: q " + shape_str(q.shape()) + ", k " +
                         shape_str(k.shape()) + ", v " + shape_str(v.shape()));
  if (n_heads == 0 || H % n_heads != 0)
    throw DimensionError("multi_head_attention: " + std::to_string(n_heads) +
                         " heads do not divide width " + std::to_string(H));
  if (causal && S != Tq)
    throw DimensionError("multi_head_attention: causal attention needs square scores");
  const std::size_t D = H / n_heads;
  const T inv_sqrt = T(1) / std::sqrt(T(D));
  const auto& kt = kernels::active<T>();

  std::vector<T> probs(n_heads * Tq * S);
  std::vector<T> out(Tq * H);
  auto qv = q.values();
  auto kv = k.values();
  auto vv = v.values();
  for (std::size_t hd = 0; hd < n_heads; ++hd) {
    T* P = probs.data() + hd * Tq * S;
    kt.gemm_nt(Tq, S, D, qv.data() + hd * D, H, kv.data() + hd * D, H, P, S, false);
    for (std::size_t i = 0; i < Tq; ++i) {
      T* row = P + i * S;
      const std::size_t visible = causal ? i + 1 : S;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t j = 0; j < visible; ++j) mx = std::max(mx, row[j] * inv_sqrt);
      T z(0);
      for (std::size_t j = 0; j < visible; ++j) z += (row[j] = std::exp(row[j] * inv_sqrt - mx));
      for (std::size_t j = 0; j < visible; ++j) row[j] /= z;
      for (std::size_t j = visible; j < S; ++j) row[j] = T(0);
    }
    kt.gemm_nn(Tq, D, S, P, S, vv.data() + hd * D, H, out.data() + hd * D, H, false);
  }
  return Tensor<T>::make_op(
      {Tq, H}, std::move(out), {q, k, v},
      [Tq, S, H, D, n_heads, inv_sqrt, probs = std::move(probs)](Node<T>& self) {
        const auto& kt = kernels::active<T>();
        auto& Q = *self.inputs[0];
        auto& K = *self.inputs[1];
        auto& Vn = *self.inputs[2];
        std::vector<T> dP(Tq * S);
        for (std::size_t hd = 0; hd < n_heads; ++hd) {
          const T* P = probs.data() + hd * Tq * S;
          const T* dO = self.grad.data() + hd * D;
          if (Vn.requires_grad)
            kt.gemm_tn(S, D, Tq, P, S, dO, H, Vn.grad_buffer().data() + hd * D, H, true);
          if (!Q.requires_grad && !K.requires_grad) continue;
          kt.gemm_nt(Tq, S, D, dO, H, Vn.value.data() + hd * D, H, dP.data(), S, false);
          for (std::size_t i = 0; i < Tq; ++i) {
            T dotp(0);
            for (std::size_t j = 0; j < S; ++j) dotp += dP[i * S + j] * P[i * S + j];
            for (std::size_t j = 0; j < S; ++j)
              dP[i * S + j] = P[i * S + j] * (dP[i * S + j] - dotp) * inv_sqrt;
          }
          if (Q.requires_grad)
            kt.gemm_nn(Tq, D, S, dP.data(), S, K.value.data() + hd * D, H,
                       Q.grad_buffer().data() + hd * D, H, true);
          if (K.requires_grad)
            kt.gemm_tn(S, D, Tq, dP.data(), S, Q.value.data() + hd * D, H,
                       K.grad_buffer().data() + hd * D, H, true);
        }
      });
}

template <typename T>
Tensor<T> row_dots(const Tensor<T>& q, const std::vector<Tensor<T>>& keys) {
  require_rank2(q, "row_dots", "q");
  if (keys.empty()) throw DimensionError("row_dots: no keys");
  const std::size_t R = q.dim(0), H = q.dim(1), N = keys.size();
  for (const auto& k : keys)
    if (k.shape() != q.shape())
      throw DimensionError("row_dots: key " + shape_str(k.shape()) + " vs query " +
                           shape_str(q.shape()));
  const auto& kt = kernels::active<T>();
  std::vector<T> out(R * N);
  for (std::size_t n = 0; n < N; ++n) {
    auto kv = keys[n].values();
    for (std::size_t t = 0; t < R; ++t)
      out[t * N + n] = kt.dot(H, q.values().data() + t * H, kv.data() + t * H);
  }
  std::vector<Tensor<T>> inputs{q};
  inputs.insert(inputs.end(), keys.begin(), keys.end());
  return Tensor<T>::make_op({R, N}, std::move(out), inputs, [R, H, N](Node<T>& self) {
    const auto& kt = kernels::active<T>();
    auto& Q = *self.inputs[0];
    for (std::size_t n = 0; n < N; ++n) {
      auto& K = *self.inputs[n + 1];
      for (std::size_t t = 0; t < R; ++t) {
        const T g = self.grad[t * N + n];
        if (Q.requires_grad) kt.axpy(H, g, K.value.data() + t * H, Q.grad_buffer().data() + t * H);
        if (K.requires_grad) kt.axpy(H, g, Q.value.data() + t * H, K.grad_buffer().data() + t * H);
      }
    }
  });
}

template <typename T>
Tensor<T> mix_rows(const Tensor<T>& weights, const std::vector<Tensor<T>>& values) {
  require_rank2(weights, "mix_rows", "weights");
  const std::size_t R = weights.dim(0), N = weights.dim(1);
  if (values.size() != N)
    throw DimensionError("mix_rows: " + std::to_string(values.size()) + " value tensors for " +
                         std::to_string(N) + " weight columns");
  require_rank2(values[0], "mix_rows", "values");
  const std::size_t H = values[0].dim(1);
  for (const auto& v : values)
    if (v.rank() != 2 || v.dim(0) != R || v.dim(1) != H)
      throw DimensionError("mix_rows: value " + shape_str(v.shape()) + " vs weights " +
                           shape_str(weights.shape()));
  const auto& kt = kernels::active<T>();
  std::vector<T> out(R * H, T(0));
  auto wv = weights.values();
  for (std::size_t n = 0; n < N; ++n) {
    auto vv = values[n].values();
    for (std::size_t t = 0; t < R; ++t)
      kt.axpy(H, wv[t * N + n], vv.data() + t * H, out.data() + t * H);
  }
  std::vector<Tensor<T>> inputs{weights};
  inputs.insert(inputs.end(), values.begin(), values.end());
  return Tensor<T>::make_op({R, H}, std::move(out), inputs, [R, H, N](Node<T>& self) {
    const auto& kt = kernels::active<T>();
    auto& W = *self.inputs[0];
    for (std::size_t n = 0; n < N; ++n) {
      auto& Vn = *self.inputs[n + 1];
      for (std::size_t t = 0; t < R; ++t) {
        const T* g = self.grad.data() + t * H;
        if (W.requires_grad) W.grad_buffer()[t * N + n] += kt.dot(H, g, Vn.value.data() + t * H);
        if (Vn.requires_grad) kt.axpy(H, W.value[t * N + n], g, Vn.grad_buffer().data() + t * H);
      }
    }
  });
}

#define ADVF_INSTANTIATE_OPS(T)                                                               \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> scale(const Tensor<T>&, T);                                              \
  template Tensor<T> relu(const Tensor<T>&);                                                  \
  template Tensor<T> sum(const Tensor<T>&);                                                   \
  template Tensor<T> softmax_lastdim(const Tensor<T>&);                                       \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);     \
  template Tensor<T> cross_entropy_logits(const Tensor<T>&, std::span<const TokenId>, TokenId); \
  template Tensor<T> embedding(const Tensor<T>&, std::span<const TokenId>);                   \
  template Tensor<T> multi_head_attention(const Tensor<T>&, const Tensor<T>&,                 \
                                          const Tensor<T>&, std::size_t, bool);               \
  template Tensor<T> row_dots(const Tensor<T>&, const std::vector<Tensor<T>>&);               \
  template Tensor<T> mix_rows(const Tensor<T>&, const std::vector<Tensor<T>>&);

ADVF_INSTANTIATE_OPS(float)
ADVF_INSTANTIATE_OPS(double)

#undef ADVF_INSTANTIATE_OPS

}  // namespace advf
