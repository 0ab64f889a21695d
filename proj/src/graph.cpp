/* Copyright 2026 The LaSS Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "lass/graph.hpp"

#include <Eigen/Core>
#include <cmath>
#include <limits>

#include "lass/errors.hpp"

namespace lass {

namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<Mat<T>>;
template <typename T>
using CMapM = Eigen::Map<const Mat<T>>;
template <typename T>
using StridedM = Eigen::Map<Mat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using CStridedM = Eigen::Map<const Mat<T>, 0, Eigen::OuterStride<>>;

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kLayerNormEps = 1e-5;

void require_shape(bool ok, const char* op) {
  if (!ok) throw StructuralError(std::string("shape mismatch in ") + op);
}

}  // namespace

template <typename T>
typename Graph<T>::Var Graph<T>::push(int rows, int cols) {
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.data.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
                T(0));
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

template <typename T>
T* Graph<T>::grad_of(Var v) {
  Node& n = nodes_[v];
  if (n.ext_grad) return n.ext_grad;
  if (n.grad.empty()) {
    n.grad.assign(static_cast<std::size_t>(n.rows) * static_cast<std::size_t>(n.cols),
                  T(0));
  }
  return n.grad.data();
}

template <typename T>
void Graph<T>::on_backward(std::function<void()> fn) {
  if (record_) nodes_.back().back = std::move(fn);
}

template <typename T>
typename Graph<T>::Var Graph<T>::parameter(const ParamEntry<T>& entry) {
  Node n;
  n.rows = static_cast<int>(entry.shape.empty() ? 1 : entry.shape[0]);
  n.cols = static_cast<int>(entry.size() / static_cast<std::size_t>(std::max(n.rows, 1)));
  n.ext = entry.values.data();
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

template <typename T>
typename Graph<T>::Var Graph<T>::parameter(ParamEntry<T>& entry) {
  Var v = parameter(static_cast<const ParamEntry<T>&>(entry));
  if (record_) nodes_[v].ext_grad = entry.grad.data();
  return v;
}

template <typename T>
typename Graph<T>::Var Graph<T>::input(int rows, int cols, std::vector<T> values) {
  require_shape(values.size() == static_cast<std::size_t>(rows) *
                                     static_cast<std::size_t>(cols),
                "input");
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.data.assign(values.begin(), values.end());
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

template <typename T>
typename Graph<T>::Var Graph<T>::embed(Var table, std::span<const TokenId> ids,
                                       T scale) {
  const int d = nodes_[table].cols;
  const int vocab = nodes_[table].rows;
  const int n = static_cast<int>(ids.size());
  Var out = push(n, d);
  const T* tab = value(table);
  T* o = mutable_value(out);
  for (int r = 0; r < n; ++r) {
    if (ids[r] < 0 || ids[r] >= vocab) {
      throw DataError("token id " + std::to_string(ids[r]) +
                      " outside table of " + std::to_string(vocab) + " rows");
    }
    const T* src = tab + static_cast<std::ptrdiff_t>(ids[r]) * d;
    for (int c = 0; c < d; ++c) o[r * d + c] = scale * src[c];
  }
  std::vector<TokenId> ids_copy(ids.begin(), ids.end());
  on_backward([this, table, out, d, scale, ids_copy = std::move(ids_copy)] {
    const T* g = nodes_[out].grad.data();
    T* gt = grad_of(table);
    for (std::size_t r = 0; r < ids_copy.size(); ++r) {
      T* dst = gt + static_cast<std::ptrdiff_t>(ids_copy[r]) * d;
      for (int c = 0; c < d; ++c) dst[c] += scale * g[r * d + c];
    }
  });
  return out;
}

template <typename T>
typename Graph<T>::Var Graph<T>::add(Var a, Var b) {
  require_shape(rows(a) == rows(b) && cols(a) == cols(b), "add");
  Var out = push(rows(a), cols(a));
  const std::size_t n = nodes_[out].data.size();
  const T* x = value(a);
  const T* y = value(b);
  T* o = mutable_value(out);
  for (std::size_t i = 0; i < n; ++i) o[i] = x[i] + y[i];
  on_backward([this, a, b, out, n] {
    const T* g = nodes_[out].grad.data();
    T* ga = grad_of(a);
    for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
    T* gb = grad_of(b);
    for (std::size_t i = 0; i < n; ++i) gb[i] += g[i];
  });
  return out;
}

template <typename T>
typename Graph<T>::Var Graph<T>::linear(Var x, Var w, Var b) {
  const int n = rows(x);
  const int in = cols(x);
  const int outd = cols(w);
  require_shape(rows(w) == in && rows(b) * cols(b) == outd, "linear");
  Var out = push(n, outd);
  {
    CMapM<T> X(value(x), n, in);
    CMapM<T> W(value(w), in, outd);
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> B(value(b), outd);
    MapM<T> O(mutable_value(out), n, outd);
    O.noalias() = X * W;
    O.rowwise() += B;
  }
  on_backward([this, x, w, b, out, n, in, outd] {
    CMapM<T> G(nodes_[out].grad.data(), n, outd);
    MapM<T> GX(grad_of(x), n, in);
    CMapM<T> W(value(w), in, outd);
    GX.noalias() += G * W.transpose();
    CMapM<T> X(value(x), n, in);
    MapM<T> GW(grad_of(w), in, outd);
    GW.noalias() += X.transpose() * G;
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> GB(grad_of(b), outd);
    GB += G.colwise().sum();
  });
  return out;
}

template <typename T>
typename Graph<T>::Var Graph<T>::gelu(Var x) {
  Var out = push(rows(x), cols(x));
  const std::size_t n = nodes_[out].data.size();
  const T* xi = value(x);
  T* o = mutable_value(out);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(xi[i]);
    o[i] = static_cast<T>(0.5 * v * (1.0 + std::erf(v * kInvSqrt2)));
  }
  on_backward([this, x, out, n] {
    const T* g = nodes_[out].grad.data();
    const T* xi = value(x);
    T* gx = grad_of(x);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = static_cast<double>(xi[i]);
      const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      gx[i] += static_cast<T>(static_cast<double>(g[i]) * (cdf + v * pdf));
    }
  });
  return out;
}

template <typename T>
typename Graph<T>::Var Graph<T>::layer_norm(Var x, Var gain, Var bias) {
  const int n = rows(x);
  const int d = cols(x);
  require_shape(rows(gain) * cols(gain) == d && rows(bias) * cols(bias) == d,
                "layer_norm");
  Var out = push(n, d);
  std::vector<T> xhat(static_cast<std::size_t>(n) * d);
  std::vector<T> inv_std(static_cast<std::size_t>(n));
  const T* xi = value(x);
  const T* g = value(gain);
  const T* bb = value(bias);
  T* o = mutable_value(out);
  for (int r = 0; r < n; ++r) {
    const T* row = xi + static_cast<std::ptrdiff_t>(r) * d;
    T mean = 0;
    for (int c = 0; c < d; ++c) mean += row[c];
    mean /= static_cast<T>(d);
    T var = 0;
    for (int c = 0; c < d; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= static_cast<T>(d);
    const T is = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    inv_std[r] = is;
    for (int c = 0; c < d; ++c) {
      const T xh = (row[c] - mean) * is;
      xhat[static_cast<std::size_t>(r) * d + c] = xh;
      o[r * d + c] = g[c] * xh + bb[c];
    }
  }
  if (!record_) return out;
  on_backward([this, x, gain, bias, out, n, d, xhat = std::move(xhat),
               inv_std = std::move(inv_std)] {
    const T* gy = nodes_[out].grad.data();
    const T* g = value(gain);
    T* gx = grad_of(x);
    T* gg = grad_of(gain);
    T* gb = grad_of(bias);
    std::vector<T> dxh(static_cast<std::size_t>(d));
    for (int r = 0; r < n; ++r) {
      const T* xh = xhat.data() + static_cast<std::ptrdiff_t>(r) * d;
      const T* gyr = gy + static_cast<std::ptrdiff_t>(r) * d;
      T mean_dxh = 0;
      T mean_dxh_xh = 0;
      for (int c = 0; c < d; ++c) {
        dxh[c] = gyr[c] * g[c];
        mean_dxh += dxh[c];
        mean_dxh_xh += dxh[c] * xh[c];
        gg[c] += gyr[c] * xh[c];
        gb[c] += gyr[c];
      }
      mean_dxh /= static_cast<T>(d);
      mean_dxh_xh /= static_cast<T>(d);
      T* gxr = gx + static_cast<std::ptrdiff_t>(r) * d;
      for (int c = 0; c < d; ++c) {
        gxr[c] += inv_std[r] * (dxh[c] - mean_dxh - xh[c] * mean_dxh_xh);
      }
    }
  });
  return out;
}

template <typename T>
typename Graph<T>::Var Graph<T>::attention(Var q, Var k, Var v,
                                           const AttentionShape& s) {
  const int d = cols(q);
  require_shape(cols(k) == d && cols(v) == d && s.heads > 0 && d % s.heads == 0,
                "attention");
  require_shape(rows(q) == s.batch * s.q_len && rows(k) == s.batch * s.k_len &&
                    rows(v) == s.batch * s.k_len &&
                    static_cast<int>(s.key_lengths.size()) == s.batch,
                "attention");
  const int dh = d / s.heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  Var out = push(s.batch * s.q_len, d);
  std::vector<T> probs(static_cast<std::size_t>(s.batch) * s.heads * s.q_len *
                       s.k_len);
  Mat<T> scores(s.q_len, s.k_len);
  for (int b = 0; b < s.batch; ++b) {
    const int klen = s.key_lengths[b];
    if (klen < 1 || klen > s.k_len) {
      throw StructuralError("attention key length out of range");
    }
    for (int h = 0; h < s.heads; ++h) {
      CStridedM<T> Q(value(q) + static_cast<std::ptrdiff_t>(b) * s.q_len * d + h * dh,
                     s.q_len, dh, Eigen::OuterStride<>(d));
      CStridedM<T> K(value(k) + static_cast<std::ptrdiff_t>(b) * s.k_len * d + h * dh,
                     s.k_len, dh, Eigen::OuterStride<>(d));
      CStridedM<T> V(value(v) + static_cast<std::ptrdiff_t>(b) * s.k_len * d + h * dh,
                     s.k_len, dh, Eigen::OuterStride<>(d));
      StridedM<T> O(mutable_value(out) + static_cast<std::ptrdiff_t>(b) * s.q_len * d +
                        h * dh,
                    s.q_len, dh, Eigen::OuterStride<>(d));
      MapM<T> P(probs.data() +
                    (static_cast<std::size_t>(b) * s.heads + h) * s.q_len * s.k_len,
                s.q_len, s.k_len);
      scores.noalias() = (Q * K.transpose()) * scale;
      for (int i = 0; i < s.q_len; ++i) {
        const int limit = s.causal ? std::min(klen, i + 1) : klen;
        T mx = -std::numeric_limits<T>::infinity();
        for (int j = 0; j < limit; ++j) mx = std::max(mx, scores(i, j));
        T sum = 0;
        for (int j = 0; j < limit; ++j) {
          const T e = std::exp(scores(i, j) - mx);
          P(i, j) = e;
          sum += e;
        }
        const T inv = T(1) / sum;
        for (int j = 0; j < limit; ++j) P(i, j) *= inv;
        for (int j = limit; j < s.k_len; ++j) P(i, j) = 0;
      }
      O.noalias() = P * V;
    }
  }
  if (!record_) return out;
  on_backward([this, q, k, v, out, s_batch = s.batch, s_q = s.q_len,
               s_k = s.k_len, heads = s.heads, d, dh, scale,
               probs = std::move(probs)] {
    const T* go = nodes_[out].grad.data();
    T* gq = grad_of(q);
    T* gk = grad_of(k);
    T* gv = grad_of(v);
    Mat<T> dP(s_q, s_k);
    for (int b = 0; b < s_batch; ++b) {
      for (int h = 0; h < heads; ++h) {
        const std::ptrdiff_t qoff = static_cast<std::ptrdiff_t>(b) * s_q * d + h * dh;
        const std::ptrdiff_t koff = static_cast<std::ptrdiff_t>(b) * s_k * d + h * dh;
        CStridedM<T> Q(value(q) + qoff, s_q, dh, Eigen::OuterStride<>(d));
        CStridedM<T> K(value(k) + koff, s_k, dh, Eigen::OuterStride<>(d));
        CStridedM<T> V(value(v) + koff, s_k, dh, Eigen::OuterStride<>(d));
        CStridedM<T> GO(go + qoff, s_q, dh, Eigen::OuterStride<>(d));
        StridedM<T> GQ(gq + qoff, s_q, dh, Eigen::OuterStride<>(d));
        StridedM<T> GK(gk + koff, s_k, dh, Eigen::OuterStride<>(d));
        StridedM<T> GV(gv + koff, s_k, dh, Eigen::OuterStride<>(d));
        CMapM<T> P(probs.data() +
                       (static_cast<std::size_t>(b) * heads + h) * s_q * s_k,
                   s_q, s_k);
        GV.noalias() += P.transpose() * GO;
        dP.noalias() = GO * V.transpose();
        for (int i = 0; i < s_q; ++i) {
          T dot = 0;
          for (int j = 0; j < s_k; ++j) dot += dP(i, j) * P(i, j);
          for (int j = 0; j < s_k; ++j) dP(i, j) = P(i, j) * (dP(i, j) - dot) * scale;
        }
        GQ.noalias() += dP * K;
        GK.noalias() += dP.transpose() * Q;
      }
    }
  });
  return out;
}

template <typename T>
typename Graph<T>::Var Graph<T>::dropout(Var x, T p, std::mt19937_64& rng) {
  if (p <= T(0)) return x;
  Var out = push(rows(x), cols(x));
  const std::size_t n = nodes_[out].data.size();
  std::vector<T> keep(n);
  const T scale = T(1) / (T(1) - p);
  const double threshold = static_cast<double>(p);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const T* xi = value(x);
  T* o = mutable_value(out);
  for (std::size_t i = 0; i < n; ++i) {
    keep[i] = u(rng) < threshold ? T(0) : scale;
    o[i] = xi[i] * keep[i];
  }
  on_backward([this, x, out, n, keep = std::move(keep)] {
    const T* g = nodes_[out].grad.data();
    T* gx = grad_of(x);
    for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] * keep[i];
  });
  return out;
}

template <typename T>
typename Graph<T>::Var Graph<T>::tied_logits(Var h, Var table) {
  const int n = rows(h);
  const int d = cols(h);
  const int vocab = rows(table);
  require_shape(cols(table) == d, "tied_logits");
  Var out = push(n, vocab);
  {
    CMapM<T> H(value(h), n, d);
    CMapM<T> E(value(table), vocab, d);
    MapM<T> O(mutable_value(out), n, vocab);
    O.noalias() = H * E.transpose();
  }
  on_backward([this, h, table, out, n, d, vocab] {
    CMapM<T> G(nodes_[out].grad.data(), n, vocab);
    MapM<T> GH(grad_of(h), n, d);
    CMapM<T> E(value(table), vocab, d);
    GH.noalias() += G * E;
    CMapM<T> H(value(h), n, d);
    MapM<T> GE(grad_of(table), vocab, d);
    GE.noalias() += G.transpose() * H;
  });
  return out;
}

template <typename T>
typename Graph<T>::Var Graph<T>::cross_entropy(Var logits,
                                               std::span<const TokenId> targets,
                                               T smoothing, TokenId pad) {
  const int n = rows(logits);
  const int vocab = cols(logits);
  require_shape(static_cast<int>(targets.size()) == n, "cross_entropy");
  Var out = push(1, 1);
  const T* z = value(logits);
  std::vector<T> probs(static_cast<std::size_t>(n) * vocab, T(0));
  double total = 0.0;
  int count = 0;
  const double on = 1.0 - static_cast<double>(smoothing);
  const double off = static_cast<double>(smoothing) / vocab;
  for (int r = 0; r < n; ++r) {
    const TokenId t = targets[r];
    if (t == pad) continue;
    if (t < 0 || t >= vocab) {
      throw DataError("target id " + std::to_string(t) + " at row " +
                      std::to_string(r) + " outside vocabulary");
    }
    ++count;
    const T* row = z + static_cast<std::ptrdiff_t>(r) * vocab;
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < vocab; ++c) mx = std::max(mx, static_cast<double>(row[c]));
    double sum = 0.0;
    for (int c = 0; c < vocab; ++c) sum += std::exp(static_cast<double>(row[c]) - mx);
    const double lse = mx + std::log(sum);
    double sum_logp = 0.0;
    T* pr = probs.data() + static_cast<std::ptrdiff_t>(r) * vocab;
    for (int c = 0; c < vocab; ++c) {
      const double lp = static_cast<double>(row[c]) - lse;
      sum_logp += lp;
      pr[c] = static_cast<T>(std::exp(lp));
    }
    total += -(on * (static_cast<double>(row[t]) - lse) + off * sum_logp);
  }
  mutable_value(out)[0] = count ? static_cast<T>(total / count) : T(0);
  if (count == 0) return out;
  std::vector<TokenId> tg(targets.begin(), targets.end());
  on_backward([this, logits, out, n, vocab, count, on, off, pad,
               probs = std::move(probs), tg = std::move(tg)] {
    const T g = nodes_[out].grad[0] / static_cast<T>(count);
    T* gz = grad_of(logits);
    for (int r = 0; r < n; ++r) {
      if (tg[r] == pad) continue;
      const T* pr = probs.data() + static_cast<std::ptrdiff_t>(r) * vocab;
      T* gr = gz + static_cast<std::ptrdiff_t>(r) * vocab;
      for (int c = 0; c < vocab; ++c) gr[c] += g * (pr[c] - static_cast<T>(off));
      gr[tg[r]] -= g * static_cast<T>(on);
    }
  });
  return out;
}

template <typename T>
void Graph<T>::backward(Var out) {
  if (!record_) throw UsageError("backward() on a graph built without a tape");
  grad_of(out)[0] += T(1);
  for (Var i = out; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back && has_grad(i)) n.back();
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace lass
