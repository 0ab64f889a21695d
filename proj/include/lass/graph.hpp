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
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "lass/aligned.hpp"
#include "lass/param_store.hpp"
#include "lass/types.hpp"

namespace lass {

// Geometry of one multi-head attention call. Query rows are laid out as
// [batch * q_len, d_model], key/value rows as [batch * k_len, d_model]; key
// positions at or beyond key_lengths[b] are masked out.
struct AttentionShape {
  int batch = 0;
  int q_len = 0;
  int k_len = 0;
  int heads = 1;
  std::span<const int> key_lengths;
  bool causal = false;
};

// Reverse-mode tape over row-major matrices. Only the operations the
// transformer needs are provided. Parameter leaves alias the store's value
// and gradient arrays; backward() accumulates into ParamEntry::grad.
template <typename T>
class Graph {
 public:
  using Var = int;

  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var parameter(const ParamEntry<T>& entry);
  Var parameter(ParamEntry<T>& entry);
  Var input(int rows, int cols, std::vector<T> values);

  // scale * table[ids[r]] per output row r.
  Var embed(Var table, std::span<const TokenId> ids, T scale);
  Var add(Var a, Var b);
  // x * w + b with w stored [in, out].
  Var linear(Var x, Var w, Var b);
  Var gelu(Var x);
  Var layer_norm(Var x, Var gain, Var bias);
  Var attention(Var q, Var k, Var v, const AttentionShape& shape);
  Var dropout(Var x, T p, std::mt19937_64& rng);
  // h * table^T: output projection tied to the embedding table.
  Var tied_logits(Var h, Var table);
  // Label-smoothed cross-entropy averaged over rows whose target is not
  // `pad`; a 1x1 node. Returns 0 with no gradient when every row is padding.
  Var cross_entropy(Var logits, std::span<const TokenId> targets, T smoothing,
                    TokenId pad);

  const T* value(Var v) const { return nodes_[v].value(); }
  int rows(Var v) const { return nodes_[v].rows; }
  int cols(Var v) const { return nodes_[v].cols; }
  T scalar(Var v) const { return nodes_[v].value()[0]; }

  // Seeds d(out)/d(out) = 1 and runs the tape backwards.
  void backward(Var out);

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    int rows = 0;
    int cols = 0;
    AlignedVector<T> data;
    const T* ext = nullptr;
    T* ext_grad = nullptr;
    AlignedVector<T> grad;
    std::function<void()> back;

    const T* value() const { return ext ? ext : data.data(); }
  };

  Var push(int rows, int cols);
  T* mutable_value(Var v) { return nodes_[v].data.data(); }
  T* grad_of(Var v);
  bool has_grad(Var v) const {
    return nodes_[v].ext_grad != nullptr || !nodes_[v].grad.empty();
  }
  void on_backward(std::function<void()> fn);

  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace lass
