// Copyright 2026 The RAMAVT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <vector>

#include "diffnet/tensor.hpp"

namespace ramavt::diffnet {

// Records primitive applications in execution order. Each node keeps its
// operands alive and owns a closure that pushes the output gradient into the
// operands' gradient buffers.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  // True when an op over `inputs` must be recorded on `tape`.
  static bool records(const Tape* tape, std::initializer_list<const TensorPtr*> inputs);

  void record(std::vector<TensorPtr> inputs, TensorPtr output, BackwardFn backward);
  // Ops with several outputs (the LSTM cell) record them on one node.
  void record(std::vector<TensorPtr> inputs, std::vector<TensorPtr> outputs, BackwardFn backward);

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  void clear() { nodes_.clear(); }

  // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse. Every tensor
  // touched by the tape that requires a gradient is zeroed first, so leaves
  // the loss does not reach end up holding zeros. The tape is consumed.
  void backward(const TensorPtr& loss);

 private:
  struct Node {
    std::vector<TensorPtr> inputs;
    std::vector<TensorPtr> outputs;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

inline void backward(const TensorPtr& loss, Tape& tape) { tape.backward(loss); }

}  // namespace ramavt::diffnet
