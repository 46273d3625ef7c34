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

#include "diffnet/tape.hpp"

#include <unordered_set>

#include "common/error.hpp"

namespace ramavt::diffnet {

bool Tape::records(const Tape* tape, std::initializer_list<const TensorPtr*> inputs) {
  if (tape == nullptr) return false;
  for (const TensorPtr* in : inputs)
    if (in != nullptr && *in && (*in)->requires_grad()) return true;
  return false;
}

void Tape::record(std::vector<TensorPtr> inputs, TensorPtr output, BackwardFn backward) {
  record(std::move(inputs), std::vector<TensorPtr>{std::move(output)}, std::move(backward));
}

void Tape::record(std::vector<TensorPtr> inputs, std::vector<TensorPtr> outputs,
                  BackwardFn backward) {
  for (TensorPtr& out : outputs) out->set_requires_grad(true);
  nodes_.push_back(Node{std::move(inputs), std::move(outputs), std::move(backward)});
}

void Tape::backward(const TensorPtr& loss) {
  require(loss != nullptr && loss->size() == 1, ErrorKind::kShape,
          "backward needs a scalar loss, got shape " +
              (loss ? shape_string(loss->shape()) : std::string("<null>")));
  std::unordered_set<Tensor*> seen;
  for (Node& node : nodes_) {
    for (TensorPtr& in : node.inputs)
      if (in->requires_grad() && seen.insert(in.get()).second) in->zero_grad();
    for (TensorPtr& out : node.outputs)
      if (seen.insert(out.get()).second) out->zero_grad();
  }
  loss->grad().assign(1, 1.0f);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
  nodes_.clear();
}

}  // namespace ramavt::diffnet
