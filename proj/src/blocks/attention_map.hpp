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

#include "diffnet/tensor.hpp"

namespace ramavt::blocks {

// Spatial attention of a captured activation a[N,C,H,W]: the channel-wise
// sum of squares, normalized by a softmax over the H*W grid. Returns [N,H,W].
diffnet::Tensor attention_map(const diffnet::Tensor& activation);

}  // namespace ramavt::blocks
