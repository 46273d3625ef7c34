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

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ramavt::env {

using Vec3 = Eigen::Vector3d;

enum class ShapeKind { kSphere, kBox, kCylinder, kSatellite };

std::string shape_kind_name(ShapeKind kind);

struct ModelPoint {
  Vec3 offset;    // meters, target body frame
  double albedo;  // [0, 1]
};

// Point-cloud target. Every offset lies within `bounding_radius`.
struct TargetModel {
  std::string name;
  ShapeKind kind = ShapeKind::kSphere;
  std::vector<ModelPoint> points;
  double bounding_radius = 0.0;

  void validate() const;
};

constexpr int kMinModelPoints = 200;

// Procedural target of the given kind; dimensions and surface texture are
// drawn from `seed`.
TargetModel make_target(ShapeKind kind, std::uint64_t seed, int point_count = 800);

enum class TargetSplit { kTrain, kEval };

// 12 training and 6 held-out evaluation targets, fixed across runs.
const std::vector<TargetModel>& target_catalog(TargetSplit split);

// Plain-text model files: a header "points N bounding_radius R" followed by
// N lines "x y z albedo".
TargetModel load_target(const std::string& path);
void save_target(const TargetModel& model, const std::string& path);

}  // namespace ramavt::env
