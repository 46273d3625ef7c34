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

#include "env/target_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace ramavt::env {

std::string shape_kind_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kSphere: return "sphere";
    case ShapeKind::kBox: return "box";
    case ShapeKind::kCylinder: return "cylinder";
    case ShapeKind::kSatellite: return "satellite";
  }
  return "?";
}

void TargetModel::validate() const {
  require(static_cast<int>(points.size()) >= kMinModelPoints, ErrorKind::kInvalidArgument,
          "target model '" + name + "' has " + std::to_string(points.size()) + " points, need at least " +
              std::to_string(kMinModelPoints));
  require(bounding_radius > 0.0, ErrorKind::kInvalidArgument, "target model bounding radius must be positive");
  for (const auto& p : points) {
    require(p.offset.allFinite() && p.offset.norm() <= bounding_radius * (1.0 + 1e-9), ErrorKind::kInvalidArgument,
            "target model '" + name + "' has a point outside its bounding radius");
    require(p.albedo >= 0.0 && p.albedo <= 1.0, ErrorKind::kInvalidArgument, "albedo outside [0, 1]");
  }
}

namespace {

// Surface texture: a few smooth bands so targets are not uniformly shaded.
double banded_albedo(const Vec3& p, double base, double phase, double frequency) {
  const double band = 0.5 + 0.5 * std::sin(frequency * (p.x() + 0.7 * p.y() + 0.4 * p.z()) + phase);
  return std::clamp(base + 0.3 * (band - 0.5), 0.05, 1.0);
}

void add_sphere(std::vector<ModelPoint>& out, Rng& rng, int n, double radius) {
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  const double base = uniform(rng, 0.55, 0.9), phase = uniform(rng, 0, 2 * M_PI), freq = uniform(rng, 3, 7);
  for (int i = 0; i < n; ++i) {
    const double y = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(1.0 - y * y);
    const double theta = golden * i;
    Vec3 p(r * std::cos(theta), y, r * std::sin(theta));
    p *= radius;
    out.push_back({p, banded_albedo(p, base, phase, freq)});
  }
}

// Uniform samples on the faces of an axis-aligned box centred at `centre`.
void add_box(std::vector<ModelPoint>& out, Rng& rng, int n, const Vec3& half, const Vec3& centre, double base) {
  const double areas[3] = {half.y() * half.z(), half.x() * half.z(), half.x() * half.y()};
  const double total = areas[0] + areas[1] + areas[2];
  const double phase = uniform(rng, 0, 2 * M_PI);
  for (int i = 0; i < n; ++i) {
    double pick = uniform01(rng) * total;
    int axis = 0;
    while (axis < 2 && pick > areas[axis]) pick -= areas[axis++];
    Vec3 p(uniform(rng, -1, 1) * half.x(), uniform(rng, -1, 1) * half.y(), uniform(rng, -1, 1) * half.z());
    p[axis] = (uniform01(rng) < 0.5 ? -1.0 : 1.0) * half[axis];
    p += centre;
    out.push_back({p, banded_albedo(p, base, phase, 5.0)});
  }
}

void add_cylinder(std::vector<ModelPoint>& out, Rng& rng, int n, double radius, double half_height) {
  const double side = 2.0 * M_PI * radius * 2.0 * half_height;
  const double caps = 2.0 * M_PI * radius * radius;
  const double base = uniform(rng, 0.5, 0.85), phase = uniform(rng, 0, 2 * M_PI);
  for (int i = 0; i < n; ++i) {
    const double a = uniform(rng, 0, 2 * M_PI);
    Vec3 p;
    if (uniform01(rng) * (side + caps) < side) {
      p = Vec3(radius * std::cos(a), uniform(rng, -half_height, half_height), radius * std::sin(a));
    } else {
      const double r = radius * std::sqrt(uniform01(rng));
      p = Vec3(r * std::cos(a), uniform01(rng) < 0.5 ? -half_height : half_height, r * std::sin(a));
    }
    out.push_back({p, banded_albedo(p, base, phase, 4.0)});
  }
}

}  // namespace

TargetModel make_target(ShapeKind kind, std::uint64_t seed, int point_count) {
  require(point_count >= kMinModelPoints, ErrorKind::kInvalidArgument, "too few points for a target model");
  Rng rng(seed);
  TargetModel model;
  model.kind = kind;
  model.name = shape_kind_name(kind) + "-" + std::to_string(seed);
  switch (kind) {
    case ShapeKind::kSphere:
      add_sphere(model.points, rng, point_count, uniform(rng, 0.6, 1.0));
      break;
    case ShapeKind::kBox: {
      const Vec3 half(uniform(rng, 0.35, 0.8), uniform(rng, 0.35, 0.8), uniform(rng, 0.35, 0.8));
      add_box(model.points, rng, point_count, half, Vec3::Zero(), uniform(rng, 0.5, 0.9));
      break;
    }
    case ShapeKind::kCylinder:
      add_cylinder(model.points, rng, point_count, uniform(rng, 0.35, 0.6), uniform(rng, 0.5, 0.9));
      break;
    case ShapeKind::kSatellite: {
      // Bus plus two thin solar wings along x.
      const Vec3 bus(uniform(rng, 0.3, 0.45), uniform(rng, 0.3, 0.45), uniform(rng, 0.3, 0.45));
      const double span = uniform(rng, 0.55, 0.8), chord = uniform(rng, 0.25, 0.4);
      const Vec3 wing(span / 2.0, chord, 0.02);
      const int body = point_count / 2, each_wing = (point_count - body) / 2;
      add_box(model.points, rng, body, bus, Vec3::Zero(), uniform(rng, 0.7, 0.95));
      for (double side : {-1.0, 1.0}) {
        const int n = side < 0 ? each_wing : point_count - body - each_wing;
        add_box(model.points, rng, n, wing, Vec3(side * (bus.x() + 0.05 + span / 2.0), 0, 0),
                uniform(rng, 0.25, 0.4));
      }
      break;
    }
  }
  double radius = 0.0;
  for (const auto& p : model.points) radius = std::max(radius, p.offset.norm());
  model.bounding_radius = radius;
  model.validate();
  return model;
}

const std::vector<TargetModel>& target_catalog(TargetSplit split) {
  static const std::vector<TargetModel> train = [] {
    std::vector<TargetModel> v;
    const ShapeKind kinds[4] = {ShapeKind::kSphere, ShapeKind::kBox, ShapeKind::kCylinder, ShapeKind::kSatellite};
    for (int i = 0; i < 12; ++i) v.push_back(make_target(kinds[i % 4], 1000 + i));
    return v;
  }();
  static const std::vector<TargetModel> eval = [] {
    std::vector<TargetModel> v;
    const ShapeKind kinds[6] = {ShapeKind::kSphere, ShapeKind::kBox,       ShapeKind::kCylinder,
                                ShapeKind::kSatellite, ShapeKind::kBox, ShapeKind::kSatellite};
    for (int i = 0; i < 6; ++i) v.push_back(make_target(kinds[i], 2000 + i));
    return v;
  }();
  return split == TargetSplit::kTrain ? train : eval;
}

TargetModel load_target(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kIo, "cannot open target model " + path);
  std::string line, word_points, word_radius;
  std::size_t count = 0;
  TargetModel model;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::kParse, path + ": empty model file");
  {
    std::istringstream header(line);
    header >> word_points >> count >> word_radius >> model.bounding_radius;
    require(!header.fail() && word_points == "points" && word_radius == "bounding_radius", ErrorKind::kParse,
            path + ":1: expected 'points N bounding_radius R'");
  }
  for (std::size_t i = 0; i < count; ++i) {
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::kParse,
            path + ": expected " + std::to_string(count) + " points, found " + std::to_string(i));
    std::istringstream row(line);
    ModelPoint p;
    row >> p.offset.x() >> p.offset.y() >> p.offset.z() >> p.albedo;
    require(!row.fail(), ErrorKind::kParse, path + ":" + std::to_string(i + 2) + ": expected 'x y z albedo'");
    model.points.push_back(p);
  }
  model.name = path;
  model.validate();
  return model;
}

void save_target(const TargetModel& model, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::kIo, "cannot write target model " + path);
  out.precision(17);
  out << "points " << model.points.size() << " bounding_radius " << model.bounding_radius << "\n";
  for (const auto& p : model.points)
    out << p.offset.x() << ' ' << p.offset.y() << ' ' << p.offset.z() << ' ' << p.albedo << "\n";
  require(out.good(), ErrorKind::kIo, "failed writing target model " + path);
}

}  // namespace ramavt::env
