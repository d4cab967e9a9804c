#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "loopbox/errors.hpp"
#include "loopbox/geometry.hpp"

namespace loopbox {

struct PointCloud {
  std::vector<Vec3> points;

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  Vec3 centroid() const {
    Vec3 c = Vec3::Zero();
    for (const auto& p : points) c += p;
    return points.empty() ? c : Vec3(c / static_cast<double>(points.size()));
  }
};

inline PointCloud transform_cloud(const Sim3Transform& t,
                                  const PointCloud& cloud) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.points.push_back(t.apply(p));
  return out;
}

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }

  Vec3 extent() const { return (hi - lo).cwiseMax(0.0); }
  double volume() const { return extent().prod(); }
  double diagonal() const { return extent().norm(); }
};

inline Aabb bounding_box(const PointCloud& cloud) {
  Aabb box;
  for (const auto& p : cloud.points) box.extend(p);
  return box;
}

inline double cloud_diameter(const PointCloud& cloud) {
  return bounding_box(cloud).diagonal();
}

// Ratio smaller/larger of the axis-aligned bounding-box volumes.
inline double volume_ratio(const PointCloud& a, const PointCloud& b) {
  const double va = bounding_box(a).volume();
  const double vb = bounding_box(b).volume();
  if (va <= 0 || vb <= 0) throw NumericalError("degenerate cloud volume");
  return std::min(va, vb) / std::max(va, vb);
}

// ASCII PLY. agent_ids, when given, is written as a per-vertex float scalar.
inline void write_ply(std::ostream& os, const PointCloud& cloud,
                      const std::vector<int>* agent_ids = nullptr) {
  if (agent_ids && agent_ids->size() != cloud.points.size())
    throw LengthMismatch("agent tag count does not match cloud size");
  os << "ply\nformat ascii 1.0\n";
  os << "element vertex " << cloud.points.size() << "\n";
  os << "property float x\nproperty float y\nproperty float z\n";
  if (agent_ids) os << "property float agent\n";
  os << "end_header\n";
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    os << static_cast<float>(p.x()) << " " << static_cast<float>(p.y()) << " "
       << static_cast<float>(p.z());
    if (agent_ids) os << " " << static_cast<float>((*agent_ids)[i]);
    os << "\n";
  }
}

inline void write_ply_file(const std::string& path, const PointCloud& cloud,
                           const std::vector<int>* agent_ids = nullptr) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  write_ply(os, cloud, agent_ids);
}

inline PointCloud read_ply(std::istream& is) {
  std::string line;
  size_t n = 0;
  bool header_done = false;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "element") {
      std::string what;
      ls >> what >> n;
    } else if (tok == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw Error("malformed PLY header");
  PointCloud cloud;
  cloud.points.reserve(n);
  for (size_t i = 0; i < n && std::getline(is, line); ++i) {
    std::istringstream ls(line);
    Vec3 p;
    ls >> p.x() >> p.y() >> p.z();
    cloud.points.push_back(p);
  }
  return cloud;
}

}  // namespace loopbox
