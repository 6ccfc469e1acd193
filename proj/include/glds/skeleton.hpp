#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "glds/lds.hpp"

namespace glds {

/// Joint graph: rigid bodies are the edges between adjacent joints.
struct Topology {
  int joint_count = 0;
  int hip_index = 0;
  std::vector<std::pair<int, int>> edges;

  void validate() const;
  static Topology load(const std::string& path);
  void save(const std::string& path) const;
  /// The 20-joint, 19-edge Kinect-v1 layout.
  static Topology kinect20();
};

struct SequenceMeta {
  std::string id;
  int action = 0;
  int subject = 0;
  int trial = 0;
  int view = 0;
};

/// Per-frame joint positions in sensor units.
struct SkeletonSequence {
  std::vector<std::vector<Eigen::Vector3d>> frames;
  std::vector<std::vector<double>> confidence;  // optional, parallel to frames
  Topology topology;
  SequenceMeta meta;

  std::int64_t length() const { return static_cast<std::int64_t>(frames.size()); }
  int joint_count() const { return topology.joint_count; }
  void validate() const;
};

/// Same action seen from several cameras; all views share length/topology.
struct MultiviewSequence {
  std::vector<SkeletonSequence> views;

  /// Aligns view lengths by linear resampling to the longest view.
  static MultiviewSequence from_views(std::vector<SkeletonSequence> views);
  void validate() const;
};

enum class Representation { kJoints2, kRigidBodies2, kJoints3, kRigidBodies3, kScrewMotions3,
                            kRigidBodies4 };

Representation representation_from_string(const std::string& name);
std::string to_string(Representation r);
bool is_multiview(Representation r);

/// Translates every frame so the hip joint sits at the origin.
SkeletonSequence normalize(const SkeletonSequence& seq, int hip_index = -1);

/// Linear interpolation of joint trajectories onto a uniform grid of
/// target_tau frames; endpoints are preserved exactly.
SkeletonSequence resample(const SkeletonSequence& seq, std::int64_t target_tau);

/// Single-view tensor representations:
///   2JP: 3N x tau          2RB: 9(N-1) x tau       3JP: N x 3 x tau
///   3RB: (N-1) x 9 x tau with row [v_i, v_j, v_i - v_j] per edge
///   3SM: (N-1)(N-2) x 6 x tau of relative screw parameters per ordered
///        segment pair (rotation log; translation start_b - R * start_a).
TensorSeries extract(const SkeletonSequence& seq, Representation kind);

/// 4RB: (N-1) x 9 x V x tau; slice at view v equals extract(views[v], 3RB).
TensorSeries extract_multiview(const MultiviewSequence& mv, Representation kind);

/// Minimal-angle rotation log taking direction `from` onto `to` (unit-free
/// inputs are normalized). Antiparallel inputs pick a deterministic axis.
Eigen::Vector3d rotation_log_between(const Eigen::Vector3d& from, const Eigen::Vector3d& to);

}  // namespace glds
