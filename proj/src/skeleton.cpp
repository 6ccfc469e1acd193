#include "glds/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace glds {

namespace {

constexpr double kDegenerateSegment = 1e-12;

}  // namespace

void Topology::validate() const {
  if (joint_count < 2) throw std::invalid_argument("topology: need at least 2 joints");
  if (hip_index < 0 || hip_index >= joint_count)
    throw std::invalid_argument("topology: hip index out of range");
  if (edges.empty()) throw std::invalid_argument("topology: edge list is empty");
  for (const auto& [a, b] : edges)
    if (a < 0 || a >= joint_count || b < 0 || b >= joint_count || a == b)
      throw std::invalid_argument("topology: edge references invalid joints");
}

Topology Topology::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read topology file: " + path);
  Topology topo;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::string eq;
    if (!(ls >> eq) || eq != "=")
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    if (key == "joints") {
      ls >> topo.joint_count;
    } else if (key == "hip") {
      ls >> topo.hip_index;
    } else if (key == "edge") {
      int a = -1, b = -1;
      ls >> a >> b;
      topo.edges.emplace_back(a, b);
    } else {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown key '" + key +
                               "'");
    }
    if (ls.fail())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed value");
  }
  topo.validate();
  return topo;
}

void Topology::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write topology file: " + path);
  out << "joints = " << joint_count << "\n";
  out << "hip = " << hip_index << "\n";
  for (const auto& [a, b] : edges) out << "edge = " << a << " " << b << "\n";
}

Topology Topology::kinect20() {
  Topology t;
  t.joint_count = 20;
  t.hip_index = 0;
  t.edges = {{0, 1},   {1, 2},   {2, 3},             // spine to head
             {2, 4},   {4, 5},   {5, 6},   {6, 7},   // left arm
             {2, 8},   {8, 9},   {9, 10},  {10, 11}, // right arm
             {0, 12},  {12, 13}, {13, 14}, {14, 15}, // left leg
             {0, 16},  {16, 17}, {17, 18}, {18, 19}};// right leg
  return t;
}

void SkeletonSequence::validate() const {
  topology.validate();
  if (length() < 2) throw std::invalid_argument("skeleton sequence needs at least 2 frames");
  for (const auto& f : frames)
    if (static_cast<int>(f.size()) != topology.joint_count)
      throw std::invalid_argument("skeleton frame joint count mismatch");
}

MultiviewSequence MultiviewSequence::from_views(std::vector<SkeletonSequence> views) {
  if (views.empty()) throw std::invalid_argument("multiview sequence needs >= 1 view");
  std::int64_t max_tau = 0;
  for (const auto& v : views) max_tau = std::max(max_tau, v.length());
  for (auto& v : views)
    if (v.length() != max_tau) v = resample(v, max_tau);
  MultiviewSequence mv{std::move(views)};
  mv.validate();
  return mv;
}

void MultiviewSequence::validate() const {
  // A single view degrades to 3RB with a singleton view mode.
  if (views.empty()) throw std::invalid_argument("multiview sequence needs >= 1 view");
  const auto tau = views.front().length();
  const auto joints = views.front().joint_count();
  for (const auto& v : views) {
    v.validate();
    if (v.length() != tau || v.joint_count() != joints)
      throw std::invalid_argument("multiview views must share length and topology");
  }
}

Representation representation_from_string(const std::string& name) {
  if (name == "2JP") return Representation::kJoints2;
  if (name == "2RB") return Representation::kRigidBodies2;
  if (name == "3JP") return Representation::kJoints3;
  if (name == "3RB") return Representation::kRigidBodies3;
  if (name == "3SM") return Representation::kScrewMotions3;
  if (name == "4RB") return Representation::kRigidBodies4;
  throw std::invalid_argument("unknown representation: " + name);
}

std::string to_string(Representation r) {
  switch (r) {
    case Representation::kJoints2: return "2JP";
    case Representation::kRigidBodies2: return "2RB";
    case Representation::kJoints3: return "3JP";
    case Representation::kRigidBodies3: return "3RB";
    case Representation::kScrewMotions3: return "3SM";
    case Representation::kRigidBodies4: return "4RB";
  }
  throw std::invalid_argument("unknown representation");
}

bool is_multiview(Representation r) { return r == Representation::kRigidBodies4; }

SkeletonSequence normalize(const SkeletonSequence& seq, int hip_index) {
  const int hip = hip_index >= 0 ? hip_index : seq.topology.hip_index;
  if (hip < 0 || hip >= seq.joint_count())
    throw std::invalid_argument("normalize: hip index out of range");
  SkeletonSequence out = seq;
  for (auto& frame : out.frames) {
    const Eigen::Vector3d center = frame[static_cast<std::size_t>(hip)];
    for (auto& v : frame) v -= center;
  }
  return out;
}

SkeletonSequence resample(const SkeletonSequence& seq, std::int64_t target_tau) {
  if (target_tau < 2) throw std::invalid_argument("resample: target length must be >= 2");
  if (target_tau == seq.length()) return seq;
  const std::int64_t tau = seq.length();
  SkeletonSequence out = seq;
  out.frames.assign(static_cast<std::size_t>(target_tau),
                    std::vector<Eigen::Vector3d>(static_cast<std::size_t>(seq.joint_count())));
  out.confidence.clear();
  for (std::int64_t t = 0; t < target_tau; ++t) {
    const double pos = static_cast<double>(t) * static_cast<double>(tau - 1) /
                       static_cast<double>(target_tau - 1);
    const std::int64_t lo = std::min<std::int64_t>(static_cast<std::int64_t>(pos), tau - 2);
    const double w = pos - static_cast<double>(lo);
    for (int jn = 0; jn < seq.joint_count(); ++jn) {
      const auto& a = seq.frames[static_cast<std::size_t>(lo)][static_cast<std::size_t>(jn)];
      const auto& b = seq.frames[static_cast<std::size_t>(lo + 1)][static_cast<std::size_t>(jn)];
      out.frames[static_cast<std::size_t>(t)][static_cast<std::size_t>(jn)] = (1.0 - w) * a + w * b;
    }
  }
  return out;
}

Eigen::Vector3d rotation_log_between(const Eigen::Vector3d& from, const Eigen::Vector3d& to) {
  const Eigen::Vector3d a = from.normalized();
  const Eigen::Vector3d b = to.normalized();
  const Eigen::Vector3d cross = a.cross(b);
  const double sin_theta = cross.norm();
  const double cos_theta = a.dot(b);
  const double theta = std::atan2(sin_theta, cos_theta);
  if (sin_theta > 1e-12) return (theta / sin_theta) * cross;
  if (cos_theta > 0.0) return Eigen::Vector3d::Zero();  // parallel
  // Antiparallel: rotate by pi around a deterministic perpendicular axis.
  int smallest = 0;
  a.cwiseAbs().minCoeff(&smallest);
  const Eigen::Vector3d axis = a.cross(Eigen::Vector3d::Unit(smallest)).normalized();
  return M_PI * axis;
}

namespace {

Eigen::Matrix3d rotation_from_log(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  if (theta < 1e-12) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

// One 3RB frame: row per edge, columns [v_i, v_j, v_i - v_j].
void fill_rigid_body_frame(const std::vector<Eigen::Vector3d>& joints,
                           const std::vector<std::pair<int, int>>& edges, std::int64_t t,
                           Tensor& out) {
  for (std::int64_t e = 0; e < static_cast<std::int64_t>(edges.size()); ++e) {
    const auto& vi = joints[static_cast<std::size_t>(edges[static_cast<std::size_t>(e)].first)];
    const auto& vj = joints[static_cast<std::size_t>(edges[static_cast<std::size_t>(e)].second)];
    const Eigen::Vector3d diff = vi - vj;
    for (int c = 0; c < 3; ++c) {
      out({e, c, t}) = vi[c];
      out({e, c + 3, t}) = vj[c];
      out({e, c + 6, t}) = diff[c];
    }
  }
}

Tensor extract_rigid_bodies3(const SkeletonSequence& seq) {
  const std::int64_t rows = static_cast<std::int64_t>(seq.topology.edges.size());
  Tensor out({rows, 9, seq.length()});
  for (std::int64_t t = 0; t < seq.length(); ++t)
    fill_rigid_body_frame(seq.frames[static_cast<std::size_t>(t)], seq.topology.edges, t, out);
  return out;
}

Tensor extract_joints3(const SkeletonSequence& seq) {
  const std::int64_t n = seq.joint_count();
  Tensor out({n, 3, seq.length()});
  for (std::int64_t t = 0; t < seq.length(); ++t)
    for (std::int64_t jn = 0; jn < n; ++jn)
      for (int c = 0; c < 3; ++c)
        out({jn, c, t}) = seq.frames[static_cast<std::size_t>(t)][static_cast<std::size_t>(jn)][c];
  return out;
}

Tensor extract_screw_motions3(const SkeletonSequence& seq) {
  const std::int64_t m = static_cast<std::int64_t>(seq.topology.edges.size());
  const std::int64_t pairs = m * (m - 1);
  if (pairs == 0) throw std::invalid_argument("3SM needs at least 2 rigid bodies");
  Tensor out({pairs, 6, seq.length()});
  bool warned = false;
  for (std::int64_t t = 0; t < seq.length(); ++t) {
    const auto& joints = seq.frames[static_cast<std::size_t>(t)];
    std::int64_t row = 0;
    for (std::int64_t a = 0; a < m; ++a) {
      for (std::int64_t b = 0; b < m; ++b) {
        if (a == b) continue;
        const auto& ea = seq.topology.edges[static_cast<std::size_t>(a)];
        const auto& eb = seq.topology.edges[static_cast<std::size_t>(b)];
        const Eigen::Vector3d start_a = joints[static_cast<std::size_t>(ea.first)];
        const Eigen::Vector3d start_b = joints[static_cast<std::size_t>(eb.first)];
        const Eigen::Vector3d dir_a =
            joints[static_cast<std::size_t>(ea.second)] - start_a;
        const Eigen::Vector3d dir_b =
            joints[static_cast<std::size_t>(eb.second)] - start_b;
        if (dir_a.norm() < kDegenerateSegment || dir_b.norm() < kDegenerateSegment) {
          if (!warned) {
            std::fprintf(stderr,
                         "3SM: degenerate rigid body in sequence %s; pair entries zeroed\n",
                         seq.meta.id.c_str());
            warned = true;
          }
          for (int c = 0; c < 6; ++c) out({row, c, t}) = 0.0;
        } else {
          const Eigen::Vector3d w = rotation_log_between(dir_a, dir_b);
          const Eigen::Vector3d trans = start_b - rotation_from_log(w) * start_a;
          for (int c = 0; c < 3; ++c) {
            out({row, c, t}) = w[c];
            out({row, c + 3, t}) = trans[c];
          }
        }
        ++row;
      }
    }
  }
  return out;
}

}  // namespace

TensorSeries extract(const SkeletonSequence& seq, Representation kind) {
  seq.validate();
  switch (kind) {
    case Representation::kJoints3:
      return TensorSeries{extract_joints3(seq)};
    case Representation::kJoints2: {
      // Reshape of 3JP: column t is vec of the frame, so the layouts agree.
      Tensor three = extract_joints3(seq);
      return TensorSeries{Tensor({3 * seq.joint_count(), seq.length()}, three.data())};
    }
    case Representation::kRigidBodies3:
      return TensorSeries{extract_rigid_bodies3(seq)};
    case Representation::kRigidBodies2: {
      Tensor three = extract_rigid_bodies3(seq);
      const std::int64_t rows = 9 * static_cast<std::int64_t>(seq.topology.edges.size());
      return TensorSeries{Tensor({rows, seq.length()}, three.data())};
    }
    case Representation::kScrewMotions3:
      return TensorSeries{extract_screw_motions3(seq)};
    case Representation::kRigidBodies4:
      throw std::invalid_argument("4RB requires extract_multiview");
  }
  throw std::invalid_argument("unknown representation kind");
}

TensorSeries extract_multiview(const MultiviewSequence& mv, Representation kind) {
  if (kind != Representation::kRigidBodies4)
    throw std::invalid_argument("extract_multiview supports 4RB only");
  mv.validate();
  const std::int64_t views = static_cast<std::int64_t>(mv.views.size());
  const std::int64_t tau = mv.views.front().length();
  const std::int64_t rows = static_cast<std::int64_t>(mv.views.front().topology.edges.size());
  Tensor out({rows, 9, views, tau});
  for (std::int64_t v = 0; v < views; ++v) {
    const Tensor slice = extract_rigid_bodies3(mv.views[static_cast<std::size_t>(v)]);
    for (std::int64_t t = 0; t < tau; ++t)
      for (std::int64_t e = 0; e < rows; ++e)
        for (std::int64_t c = 0; c < 9; ++c) out({e, c, v, t}) = slice({e, c, t});
  }
  return TensorSeries{std::move(out)};
}

}  // namespace glds
