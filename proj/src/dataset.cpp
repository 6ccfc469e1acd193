#include "glds/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace glds {

namespace {

std::vector<double> read_all_numbers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    double v = 0.0;
    const auto* begin = token.data();
    const auto* end = token.data() + token.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end)
      throw std::runtime_error(path + ": non-numeric token '" + token + "'");
    values.push_back(v);
  }
  return values;
}

bool sequence_is_degenerate(const SkeletonSequence& seq) {
  for (const auto& frame : seq.frames)
    for (const auto& v : frame)
      if (v.cwiseAbs().maxCoeff() > 1e-9) return false;
  return true;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

DatasetKind dataset_kind_from_string(const std::string& name) {
  const std::string n = lower(name);
  if (n == "msr3d" || n == "msr" || n == "msr-action3d") return DatasetKind::kMsr3d;
  if (n == "utkinect" || n == "ut-kinect") return DatasetKind::kUtKinect;
  if (n == "nucla" || n == "nucla-multiview") return DatasetKind::kNucla;
  if (n == "generic" || n == "csv") return DatasetKind::kGeneric;
  throw std::invalid_argument("unknown dataset kind: " + name);
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kMsr3d: return "msr3d";
    case DatasetKind::kUtKinect: return "utkinect";
    case DatasetKind::kNucla: return "nucla";
    case DatasetKind::kGeneric: return "generic";
  }
  return "generic";
}

Protocol protocol_from_string(const std::string& name) {
  const std::string n = lower(name);
  if (n == "cross_subject_half") return Protocol::kCrossSubjectHalf;
  if (n == "loocv") return Protocol::kLoocv;
  if (n == "cross_view") return Protocol::kCrossView;
  if (n == "subset_as") return Protocol::kSubsetAs;
  throw std::invalid_argument("unknown protocol: " + name);
}

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::kCrossSubjectHalf: return "cross_subject_half";
    case Protocol::kLoocv: return "loocv";
    case Protocol::kCrossView: return "cross_view";
    case Protocol::kSubsetAs: return "subset_AS";
  }
  return "cross_subject_half";
}

Topology DatasetManifest::topology() const {
  return topology_path.empty() ? Topology::kinect20() : Topology::load(topology_path);
}

void DatasetManifest::save_json(const std::string& path) const {
  nlohmann::ordered_json j;
  j["format"] = "glds-manifest";
  j["root"] = root;
  j["kind"] = to_string(kind);
  j["topology"] = topology_path;
  auto& recs = j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json rec;
    rec["id"] = r.id;
    rec["path"] = r.path;
    rec["action"] = r.action;
    rec["subject"] = r.subject;
    rec["trial"] = r.trial;
    rec["view"] = r.view;
    if (r.frame_range) rec["frame_range"] = {r.frame_range->first, r.frame_range->second};
    recs.push_back(std::move(rec));
  }
  nlohmann::ordered_json names;
  for (const auto& [id, name] : action_names) names[std::to_string(id)] = name;
  j["action_names"] = std::move(names);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(1, '\t') << '\n';
}

DatasetManifest DatasetManifest::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read manifest: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "glds-manifest")
    throw std::runtime_error("not a glds manifest: " + path);
  DatasetManifest m;
  m.root = j.value("root", "");
  m.kind = dataset_kind_from_string(j.value("kind", "generic"));
  m.topology_path = j.value("topology", "");
  for (const auto& rec : j.at("records")) {
    SampleRecord r;
    r.id = rec.at("id");
    r.path = rec.at("path");
    r.action = rec.at("action");
    r.subject = rec.at("subject");
    r.trial = rec.at("trial");
    r.view = rec.value("view", 0);
    if (rec.contains("frame_range"))
      r.frame_range = std::make_pair(rec["frame_range"][0].get<int>(),
                                     rec["frame_range"][1].get<int>());
    m.records.push_back(std::move(r));
  }
  if (j.contains("action_names"))
    for (const auto& [key, value] : j["action_names"].items())
      m.action_names[std::stoi(key)] = value.get<std::string>();
  return m;
}

SkeletonSequence parse_msr_skeleton(const std::string& path, const Topology& topo) {
  const auto values = read_all_numbers(path);
  const std::size_t per_row = 4;
  const std::size_t per_frame = per_row * static_cast<std::size_t>(topo.joint_count);
  if (values.empty() || values.size() % per_frame != 0)
    throw std::runtime_error(path + ": frame misalignment (" + std::to_string(values.size()) +
                             " values, expected a multiple of " + std::to_string(per_frame) + ")");
  const std::size_t frames = values.size() / per_frame;
  if (frames < 2) throw std::runtime_error(path + ": fewer than 2 frames");

  SkeletonSequence seq;
  seq.topology = topo;
  seq.frames.resize(frames, std::vector<Eigen::Vector3d>(static_cast<std::size_t>(topo.joint_count)));
  seq.confidence.resize(frames, std::vector<double>(static_cast<std::size_t>(topo.joint_count)));
  for (std::size_t f = 0; f < frames; ++f)
    for (int jn = 0; jn < topo.joint_count; ++jn) {
      const std::size_t base = f * per_frame + static_cast<std::size_t>(jn) * per_row;
      seq.frames[f][static_cast<std::size_t>(jn)] =
          Eigen::Vector3d(values[base], values[base + 1], values[base + 2]);
      seq.confidence[f][static_cast<std::size_t>(jn)] = values[base + 3];
    }
  return seq;
}

SkeletonSequence parse_utkinect_joints(const std::string& path, const Topology& topo,
                                       std::optional<std::pair<int, int>> range) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  SkeletonSequence seq;
  seq.topology = topo;
  const int floats = 3 * topo.joint_count;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    double frame_no = 0.0;
    if (!(ls >> frame_no)) continue;  // blank line
    if (range && (frame_no < range->first || frame_no > range->second)) continue;
    std::vector<Eigen::Vector3d> joints(static_cast<std::size_t>(topo.joint_count));
    double x = 0.0, y = 0.0, z = 0.0;
    int got = 0;
    for (int k = 0; k < floats / 3; ++k) {
      if (ls >> x >> y >> z) {
        joints[static_cast<std::size_t>(k)] = Eigen::Vector3d(x, y, z);
        ++got;
      }
    }
    if (got != topo.joint_count)
      throw std::runtime_error(path + ": row with " + std::to_string(got * 3) +
                               " joint values, expected " + std::to_string(floats));
    seq.frames.push_back(std::move(joints));
  }
  if (seq.frames.size() < 2)
    throw std::runtime_error(path + ": fewer than 2 frames" +
                             (range ? " in the requested range" : ""));
  return seq;
}

SkeletonSequence parse_generic_csv(const std::string& path, const Topology& topo) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::map<int, std::vector<Eigen::Vector3d>> frames;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    int frame = 0, joint = 0;
    double x = 0.0, y = 0.0, z = 0.0;
    if (!(ls >> frame >> joint >> x >> y >> z)) {
      if (first) {  // header row
        first = false;
        continue;
      }
      throw std::runtime_error(path + ": malformed CSV row '" + line + "'");
    }
    first = false;
    auto& f = frames[frame];
    f.resize(static_cast<std::size_t>(topo.joint_count), Eigen::Vector3d::Zero());
    if (joint < 0 || joint >= topo.joint_count)
      throw std::runtime_error(path + ": joint index out of range");
    f[static_cast<std::size_t>(joint)] = Eigen::Vector3d(x, y, z);
  }
  if (frames.size() < 2) throw std::runtime_error(path + ": fewer than 2 frames");
  SkeletonSequence seq;
  seq.topology = topo;
  for (auto& [_, joints] : frames) seq.frames.push_back(std::move(joints));
  return seq;
}

namespace {

// MSR-style name: a01_s01_e01*.txt
const std::regex kMsrName(R"(a(\d+)_s(\d+)_e(\d+).*\.txt)", std::regex::icase);
// UTKinect joints file: joints_s01_e01.txt
const std::regex kUtName(R"(joints_s(\d+)_e(\d+)\.txt)", std::regex::icase);

DatasetManifest ingest_msr_like(const std::string& root, DatasetKind kind) {
  DatasetManifest m;
  m.root = root;
  m.kind = kind;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    std::smatch match;
    const std::string name = p.filename().string();
    if (!std::regex_match(name, match, kMsrName)) continue;
    SampleRecord r;
    r.action = std::stoi(match[1]);
    r.subject = std::stoi(match[2]);
    r.trial = std::stoi(match[3]);
    if (kind == DatasetKind::kNucla) {
      // Per-view directories view_1/, view_2/, ...
      const std::string parent = p.parent_path().filename().string();
      std::smatch vm;
      static const std::regex view_re(R"(view_?(\d+))", std::regex::icase);
      if (std::regex_match(parent, vm, view_re)) r.view = std::stoi(vm[1]);
    }
    char id[64];
    std::snprintf(id, sizeof(id), "a%02d_s%02d_e%02d_v%02d", r.action, r.subject, r.trial, r.view);
    r.id = id;
    r.path = p.string();
    m.records.push_back(std::move(r));
  }
  return m;
}

DatasetManifest ingest_utkinect(const std::string& root) {
  DatasetManifest m;
  m.root = root;
  m.kind = DatasetKind::kUtKinect;

  // Label file: sequence headers s01_e01 followed by "action: start end".
  fs::path label_path;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = lower(entry.path().filename().string());
    if (name == "actionlabel.txt" || name == "actionlabels.txt") label_path = entry.path();
  }
  if (label_path.empty())
    throw std::runtime_error("utkinect ingest: actionLabel.txt not found under " + root);

  std::map<std::string, fs::path> joints_files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::smatch match;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, match, kUtName))
      joints_files["s" + std::string(match[1]) + "_e" + std::string(match[2])] = entry.path();
  }

  std::ifstream in(label_path);
  std::string line;
  std::string current;
  int next_action_id = 1;
  static const std::regex header_re(R"(\s*(s\d+_e\d+)\s*:?\s*)");
  static const std::regex clip_re(R"(\s*([A-Za-z]+)\s*:\s*(\S+)\s+(\S+)\s*)");
  while (std::getline(in, line)) {
    std::smatch match;
    if (std::regex_match(line, match, header_re)) {
      current = match[1];
      continue;
    }
    if (!std::regex_match(line, match, clip_re)) continue;
    const std::string action_name = match[1];
    const std::string start_s = match[2], end_s = match[3];
    if (lower(start_s) == "nan" || lower(end_s) == "nan") continue;  // missing clip
    if (current.empty() || !joints_files.count(current)) continue;

    int action_id = 0;
    for (const auto& [id, nm] : m.action_names)
      if (nm == action_name) action_id = id;
    if (action_id == 0) {
      action_id = next_action_id++;
      m.action_names[action_id] = action_name;
    }

    SampleRecord r;
    r.id = current + "_" + action_name;
    r.path = joints_files[current].string();
    r.action = action_id;
    std::smatch sm;
    static const std::regex se_re(R"(s(\d+)_e(\d+))");
    if (std::regex_match(current, sm, se_re)) {
      r.subject = std::stoi(sm[1]);
      r.trial = std::stoi(sm[2]);
    }
    r.frame_range = std::make_pair(std::stoi(start_s), std::stoi(end_s));
    m.records.push_back(std::move(r));
  }
  return m;
}

DatasetManifest ingest_generic(const std::string& root) {
  DatasetManifest m;
  m.root = root;
  m.kind = DatasetKind::kGeneric;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    // Optional MSR-style metadata in the stem; otherwise sequential ids.
    SampleRecord r;
    std::smatch match;
    const std::string name = p.filename().string();
    static const std::regex csv_re(R"(a(\d+)_s(\d+)_e(\d+).*\.csv)", std::regex::icase);
    if (std::regex_match(name, match, csv_re)) {
      r.action = std::stoi(match[1]);
      r.subject = std::stoi(match[2]);
      r.trial = std::stoi(match[3]);
    }
    r.id = p.stem().string();
    r.path = p.string();
    m.records.push_back(std::move(r));
  }
  return m;
}

}  // namespace

DatasetManifest ingest(const std::string& root, DatasetKind kind,
                       const std::vector<std::string>& exclude,
                       const std::string& topology_path) {
  if (!fs::is_directory(root)) throw std::runtime_error("dataset root not found: " + root);
  DatasetManifest m;
  switch (kind) {
    case DatasetKind::kMsr3d:
    case DatasetKind::kNucla:
      m = ingest_msr_like(root, kind);
      break;
    case DatasetKind::kUtKinect:
      m = ingest_utkinect(root);
      break;
    case DatasetKind::kGeneric:
      m = ingest_generic(root);
      break;
  }
  m.topology_path = topology_path;
  if (!exclude.empty()) {
    const std::set<std::string> drop(exclude.begin(), exclude.end());
    std::erase_if(m.records, [&](const SampleRecord& r) { return drop.count(r.id) > 0; });
  }
  if (m.kind == DatasetKind::kMsr3d || m.kind == DatasetKind::kNucla || m.kind == DatasetKind::kGeneric)
    for (const auto& r : m.records)
      if (!m.action_names.count(r.action)) {
        char nm[16];
        std::snprintf(nm, sizeof(nm), "a%02d", r.action);
        m.action_names[r.action] = nm;
      }
  return m;
}

LoadedDataset load_dataset(const DatasetManifest& manifest, const LoadOptions& options) {
  LoadedDataset out;
  const Topology topo = manifest.topology();
  for (const auto& rec : manifest.records) {
    try {
      SkeletonSequence seq;
      switch (manifest.kind) {
        case DatasetKind::kMsr3d:
        case DatasetKind::kNucla:
          seq = parse_msr_skeleton(rec.path, topo);
          break;
        case DatasetKind::kUtKinect:
          seq = parse_utkinect_joints(rec.path, topo, rec.frame_range);
          break;
        case DatasetKind::kGeneric:
          seq = parse_generic_csv(rec.path, topo);
          break;
      }
      seq.meta.id = rec.id;
      seq.meta.action = rec.action;
      seq.meta.subject = rec.subject;
      seq.meta.trial = rec.trial;
      seq.meta.view = rec.view;
      seq.validate();
      if (options.drop_degenerate && sequence_is_degenerate(seq))
        throw std::runtime_error("all joint positions are (near) zero");
      out.sequences.push_back(std::move(seq));
      out.records.push_back(rec);
    } catch (const std::exception& e) {
      if (options.fail_fast) throw;
      out.errors.push_back(LoadError{rec.id, rec.path, e.what()});
    }
  }
  return out;
}

namespace {

bool subject_in(const std::vector<int>& subjects, int subject) {
  return std::find(subjects.begin(), subjects.end(), subject) != subjects.end();
}

}  // namespace

std::vector<Split> make_splits(const DatasetManifest& manifest, const SplitSpec& spec,
                               std::uint64_t /*seed*/) {
  std::vector<const SampleRecord*> selected;
  for (const auto& r : manifest.records) {
    if (spec.protocol == Protocol::kSubsetAs && !spec.action_subset.empty() &&
        std::find(spec.action_subset.begin(), spec.action_subset.end(), r.action) ==
            spec.action_subset.end())
      continue;
    selected.push_back(&r);
  }
  if (selected.empty()) throw std::runtime_error("split: no samples selected");

  std::vector<Split> folds;
  switch (spec.protocol) {
    case Protocol::kLoocv: {
      folds.resize(selected.size());
      for (std::size_t k = 0; k < selected.size(); ++k) {
        for (std::size_t i = 0; i < selected.size(); ++i)
          (i == k ? folds[k].test_ids : folds[k].train_ids).push_back(selected[i]->id);
      }
      break;
    }
    case Protocol::kCrossView: {
      Split s;
      bool any_test = false;
      for (const auto* r : selected) {
        if (r->view == spec.test_view) {
          s.test_ids.push_back(r->id);
          any_test = true;
        } else {
          s.train_ids.push_back(r->id);
        }
      }
      if (!any_test) throw std::runtime_error("cross_view: no samples with the test view");
      folds.push_back(std::move(s));
      break;
    }
    case Protocol::kCrossSubjectHalf:
    case Protocol::kSubsetAs: {
      std::vector<int> train = spec.train_subjects;
      if (train.empty()) {
        // Default: odd subjects train, even subjects test.
        std::set<int> subjects;
        for (const auto* r : selected) subjects.insert(r->subject);
        for (int s : subjects)
          if (s % 2 == 1) train.push_back(s);
      }
      Split s;
      for (const auto* r : selected)
        (subject_in(train, r->subject) ? s.train_ids : s.test_ids).push_back(r->id);
      if (s.train_ids.empty() || s.test_ids.empty())
        throw std::runtime_error("cross_subject: one side of the split is empty");
      folds.push_back(std::move(s));
      break;
    }
  }

  for (const auto& fold : folds) {
    std::set<std::string> train(fold.train_ids.begin(), fold.train_ids.end());
    for (const auto& id : fold.test_ids)
      if (train.count(id)) throw std::runtime_error("split leakage: id on both sides: " + id);
  }
  return folds;
}

Split make_split(const DatasetManifest& manifest, const SplitSpec& spec, std::uint64_t seed) {
  return make_splits(manifest, spec, seed).front();
}

void save_split_json(const std::string& path, const SplitSpec& spec, std::uint64_t seed,
                     const std::vector<Split>& folds) {
  nlohmann::ordered_json j;
  j["format"] = "glds-split";
  j["protocol"] = to_string(spec.protocol);
  if (!spec.subset_name.empty()) j["subset"] = spec.subset_name;
  j["seed"] = seed;
  auto& arr = j["folds"] = nlohmann::ordered_json::array();
  for (const auto& fold : folds) {
    nlohmann::ordered_json f;
    f["train"] = fold.train_ids;
    f["test"] = fold.test_ids;
    arr.push_back(std::move(f));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write split file: " + path);
  out << j.dump(1, '\t') << '\n';
}

std::map<std::string, std::vector<int>> load_action_subsets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read subset config: " + path);
  std::map<std::string, std::vector<int>> subsets;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string name = line.substr(0, eq);
    name.erase(std::remove_if(name.begin(), name.end(), ::isspace), name.end());
    if (name.empty()) continue;
    std::string rest = line.substr(eq + 1);
    std::replace(rest.begin(), rest.end(), ',', ' ');
    std::istringstream rs(rest);
    int v = 0;
    while (rs >> v) subsets[name].push_back(v);
  }
  return subsets;
}

std::vector<std::string> load_exclusions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read exclusion config: " + path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string id;
    if (ls >> id) ids.push_back(id);
  }
  return ids;
}

}  // namespace glds
