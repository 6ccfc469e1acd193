#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "glds/skeleton.hpp"

namespace glds {

enum class DatasetKind { kMsr3d, kUtKinect, kNucla, kGeneric };

DatasetKind dataset_kind_from_string(const std::string& name);
std::string to_string(DatasetKind kind);

struct SampleRecord {
  std::string id;      // unique within the manifest
  std::string path;    // skeleton file
  int action = 0;
  int subject = 0;
  int trial = 0;
  int view = 0;
  /// UTKinect clips live inside one joints file; [start, end] frame numbers.
  std::optional<std::pair<int, int>> frame_range;
};

struct DatasetManifest {
  std::string root;
  DatasetKind kind = DatasetKind::kGeneric;
  std::string topology_path;  // empty: kinect20 default
  std::vector<SampleRecord> records;
  std::map<int, std::string> action_names;

  void save_json(const std::string& path) const;
  static DatasetManifest load_json(const std::string& path);
  Topology topology() const;
};

/// Scans a dataset root and builds the manifest. `exclude` lists sample ids
/// to drop (known-corrupt files ship as config, not code).
DatasetManifest ingest(const std::string& root, DatasetKind kind,
                       const std::vector<std::string>& exclude = {},
                       const std::string& topology_path = "");

/// MSR skeleton text: 20 joint rows per frame, 4 reals per row (x y z conf).
SkeletonSequence parse_msr_skeleton(const std::string& path, const Topology& topo);

/// UTKinect joints file: rows of frame number + 60 reals; keeps rows whose
/// frame number lies in [range.first, range.second] when a range is given.
SkeletonSequence parse_utkinect_joints(const std::string& path, const Topology& topo,
                                       std::optional<std::pair<int, int>> range = {});

/// Generic CSV: header optional, rows "frame,joint,x,y,z".
SkeletonSequence parse_generic_csv(const std::string& path, const Topology& topo);

struct LoadError {
  std::string id;
  std::string path;
  std::string message;
};

struct LoadedDataset {
  std::vector<SkeletonSequence> sequences;  // aligned with `records`
  std::vector<SampleRecord> records;        // successfully loaded records
  std::vector<LoadError> errors;
};

struct LoadOptions {
  bool fail_fast = false;
  /// Drop sequences whose joints are all (near) zero in every frame; the MSR
  /// release contains such unusable recordings.
  bool drop_degenerate = true;
};

LoadedDataset load_dataset(const DatasetManifest& manifest, const LoadOptions& options = {});

enum class Protocol { kCrossSubjectHalf, kLoocv, kCrossView, kSubsetAs };

Protocol protocol_from_string(const std::string& name);
std::string to_string(Protocol p);

struct SplitSpec {
  Protocol protocol = Protocol::kCrossSubjectHalf;
  /// Training subjects for cross-subject protocols (default: odd subjects).
  std::vector<int> train_subjects;
  /// Action set restriction (subset_AS protocol), e.g. AS1 list.
  std::vector<int> action_subset;
  std::string subset_name;
  /// Test view for cross_view (train = all other views).
  int test_view = 0;
};

struct Split {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

/// All folds of the protocol (1 fold except LOOCV). Deterministic: ids keep
/// manifest order; `seed` is recorded in the split file only.
std::vector<Split> make_splits(const DatasetManifest& manifest, const SplitSpec& spec,
                               std::uint64_t seed);
/// First (or only) fold.
Split make_split(const DatasetManifest& manifest, const SplitSpec& spec, std::uint64_t seed);

void save_split_json(const std::string& path, const SplitSpec& spec, std::uint64_t seed,
                     const std::vector<Split>& folds);

/// AS subset config: lines "AS1 = 2,3,5,6,10,13,18,20".
std::map<std::string, std::vector<int>> load_action_subsets(const std::string& path);

/// Exclusion config: one sample id per line, '#' comments.
std::vector<std::string> load_exclusions(const std::string& path);

}  // namespace glds
