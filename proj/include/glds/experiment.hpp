#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "glds/config.hpp"
#include "glds/dataset.hpp"
#include "glds/grassmann.hpp"
#include "glds/lds.hpp"
#include "glds/skeleton.hpp"

namespace glds {

enum class ModelKind { kGlds, kLds };
enum class ClassifierKind { kSrc, kNearestNeighbor };

/// Resolved experiment parameters; see configs/ for the file format.
struct ExperimentConfig {
  // [dataset]
  std::string manifest_path;  // either a manifest...
  std::string root;           // ...or a root + kind to ingest on the fly
  DatasetKind kind = DatasetKind::kGeneric;
  std::string topology_path;
  std::string exclusions_path;

  // [features]
  Representation representation = Representation::kRigidBodies3;
  bool hip_center = true;

  // [model]
  ModelKind model = ModelKind::kGlds;
  std::vector<std::int64_t> ranks;  // empty: full mode ranks
  int state_dim = 5;                // d; <= 0 means "use truncation m"
  int truncation = 5;               // m
  double margin = 0.01;
  int tucker_max_iter = 25;
  double tucker_tol = 1e-7;

  // [classifier]
  ClassifierKind classifier = ClassifierKind::kSrc;
  double lambda = 0.0;  // <= 0: 0.01 * d
  double solver_tol = 1e-8;
  int solver_max_iter = 1000;
  bool sum_to_one = false;

  // [protocol]
  Protocol protocol = Protocol::kCrossSubjectHalf;
  std::vector<int> train_subjects;
  std::vector<std::string> subsets;  // subset_AS: names into the subset file
  std::string subset_file;
  int test_view = 0;

  // [run]
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  int threads = 0;  // 0: leave OpenMP default
  bool cache_features = true;

  static ExperimentConfig from_config(const Config& cfg);
  static ExperimentConfig from_file(const std::string& path);
  /// Full resolved snapshot (defaults filled in); round-trips through parse.
  Config resolved() const;
  void validate() const;
};

struct StageTimings {
  double load_s = 0.0;
  double features_s = 0.0;
  double fit_s = 0.0;
  double gram_s = 0.0;
  double classify_s = 0.0;
  double total_s = 0.0;
};

struct FoldResult {
  std::string name;
  int test_count = 0;
  int correct = 0;
  double accuracy = 0.0;
};

/// Per-protocol evaluation result; construction checks the bookkeeping
/// (confusion row sums, trace/total).
class EvaluationReport {
 public:
  EvaluationReport(std::vector<int> class_labels, std::map<int, std::string> class_names,
                   Matrix confusion, std::vector<FoldResult> folds, StageTimings timings,
                   Config resolved_config);

  double overall_accuracy() const { return overall_accuracy_; }
  const std::vector<FoldResult>& folds() const { return folds_; }
  const Matrix& confusion() const { return confusion_; }
  const std::vector<int>& class_labels() const { return class_labels_; }
  double class_accuracy(int label) const;
  const StageTimings& timings() const { return timings_; }
  const Config& resolved_config() const { return resolved_config_; }

  std::string to_json() const;

 private:
  std::vector<int> class_labels_;
  std::map<int, std::string> class_names_;
  Matrix confusion_;  // rows: true class, cols: predicted
  std::vector<FoldResult> folds_;
  StageTimings timings_;
  Config resolved_config_;
  double overall_accuracy_ = 0.0;
};

/// One sample unit of the pipeline (a multiview group for 4RB).
struct PipelineSample {
  std::string id;
  int action = 0;
  int subject = 0;
  int trial = 0;
  int view = 0;
};

struct FeatureSet {
  std::vector<PipelineSample> samples;
  std::vector<TensorSeries> series;  // aligned with samples
  std::map<int, std::string> action_names;
  bool from_cache = false;
};

/// normalize + extract for every manifest record (parallel over sequences),
/// backed by the on-disk cache keyed on dataset/representation/normalization.
FeatureSet compute_features(const ExperimentConfig& config, const DatasetManifest& manifest);

/// Fits one subspace point per sample (parallel over samples).
std::vector<GrassmannPoint> fit_points(const ExperimentConfig& config, const FeatureSet& features);

DatasetManifest resolve_manifest(const ExperimentConfig& config);

EvaluationReport run_experiment(const ExperimentConfig& config);

struct SweepRow {
  int d = 0;
  double accuracy = 0.0;
  std::string error;  // non-empty when this d failed
};

/// One evaluation per subspace dimension, reusing extracted features; the
/// truncation m tracks d unless decouple_m is set.
std::vector<SweepRow> sweep_dimension(const ExperimentConfig& config,
                                      const std::vector<int>& d_values, bool decouple_m = false);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

/// Writes report.json, confusion.csv and the resolved config; returns paths.
std::vector<std::string> emit_report(const EvaluationReport& report, const std::string& dir);

}  // namespace glds
