#include "glds/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "glds/parallel.hpp"

namespace fs = std::filesystem;

namespace glds {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string join_ints(const std::vector<std::int64_t>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
  return out.str();
}

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
  return out.str();
}

std::string join_strings(const std::vector<std::string>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
  return out.str();
}

std::vector<int> parse_int_csv(const std::string& text) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<int> out;
  int v = 0;
  while (in >> v) out.push_back(v);
  return out;
}

std::vector<std::string> parse_string_csv(const std::string& text) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string v;
  while (in >> v) out.push_back(v);
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const Config& cfg) {
  ExperimentConfig c;
  c.manifest_path = cfg.get_or("dataset", "manifest", "");
  c.root = cfg.get_or("dataset", "root", "");
  c.kind = dataset_kind_from_string(cfg.get_or("dataset", "kind", "generic"));
  c.topology_path = cfg.get_or("dataset", "topology", "");
  c.exclusions_path = cfg.get_or("dataset", "exclusions", "");

  c.representation = representation_from_string(cfg.get_or("features", "representation", "3RB"));
  const std::string norm = cfg.get_or("features", "normalize", "hip");
  if (norm == "hip")
    c.hip_center = true;
  else if (norm == "none")
    c.hip_center = false;
  else
    throw std::runtime_error("config: features.normalize must be hip or none");

  const std::string model = cfg.get_or("model", "kind", "glds");
  if (model == "glds")
    c.model = ModelKind::kGlds;
  else if (model == "lds")
    c.model = ModelKind::kLds;
  else
    throw std::runtime_error("config: model.kind must be glds or lds");
  if (cfg.has("model", "ranks") && cfg.get("model", "ranks") != "full")
    c.ranks = cfg.get_int_list("model", "ranks");
  c.truncation = static_cast<int>(cfg.get_int("model", "truncation", 5));
  c.state_dim = static_cast<int>(cfg.get_int("model", "state_dim", c.truncation));
  c.margin = cfg.get_double("model", "margin", 0.01);
  c.tucker_max_iter = static_cast<int>(cfg.get_int("model", "tucker_max_iter", 25));
  c.tucker_tol = cfg.get_double("model", "tucker_tol", 1e-7);

  const std::string cls = cfg.get_or("classifier", "kind", "src");
  if (cls == "src")
    c.classifier = ClassifierKind::kSrc;
  else if (cls == "nn")
    c.classifier = ClassifierKind::kNearestNeighbor;
  else
    throw std::runtime_error("config: classifier.kind must be src or nn");
  // "auto" (or absence) selects the scale-aware default 0.01 * d.
  const std::string lambda_text = cfg.get_or("classifier", "lambda", "auto");
  if (lambda_text == "auto") {
    c.lambda = -1.0;
  } else {
    c.lambda = std::stod(lambda_text);
    if (c.lambda < 0.0) throw std::runtime_error("config: classifier.lambda must be >= 0");
  }
  c.solver_tol = cfg.get_double("classifier", "solver_tol", 1e-8);
  c.solver_max_iter = static_cast<int>(cfg.get_int("classifier", "solver_max_iter", 1000));
  c.sum_to_one = cfg.get_bool("classifier", "sum_to_one", false);

  c.protocol = protocol_from_string(cfg.get_or("protocol", "kind", "cross_subject_half"));
  if (cfg.has("protocol", "train_subjects"))
    c.train_subjects = parse_int_csv(cfg.get("protocol", "train_subjects"));
  if (cfg.has("protocol", "subsets")) c.subsets = parse_string_csv(cfg.get("protocol", "subsets"));
  c.subset_file = cfg.get_or("protocol", "subset_file", "");
  c.test_view = static_cast<int>(cfg.get_int("protocol", "test_view", 0));

  c.output_dir = cfg.get_or("run", "output_dir", "out");
  c.seed = static_cast<std::uint64_t>(cfg.get_int("run", "seed", 0));
  c.threads = static_cast<int>(cfg.get_int("run", "threads", 0));
  c.cache_features = cfg.get_bool("run", "cache_features", true);

  if (const char* dir = std::getenv("GLDS_OUTPUT_DIR")) c.output_dir = dir;
  if (const char* threads = std::getenv("GLDS_THREADS")) c.threads = std::atoi(threads);

  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  return from_config(Config::parse_file(path));
}

void ExperimentConfig::validate() const {
  if (manifest_path.empty() && root.empty())
    throw std::runtime_error("config: dataset.manifest or dataset.root required");
  if (truncation < 0) throw std::runtime_error("config: model.truncation must be >= 0");
  if (state_dim < 1) throw std::runtime_error("config: model.state_dim must be >= 1");
  if (margin <= 0.0 || margin >= 1.0) throw std::runtime_error("config: model.margin in (0,1)");
  if (solver_tol <= 0.0) throw std::runtime_error("config: classifier.solver_tol must be > 0");
  if (model == ModelKind::kLds && representation != Representation::kJoints2 &&
      representation != Representation::kRigidBodies2)
    throw std::runtime_error("config: model.kind = lds requires a 2-order representation");
  if (protocol == Protocol::kSubsetAs && subset_file.empty())
    throw std::runtime_error("config: protocol.subset_file required for subset_AS");
}

Config ExperimentConfig::resolved() const {
  Config out;
  out.set("dataset", "manifest", manifest_path);
  out.set("dataset", "root", root);
  out.set("dataset", "kind", to_string(kind));
  out.set("dataset", "topology", topology_path);
  out.set("dataset", "exclusions", exclusions_path);
  out.set("features", "representation", to_string(representation));
  out.set("features", "normalize", hip_center ? "hip" : "none");
  out.set("model", "kind", model == ModelKind::kGlds ? "glds" : "lds");
  out.set("model", "ranks", ranks.empty() ? "full" : join_ints(ranks));
  out.set("model", "state_dim", std::to_string(state_dim));
  out.set("model", "truncation", std::to_string(truncation));
  out.set("model", "margin", std::to_string(margin));
  out.set("model", "tucker_max_iter", std::to_string(tucker_max_iter));
  {
    std::ostringstream tol;
    tol << tucker_tol;
    out.set("model", "tucker_tol", tol.str());
  }
  out.set("classifier", "kind", classifier == ClassifierKind::kSrc ? "src" : "nn");
  {
    std::ostringstream l, t;
    if (lambda < 0.0)
      l << "auto";
    else
      l << lambda;
    t << solver_tol;
    out.set("classifier", "lambda", l.str());
    out.set("classifier", "solver_tol", t.str());
  }
  out.set("classifier", "solver_max_iter", std::to_string(solver_max_iter));
  out.set("classifier", "sum_to_one", sum_to_one ? "true" : "false");
  out.set("protocol", "kind", to_string(protocol));
  out.set("protocol", "train_subjects", join_ints(train_subjects));
  out.set("protocol", "subsets", join_strings(subsets));
  out.set("protocol", "subset_file", subset_file);
  out.set("protocol", "test_view", std::to_string(test_view));
  out.set("run", "output_dir", output_dir);
  out.set("run", "seed", std::to_string(seed));
  out.set("run", "threads", std::to_string(threads));
  out.set("run", "cache_features", cache_features ? "true" : "false");
  return out;
}

DatasetManifest resolve_manifest(const ExperimentConfig& config) {
  if (!config.manifest_path.empty()) return DatasetManifest::load_json(config.manifest_path);
  std::vector<std::string> exclude;
  if (!config.exclusions_path.empty()) exclude = load_exclusions(config.exclusions_path);
  return ingest(config.root, config.kind, exclude, config.topology_path);
}

namespace {

// ---- feature cache ------------------------------------------------------

std::string cache_key(const ExperimentConfig& config, const DatasetManifest& manifest) {
  std::ostringstream meta;
  std::ostringstream manifest_text;
  for (const auto& r : manifest.records)
    manifest_text << r.id << '\0' << r.path << '\0' << r.action << '\0' << r.subject << '\0'
                  << r.trial << '\0' << r.view << '\0';
  meta << to_string(manifest.kind) << '\0' << manifest_text.str() << '\0'
       << to_string(config.representation) << '\0' << (config.hip_center ? "hip" : "none") << '\0'
       << manifest.topology_path;
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a(meta.str())));
  return hex;
}

void write_cache(const std::string& path, const FeatureSet& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return;  // cache is best-effort
  auto put_i64 = [&](std::int64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  auto put_str = [&](const std::string& s) {
    put_i64(static_cast<std::int64_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  };
  put_i64(static_cast<std::int64_t>(features.samples.size()));
  for (std::size_t i = 0; i < features.samples.size(); ++i) {
    const auto& s = features.samples[i];
    put_str(s.id);
    put_i64(s.action);
    put_i64(s.subject);
    put_i64(s.trial);
    put_i64(s.view);
    const Tensor& t = features.series[i].frames;
    put_i64(t.order());
    for (auto d : t.shape()) put_i64(d);
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * 8));
  }
  put_i64(static_cast<std::int64_t>(features.action_names.size()));
  for (const auto& [id, name] : features.action_names) {
    put_i64(id);
    put_str(name);
  }
}

bool read_cache(const std::string& path, FeatureSet& features) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  auto get_i64 = [&]() {
    std::int64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  bool ok = true;
  auto get_str = [&]() {
    const std::int64_t n = get_i64();
    if (n < 0 || n > (1 << 20)) {
      ok = false;
      return std::string();
    }
    std::string s(static_cast<std::size_t>(n), '\0');
    in.read(s.data(), n);
    return s;
  };
  const std::int64_t count = get_i64();
  if (!in || count < 0 || count > (1 << 24)) return false;
  features.samples.clear();
  features.series.clear();
  for (std::int64_t i = 0; i < count; ++i) {
    PipelineSample s;
    s.id = get_str();
    s.action = static_cast<int>(get_i64());
    s.subject = static_cast<int>(get_i64());
    s.trial = static_cast<int>(get_i64());
    s.view = static_cast<int>(get_i64());
    const std::int64_t order = get_i64();
    if (!in || order < 1 || order > 8) return false;
    std::vector<std::int64_t> shape(static_cast<std::size_t>(order));
    for (auto& d : shape) d = get_i64();
    std::int64_t total = 1;
    for (auto d : shape) {
      if (d < 1 || d > (1 << 24)) return false;
      total *= d;
    }
    if (!ok || total > (std::int64_t{1} << 31)) return false;
    Vector data(total);
    in.read(reinterpret_cast<char*>(data.data()), total * 8);
    if (!in) return false;
    features.samples.push_back(std::move(s));
    features.series.push_back(TensorSeries{Tensor(shape, std::move(data))});
  }
  const std::int64_t names = get_i64();
  if (names < 0 || names > (1 << 20)) return false;
  for (std::int64_t i = 0; i < names; ++i) {
    const int id = static_cast<int>(get_i64());
    features.action_names[id] = get_str();
  }
  return ok && static_cast<bool>(in);
}

// ---- sample grouping ----------------------------------------------------

struct MultiviewGroup {
  PipelineSample sample;
  std::vector<std::size_t> member_indices;
};

std::vector<MultiviewGroup> group_views(const LoadedDataset& data) {
  std::map<std::string, MultiviewGroup> groups;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& r = data.records[i];
    char key[64];
    std::snprintf(key, sizeof(key), "a%02d_s%02d_e%02d", r.action, r.subject, r.trial);
    auto& g = groups[key];
    if (g.member_indices.empty()) {
      g.sample.id = key;
      g.sample.action = r.action;
      g.sample.subject = r.subject;
      g.sample.trial = r.trial;
    }
    g.member_indices.push_back(i);
  }
  std::vector<MultiviewGroup> out;
  for (auto& [_, g] : groups)
    if (g.member_indices.size() >= 2) out.push_back(std::move(g));
  return out;
}

}  // namespace

FeatureSet compute_features(const ExperimentConfig& config, const DatasetManifest& manifest) {
  FeatureSet features;
  std::string cache_path;
  if (config.cache_features) {
    const fs::path dir = fs::path(config.output_dir) / "cache";
    fs::create_directories(dir);
    cache_path = (dir / ("features_" + cache_key(config, manifest) + ".bin")).string();
    if (read_cache(cache_path, features)) {
      features.from_cache = true;
      return features;
    }
    features = FeatureSet{};
  }

  LoadOptions load_options;
  load_options.drop_degenerate = manifest.kind != DatasetKind::kGeneric;
  const LoadedDataset data = load_dataset(manifest, load_options);
  for (const auto& err : data.errors)
    std::fprintf(stderr, "load: skipping %s (%s): %s\n", err.id.c_str(), err.path.c_str(),
                 err.message.c_str());
  if (data.sequences.empty()) throw std::runtime_error("no sequences loaded");
  features.action_names = manifest.action_names;

  if (is_multiview(config.representation)) {
    const auto groups = group_views(data);
    if (groups.empty()) throw std::runtime_error("4RB: no multiview groups with >= 2 views");
    features.samples.resize(groups.size());
    features.series.resize(groups.size());
    for_each_index(static_cast<std::int64_t>(groups.size()), true, [&](std::int64_t g) {
      const auto& group = groups[static_cast<std::size_t>(g)];
      std::vector<SkeletonSequence> views;
      for (auto idx : group.member_indices) {
        SkeletonSequence seq = data.sequences[idx];
        if (config.hip_center) seq = normalize(seq);
        views.push_back(std::move(seq));
      }
      features.samples[static_cast<std::size_t>(g)] = group.sample;
      features.series[static_cast<std::size_t>(g)] =
          extract_multiview(MultiviewSequence::from_views(std::move(views)),
                            config.representation);
    });
  } else {
    features.samples.resize(data.sequences.size());
    features.series.resize(data.sequences.size());
    for_each_index(static_cast<std::int64_t>(data.sequences.size()), true, [&](std::int64_t i) {
      const auto& seq = data.sequences[static_cast<std::size_t>(i)];
      const auto& rec = data.records[static_cast<std::size_t>(i)];
      features.samples[static_cast<std::size_t>(i)] =
          PipelineSample{rec.id, rec.action, rec.subject, rec.trial, rec.view};
      const SkeletonSequence prepared = config.hip_center ? normalize(seq) : seq;
      features.series[static_cast<std::size_t>(i)] = extract(prepared, config.representation);
    });
  }

  if (!cache_path.empty()) write_cache(cache_path, features);
  return features;
}

std::vector<GrassmannPoint> fit_points(const ExperimentConfig& config,
                                       const FeatureSet& features) {
  const std::int64_t n = static_cast<std::int64_t>(features.series.size());
  std::vector<GrassmannPoint> points(static_cast<std::size_t>(n));
  std::vector<std::string> failures(static_cast<std::size_t>(n));
  for_each_index(n, true, [&](std::int64_t i) {
    try {
      const TensorSeries& series = features.series[static_cast<std::size_t>(i)];
      if (config.model == ModelKind::kLds) {
        const Matrix y = series.as_columns();
        if (std::min(y.rows(), y.cols()) < config.state_dim)
          throw std::runtime_error(
              "sequence too short for the classical LDS at state_dim " +
              std::to_string(config.state_dim) + " (tau = " + std::to_string(y.cols()) + ")");
        GldsOptions options;
        options.stabilization_margin = config.margin;
        GldsModel model = fit_lds(y, config.state_dim, options);
        const Matrix o = observability(model, config.truncation);
        points[static_cast<std::size_t>(i)] = subspace_from_observability(o, config.state_dim);
      } else {
        GldsOptions options;
        options.stabilization_margin = config.margin;
        options.tucker_max_iter = config.tucker_max_iter;
        options.tucker_tol = config.tucker_tol;
        // Short sequences cap the temporal Tucker rank; the subspace
        // dimension stays shared across the dataset.
        options.temporal_rank =
            static_cast<int>(std::min<std::int64_t>(config.state_dim, series.length()));
        std::vector<std::int64_t> ranks = config.ranks;
        const auto fshape = series.frame_shape();
        if (ranks.empty()) ranks = fshape;
        if (ranks.size() != fshape.size())
          throw std::runtime_error("model.ranks length does not match the representation order");
        auto [model, point] = fit_glds(series, ranks, config.state_dim, config.truncation,
                                       options);
        points[static_cast<std::size_t>(i)] = std::move(point);
      }
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(i)] = e.what();
    }
  });
  for (std::size_t i = 0; i < failures.size(); ++i)
    if (!failures[i].empty())
      throw std::runtime_error("fit failed for " + features.samples[i].id + ": " + failures[i]);
  return points;
}

namespace {

// ---- evaluation ---------------------------------------------------------

struct ClassIndex {
  std::vector<int> labels;           // sorted distinct
  std::map<int, std::size_t> index;  // label -> row
};

ClassIndex build_class_index(const std::vector<PipelineSample>& samples,
                             const std::set<std::string>& in_play) {
  std::set<int> labels;
  for (const auto& s : samples)
    if (in_play.count(s.id)) labels.insert(s.action);
  ClassIndex ci;
  for (int l : labels) {
    ci.index[l] = ci.labels.size();
    ci.labels.push_back(l);
  }
  return ci;
}

struct FoldEvaluation {
  FoldResult result;
  Matrix confusion;
};

FoldEvaluation evaluate_fold(const ExperimentConfig& config, const FeatureSet& features,
                             const std::vector<GrassmannPoint>& points, const Split& split,
                             const Matrix& all_gram, const ClassIndex& classes,
                             const std::string& fold_name) {
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < features.samples.size(); ++i)
    by_id[features.samples[i].id] = i;

  std::vector<std::size_t> train_idx, test_idx;
  for (const auto& id : split.train_ids)
    if (by_id.count(id)) train_idx.push_back(by_id[id]);
  for (const auto& id : split.test_ids)
    if (by_id.count(id)) test_idx.push_back(by_id[id]);
  if (train_idx.empty() || test_idx.empty())
    throw std::runtime_error("fold " + fold_name + ": empty train or test side");

  std::vector<GrassmannPoint> atoms;
  std::vector<int> labels;
  Matrix gram(static_cast<std::int64_t>(train_idx.size()),
              static_cast<std::int64_t>(train_idx.size()));
  for (std::size_t a = 0; a < train_idx.size(); ++a) {
    atoms.push_back(points[train_idx[a]]);
    labels.push_back(features.samples[train_idx[a]].action);
    for (std::size_t b = 0; b < train_idx.size(); ++b)
      gram(static_cast<std::int64_t>(a), static_cast<std::int64_t>(b)) =
          all_gram(static_cast<std::int64_t>(train_idx[a]),
                   static_cast<std::int64_t>(train_idx[b]));
  }
  const GrassmannDictionary dict(std::move(atoms), std::move(labels), std::move(gram));

  SparseCodeOptions code_options;
  code_options.lambda = config.lambda;
  code_options.tol = config.solver_tol;
  code_options.max_iter = config.solver_max_iter;
  code_options.sum_to_one = config.sum_to_one;

  std::vector<int> predicted(test_idx.size());
  for_each_index(static_cast<std::int64_t>(test_idx.size()), true, [&](std::int64_t q) {
    Vector kernel(dict.size());
    for (std::int64_t a = 0; a < dict.size(); ++a)
      kernel[a] = all_gram(static_cast<std::int64_t>(test_idx[static_cast<std::size_t>(q)]),
                           static_cast<std::int64_t>(train_idx[static_cast<std::size_t>(a)]));
    if (config.classifier == ClassifierKind::kSrc)
      predicted[static_cast<std::size_t>(q)] = classify_src_kernel(kernel, dict, code_options).label;
    else
      predicted[static_cast<std::size_t>(q)] = nearest_neighbor_kernel(kernel, dict);
  });

  FoldEvaluation fold;
  fold.confusion = Matrix::Zero(static_cast<std::int64_t>(classes.labels.size()),
                                static_cast<std::int64_t>(classes.labels.size()));
  fold.result.name = fold_name;
  fold.result.test_count = static_cast<int>(test_idx.size());
  for (std::size_t q = 0; q < test_idx.size(); ++q) {
    const int truth = features.samples[test_idx[q]].action;
    const int guess = predicted[q];
    if (guess == truth) ++fold.result.correct;
    fold.confusion(static_cast<std::int64_t>(classes.index.at(truth)),
                   static_cast<std::int64_t>(classes.index.at(guess))) += 1.0;
  }
  fold.result.accuracy =
      static_cast<double>(fold.result.correct) / static_cast<double>(fold.result.test_count);
  return fold;
}

std::vector<std::pair<std::string, SplitSpec>> build_split_specs(const ExperimentConfig& config) {
  std::vector<std::pair<std::string, SplitSpec>> specs;
  if (config.protocol == Protocol::kSubsetAs) {
    const auto subsets = load_action_subsets(config.subset_file);
    std::vector<std::string> names = config.subsets;
    if (names.empty())
      for (const auto& [name, _] : subsets) names.push_back(name);
    for (const auto& name : names) {
      if (!subsets.count(name))
        throw std::runtime_error("subset " + name + " not found in " + config.subset_file);
      SplitSpec spec;
      spec.protocol = Protocol::kSubsetAs;
      spec.train_subjects = config.train_subjects;
      spec.action_subset = subsets.at(name);
      spec.subset_name = name;
      specs.emplace_back(name, spec);
    }
  } else {
    SplitSpec spec;
    spec.protocol = config.protocol;
    spec.train_subjects = config.train_subjects;
    spec.test_view = config.test_view;
    specs.emplace_back(to_string(config.protocol), spec);
  }
  return specs;
}

}  // namespace

EvaluationReport run_experiment(const ExperimentConfig& config) {
  const auto t_start = Clock::now();
  set_thread_count(config.threads);
  StageTimings timings;

  auto t0 = Clock::now();
  const DatasetManifest manifest = resolve_manifest(config);
  timings.load_s = seconds_since(t0);

  t0 = Clock::now();
  const FeatureSet features = compute_features(config, manifest);
  timings.features_s = seconds_since(t0);

  t0 = Clock::now();
  const std::vector<GrassmannPoint> points = fit_points(config, features);
  timings.fit_s = seconds_since(t0);

  t0 = Clock::now();
  const Matrix all_gram = embedding_gram(points);
  timings.gram_s = seconds_since(t0);

  // Manifest restricted to loaded samples, so splits cannot leak dropped ids.
  DatasetManifest effective = manifest;
  effective.records.clear();
  {
    std::set<std::string> loaded;
    for (const auto& s : features.samples) loaded.insert(s.id);
    if (is_multiview(config.representation)) {
      for (const auto& s : features.samples) {
        SampleRecord r;
        r.id = s.id;
        r.action = s.action;
        r.subject = s.subject;
        r.trial = s.trial;
        r.view = s.view;
        effective.records.push_back(std::move(r));
      }
    } else {
      for (const auto& r : manifest.records)
        if (loaded.count(r.id)) effective.records.push_back(r);
    }
  }

  t0 = Clock::now();
  std::set<std::string> in_play;
  std::vector<std::pair<std::string, std::vector<Split>>> protocol_folds;
  for (const auto& [name, spec] : build_split_specs(config)) {
    auto folds = make_splits(effective, spec, config.seed);
    for (const auto& fold : folds) {
      for (const auto& id : fold.train_ids) in_play.insert(id);
      for (const auto& id : fold.test_ids) in_play.insert(id);
    }
    fs::create_directories(config.output_dir);
    save_split_json((fs::path(config.output_dir) / ("splits_" + name + ".json")).string(), spec,
                    config.seed, folds);
    protocol_folds.emplace_back(name, std::move(folds));
  }
  const ClassIndex classes = build_class_index(features.samples, in_play);

  Matrix confusion = Matrix::Zero(static_cast<std::int64_t>(classes.labels.size()),
                                  static_cast<std::int64_t>(classes.labels.size()));
  std::vector<FoldResult> fold_results;
  for (const auto& [name, folds] : protocol_folds) {
    for (std::size_t k = 0; k < folds.size(); ++k) {
      std::string fold_name = name;
      if (folds.size() > 1) fold_name += "/fold" + std::to_string(k);
      const FoldEvaluation fe = evaluate_fold(config, features, points, folds[k], all_gram,
                                              classes, fold_name);
      confusion += fe.confusion;
      fold_results.push_back(fe.result);
    }
  }
  timings.classify_s = seconds_since(t0);
  timings.total_s = seconds_since(t_start);

  std::map<int, std::string> class_names;
  for (int label : classes.labels) {
    auto it = features.action_names.find(label);
    class_names[label] = it != features.action_names.end() ? it->second : std::to_string(label);
  }
  return EvaluationReport(classes.labels, std::move(class_names), std::move(confusion),
                          std::move(fold_results), timings, config.resolved());
}

EvaluationReport::EvaluationReport(std::vector<int> class_labels,
                                   std::map<int, std::string> class_names, Matrix confusion,
                                   std::vector<FoldResult> folds, StageTimings timings,
                                   Config resolved_config)
    : class_labels_(std::move(class_labels)),
      class_names_(std::move(class_names)),
      confusion_(std::move(confusion)),
      folds_(std::move(folds)),
      timings_(timings),
      resolved_config_(std::move(resolved_config)) {
  const std::int64_t n = static_cast<std::int64_t>(class_labels_.size());
  if (confusion_.rows() != n || confusion_.cols() != n)
    throw std::logic_error("report: confusion matrix dimensions mismatch");
  double total = 0.0;
  for (const auto& f : folds_) total += f.test_count;
  if (std::abs(confusion_.sum() - total) > 1e-9)
    throw std::logic_error("report: confusion mass does not match the test counts");
  overall_accuracy_ = total > 0.0 ? confusion_.trace() / total : 0.0;
  double correct = 0.0;
  for (const auto& f : folds_) correct += f.correct;
  if (std::abs(confusion_.trace() - correct) > 1e-9)
    throw std::logic_error("report: trace does not match the per-fold correct counts");
}

double EvaluationReport::class_accuracy(int label) const {
  const auto it = std::find(class_labels_.begin(), class_labels_.end(), label);
  if (it == class_labels_.end()) throw std::invalid_argument("unknown class label");
  const std::int64_t r = it - class_labels_.begin();
  const double row = confusion_.row(r).sum();
  return row > 0.0 ? confusion_(r, r) / row : 0.0;
}

std::string EvaluationReport::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "glds-report";
  j["overall_accuracy"] = overall_accuracy_;
  auto& folds = j["folds"] = nlohmann::ordered_json::array();
  for (const auto& f : folds_) {
    nlohmann::ordered_json fj;
    fj["name"] = f.name;
    fj["test_count"] = f.test_count;
    fj["correct"] = f.correct;
    fj["accuracy"] = f.accuracy;
    folds.push_back(std::move(fj));
  }
  auto& classes = j["classes"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < class_labels_.size(); ++i) {
    nlohmann::ordered_json cj;
    const int label = class_labels_[i];
    cj["label"] = label;
    cj["name"] = class_names_.at(label);
    cj["accuracy"] = class_accuracy(label);
    cj["count"] = confusion_.row(static_cast<std::int64_t>(i)).sum();
    classes.push_back(std::move(cj));
  }
  auto& confusion = j["confusion"] = nlohmann::ordered_json::array();
  for (std::int64_t r = 0; r < confusion_.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(confusion_.cols()));
    for (std::int64_t c = 0; c < confusion_.cols(); ++c)
      row[static_cast<std::size_t>(c)] = confusion_(r, c);
    confusion.push_back(row);
  }
  nlohmann::ordered_json cfg;
  for (const auto& [section, entries] : resolved_config_.sections()) {
    nlohmann::ordered_json sj;
    for (const auto& [k, v] : entries) sj[k] = v;
    cfg[section.empty() ? "(root)" : section] = std::move(sj);
  }
  j["config"] = std::move(cfg);
  nlohmann::ordered_json tj;
  tj["load_s"] = timings_.load_s;
  tj["features_s"] = timings_.features_s;
  tj["fit_s"] = timings_.fit_s;
  tj["gram_s"] = timings_.gram_s;
  tj["classify_s"] = timings_.classify_s;
  tj["total_s"] = timings_.total_s;
  j["timings"] = std::move(tj);
  return j.dump(1, '\t') + "\n";
}

std::vector<SweepRow> sweep_dimension(const ExperimentConfig& config,
                                      const std::vector<int>& d_values, bool decouple_m) {
  if (d_values.empty()) throw std::invalid_argument("sweep: empty d list");
  const DatasetManifest manifest = resolve_manifest(config);
  const FeatureSet features = compute_features(config, manifest);

  std::vector<SweepRow> rows;
  for (int d : d_values) {
    SweepRow row;
    row.d = d;
    try {
      ExperimentConfig run = config;
      run.state_dim = d;
      if (!decouple_m) run.truncation = d;
      // Features already cached on disk by the first pass.
      const EvaluationReport report = run_experiment(run);
      row.accuracy = report.overall_accuracy();
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "d,accuracy,error\n";
  for (const auto& r : rows) {
    out << r.d << ",";
    if (r.error.empty())
      out << r.accuracy;
    out << "," << r.error << "\n";
  }
  return out.str();
}

std::vector<std::string> emit_report(const EvaluationReport& report, const std::string& dir) {
  fs::create_directories(dir);
  std::vector<std::string> paths;

  const fs::path report_path = fs::path(dir) / "report.json";
  {
    std::ofstream out(report_path);
    if (!out) throw std::runtime_error("cannot write " + report_path.string());
    out << report.to_json();
  }
  paths.push_back(report_path.string());

  const fs::path confusion_path = fs::path(dir) / "confusion.csv";
  {
    std::ofstream out(confusion_path);
    if (!out) throw std::runtime_error("cannot write " + confusion_path.string());
    out << "true\\predicted";
    for (int label : report.class_labels()) out << "," << label;
    out << "\n";
    const Matrix& m = report.confusion();
    for (std::int64_t r = 0; r < m.rows(); ++r) {
      out << report.class_labels()[static_cast<std::size_t>(r)];
      for (std::int64_t c = 0; c < m.cols(); ++c) out << "," << m(r, c);
      out << "\n";
    }
  }
  paths.push_back(confusion_path.string());

  const fs::path config_path = fs::path(dir) / "resolved_config.ini";
  report.resolved_config().save(config_path.string());
  paths.push_back(config_path.string());
  return paths;
}

}  // namespace glds
