// Command-line front end: ingest / features / fit / eval / sweep / bench.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "glds/dataset.hpp"
#include "glds/experiment.hpp"
#include "glds/grassmann.hpp"
#include "glds/linalg.hpp"
#include "glds/parallel.hpp"
#include "glds/tucker.hpp"

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

int run_ingest(const std::string& root, const std::string& kind, const std::string& out_path,
               const std::string& topology, const std::string& exclusions) {
  std::vector<std::string> exclude;
  if (!exclusions.empty()) exclude = glds::load_exclusions(exclusions);
  const auto manifest =
      glds::ingest(root, glds::dataset_kind_from_string(kind), exclude, topology);
  manifest.save_json(out_path);
  std::fprintf(stderr, "ingest: %zu records -> %s\n", manifest.records.size(), out_path.c_str());
  return 0;
}

int run_features(const std::string& config_path) {
  const auto config = glds::ExperimentConfig::from_file(config_path);
  glds::set_thread_count(config.threads);
  const auto manifest = glds::resolve_manifest(config);
  const auto features = glds::compute_features(config, manifest);
  std::fprintf(stderr, "features: %zu samples (%s), cache %s\n", features.samples.size(),
               glds::to_string(config.representation).c_str(),
               features.from_cache ? "hit" : "written");
  return 0;
}

int run_fit(const std::string& config_path, const std::string& out_path) {
  const auto config = glds::ExperimentConfig::from_file(config_path);
  glds::set_thread_count(config.threads);
  const auto manifest = glds::resolve_manifest(config);
  const auto features = glds::compute_features(config, manifest);
  const auto points = glds::fit_points(config, features);
  std::vector<int> labels;
  for (const auto& s : features.samples) labels.push_back(s.action);
  glds::GrassmannDictionary store(points, labels);
  store.save_json(out_path);
  std::fprintf(stderr, "fit: %zu subspaces (ambient %lld, dim %d) -> %s\n", points.size(),
               static_cast<long long>(store.ambient_dim()), store.subspace_dim(),
               out_path.c_str());
  return 0;
}

int run_eval(const std::string& config_path, std::string out_dir) {
  const auto config = glds::ExperimentConfig::from_file(config_path);
  const auto report = glds::run_experiment(config);
  if (out_dir.empty()) out_dir = config.output_dir;
  const auto paths = glds::emit_report(report, out_dir);
  for (const auto& f : report.folds())
    std::fprintf(stderr, "eval: %-24s accuracy %.4f (%d/%d)\n", f.name.c_str(), f.accuracy,
                 f.correct, f.test_count);
  std::fprintf(stderr, "eval: overall accuracy %.4f\n", report.overall_accuracy());
  for (const auto& p : paths) std::fprintf(stderr, "eval: wrote %s\n", p.c_str());
  return 0;
}

int run_sweep(const std::string& config_path, const std::vector<int>& d_values,
              std::string out_path, bool decouple_m) {
  const auto config = glds::ExperimentConfig::from_file(config_path);
  const auto rows = glds::sweep_dimension(config, d_values, decouple_m);
  if (out_path.empty())
    out_path = (fs::path(config.output_dir) / "sweep.csv").string();
  fs::create_directories(fs::path(out_path).parent_path());
  std::ofstream out(out_path);
  out << glds::sweep_to_csv(rows);
  for (const auto& r : rows) {
    if (r.error.empty())
      std::fprintf(stderr, "sweep: d=%-3d accuracy %.4f\n", r.d, r.accuracy);
    else
      std::fprintf(stderr, "sweep: d=%-3d failed: %s\n", r.d, r.error.c_str());
  }
  std::fprintf(stderr, "sweep: wrote %s\n", out_path.c_str());
  return 0;
}

// ---- micro-benchmarks: serial reference vs OpenMP kernels ----------------

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

void bench_row(const char* name, double serial_s, double parallel_s, std::FILE* csv) {
  std::printf("%-28s %10.4f ms %10.4f ms %8.2fx\n", name, serial_s * 1e3, parallel_s * 1e3,
              serial_s / parallel_s);
  if (csv) std::fprintf(csv, "%s,%.6f,%.6f\n", name, serial_s, parallel_s);
}

int run_bench(const std::string& csv_path, int reps) {
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> gauss;
  auto random_matrix = [&](std::int64_t r, std::int64_t c) {
    glds::Matrix m(r, c);
    for (std::int64_t j = 0; j < c; ++j)
      for (std::int64_t i = 0; i < r; ++i) m(i, j) = gauss(rng);
    return m;
  };
  auto random_tensor = [&](std::vector<std::int64_t> shape) {
    glds::Tensor t(shape);
    for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = gauss(rng);
    return t;
  };

  std::FILE* csv = nullptr;
  if (!csv_path.empty()) {
    csv = std::fopen(csv_path.c_str(), "w");
    if (!csv) {
      std::fprintf(stderr, "bench: cannot open %s\n", csv_path.c_str());
      return 1;
    }
    std::fprintf(csv, "kernel,serial_s,parallel_s\n");
  }

  std::printf("%-28s %13s %13s %9s   (threads: %d)\n", "kernel", "serial", "openmp", "speedup",
              glds::thread_count());

  {
    const auto t = random_tensor({64, 48, 96});
    const auto u = random_matrix(64, 48);
    glds::Tensor sink;
    const double s = time_best_of(reps, [&] { sink = glds::ref::mode_product(t, u, 1); });
    const double p = time_best_of(reps, [&] { sink = glds::mode_product(t, u, 1); });
    bench_row("mode_product 64x48x96", s, p, csv);
  }
  {
    const auto a = random_matrix(48, 48);
    const auto b = random_matrix(40, 40);
    glds::Matrix sink;
    const double s = time_best_of(reps, [&] { sink = glds::ref::kronecker(a, b); });
    const double p = time_best_of(reps, [&] { sink = glds::kronecker(a, b); });
    bench_row("kronecker 48x48 (x) 40x40", s, p, csv);
  }
  {
    std::vector<glds::GrassmannPoint> points;
    for (int i = 0; i < 160; ++i) {
      const auto svd = glds::thin_svd(random_matrix(600, 10));
      points.push_back(glds::GrassmannPoint{svd.u});
    }
    glds::Matrix sink;
    const double s = time_best_of(reps, [&] { sink = glds::ref::embedding_gram(points); });
    const double p = time_best_of(reps, [&] { sink = glds::embedding_gram(points); });
    bench_row("embedding_gram 160 atoms", s, p, csv);
  }
  {
    const auto t = random_tensor({19, 9, 80});
    glds::TuckerFactors sink;
    const double s = time_best_of(reps, [&] { sink = glds::tucker(t, {19, 9, 10}); });
    bench_row("tucker 19x9x80 (composite)", s, s, csv);
  }

  if (csv) std::fclose(csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor time-series subspace models for skeleton action recognition"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Scan a dataset root and write a manifest");
  std::string root, kind = "msr3d", out_path = "manifest.json", topology, exclusions;
  ingest->add_option("--root", root, "dataset root directory")->required();
  ingest->add_option("--kind", kind, "msr3d|utkinect|nucla|generic");
  ingest->add_option("--out", out_path, "manifest output path");
  ingest->add_option("--topology", topology, "topology config file");
  ingest->add_option("--exclusions", exclusions, "exclusion list (one sample id per line)");

  // features
  auto* features = app.add_subcommand("features", "Extract and cache tensor features");
  std::string features_config;
  features->add_option("config", features_config, "experiment config file")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "Fit per-sequence subspaces into a model store");
  std::string fit_config, fit_out = "subspaces.json";
  fit->add_option("config", fit_config, "experiment config file")->required();
  fit->add_option("--out", fit_out, "model store output path");

  // eval
  auto* eval = app.add_subcommand("eval", "Run the protocol and write the report");
  std::string eval_config, eval_out;
  eval->add_option("config", eval_config, "experiment config file")->required();
  eval->add_option("--out", eval_out, "report directory (default: run.output_dir)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Evaluate across subspace dimensions");
  std::string sweep_config, sweep_out;
  std::vector<int> d_values;
  bool decouple_m = false;
  sweep->add_option("config", sweep_config, "experiment config file")->required();
  sweep->add_option("--d", d_values, "subspace dimensions")->required();
  sweep->add_option("--out", sweep_out, "CSV output path");
  sweep->add_flag("--keep-m", decouple_m, "keep truncation m fixed instead of m = d");

  // bench
  auto* bench = app.add_subcommand("bench", "Micro-benchmarks: serial vs OpenMP kernels");
  std::string bench_csv;
  int bench_reps = 5, bench_threads = 0;
  bench->add_option("--csv", bench_csv, "also write results as CSV");
  bench->add_option("--reps", bench_reps, "repetitions per kernel (best-of)");
  bench->add_option("--threads", bench_threads, "OpenMP thread count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return run_ingest(root, kind, out_path, topology, exclusions);
    if (*features) return run_features(features_config);
    if (*fit) return run_fit(fit_config, fit_out);
    if (*eval) return run_eval(eval_config, eval_out);
    if (*sweep) return run_sweep(sweep_config, d_values, sweep_out, decouple_m);
    if (*bench) {
      if (const char* t = std::getenv("GLDS_THREADS")) bench_threads = std::atoi(t);
      glds::set_thread_count(bench_threads);
      return run_bench(bench_csv, bench_reps);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
