#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "projdebias/encoder.hpp"
#include "projdebias/interventions.hpp"
#include "projdebias/nli.hpp"
#include "projdebias/spearman.hpp"
#include "projdebias/stereoset.hpp"
#include "projdebias/subspace.hpp"

namespace projdebias {

inline constexpr int kReportSchemaVersion = 1;

struct RunManifest {
  std::filesystem::path model;
  std::filesystem::path subspaces;
  std::filesystem::path pairs;
  std::filesystem::path stereoset;
  std::filesystem::path occupations;
  std::filesystem::path templates;
  std::filesystem::path benchmark;
  std::filesystem::path out_dir;
  double top_frac = 0.1;
  double viability_ratio = 0.95;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  /// Throws InputError naming the first non-empty path that does not exist.
  void check_paths() const;
  /// Flat key/value record of the manifest, written beside every report.
  void save(const std::filesystem::path& path) const;
};

/// Everything a configuration is evaluated against.
struct EvaluationData {
  std::vector<TriplePair> stereoset;
  std::vector<NLIProbe> probes;
  std::vector<BenchmarkItem> benchmark;
};

EvaluationData load_evaluation_data(const RunManifest& manifest);

struct EvaluationRow {
  std::string config;
  double S = 0.0;
  double D = 0.0;
  double SS = 0.0;
  double parity = 0.0;
  double accuracy = 0.0;
  double eta = 0.0;
  double benchmark_acc = 0.0;
  bool viable = true;
};

struct EvaluationOptions {
  double top_frac = 0.1;
  double viability_ratio = 0.95;
  std::size_t workers = 1;
};

/// Binds `config`, then scores StereoSet, the NLI probes and the benchmark under its hooks.
/// Viability is judged against `base_benchmark_acc` when given.
EvaluationRow evaluate_config(const Encoder& encoder, const SubspaceSet& subspaces, const DebiasConfig& config,
                              const EvaluationData& data, const EvaluationOptions& options,
                              std::optional<double> base_benchmark_acc,
                              std::vector<TripleScores>* scores_out = nullptr);

using ProgressFn = std::function<void(std::size_t done, std::size_t total, const std::string& config)>;

/// Baseline (level none) followed by the 74 grid configurations in grid order. Configurations
/// are spread over `options.workers` threads; rows do not depend on the worker count.
std::vector<EvaluationRow> run_grid(const Encoder& encoder, const SubspaceSet& subspaces,
                                    const EvaluationData& data, const EvaluationOptions& options,
                                    const ProgressFn& progress = {});

/// Header: config,S,D,SS,parity,accuracy,eta,benchmark_acc,viable.
void write_report_csv(const std::filesystem::path& path, const std::vector<EvaluationRow>& rows);
void write_report_json(const std::filesystem::path& path, const std::vector<EvaluationRow>& rows,
                       std::uint64_t seed);
/// Reads either format, chosen by extension (".json" or anything else as CSV).
std::vector<EvaluationRow> read_report(const std::filesystem::path& path);

struct LevelBest {
  Level level = Level::None;
  std::optional<std::size_t> min_S;    // row index
  std::optional<std::size_t> min_D;
  std::optional<std::size_t> max_eta;  // viable rows only
};

/// Per level in grid order (rows whose config label does not parse are skipped).
/// Earlier rows win ties.
std::vector<LevelBest> best_per_level(const std::vector<EvaluationRow>& rows);
void write_best_csv(const std::filesystem::path& path, const std::vector<EvaluationRow>& rows,
                    const std::vector<LevelBest>& best);

/// Spearman correlation between the S and eta columns.
CorrelationResult correlate_report(const std::vector<EvaluationRow>& rows,
                                   PValueMethod method = PValueMethod::Auto);
void write_correlation_json(const std::filesystem::path& path, const CorrelationResult& result,
                            std::size_t rows);

}  // namespace projdebias
