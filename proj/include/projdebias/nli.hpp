#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "projdebias/encoder.hpp"

namespace projdebias {

enum class NliLabel { Entailment = 0, Neutral = 1, Contradiction = 2 };

std::string_view nli_label_name(NliLabel label);
NliLabel parse_nli_label(std::string_view name);

inline constexpr std::string_view kOccupationSlot = "<occupation>";
inline constexpr std::string_view kGenderSlot = "<gender>";
inline constexpr std::string_view kActivitySlot = "<activity>";

struct ProbeTemplate {
  std::string id;
  std::string activity;
  std::string premise = "The <occupation> <activity>.";
  std::string hypothesis = "The <gender> <activity>.";
};

struct NLIProbe {
  std::string occupation;
  std::string template_id;
  std::string premise;
  std::string hyp_male;
  std::string hyp_female;
};

/// One probe per (occupation, template), occupations outermost. Each probe carries two
/// gendered sentence pairs.
std::vector<NLIProbe> generate_probes(const std::vector<std::string>& occupations,
                                      const std::vector<ProbeTemplate>& templates);

inline std::size_t sentence_pair_count(const std::vector<NLIProbe>& probes) { return 2 * probes.size(); }

struct BenchmarkItem {
  std::string premise;
  std::string hypothesis;
  NliLabel label = NliLabel::Neutral;
};

std::vector<std::string> load_occupations(const std::filesystem::path& path);
void save_occupations(const std::filesystem::path& path, const std::vector<std::string>& occupations);
/// JSON-lines {"template_id", "activity"} with optional "premise"/"hypothesis" patterns.
std::vector<ProbeTemplate> load_templates(const std::filesystem::path& path);
void save_templates(const std::filesystem::path& path, const std::vector<ProbeTemplate>& templates);
/// JSON-lines {"premise", "hypothesis", "label"}.
std::vector<BenchmarkItem> load_benchmark(const std::filesystem::path& path);
void save_benchmark(const std::filesystem::path& path, const std::vector<BenchmarkItem>& items);

struct FairnessReport {
  double parity = 0.0;
  double accuracy = 0.0;
  double eta = 0.0;
  double benchmark_accuracy = 0.0;
  bool viable = true;
};

/// eta = accuracy x parity.
inline double fairness_score(double parity, double accuracy) { return parity * accuracy; }

struct ProbeStatistics {
  double parity = 0.0;    // probes whose male and female predictions agree
  double accuracy = 0.0;  // gendered predictions that are neutral
};

ProbeStatistics probe_statistics(const std::vector<NliLabel>& male, const std::vector<NliLabel>& female);

/// Argmax of the NLI head; ties resolve to the lowest label index.
NliLabel predict_nli(const Encoder& encoder, const Hooks& hooks, std::string_view premise,
                     std::string_view hypothesis);

double benchmark_accuracy(const Encoder& encoder, const Hooks& hooks, const std::vector<BenchmarkItem>& benchmark,
                          std::size_t workers = 1);

/// Probe fairness plus benchmark accuracy. With `base_benchmark_acc` set, the report is
/// viable when benchmark_accuracy >= viability_ratio * base_benchmark_acc; without it the
/// configuration is its own reference and is viable.
FairnessReport evaluate_fairness(const Encoder& encoder, const Hooks& hooks, const std::vector<NLIProbe>& probes,
                                 const std::vector<BenchmarkItem>& benchmark,
                                 std::optional<double> base_benchmark_acc, double viability_ratio = 0.95,
                                 std::size_t workers = 1);

void write_fairness_json(const std::filesystem::path& path, const FairnessReport& report);

}  // namespace projdebias
