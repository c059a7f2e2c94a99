#include "projdebias/nli.hpp"

#include <fstream>
#include <json.hpp>

#include "projdebias/error.hpp"
#include "projdebias/parallel.hpp"

namespace projdebias {

namespace {

std::string fill(std::string pattern, std::string_view slot, std::string_view value) {
  for (std::size_t pos = pattern.find(slot); pos != std::string::npos; pos = pattern.find(slot, pos + value.size())) {
    pattern.replace(pos, slot.size(), value);
  }
  return pattern;
}

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, std::string_view what, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + std::string(what) + " file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(nlohmann::json::parse(line));
    } catch (const std::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed " + std::string(what) + ": " +
                       e.what());
    }
  }
}

}  // namespace

std::string_view nli_label_name(NliLabel label) {
  switch (label) {
    case NliLabel::Entailment: return "entailment";
    case NliLabel::Neutral: return "neutral";
    case NliLabel::Contradiction: return "contradiction";
  }
  return "?";
}

NliLabel parse_nli_label(std::string_view name) {
  for (NliLabel l : {NliLabel::Entailment, NliLabel::Neutral, NliLabel::Contradiction}) {
    if (name == nli_label_name(l)) return l;
  }
  throw Error("unknown NLI label '" + std::string(name) + "'");
}

std::vector<NLIProbe> generate_probes(const std::vector<std::string>& occupations,
                                      const std::vector<ProbeTemplate>& templates) {
  if (occupations.empty()) throw Error("generate_probes: no occupations");
  if (templates.empty()) throw Error("generate_probes: no templates");
  for (const auto& t : templates) {
    if (t.premise.find(kOccupationSlot) == std::string::npos) {
      throw Error("template " + t.id + " has no " + std::string(kOccupationSlot) + " slot");
    }
    if (t.hypothesis.find(kGenderSlot) == std::string::npos) {
      throw Error("template " + t.id + " has no " + std::string(kGenderSlot) + " slot");
    }
  }
  std::vector<NLIProbe> probes;
  probes.reserve(occupations.size() * templates.size());
  for (const auto& occupation : occupations) {
    for (const auto& t : templates) {
      const std::string premise = fill(t.premise, kActivitySlot, t.activity);
      const std::string hyp = fill(t.hypothesis, kActivitySlot, t.activity);
      probes.push_back(NLIProbe{occupation, t.id, fill(premise, kOccupationSlot, occupation),
                                fill(hyp, kGenderSlot, "man"), fill(hyp, kGenderSlot, "woman")});
    }
  }
  return probes;
}

std::vector<std::string> load_occupations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open occupations file " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  if (out.empty()) throw InputError("occupations file " + path.string() + " is empty");
  return out;
}

void save_occupations(const std::filesystem::path& path, const std::vector<std::string>& occupations) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& o : occupations) out << o << '\n';
}

std::vector<ProbeTemplate> load_templates(const std::filesystem::path& path) {
  std::vector<ProbeTemplate> out;
  for_each_jsonl(path, "template", [&](const nlohmann::json& j) {
    ProbeTemplate t;
    const auto& id = j.at("template_id");
    t.id = id.is_string() ? id.get<std::string>() : id.dump();
    t.activity = j.at("activity").get<std::string>();
    if (j.contains("premise")) t.premise = j.at("premise").get<std::string>();
    if (j.contains("hypothesis")) t.hypothesis = j.at("hypothesis").get<std::string>();
    out.push_back(std::move(t));
  });
  if (out.empty()) throw InputError("templates file " + path.string() + " is empty");
  return out;
}

void save_templates(const std::filesystem::path& path, const std::vector<ProbeTemplate>& templates) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  const ProbeTemplate defaults;
  for (const auto& t : templates) {
    nlohmann::json j{{"template_id", t.id}, {"activity", t.activity}};
    if (t.premise != defaults.premise) j["premise"] = t.premise;
    if (t.hypothesis != defaults.hypothesis) j["hypothesis"] = t.hypothesis;
    out << j.dump() << '\n';
  }
}

std::vector<BenchmarkItem> load_benchmark(const std::filesystem::path& path) {
  std::vector<BenchmarkItem> out;
  for_each_jsonl(path, "benchmark item", [&](const nlohmann::json& j) {
    out.push_back(BenchmarkItem{j.at("premise").get<std::string>(), j.at("hypothesis").get<std::string>(),
                                parse_nli_label(j.at("label").get<std::string>())});
  });
  return out;
}

void save_benchmark(const std::filesystem::path& path, const std::vector<BenchmarkItem>& items) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& it : items) {
    out << nlohmann::json{{"premise", it.premise}, {"hypothesis", it.hypothesis},
                          {"label", std::string(nli_label_name(it.label))}}
               .dump()
        << '\n';
  }
}

ProbeStatistics probe_statistics(const std::vector<NliLabel>& male, const std::vector<NliLabel>& female) {
  if (male.empty() || male.size() != female.size()) throw Error("probe statistics: mismatched prediction lists");
  std::size_t agree = 0;
  std::size_t neutral = 0;
  for (std::size_t i = 0; i < male.size(); ++i) {
    agree += male[i] == female[i];
    neutral += (male[i] == NliLabel::Neutral) + (female[i] == NliLabel::Neutral);
  }
  const auto n = static_cast<double>(male.size());
  return ProbeStatistics{static_cast<double>(agree) / n, static_cast<double>(neutral) / (2.0 * n)};
}

NliLabel predict_nli(const Encoder& encoder, const Hooks& hooks, std::string_view premise,
                     std::string_view hypothesis) {
  const auto probs = encoder.run(premise, hypothesis, hooks).nli_probs;
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return static_cast<NliLabel>(best);
}

double benchmark_accuracy(const Encoder& encoder, const Hooks& hooks, const std::vector<BenchmarkItem>& benchmark,
                          std::size_t workers) {
  if (benchmark.empty()) throw Error("benchmark is empty");
  std::vector<char> correct(benchmark.size(), 0);
  parallel_for(benchmark.size(), workers, [&](std::size_t i) {
    correct[i] = predict_nli(encoder, hooks, benchmark[i].premise, benchmark[i].hypothesis) == benchmark[i].label;
  });
  std::size_t hits = 0;
  for (char c : correct) hits += static_cast<std::size_t>(c);
  return static_cast<double>(hits) / static_cast<double>(benchmark.size());
}

FairnessReport evaluate_fairness(const Encoder& encoder, const Hooks& hooks, const std::vector<NLIProbe>& probes,
                                 const std::vector<BenchmarkItem>& benchmark,
                                 std::optional<double> base_benchmark_acc, double viability_ratio,
                                 std::size_t workers) {
  if (probes.empty()) throw Error("evaluate_fairness: no probes");
  if (!(viability_ratio > 0.0 && viability_ratio <= 1.0)) throw Error("viability_ratio must lie in (0, 1]");
  if (base_benchmark_acc && benchmark.empty()) throw Error("viability requested but the benchmark is empty");

  std::vector<NliLabel> male(probes.size());
  std::vector<NliLabel> female(probes.size());
  parallel_for(probes.size(), workers, [&](std::size_t i) {
    male[i] = predict_nli(encoder, hooks, probes[i].premise, probes[i].hyp_male);
    female[i] = predict_nli(encoder, hooks, probes[i].premise, probes[i].hyp_female);
  });
  const ProbeStatistics stats = probe_statistics(male, female);

  FairnessReport report;
  report.parity = stats.parity;
  report.accuracy = stats.accuracy;
  report.eta = fairness_score(stats.parity, stats.accuracy);
  if (!benchmark.empty()) report.benchmark_accuracy = benchmark_accuracy(encoder, hooks, benchmark, workers);
  report.viable = !base_benchmark_acc || report.benchmark_accuracy >= viability_ratio * *base_benchmark_acc;
  return report;
}

void write_fairness_json(const std::filesystem::path& path, const FairnessReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  nlohmann::json j{{"parity", report.parity},
                   {"accuracy", report.accuracy},
                   {"eta", report.eta},
                   {"benchmark_accuracy", report.benchmark_accuracy},
                   {"viable", report.viable}};
  out << j.dump(2) << '\n';
}

}  // namespace projdebias
