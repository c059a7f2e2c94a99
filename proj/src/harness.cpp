#include "projdebias/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <mutex>

#include "projdebias/error.hpp"
#include "projdebias/parallel.hpp"

namespace projdebias {

namespace {

constexpr const char* kCsvHeader = "config,S,D,SS,parity,accuracy,eta,benchmark_acc,viable";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  if (quoted) throw InputError("unterminated quote");
  return fields;
}

double parse_number(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) throw InputError("bad number '" + text + "'");
  return v;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw InputError("bad flag '" + text + "'");
}

std::vector<EvaluationRow> read_csv_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open report " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError("report " + path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw InputError(path.string() + ": unexpected header '" + line + "'");
  std::vector<EvaluationRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto f = csv_split(line);
      if (f.size() != 9) throw InputError("expected 9 fields, found " + std::to_string(f.size()));
      rows.push_back(EvaluationRow{f[0], parse_number(f[1]), parse_number(f[2]), parse_number(f[3]),
                                   parse_number(f[4]), parse_number(f[5]), parse_number(f[6]),
                                   parse_number(f[7]), parse_bool(f[8])});
    } catch (const InputError& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<EvaluationRow> read_json_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open report " + path.string());
  std::vector<EvaluationRow> rows;
  try {
    const auto j = nlohmann::json::parse(in);
    const int version = j.at("schema_version").get<int>();
    if (version != kReportSchemaVersion) {
      throw InputError("unsupported schema_version " + std::to_string(version));
    }
    for (const auto& r : j.at("rows")) {
      EvaluationRow row{r.at("config").get<std::string>(), r.at("S").get<double>(), r.at("D").get<double>(),
                        r.at("SS").get<double>(), r.at("parity").get<double>(), r.at("accuracy").get<double>(),
                        r.at("eta").get<double>(), r.at("benchmark_acc").get<double>(),
                        r.at("viable").get<bool>()};
      for (double v : {row.S, row.D, row.SS, row.parity, row.accuracy, row.eta, row.benchmark_acc}) {
        if (!std::isfinite(v)) throw InputError("non-finite value in row " + row.config);
      }
      rows.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": malformed report: " + e.what());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return rows;
}

}  // namespace

void RunManifest::check_paths() const {
  const std::pair<const char*, const std::filesystem::path*> inputs[] = {
      {"model", &model},         {"subspace cache", &subspaces}, {"pair file", &pairs},
      {"stereoset", &stereoset}, {"occupations", &occupations},  {"templates", &templates},
      {"benchmark", &benchmark},
  };
  for (const auto& [what, path] : inputs) {
    if (!path->empty() && !std::filesystem::exists(*path)) {
      std::string msg = std::string(what) + " not found: " + path->string();
      if (path == &subspaces) msg += " (run `projdebias estimate` first)";
      throw InputError(msg);
    }
  }
}

void RunManifest::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json j{
      {"schema_version", kReportSchemaVersion},
      {"model", model.string()},
      {"subspaces", subspaces.string()},
      {"pairs", pairs.string()},
      {"stereoset", stereoset.string()},
      {"occupations", occupations.string()},
      {"templates", templates.string()},
      {"benchmark", benchmark.string()},
      {"top_frac", top_frac},
      {"viability_ratio", viability_ratio},
      {"seed", seed},
      {"out_dir", out_dir.string()},
  };
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

EvaluationData load_evaluation_data(const RunManifest& manifest) {
  EvaluationData data;
  data.stereoset = load_stereoset(manifest.stereoset);
  data.probes = generate_probes(load_occupations(manifest.occupations), load_templates(manifest.templates));
  data.benchmark = load_benchmark(manifest.benchmark);
  if (data.stereoset.empty()) throw InputError("stereoset file " + manifest.stereoset.string() + " is empty");
  if (data.benchmark.empty()) throw InputError("benchmark file " + manifest.benchmark.string() + " is empty");
  return data;
}

EvaluationRow evaluate_config(const Encoder& encoder, const SubspaceSet& subspaces, const DebiasConfig& config,
                              const EvaluationData& data, const EvaluationOptions& options,
                              std::optional<double> base_benchmark_acc, std::vector<TripleScores>* scores_out) {
  const HookSet hookset = bind(config, encoder.shape(), subspaces);
  const Hooks& hooks = hookset.hooks();

  std::vector<TripleScores> scores = score_triples(encoder, hooks, data.stereoset, options.workers);
  const FairnessReport fairness = evaluate_fairness(encoder, hooks, data.probes, data.benchmark,
                                                    base_benchmark_acc, options.viability_ratio, options.workers);
  EvaluationRow row;
  row.config = hookset.config().label();
  row.S = strength_S(scores, options.top_frac);
  row.D = distance_D(scores, options.top_frac);
  row.SS = ss_score(scores);
  row.parity = fairness.parity;
  row.accuracy = fairness.accuracy;
  row.eta = fairness.eta;
  row.benchmark_acc = fairness.benchmark_accuracy;
  row.viable = fairness.viable;
  if (scores_out != nullptr) *scores_out = std::move(scores);
  return row;
}

std::vector<EvaluationRow> run_grid(const Encoder& encoder, const SubspaceSet& subspaces,
                                    const EvaluationData& data, const EvaluationOptions& options,
                                    const ProgressFn& progress) {
  const std::vector<DebiasConfig> grid = enumerate_grid();
  const std::size_t total = grid.size() + 1;

  // Every grid configuration must bind before any evaluation starts.
  for (const auto& config : grid) bind(config, encoder.shape(), subspaces);

  std::vector<EvaluationRow> rows(total);
  rows[0] = evaluate_config(encoder, subspaces, DebiasConfig{}, data, options, std::nullopt);
  if (progress) progress(1, total, rows[0].config);
  const double base_acc = rows[0].benchmark_acc;

  EvaluationOptions inner = options;
  inner.workers = 1;
  std::mutex progress_mutex;
  std::size_t done = 1;
  parallel_for(grid.size(), options.workers, [&](std::size_t i) {
    rows[i + 1] = evaluate_config(encoder, subspaces, grid[i], data, inner, base_acc);
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(++done, total, rows[i + 1].config);
    }
  });
  return rows;
}

void write_report_csv(const std::filesystem::path& path, const std::vector<EvaluationRow>& rows) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << csv_quote(r.config) << ',' << format_double(r.S) << ',' << format_double(r.D) << ','
        << format_double(r.SS) << ',' << format_double(r.parity) << ',' << format_double(r.accuracy) << ','
        << format_double(r.eta) << ',' << format_double(r.benchmark_acc) << ','
        << (r.viable ? "true" : "false") << '\n';
  }
}

void write_report_json(const std::filesystem::path& path, const std::vector<EvaluationRow>& rows,
                       std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["seed"] = seed;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"config", r.config},
                         {"S", r.S},
                         {"D", r.D},
                         {"SS", r.SS},
                         {"parity", r.parity},
                         {"accuracy", r.accuracy},
                         {"eta", r.eta},
                         {"benchmark_acc", r.benchmark_acc},
                         {"viable", r.viable}});
  }
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<EvaluationRow> read_report(const std::filesystem::path& path) {
  if (path.extension() == ".json") return read_json_report(path);
  return read_csv_report(path);
}

std::vector<LevelBest> best_per_level(const std::vector<EvaluationRow>& rows) {
  std::vector<LevelBest> out;
  for (Level level : {Level::None, Level::Sent, Level::FinalLayer, Level::PenultLayer, Level::PenultAttn}) {
    LevelBest best;
    best.level = level;
    bool any = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Level row_level;
      try {
        row_level = parse_config_label(rows[i].config).level;
      } catch (const Error&) {
        continue;
      }
      if (row_level != level) continue;
      any = true;
      if (!best.min_S || rows[i].S < rows[*best.min_S].S) best.min_S = i;
      if (!best.min_D || rows[i].D < rows[*best.min_D].D) best.min_D = i;
      if (rows[i].viable && (!best.max_eta || rows[i].eta > rows[*best.max_eta].eta)) best.max_eta = i;
    }
    if (any) out.push_back(best);
  }
  return out;
}

void write_best_csv(const std::filesystem::path& path, const std::vector<EvaluationRow>& rows,
                    const std::vector<LevelBest>& best) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "level,criterion," << kCsvHeader << '\n';
  for (const auto& b : best) {
    const std::pair<const char*, std::optional<std::size_t>> picks[] = {
        {"min_S", b.min_S}, {"min_D", b.min_D}, {"max_eta", b.max_eta}};
    for (const auto& [criterion, index] : picks) {
      out << level_name(b.level) << ',' << criterion << ',';
      if (!index) {
        out << ",,,,,,,,\n";
        continue;
      }
      const EvaluationRow& r = rows.at(*index);
      out << csv_quote(r.config) << ',' << format_double(r.S) << ',' << format_double(r.D) << ','
          << format_double(r.SS) << ',' << format_double(r.parity) << ',' << format_double(r.accuracy) << ','
          << format_double(r.eta) << ',' << format_double(r.benchmark_acc) << ','
          << (r.viable ? "true" : "false") << '\n';
    }
  }
}

CorrelationResult correlate_report(const std::vector<EvaluationRow>& rows, PValueMethod method) {
  if (rows.size() < 3) throw Error("correlation needs at least 3 report rows, found " + std::to_string(rows.size()));
  std::vector<double> s;
  std::vector<double> eta;
  for (const auto& r : rows) {
    s.push_back(r.S);
    eta.push_back(r.eta);
  }
  return spearman(s, eta, method);
}

void write_correlation_json(const std::filesystem::path& path, const CorrelationResult& result, std::size_t rows) {
  const char* method = result.method == PValueMethod::Permutation ? "permutation" : "t_distribution";
  nlohmann::ordered_json j{{"schema_version", kReportSchemaVersion},
                           {"x", "S"},
                           {"y", "eta"},
                           {"n", rows},
                           {"rho", result.rho},
                           {"p_value", result.p_value},
                           {"p_method", method}};
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace projdebias
