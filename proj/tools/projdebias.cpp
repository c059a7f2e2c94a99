#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include "projdebias/default_data.hpp"
#include "projdebias/encoder.hpp"
#include "projdebias/error.hpp"
#include "projdebias/harness.hpp"
#include "projdebias/head_training.hpp"
#include "projdebias/interventions.hpp"
#include "projdebias/nli.hpp"
#include "projdebias/spearman.hpp"
#include "projdebias/stereoset.hpp"
#include "projdebias/subspace.hpp"

namespace fs = std::filesystem;
using namespace projdebias;

namespace {

struct Options {
  std::string model, pairs, stereoset, occupations, templates, benchmark, subspaces;
  std::string out_dir = ".";
  double top_frac = 0.1;
  double viability_ratio = 0.95;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  bool center_diffs = false;

  fs::path in_out(const std::string& value, const char* fallback) const {
    return value.empty() ? fs::path(out_dir) / fallback : fs::path(value);
  }

  RunManifest manifest() const {
    RunManifest m;
    m.model = in_out(model, "model.manifest");
    m.subspaces = in_out(subspaces, "subspaces.manifest");
    m.pairs = in_out(pairs, "pairs.jsonl");
    m.stereoset = in_out(stereoset, "stereoset.jsonl");
    m.occupations = in_out(occupations, "occupations.txt");
    m.templates = in_out(templates, "templates.jsonl");
    m.benchmark = in_out(benchmark, "benchmark.jsonl");
    m.out_dir = out_dir;
    m.top_frac = top_frac;
    m.viability_ratio = viability_ratio;
    m.seed = seed;
    m.workers = workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : workers;
    return m;
  }
};

void require_file(const fs::path& path, const char* what) {
  if (!fs::exists(path)) throw InputError(std::string(what) + " not found: " + path.string());
}

std::shared_ptr<const EncoderModel> load_model(const fs::path& path) {
  require_file(path, "model");
  return std::make_shared<const EncoderModel>(load_weights(path));
}

SubspaceSet load_cache(const fs::path& path) {
  if (!fs::exists(path)) {
    throw InputError("subspace cache not found: " + path.string() + " (run `projdebias estimate` first)");
  }
  return SubspaceSet::load(path);
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
}

EvaluationOptions eval_options(const RunManifest& m) { return {m.top_frac, m.viability_ratio, m.workers}; }

void print_row(const EvaluationRow& r) {
  std::printf("%-24s S=%.4f D=%.4f SS=%.4f parity=%.4f accuracy=%.4f eta=%.4f benchmark=%.4f viable=%s\n",
              r.config.c_str(), r.S, r.D, r.SS, r.parity, r.accuracy, r.eta, r.benchmark_acc,
              r.viable ? "yes" : "no");
}

void cmd_gen_model(const Options& opt, std::size_t d_model, std::size_t layers, std::size_t heads,
                   std::size_t d_ff, std::size_t max_len, const std::string& vocab_path, const std::string& out) {
  EncoderConfig config;
  config.d_model = d_model;
  config.n_layers = layers;
  config.n_heads = heads;
  config.d_ff = d_ff == 0 ? 4 * d_model : d_ff;
  config.max_len = max_len;
  Vocab vocab = vocab_path.empty() ? Vocab::from_words(default_vocab_words()) : Vocab::load(vocab_path);
  config.vocab_size = vocab.size();
  try {
    config.validate();
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  const EncoderModel model = EncoderModel::seeded(opt.seed, config, std::move(vocab));
  const fs::path path = opt.in_out(out, "model.manifest");
  ensure_out_dir(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  save_weights(model, path);
  std::fprintf(stderr, "wrote seeded model (seed %llu) to %s\n", static_cast<unsigned long long>(opt.seed),
               path.string().c_str());
}

void cmd_gen_data(const Options& opt, std::size_t stereoset_size, std::size_t benchmark_size,
                  std::size_t n_occupations, std::size_t n_templates) {
  const fs::path dir = opt.out_dir;
  ensure_out_dir(dir);
  auto occupations = default_occupations();
  auto templates = default_templates();
  if (n_occupations == 0 || n_occupations > occupations.size()) {
    throw InputError("--occupation-count must lie in [1, " + std::to_string(occupations.size()) + "]");
  }
  if (n_templates == 0 || n_templates > templates.size()) {
    throw InputError("--template-count must lie in [1, " + std::to_string(templates.size()) + "]");
  }
  occupations.resize(n_occupations);
  templates.resize(n_templates);
  save_gender_pairs(dir / "pairs.jsonl", default_gender_pairs());
  save_stereoset(dir / "stereoset.jsonl", synthetic_stereoset(stereoset_size, opt.seed));
  save_occupations(dir / "occupations.txt", occupations);
  save_templates(dir / "templates.jsonl", templates);
  save_benchmark(dir / "benchmark.jsonl", synthetic_benchmark(benchmark_size, opt.seed + 1));
  std::fprintf(stderr, "wrote data files to %s\n", dir.string().c_str());
}

void cmd_train_head(const Options& opt, const std::string& kind_name, double lr, int epochs, const std::string& out) {
  const RunManifest m = opt.manifest();
  const auto model = load_model(m.model);
  std::vector<LabeledPair> examples;
  HeadKind kind;
  if (kind_name == "nsp") {
    kind = HeadKind::Nsp;
    for (const auto& tp : load_stereoset(m.stereoset)) {
      for (const Triple* t : {&tp.orig, &tp.swapped}) {
        examples.push_back({t->sent_a, t->stereo, 0});
        examples.push_back({t->sent_a, t->anti, 0});
        examples.push_back({t->sent_a, t->unrelated, 1});
      }
    }
  } else if (kind_name == "nli") {
    kind = HeadKind::Nli;
    for (const auto& item : load_benchmark(m.benchmark)) {
      examples.push_back({item.premise, item.hypothesis, static_cast<int>(item.label)});
    }
  } else {
    throw InputError("--kind must be nsp or nli");
  }
  const HeadFit fit = train_head(*model, kind, examples, lr, epochs);
  std::fprintf(stderr, "%s head: loss %.6f -> %.6f over %d epochs\n", kind_name.c_str(), fit.loss_history.front(),
               fit.final_loss, epochs);
  const fs::path path = out.empty() ? m.model : fs::path(out);
  save_weights(model->with_head(kind, fit.head), path);
  std::fprintf(stderr, "wrote %s\n", path.string().c_str());
}

void cmd_estimate(const Options& opt) {
  const RunManifest m = opt.manifest();
  const auto model = load_model(m.model);
  require_file(m.pairs, "pair file");
  const GenderPairSet pairs = load_gender_pairs(m.pairs);
  const TransformerEncoder encoder(model, false);
  const Centering centering = opt.center_diffs ? Centering::Mean : Centering::None;
  const SubspaceSet set = estimate_all(encoder, pairs, centering);
  ensure_out_dir(m.subspaces.parent_path().empty() ? fs::path(".") : m.subspaces.parent_path());
  set.save(m.subspaces, {{"model", m.model.filename().string()},
                         {"pairs", m.pairs.filename().string()},
                         {"pair_count", std::to_string(pairs.size())},
                         {"centering", opt.center_diffs ? "mean" : "none"},
                         {"seed", std::to_string(m.seed)}});
  for (const auto& s : set.items()) {
    std::printf("%s", s.location.key().c_str());
    for (double w : s.basis.weights) std::printf(" %.6f", w);
    std::printf("\n");
  }
  std::fprintf(stderr, "cached %zu subspaces from %zu pairs in %s\n", set.size(), pairs.size(),
               m.subspaces.string().c_str());
}

void cmd_eval(const Options& opt, const std::string& config_path) {
  const RunManifest m = opt.manifest();
  require_file(config_path, "config file");
  std::ifstream in(config_path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  DebiasConfig config;
  try {
    config = parse_config_text(text).normalized();
  } catch (const Error& e) {
    throw InputError(config_path + ": " + e.what());
  }
  m.check_paths();
  const SubspaceSet subspaces = load_cache(m.subspaces);
  const TransformerEncoder encoder(load_model(m.model));
  const EvaluationData data = load_evaluation_data(m);
  ensure_out_dir(m.out_dir);

  std::vector<EvaluationRow> rows;
  rows.push_back(evaluate_config(encoder, subspaces, DebiasConfig{}, data, eval_options(m), std::nullopt));
  std::vector<TripleScores> scores;
  if (config.level != Level::None) {
    rows.push_back(
        evaluate_config(encoder, subspaces, config, data, eval_options(m), rows.front().benchmark_acc, &scores));
  } else {
    score_triples(encoder, {}, data.stereoset, m.workers).swap(scores);
  }
  for (const auto& r : rows) print_row(r);
  const EvaluationRow& last = rows.back();
  write_report_csv(m.out_dir / "eval.csv", rows);
  write_report_json(m.out_dir / "eval.json", rows, m.seed);
  write_scores_csv(m.out_dir / "scores.csv", scores);
  write_fairness_json(m.out_dir / "fairness.json",
                      FairnessReport{last.parity, last.accuracy, last.eta, last.benchmark_acc, last.viable});
  m.save(m.out_dir / "run.json");
}

void cmd_grid(const Options& opt) {
  const RunManifest m = opt.manifest();
  m.check_paths();
  const SubspaceSet subspaces = load_cache(m.subspaces);
  const TransformerEncoder encoder(load_model(m.model));
  const EvaluationData data = load_evaluation_data(m);
  ensure_out_dir(m.out_dir);
  std::fprintf(stderr, "grid: %zu triple pairs, %zu probes, %zu benchmark items, %zu workers\n",
               data.stereoset.size(), data.probes.size(), data.benchmark.size(), m.workers);

  const auto rows = run_grid(encoder, subspaces, data, eval_options(m),
                             [](std::size_t done, std::size_t total, const std::string& config) {
                               std::fprintf(stderr, "[%zu/%zu] %s\n", done, total, config.c_str());
                             });
  write_report_csv(m.out_dir / "report.csv", rows);
  write_report_json(m.out_dir / "report.json", rows, m.seed);
  const auto best = best_per_level(rows);
  write_best_csv(m.out_dir / "best.csv", rows, best);
  m.save(m.out_dir / "run.json");

  for (const auto& b : best) {
    std::printf("%-12s min S: %-24s min D: %-24s max eta: %s\n", std::string(level_name(b.level)).c_str(),
                b.min_S ? rows[*b.min_S].config.c_str() : "-", b.min_D ? rows[*b.min_D].config.c_str() : "-",
                b.max_eta ? rows[*b.max_eta].config.c_str() : "-");
  }
  std::fprintf(stderr, "wrote %s\n", (m.out_dir / "report.csv").string().c_str());
}

void cmd_correlate(const Options& opt, const std::string& report_path, const std::string& p_method) {
  require_file(report_path, "report");
  const auto rows = read_report(report_path);
  PValueMethod method = PValueMethod::Auto;
  if (p_method == "t") method = PValueMethod::TDistribution;
  else if (p_method == "permutation") method = PValueMethod::Permutation;
  else if (p_method != "auto") throw InputError("--p-method must be auto, t or permutation");
  const CorrelationResult r = correlate_report(rows, method);
  std::printf("spearman S vs eta: rho=%.6f p=%.6g n=%zu\n", r.rho, r.p_value, r.n);
  ensure_out_dir(opt.out_dir);
  write_correlation_json(fs::path(opt.out_dir) / "correlation.json", r, rows.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projective gender debiasing experiments on a toy BERT encoder"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--model", opt.model, "Weight manifest (default <out-dir>/model.manifest)");
  app.add_option("--pairs", opt.pairs, "Gender pair JSONL (default <out-dir>/pairs.jsonl)");
  app.add_option("--stereoset", opt.stereoset, "StereoSet triple pairs JSONL");
  app.add_option("--occupations", opt.occupations, "Occupation list, one per line");
  app.add_option("--templates", opt.templates, "Probe templates JSONL");
  app.add_option("--benchmark", opt.benchmark, "Labeled NLI benchmark JSONL");
  app.add_option("--subspaces", opt.subspaces, "Subspace cache manifest (default <out-dir>/subspaces.manifest)");
  app.add_option("--top-frac", opt.top_frac, "Fraction of most biased pairs averaged by S and D")
      ->check(CLI::Range(1e-9, 1.0));
  app.add_option("--viability-ratio", opt.viability_ratio, "Minimum benchmark accuracy relative to baseline")
      ->check(CLI::Range(1e-9, 1.0));
  app.add_option("--out-dir", opt.out_dir, "Output directory");
  app.add_option("--workers", opt.workers, "Worker threads (0 = hardware concurrency)");
  app.add_option("--seed", opt.seed, "Seed for generated models and data; recorded in outputs");
  app.add_flag("--center-diffs", opt.center_diffs, "Mean-center pair differences before PCA");

  auto* gen_model = app.add_subcommand("gen-model", "Write a seeded toy encoder");
  std::size_t d_model = 64, layers = 4, heads = 4, d_ff = 0, max_len = 64;
  std::string vocab_path, model_out;
  gen_model->add_option("--d-model", d_model);
  gen_model->add_option("--layers", layers);
  gen_model->add_option("--heads", heads);
  gen_model->add_option("--d-ff", d_ff, "Feed-forward width (default 4 x d-model)");
  gen_model->add_option("--max-len", max_len);
  gen_model->add_option("--vocab", vocab_path, "Token list (default: words of the built-in data)");
  gen_model->add_option("-o,--output", model_out, "Manifest path (default <out-dir>/model.manifest)");

  auto* gen_data = app.add_subcommand("gen-data", "Write the built-in pairs, probes and synthetic datasets");
  std::size_t stereoset_size = 50, benchmark_size = 200, n_occupations = 164, n_templates = 33;
  gen_data->add_option("--stereoset-size", stereoset_size);
  gen_data->add_option("--benchmark-size", benchmark_size);
  gen_data->add_option("--occupation-count", n_occupations);
  gen_data->add_option("--template-count", n_templates);

  auto* train = app.add_subcommand("train-head", "Fit the NSP or NLI head on frozen sentence vectors");
  std::string kind = "nli", head_out;
  double lr = 0.5;
  int epochs = 200;
  train->add_option("--kind", kind, "nsp (from --stereoset) or nli (from --benchmark)");
  train->add_option("--lr", lr)->check(CLI::NonNegativeNumber);
  train->add_option("--epochs", epochs)->check(CLI::NonNegativeNumber);
  train->add_option("-o,--output", head_out, "Manifest path (default: overwrite --model)");

  auto* estimate = app.add_subcommand("estimate", "Estimate and cache every gender subspace");

  auto* eval = app.add_subcommand("eval", "Evaluate the baseline and one configuration");
  std::string config_path;
  eval->add_option("--config", config_path, "File such as 'level=final n_fin=0 c_fin=1 n_p=0'")->required();

  auto* grid = app.add_subcommand("grid", "Evaluate the baseline and all 74 configurations");

  auto* correlate = app.add_subcommand("correlate", "Spearman correlation of S and eta over a report");
  std::string report_path, p_method = "auto";
  correlate->add_option("--report", report_path, "report.csv or report.json")->required();
  correlate->add_option("--p-method", p_method, "auto, t or permutation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen_model) cmd_gen_model(opt, d_model, layers, heads, d_ff, max_len, vocab_path, model_out);
    else if (*gen_data) cmd_gen_data(opt, stereoset_size, benchmark_size, n_occupations, n_templates);
    else if (*train) cmd_train_head(opt, kind, lr, epochs, head_out);
    else if (*estimate) cmd_estimate(opt);
    else if (*eval) cmd_eval(opt, config_path);
    else if (*grid) cmd_grid(opt);
    else if (*correlate) cmd_correlate(opt, report_path, p_method);
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
