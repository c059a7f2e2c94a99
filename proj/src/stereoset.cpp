#include "projdebias/stereoset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "projdebias/error.hpp"
#include "projdebias/parallel.hpp"

namespace projdebias {

namespace {

Triple triple_from_json(const nlohmann::json& j) {
  Triple t{j.at("sent_a").get<std::string>(), j.at("stereo").get<std::string>(), j.at("anti").get<std::string>(),
           j.at("unrelated").get<std::string>()};
  for (const std::string* s : {&t.sent_a, &t.stereo, &t.anti, &t.unrelated}) {
    if (s->find_first_not_of(" \t") == std::string::npos) throw Error("empty sentence in triple");
  }
  return t;
}

nlohmann::json triple_to_json(const Triple& t) {
  return {{"sent_a", t.sent_a}, {"stereo", t.stereo}, {"anti", t.anti}, {"unrelated", t.unrelated}};
}

double top_fraction_mean(std::vector<std::pair<double, const std::string*>> items, double top_frac) {
  if (items.empty()) throw Error("metric over an empty score list");
  if (!(top_frac > 0.0 && top_frac <= 1.0)) throw Error("top_frac must lie in (0, 1]");
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  });
  // The small slack keeps products like 0.1 * 30 from rounding up to the next count.
  auto count = static_cast<std::size_t>(std::ceil(top_frac * static_cast<double>(items.size()) - 1e-9));
  count = std::clamp<std::size_t>(count, 1, items.size());
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) total += items[i].first;
  return total / static_cast<double>(count);
}

}  // namespace

std::vector<TriplePair> load_stereoset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open StereoSet file " + path.string());
  std::vector<TriplePair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TriplePair p;
      const auto& id = j.at("id");
      p.id = id.is_string() ? id.get<std::string>() : id.dump();
      p.domain = j.value("domain", std::string("gender"));
      p.orig = triple_from_json(j.at("orig"));
      p.swapped = triple_from_json(j.at("swapped"));
      out.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed triple pair: " + e.what());
    }
  }
  if (out.empty()) throw InputError("StereoSet file " + path.string() + " is empty");
  return out;
}

void save_stereoset(const std::filesystem::path& path, const std::vector<TriplePair>& dataset) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& p : dataset) {
    nlohmann::json j;
    j["id"] = p.id;
    j["domain"] = p.domain;
    j["orig"] = triple_to_json(p.orig);
    j["swapped"] = triple_to_json(p.swapped);
    out << j.dump() << '\n';
  }
}

std::vector<TripleScores> score_triples(const Encoder& encoder, const Hooks& hooks,
                                        const std::vector<TriplePair>& dataset, std::size_t workers) {
  if (dataset.empty()) throw Error("score_triples: empty dataset");
  std::vector<TripleScores> out(dataset.size());
  parallel_for(dataset.size(), workers, [&](std::size_t i) {
    const TriplePair& p = dataset[i];
    auto nsp = [&](const std::string& a, const std::string& b) { return encoder.run(a, b, hooks).nsp_probs[0]; };
    try {
      TripleScores& s = out[i];
      s.id = p.id;
      s.p_stereo = nsp(p.orig.sent_a, p.orig.stereo);
      s.p_anti = nsp(p.orig.sent_a, p.orig.anti);
      s.p_unr = nsp(p.orig.sent_a, p.orig.unrelated);
      s.p_stereo_gs = nsp(p.swapped.sent_a, p.swapped.stereo);
      s.p_anti_gs = nsp(p.swapped.sent_a, p.swapped.anti);
      s.p_unr_gs = nsp(p.swapped.sent_a, p.swapped.unrelated);
    } catch (const std::exception& e) {
      throw Error("triple " + p.id + ": " + e.what());
    }
  });
  return out;
}

double ss_score(const std::vector<TripleScores>& scores) {
  if (scores.empty()) throw Error("ss_score: empty score list");
  const auto biased = std::count_if(scores.begin(), scores.end(),
                                    [](const TripleScores& s) { return s.p_stereo > s.p_anti; });
  return static_cast<double>(biased) / static_cast<double>(scores.size());
}

double pair_strength(const TripleScores& ts) { return ts.p_stereo - ts.p_anti - ts.p_anti_gs + ts.p_stereo_gs; }

double pair_distance(const TripleScores& ts) { return std::abs(ts.p_unr - ts.p_unr_gs); }

double strength_S(const std::vector<TripleScores>& scores, double top_frac) {
  std::vector<std::pair<double, const std::string*>> items;
  items.reserve(scores.size());
  for (const auto& s : scores) items.emplace_back(pair_strength(s), &s.id);
  return top_fraction_mean(std::move(items), top_frac);
}

double distance_D(const std::vector<TripleScores>& scores, double top_frac) {
  std::vector<std::pair<double, const std::string*>> items;
  items.reserve(scores.size());
  for (const auto& s : scores) items.emplace_back(pair_distance(s), &s.id);
  return top_fraction_mean(std::move(items), top_frac);
}

void write_scores_csv(const std::filesystem::path& path, const std::vector<TripleScores>& scores) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << "id,p_stereo,p_anti,p_unr,p_stereo_gs,p_anti_gs,p_unr_gs\n";
  char buf[512];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.p_stereo, s.p_anti, s.p_unr,
                  s.p_stereo_gs, s.p_anti_gs, s.p_unr_gs);
    out << s.id << buf;
  }
}

}  // namespace projdebias
