#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "projdebias/encoder.hpp"

namespace projdebias {

struct Triple {
  std::string sent_a;
  std::string stereo;
  std::string anti;
  std::string unrelated;
};

/// An original triple and its gender-swapped complement. In `swapped`, the
/// stereo/anti labels are already flipped relative to `orig`.
struct TriplePair {
  std::string id;
  std::string domain;
  Triple orig;
  Triple swapped;
};

/// JSON-lines: {id, domain, orig:{sent_a, stereo, anti, unrelated}, swapped:{...}}.
std::vector<TriplePair> load_stereoset(const std::filesystem::path& path);
void save_stereoset(const std::filesystem::path& path, const std::vector<TriplePair>& dataset);

/// NSP "is next" probabilities for the six (sentA, sentB) combinations of a pair.
struct TripleScores {
  std::string id;
  double p_stereo = 0.0;
  double p_anti = 0.0;
  double p_unr = 0.0;
  double p_stereo_gs = 0.0;
  double p_anti_gs = 0.0;
  double p_unr_gs = 0.0;
};

/// Six forward passes per pair; results follow input order. `workers` > 1 splits pairs
/// across threads without changing the result.
std::vector<TripleScores> score_triples(const Encoder& encoder, const Hooks& hooks,
                                        const std::vector<TriplePair>& dataset, std::size_t workers = 1);

/// Legacy stereotype score: share of original triples with p_stereo > p_anti (strict).
double ss_score(const std::vector<TripleScores>& scores);

/// s = p_stereo - p_anti - p_anti_gs + p_stereo_gs, in [-2, 2].
double pair_strength(const TripleScores& ts);

/// d = |p_unr - p_unr_gs|, in [0, 1].
double pair_distance(const TripleScores& ts);

/// Mean of the ceil(top_frac * N) largest per-pair values; ties broken by ascending id.
double strength_S(const std::vector<TripleScores>& scores, double top_frac = 0.1);
double distance_D(const std::vector<TripleScores>& scores, double top_frac = 0.1);

/// CSV with header id,p_stereo,p_anti,p_unr,p_stereo_gs,p_anti_gs,p_unr_gs.
void write_scores_csv(const std::filesystem::path& path, const std::vector<TripleScores>& scores);

}  // namespace projdebias
