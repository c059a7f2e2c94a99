#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "projdebias/nli.hpp"
#include "projdebias/stereoset.hpp"
#include "projdebias/subspace.hpp"

namespace projdebias {

/// 40 two-sentence pairs: 10 male/female phrases in 4 frames.
GenderPairSet default_gender_pairs();

/// 164 occupation words.
std::vector<std::string> default_occupations();

/// 33 activity templates using the default premise/hypothesis patterns.
std::vector<ProbeTemplate> default_templates();

/// Gendered contexts followed by male- or female-stereotyped activities. Half of the pairs
/// start from a female context. Deterministic in `seed`.
std::vector<TriplePair> synthetic_stereoset(std::size_t n, std::uint64_t seed);

/// Occupation premises with entailed, neutral and contradicted hypotheses in rotation.
std::vector<BenchmarkItem> synthetic_benchmark(std::size_t n, std::uint64_t seed);

/// Every word the generators above can emit, sorted.
std::vector<std::string> default_vocab_words();

}  // namespace projdebias
