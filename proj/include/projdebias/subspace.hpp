#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "projdebias/encoder.hpp"
#include "projdebias/linalg.hpp"

namespace projdebias {

/// Where in the encoder a gender subspace lives.
struct Location {
  enum class Kind { Sent, FinalCls, PenultTokens, PenultAttn };

  Kind kind = Kind::Sent;
  std::size_t head = 0;
  AttnRole role = AttnRole::Key;

  static Location sent() { return {Kind::Sent}; }
  static Location final_cls() { return {Kind::FinalCls}; }
  static Location penult_tokens() { return {Kind::PenultTokens}; }
  static Location penult_attn(std::size_t head, AttnRole role) { return {Kind::PenultAttn, head, role}; }

  /// "sent", "final_cls", "penult_tokens" or "penult_attn.h<head>.<k|q|v>".
  std::string key() const;
  static Location parse(std::string_view key);

  /// 1 for SENT and attention locations, 2 for the layer locations.
  std::size_t max_dims() const;

  bool operator==(const Location& other) const { return key() == other.key(); }
};

struct GenderPair {
  std::string male;
  std::string female;
};

/// Pairs of texts that differ only in binary gender words.
using GenderPairSet = std::vector<GenderPair>;

/// JSON-lines {"male": ..., "female": ...}. Errors name the offending line.
GenderPairSet load_gender_pairs(const std::filesystem::path& path);
void save_gender_pairs(const std::filesystem::path& path, const GenderPairSet& pairs);

/// Splits a text into NSP segments at the first sentence terminator followed by more text.
/// A single sentence fills both segments.
std::pair<std::string, std::string> split_segments(std::string_view text);

/// Male-minus-female hidden-state differences at `location`, hooks disabled.
/// SENT / FINAL_CLS give one row per pair; token and attention locations one row per
/// aligned token position, in pair order then token order.
Matrix collect_differences(const Encoder& encoder, const GenderPairSet& pairs, const Location& location);

struct GenderSubspace {
  Location location;
  Basis basis;
};

/// PCA of the collected differences. `Centering::None` treats the differences as
/// symmetric about zero, which matches per-pair centering of the two gendered states.
GenderSubspace estimate_subspace(const Encoder& encoder, const GenderPairSet& pairs, const Location& location,
                                 std::size_t dims, Centering centering = Centering::None);

/// Every location any grid configuration can use, with its estimation dimension:
/// SENT 1, FINAL_CLS 2, PENULT_TOKENS 2, then per head K, Q, V at 1.
std::vector<std::pair<Location, std::size_t>> grid_locations(const EncoderShape& shape);

/// Ordered collection of subspaces keyed by location.
class SubspaceSet {
 public:
  void insert(GenderSubspace subspace);
  const GenderSubspace* find(const Location& location) const;
  const GenderSubspace& at(const Location& location) const;
  std::size_t size() const { return items_.size(); }
  const std::vector<GenderSubspace>& items() const { return items_; }

  /// Manifest + f64 blob with tensors "subspace.<key>.basis" and "subspace.<key>.weights".
  void save(const std::filesystem::path& manifest,
            const std::vector<std::pair<std::string, std::string>>& header = {}) const;
  static SubspaceSet load(const std::filesystem::path& manifest);

 private:
  std::vector<GenderSubspace> items_;
};

/// Estimates every location from `grid_locations`, sharing one forward pass per sentence.
SubspaceSet estimate_all(const Encoder& encoder, const GenderPairSet& pairs, Centering centering = Centering::None);

}  // namespace projdebias
