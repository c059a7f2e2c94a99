#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "projdebias/encoder.hpp"
#include "projdebias/subspace.hpp"

namespace projdebias {

/// Deepest intervention point; every shallower one is active too.
enum class Level { None, Sent, FinalLayer, PenultLayer, PenultAttn };

std::string_view level_name(Level level);
Level parse_level(std::string_view name);

/// One point of the intervention grid. `n_*` picks soft (1) vs hard (0) projection,
/// `c_*` picks a 2-dim (1) vs 1-dim (0) subspace. Flags a level does not use are zero.
struct DebiasConfig {
  Level level = Level::None;
  std::uint8_t n_pen = 0;
  std::uint8_t c_pen = 0;
  std::uint8_t n_fin = 0;
  std::uint8_t c_fin = 0;
  std::uint8_t n_p = 0;

  /// Zeroes flags the level ignores and rejects values other than 0/1.
  DebiasConfig normalized() const;

  /// Applicable flags in (n_pen, c_pen, n_fin, c_fin, n_p) order, e.g. "(0,1,0)".
  std::string settings() const;
  /// Unique row label: "none", or level name plus settings such as "final(0,0,1)".
  std::string label() const;

  bool operator==(const DebiasConfig&) const = default;
};

/// "level=penult_attn n_pen=0 c_pen=0 n_fin=1 c_fin=0 n_p=1"; unknown keys are rejected.
DebiasConfig parse_config_text(std::string_view text);
std::string format_config_text(const DebiasConfig& config);
DebiasConfig parse_config_label(std::string_view label);

/// The 74 configurations: SENT (2), FINAL_LAYER (8), PENULT_LAYER (32), PENULT_ATTN (32),
/// each block in lexicographic order of its applicable flags.
std::vector<DebiasConfig> enumerate_grid();

struct BoundProjection {
  Location location;
  Basis basis;
  bool soft = false;
};

/// Projections bound for one configuration, honoring the cascade
/// PENULT_ATTN > PENULT_LAYER > FINAL_LAYER > SENT.
class HookSet {
 public:
  const DebiasConfig& config() const { return config_; }
  const std::vector<BoundProjection>& projections() const { return *projections_; }
  std::vector<Location> active_locations() const;
  bool has(const Location& location) const;

  /// Encoder hooks applying each projection in place.
  const Hooks& hooks() const { return hooks_; }

 private:
  friend HookSet bind(const DebiasConfig&, const EncoderShape&, const SubspaceSet&);
  DebiasConfig config_;
  std::shared_ptr<const std::vector<BoundProjection>> projections_ =
      std::make_shared<const std::vector<BoundProjection>>();
  Hooks hooks_;
};

HookSet bind(const DebiasConfig& config, const EncoderShape& shape, const SubspaceSet& subspaces);

}  // namespace projdebias
