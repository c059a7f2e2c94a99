#include "projdebias/interventions.hpp"

#include <map>
#include <sstream>

#include "projdebias/error.hpp"

namespace projdebias {

namespace {

std::uint8_t parse_flag(std::string_view key, std::string_view value) {
  if (value == "0") return 0;
  if (value == "1") return 1;
  throw Error("config flag " + std::string(key) + " must be 0 or 1, got '" + std::string(value) + "'");
}

std::vector<std::uint8_t> applicable_flags(const DebiasConfig& c) {
  switch (c.level) {
    case Level::None: return {};
    case Level::Sent: return {c.n_p};
    case Level::FinalLayer: return {c.n_fin, c.c_fin, c.n_p};
    case Level::PenultLayer:
    case Level::PenultAttn: return {c.n_pen, c.c_pen, c.n_fin, c.c_fin, c.n_p};
  }
  return {};
}

void assign_flags(DebiasConfig& c, const std::vector<std::uint8_t>& flags) {
  switch (c.level) {
    case Level::None: break;
    case Level::Sent: c.n_p = flags[0]; break;
    case Level::FinalLayer:
      c.n_fin = flags[0];
      c.c_fin = flags[1];
      c.n_p = flags[2];
      break;
    case Level::PenultLayer:
    case Level::PenultAttn:
      c.n_pen = flags[0];
      c.c_pen = flags[1];
      c.n_fin = flags[2];
      c.c_fin = flags[3];
      c.n_p = flags[4];
      break;
  }
}

std::size_t flag_count(Level level) {
  switch (level) {
    case Level::None: return 0;
    case Level::Sent: return 1;
    case Level::FinalLayer: return 3;
    default: return 5;
  }
}

}  // namespace

std::string_view level_name(Level level) {
  switch (level) {
    case Level::None: return "none";
    case Level::Sent: return "sent";
    case Level::FinalLayer: return "final";
    case Level::PenultLayer: return "penult";
    case Level::PenultAttn: return "penult_attn";
  }
  return "?";
}

Level parse_level(std::string_view name) {
  for (Level l : {Level::None, Level::Sent, Level::FinalLayer, Level::PenultLayer, Level::PenultAttn}) {
    if (name == level_name(l)) return l;
  }
  if (name == "base") return Level::None;
  if (name == "final_layer") return Level::FinalLayer;
  if (name == "penult_layer") return Level::PenultLayer;
  throw Error("unknown intervention level '" + std::string(name) + "'");
}

DebiasConfig DebiasConfig::normalized() const {
  for (std::uint8_t f : {n_pen, c_pen, n_fin, c_fin, n_p}) {
    if (f > 1) throw Error("config flags must be 0 or 1");
  }
  DebiasConfig out;
  out.level = level;
  assign_flags(out, applicable_flags(*this));
  return out;
}

std::string DebiasConfig::settings() const {
  const auto flags = applicable_flags(*this);
  std::string s = "(";
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (i) s += ",";
    s += static_cast<char>('0' + flags[i]);
  }
  return s + ")";
}

std::string DebiasConfig::label() const {
  if (level == Level::None) return "none";
  return std::string(level_name(level)) + settings();
}

DebiasConfig parse_config_text(std::string_view text) {
  std::map<std::string, std::string> values;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("config: expected key=value, got '" + token + "'");
    const std::string key = token.substr(0, eq);
    static const char* known[] = {"level", "n_pen", "c_pen", "n_fin", "c_fin", "n_p"};
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw Error("config: unknown key '" + key + "'");
    if (!values.emplace(key, token.substr(eq + 1)).second) throw Error("config: duplicate key '" + key + "'");
  }
  if (!values.count("level")) throw Error("config: missing 'level'");
  DebiasConfig c;
  c.level = parse_level(values["level"]);
  auto flag = [&](const char* key) -> std::uint8_t {
    auto it = values.find(key);
    return it == values.end() ? 0 : parse_flag(key, it->second);
  };
  c.n_pen = flag("n_pen");
  c.c_pen = flag("c_pen");
  c.n_fin = flag("n_fin");
  c.c_fin = flag("c_fin");
  c.n_p = flag("n_p");
  return c.normalized();
}

std::string format_config_text(const DebiasConfig& config) {
  const DebiasConfig c = config.normalized();
  std::ostringstream out;
  out << "level=" << level_name(c.level) << " n_pen=" << int(c.n_pen) << " c_pen=" << int(c.c_pen)
      << " n_fin=" << int(c.n_fin) << " c_fin=" << int(c.c_fin) << " n_p=" << int(c.n_p);
  return out.str();
}

DebiasConfig parse_config_label(std::string_view label) {
  DebiasConfig c;
  const auto paren = label.find('(');
  c.level = parse_level(label.substr(0, paren));
  std::vector<std::uint8_t> flags;
  if (paren != std::string_view::npos) {
    if (label.back() != ')') throw Error("malformed config label '" + std::string(label) + "'");
    for (char ch : label.substr(paren + 1, label.size() - paren - 2)) {
      if (ch == ',' || ch == ' ') continue;
      flags.push_back(parse_flag("label", std::string_view(&ch, 1)));
    }
  }
  if (flags.size() != flag_count(c.level)) throw Error("malformed config label '" + std::string(label) + "'");
  assign_flags(c, flags);
  return c;
}

std::vector<DebiasConfig> enumerate_grid() {
  std::vector<DebiasConfig> grid;
  for (Level level : {Level::Sent, Level::FinalLayer, Level::PenultLayer, Level::PenultAttn}) {
    const std::size_t n = flag_count(level);
    for (std::size_t bits = 0; bits < (std::size_t{1} << n); ++bits) {
      std::vector<std::uint8_t> flags(n);
      for (std::size_t i = 0; i < n; ++i) flags[i] = static_cast<std::uint8_t>((bits >> (n - 1 - i)) & 1U);
      DebiasConfig c;
      c.level = level;
      assign_flags(c, flags);
      grid.push_back(c);
    }
  }
  return grid;
}

std::vector<Location> HookSet::active_locations() const {
  std::vector<Location> out;
  for (const auto& p : *projections_) out.push_back(p.location);
  return out;
}

bool HookSet::has(const Location& location) const {
  for (const auto& p : *projections_) {
    if (p.location == location) return true;
  }
  return false;
}

HookSet bind(const DebiasConfig& config, const EncoderShape& shape, const SubspaceSet& subspaces) {
  const DebiasConfig c = config.normalized();
  auto projections = std::make_shared<std::vector<BoundProjection>>();

  auto add = [&](const Location& location, std::size_t dims, bool soft) {
    const GenderSubspace& s = subspaces.at(location);
    if (s.basis.size() < dims) {
      throw Error("subspace for " + location.key() + " has " + std::to_string(s.basis.size()) +
                  " dimension(s), configuration needs " + std::to_string(dims));
    }
    projections->push_back(BoundProjection{location, s.basis.truncated(dims), soft});
  };

  if (c.level >= Level::Sent) add(Location::sent(), 1, c.n_p == 1);
  if (c.level >= Level::FinalLayer) add(Location::final_cls(), 1 + c.c_fin, c.n_fin == 1);
  if (c.level >= Level::PenultLayer) add(Location::penult_tokens(), 1 + c.c_pen, c.n_pen == 1);
  if (c.level >= Level::PenultAttn) {
    for (std::size_t h = 0; h < shape.n_heads; ++h) {
      for (AttnRole role : kAttnRoles) add(Location::penult_attn(h, role), 1, false);
    }
  }

  HookSet set;
  set.config_ = c;
  std::shared_ptr<const std::vector<BoundProjection>> bound = projections;
  set.projections_ = bound;

  for (std::size_t i = 0; i < bound->size(); ++i) {
    const BoundProjection* p = &(*bound)[i];
    switch (p->location.kind) {
      case Location::Kind::Sent:
        set.hooks_.sent = [bound, p](std::span<double> v) { project_out_inplace(v, p->basis, p->soft); };
        break;
      case Location::Kind::FinalCls:
        set.hooks_.final_cls = [bound, p](std::span<double> v) { project_out_inplace(v, p->basis, p->soft); };
        break;
      case Location::Kind::PenultTokens:
        set.hooks_.penult_tokens = [bound, p](Matrix& tokens) {
          for (std::size_t r = 0; r < tokens.rows(); ++r) project_out_inplace(tokens.row(r), p->basis, p->soft);
        };
        break;
      case Location::Kind::PenultAttn:
        break;
    }
  }
  if (c.level == Level::PenultAttn) {
    // Attention projections were appended last, head-major then K, Q, V.
    const std::size_t first = bound->size() - shape.n_heads * kAttnRoles.size();
    set.hooks_.attention = [bound, first](std::size_t head, AttnRole role, Matrix& rows) {
      const BoundProjection& p = (*bound)[first + head * kAttnRoles.size() + static_cast<std::size_t>(role)];
      for (std::size_t r = 0; r < rows.rows(); ++r) project_out_inplace(rows.row(r), p.basis, p.soft);
    };
  }
  return set;
}

}  // namespace projdebias
