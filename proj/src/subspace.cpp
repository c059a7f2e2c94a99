#include "projdebias/subspace.hpp"

#include <fstream>
#include <json.hpp>

#include "projdebias/error.hpp"
#include "projdebias/tensor_archive.hpp"

namespace projdebias {

namespace {

struct PairTraces {
  ForwardTrace male;
  ForwardTrace female;
};

std::vector<PairTraces> run_pairs(const Encoder& encoder, const GenderPairSet& pairs) {
  if (pairs.empty()) throw Error("gender pair set is empty");
  std::vector<PairTraces> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [ma, mb] = split_segments(pairs[i].male);
    const auto [fa, fb] = split_segments(pairs[i].female);
    const EncodedInput m = encoder.encode(ma, mb);
    const EncodedInput f = encoder.encode(fa, fb);
    if (m.size() != f.size()) {
      throw Error("pair length mismatch at pair " + std::to_string(i) + " (\"" + pairs[i].male + "\" has " +
                  std::to_string(m.size()) + " tokens, \"" + pairs[i].female + "\" has " +
                  std::to_string(f.size()) + ")");
    }
    out.push_back({encoder.forward(m, {}), encoder.forward(f, {})});
  }
  return out;
}

void append_difference(Matrix& out, std::span<const double> a, std::span<const double> b) {
  Vector d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  out.append_row(d);
}

void check_location(const EncoderShape& shape, const Location& location) {
  if (location.kind == Location::Kind::PenultAttn && location.head >= shape.n_heads) {
    throw Error("location " + location.key() + " names a head beyond the model's " +
                std::to_string(shape.n_heads));
  }
}

Matrix differences_from_traces(const std::vector<PairTraces>& traces, const Location& location) {
  Matrix out;
  for (const auto& t : traces) {
    switch (location.kind) {
      case Location::Kind::Sent:
        append_difference(out, t.male.sent, t.female.sent);
        break;
      case Location::Kind::FinalCls:
        append_difference(out, t.male.cls_final, t.female.cls_final);
        break;
      case Location::Kind::PenultTokens: {
        const Matrix& m = t.male.layer_states[t.male.layer_states.size() - 2];
        const Matrix& f = t.female.layer_states[t.female.layer_states.size() - 2];
        for (std::size_t r = 0; r < m.rows(); ++r) append_difference(out, m.row(r), f.row(r));
        break;
      }
      case Location::Kind::PenultAttn: {
        const auto role = static_cast<std::size_t>(location.role);
        const Matrix& m = t.male.penult_kqv.at(location.head)[role];
        const Matrix& f = t.female.penult_kqv.at(location.head)[role];
        for (std::size_t r = 0; r < m.rows(); ++r) append_difference(out, m.row(r), f.row(r));
        break;
      }
    }
  }
  return out;
}

void check_dims(const Location& location, std::size_t dims) {
  if (dims == 0) throw Error("subspace dimension must be at least 1");
  switch (location.kind) {
    case Location::Kind::Sent:
      if (dims != 1) throw Error("SENT constrained to one dimension");
      break;
    case Location::Kind::PenultAttn:
      if (dims != 1) throw Error("attention subspaces constrained to one dimension");
      break;
    default:
      if (dims > 2) throw Error(location.key() + " subspace constrained to at most two dimensions");
  }
}

GenderSubspace fit(const Matrix& diffs, const Location& location, std::size_t dims, Centering centering) {
  check_dims(location, dims);
  try {
    return GenderSubspace{location, pca(diffs, dims, centering)};
  } catch (const Error& e) {
    throw Error("estimating " + location.key() + ": " + e.what());
  }
}

}  // namespace

std::string Location::key() const {
  switch (kind) {
    case Kind::Sent: return "sent";
    case Kind::FinalCls: return "final_cls";
    case Kind::PenultTokens: return "penult_tokens";
    case Kind::PenultAttn:
      return "penult_attn.h" + std::to_string(head) + "." + std::string(role_name(role));
  }
  return "?";
}

Location Location::parse(std::string_view key) {
  if (key == "sent") return sent();
  if (key == "final_cls") return final_cls();
  if (key == "penult_tokens") return penult_tokens();
  constexpr std::string_view prefix = "penult_attn.h";
  if (key.starts_with(prefix)) {
    const std::string_view rest = key.substr(prefix.size());
    const auto dot = rest.find('.');
    if (dot != std::string_view::npos && dot > 0 && dot + 2 == rest.size()) {
      std::size_t head = 0;
      for (char c : rest.substr(0, dot)) {
        if (c < '0' || c > '9') throw Error("unknown location '" + std::string(key) + "'");
        head = head * 10 + static_cast<std::size_t>(c - '0');
      }
      for (AttnRole role : kAttnRoles) {
        if (rest.back() == role_name(role).front()) return penult_attn(head, role);
      }
    }
  }
  throw Error("unknown location '" + std::string(key) + "'");
}

std::size_t Location::max_dims() const {
  return (kind == Kind::Sent || kind == Kind::PenultAttn) ? 1 : 2;
}

GenderPairSet load_gender_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open pair file " + path.string());
  GenderPairSet pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      pairs.push_back({j.at("male").get<std::string>(), j.at("female").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed pair: " + e.what());
    }
  }
  if (pairs.empty()) throw InputError("pair file " + path.string() + " contains no pairs");
  return pairs;
}

void save_gender_pairs(const std::filesystem::path& path, const GenderPairSet& pairs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& p : pairs) out << nlohmann::json{{"male", p.male}, {"female", p.female}}.dump() << '\n';
}

std::pair<std::string, std::string> split_segments(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    const std::string_view rest = text.substr(i + 1);
    if (rest.find_first_not_of(" \t.!?") != std::string_view::npos) {
      return {std::string(text.substr(0, i + 1)), std::string(rest)};
    }
  }
  return {std::string(text), std::string(text)};
}

Matrix collect_differences(const Encoder& encoder, const GenderPairSet& pairs, const Location& location) {
  check_location(encoder.shape(), location);
  return differences_from_traces(run_pairs(encoder, pairs), location);
}

GenderSubspace estimate_subspace(const Encoder& encoder, const GenderPairSet& pairs, const Location& location,
                                 std::size_t dims, Centering centering) {
  check_dims(location, dims);
  return fit(collect_differences(encoder, pairs, location), location, dims, centering);
}

std::vector<std::pair<Location, std::size_t>> grid_locations(const EncoderShape& shape) {
  std::vector<std::pair<Location, std::size_t>> out = {
      {Location::sent(), 1}, {Location::final_cls(), 2}, {Location::penult_tokens(), 2}};
  for (std::size_t h = 0; h < shape.n_heads; ++h) {
    for (AttnRole role : kAttnRoles) out.emplace_back(Location::penult_attn(h, role), 1);
  }
  return out;
}

void SubspaceSet::insert(GenderSubspace subspace) {
  subspace.basis.validate();
  for (auto& item : items_) {
    if (item.location == subspace.location) {
      item = std::move(subspace);
      return;
    }
  }
  items_.push_back(std::move(subspace));
}

const GenderSubspace* SubspaceSet::find(const Location& location) const {
  for (const auto& item : items_) {
    if (item.location == location) return &item;
  }
  return nullptr;
}

const GenderSubspace& SubspaceSet::at(const Location& location) const {
  const GenderSubspace* s = find(location);
  if (s == nullptr) throw Error("missing subspace for location " + location.key());
  return *s;
}

void SubspaceSet::save(const std::filesystem::path& manifest,
                       const std::vector<std::pair<std::string, std::string>>& header) const {
  Archive archive;
  archive.set("kind", "subspace_cache");
  archive.set("count", std::to_string(items_.size()));
  for (const auto& [k, v] : header) archive.set(k, v);
  for (const auto& item : items_) {
    const Basis& b = item.basis;
    ArchiveTensor basis{"subspace." + item.location.key() + ".basis", DType::F64, {b.size(), b.dim()}, {}};
    for (const auto& v : b.vectors) basis.values.insert(basis.values.end(), v.begin(), v.end());
    archive.tensors.push_back(std::move(basis));
    archive.tensors.push_back(
        ArchiveTensor{"subspace." + item.location.key() + ".weights", DType::F64, {b.size()}, b.weights});
  }
  write_archive(manifest, archive);
}

SubspaceSet SubspaceSet::load(const std::filesystem::path& manifest) {
  const Archive archive = read_archive(manifest);
  if (archive.require("kind") != "subspace_cache") {
    throw InputError(manifest.string() + " is not a subspace cache");
  }
  SubspaceSet set;
  for (std::size_t i = 0; i < archive.tensors.size(); i += 2) {
    if (i + 1 >= archive.tensors.size()) throw InputError("subspace cache: unpaired tensor");
    const ArchiveTensor& basis = archive.tensors[i];
    const ArchiveTensor& weights = archive.tensors[i + 1];
    constexpr std::string_view prefix = "subspace.";
    constexpr std::string_view basis_suffix = ".basis";
    if (!basis.name.starts_with(prefix) || !basis.name.ends_with(basis_suffix)) {
      throw InputError("subspace cache: unexpected tensor " + basis.name);
    }
    const std::string key =
        basis.name.substr(prefix.size(), basis.name.size() - prefix.size() - basis_suffix.size());
    if (weights.name != "subspace." + key + ".weights") {
      throw InputError("subspace cache: expected weights for " + key + ", found " + weights.name);
    }
    if (basis.shape.size() != 2 || weights.shape.size() != 1 || weights.shape[0] != basis.shape[0]) {
      throw InputError("subspace cache: inconsistent shapes for " + key);
    }
    GenderSubspace s;
    try {
      s.location = Location::parse(key);
    } catch (const Error& e) {
      throw InputError(std::string("subspace cache: ") + e.what());
    }
    const std::size_t k = basis.shape[0];
    const std::size_t d = basis.shape[1];
    for (std::size_t r = 0; r < k; ++r) {
      s.basis.vectors.emplace_back(basis.values.begin() + static_cast<std::ptrdiff_t>(r * d),
                                   basis.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
    }
    s.basis.weights = weights.values;
    try {
      set.insert(std::move(s));
    } catch (const Error& e) {
      throw InputError("subspace cache " + key + ": " + e.what());
    }
  }
  if (set.size() != archive.require_count("count")) throw InputError("subspace cache: count mismatch");
  return set;
}

SubspaceSet estimate_all(const Encoder& encoder, const GenderPairSet& pairs, Centering centering) {
  const std::vector<PairTraces> traces = run_pairs(encoder, pairs);
  SubspaceSet set;
  for (const auto& [location, dims] : grid_locations(encoder.shape())) {
    set.insert(fit(differences_from_traces(traces, location), location, dims, centering));
  }
  return set;
}

}  // namespace projdebias
